"""Gradient-descent training of parameter schedules against witness targets.

The loss is L = 1/2 sum_p (output_p - target_p)^2 with output_p the squared
readout of pair p after propagation.  Gradients come from an adjoint sweep:
the Hermitian sensitivity matrix is pulled backwards through the stored
forward trajectory and paired with the spectral (divided-difference)
derivative of each step unitary, with the shared K/eps/zeta weights summing
contributions across qubits and couplings.  A central finite-difference
engine is kept as the independent cross-check and as an alternative
gradient_mode.

Noise never enters the adjoint.  When training with noise, each epoch's loss
evaluation propagates every pair with fresh draws, and those noisy residuals
weight the noiseless per-pair sensitivities in the descent direction, so the
iterate trajectory feels the noise while the gradient stays deterministic.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import ParameterSchedule, TimeGrid, basis_matrices
from .errors import DegenerateInputError, DivergenceError
from .noise import NoiseConfig, draw_propagation_noise, rng_stream_for

logger = logging.getLogger(__name__)

# Reserved run_id for initialization draws; training epochs use small run ids.
_INIT_RUN = 1 << 32

# Physical parameter scale is ~1e-3; anything beyond this is runaway.
PARAM_BOUND = 1e3

# Retry budget within one epoch; a zero-length step reproduces the previous
# rms exactly, so the loop terminates well before this in practice.
_MAX_HALVINGS_PER_EPOCH = 60

_RATE_RECOVERY = 1.25


@dataclass(frozen=True)
class LearnConfig:
    """Training hyperparameters and initialization constants."""

    rate: float = 1e-4
    max_epochs: int = 500
    rms_stop: float = 1e-3
    gradient_mode: str = "adjoint"
    fd_step: float = 1e-6
    init_k: float = 0.002
    init_epsilon: float = 0.0001
    init_zeta: float = 0.0002
    init_jitter: float = 0.1

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.rate}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be at least 1, got {self.max_epochs}")
        if not self.rms_stop >= 0:
            raise ValueError(f"rms_stop must be nonnegative, got {self.rms_stop}")
        if self.gradient_mode not in ("adjoint", "finite-difference"):
            raise ValueError(
                f"gradient_mode must be 'adjoint' or 'finite-difference', got {self.gradient_mode!r}")
        if not self.fd_step > 0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")
        if self.init_jitter < 0:
            raise ValueError(f"init_jitter must be nonnegative, got {self.init_jitter}")


@dataclass
class TrainingReport:
    """Outcome of one training run."""

    epochs_run: int
    rms_history: np.ndarray
    final_outputs: np.ndarray
    schedule: ParameterSchedule
    labels: tuple[str, ...]
    targets: np.ndarray
    halvings: int = 0


def initial_schedule(grid: TimeGrid, learn: LearnConfig, seed: int) -> ParameterSchedule:
    """Constant series at the configured scales, each jittered by one +-10% draw."""
    stream = rng_stream_for(seed, _INIT_RUN, 0)
    jit = stream.uniform(-learn.init_jitter, learn.init_jitter, 3)
    return ParameterSchedule.constant(
        grid,
        learn.init_k * (1.0 + jit[0]),
        learn.init_epsilon * (1.0 + jit[1]),
        learn.init_zeta * (1.0 + jit[2]),
    )


def _pair_arrays(pairs):
    rho0s = np.stack([p.state.matrix for p in pairs])
    odiags = np.stack([p.observable.diagonal() for p in pairs])
    targets = np.array([p.target for p in pairs], dtype=float)
    labels = tuple(p.label for p in pairs)
    return rho0s, odiags, targets, labels


def _outputs(schedule, rho0s, odiags, n_qubits, noise=None, run_base=0):
    """Per-pair squared readouts; fresh draws per pair when noise is active."""
    hx, hz, hzz = basis_matrices(n_qubits)
    n = schedule.grid.n_steps
    dim = rho0s.shape[1]
    active = noise is not None and noise.any_active
    out = np.empty(rho0s.shape[0])
    for p in range(rho0s.shape[0]):
        ham, mag, ph, use_ham, use_density = draw_propagation_noise(
            noise if active else None, run_base + p, n, dim)
        rho, _, ok = kernels.propagate_kernel(
            rho0s[p], hx, hz, hzz, schedule.k, schedule.epsilon, schedule.zeta,
            schedule.grid.dt, ham, mag, ph, use_ham, use_density, False)
        if not ok:
            raise DegenerateInputError(
                "noise clipped the state spectrum to zero trace during training")
        f = float((rho.diagonal().real * odiags[p]).sum())
        out[p] = f * f
    return out


def rms_error(outputs, targets) -> float:
    return float(np.sqrt(np.mean((np.asarray(outputs) - np.asarray(targets)) ** 2)))


def loss_and_outputs(schedule: ParameterSchedule, pairs, n_qubits: int,
                     noise: NoiseConfig | None = None, run_base: int = 0):
    """(rms, outputs) at one point; one fresh noise realization per pair per call.

    Callers wanting different draws on successive calls advance `run_base`
    by len(pairs); identical arguments replay identical draws.
    """
    rho0s, odiags, targets, _ = _pair_arrays(pairs)
    outputs = _outputs(schedule, rho0s, odiags, n_qubits, noise, run_base)
    return rms_error(outputs, targets), outputs


def gradient(schedule: ParameterSchedule, pairs, n_qubits: int,
             residual_weights=None):
    """Adjoint gradient (dK, deps, dzeta) of the noiseless loss.

    `residual_weights` replaces the noiseless residuals (output - target)
    in the pairing when given; training under noise passes the noisy
    residuals here.  Evaluation itself is always noiseless.
    """
    rho0s, odiags, targets, _ = _pair_arrays(pairs)
    _, gk, ge, gz = _gradient_arrays(schedule, rho0s, odiags, targets, n_qubits,
                                     residual_weights)
    return gk, ge, gz


def _gradient_arrays(schedule, rho0s, odiags, targets, n_qubits, residual_weights=None):
    hx, hz, hzz = basis_matrices(n_qubits)
    use_w = residual_weights is not None
    weights = np.asarray(residual_weights, dtype=float) if use_w else np.zeros(len(targets))
    outputs, gk, ge, gz = kernels.loss_grad_kernel(
        rho0s, odiags, targets, weights, use_w,
        hx, hz, hzz, schedule.k, schedule.epsilon, schedule.zeta, schedule.grid.dt)
    return outputs, gk, ge, gz


def finite_difference_gradient(schedule: ParameterSchedule, pairs, n_qubits: int,
                               h: float = 1e-6):
    """Central-difference gradient of the noiseless loss; the adjoint oracle.

    Differentiates the forward map only, sharing no code with the adjoint
    sweep beyond propagation itself.
    """
    rho0s, odiags, targets, _ = _pair_arrays(pairs)

    def loss_at(sched):
        out = _outputs(sched, rho0s, odiags, n_qubits)
        return 0.5 * float(((out - targets) ** 2).sum())

    grads = []
    for series in ("K", "epsilon", "zeta"):
        g = np.empty(schedule.grid.n_steps)
        for s in range(schedule.grid.n_steps):
            plus = schedule.copy()
            plus.series(series)[s] += h
            minus = schedule.copy()
            minus.series(series)[s] -= h
            g[s] = (loss_at(plus) - loss_at(minus)) / (2.0 * h)
        grads.append(g)
    return tuple(grads)


def train(pairs, n_qubits: int, grid: TimeGrid, learn: LearnConfig,
          noise: NoiseConfig | None = None,
          start: ParameterSchedule | None = None) -> TrainingReport:
    """Full-batch gradient descent until rms_stop or max_epochs.

    Each epoch evaluates the loss at the current iterate (noisily when noise
    is configured, with fresh draws via the epoch-indexed run ids), records
    the rms, then steps along the descent direction.  In noiseless runs a
    step that raised the rms is retried from the previous iterate at half the
    rate, keeping rms_history non-increasing; accepted epochs then let the
    rate recover toward its configured value, so one rough stretch does not
    throttle the whole run.  Under noise the history fluctuates and no
    backtracking applies.

    Divergence raises :class:`DivergenceError`: either rms above 10x the
    initial value for 10 consecutive epochs, or any parameter magnitude
    beyond ``PARAM_BOUND`` (outputs are bounded in [0, 1], so runaway
    parameters are the honest runaway signal).
    """
    if not pairs:
        raise ValueError("training needs at least one pair")
    if learn.gradient_mode == "finite-difference" and noise is not None and noise.any_active:
        raise ValueError("finite-difference mode differentiates the noiseless loss "
                         "and cannot be combined with noisy training")
    rho0s, odiags, targets, labels = _pair_arrays(pairs)
    seed = noise.seed if noise is not None else 0
    noise_active = noise is not None and noise.any_active
    schedule = (start if start is not None else initial_schedule(grid, learn, seed)).copy()
    if schedule.grid != grid:
        raise ValueError(f"start schedule grid {schedule.grid} differs from {grid}")
    n_pairs = len(pairs)
    rate = learn.rate
    rms_history: list[float] = []
    halvings = 0
    halvings_this_epoch = 0
    over_initial = 0
    prev_schedule = None
    prev_direction = None
    outputs = np.zeros(n_pairs)
    epoch = 0
    while epoch < learn.max_epochs:
        if np.max(np.abs([schedule.k, schedule.epsilon, schedule.zeta])) > PARAM_BOUND:
            raise DivergenceError(
                f"parameter magnitude exceeded {PARAM_BOUND:g} at epoch {epoch}", epoch)
        if noise_active:
            outputs = _outputs(schedule, rho0s, odiags, n_qubits, noise,
                               run_base=epoch * n_pairs)
            residuals = outputs - targets
            _, gk, ge, gz = _gradient_arrays(schedule, rho0s, odiags, targets,
                                             n_qubits, residual_weights=residuals)
        elif learn.gradient_mode == "finite-difference":
            outputs = _outputs(schedule, rho0s, odiags, n_qubits)
            gk, ge, gz = finite_difference_gradient(schedule, pairs, n_qubits,
                                                    h=learn.fd_step)
        else:
            outputs, gk, ge, gz = _gradient_arrays(schedule, rho0s, odiags, targets,
                                                   n_qubits)
        r = rms_error(outputs, targets)
        if (not noise_active and rms_history and r > rms_history[-1] * (1.0 + 1e-12)
                and halvings_this_epoch < _MAX_HALVINGS_PER_EPOCH):
            rate *= 0.5
            halvings += 1
            halvings_this_epoch += 1
            logger.warning("rms rose %.3e -> %.3e at epoch %d; halving rate to %.3e",
                           rms_history[-1], r, epoch, rate)
            schedule = prev_schedule.copy()
            schedule.k -= rate * prev_direction[0]
            schedule.epsilon -= rate * prev_direction[1]
            schedule.zeta -= rate * prev_direction[2]
            continue
        halvings_this_epoch = 0
        rms_history.append(r)
        if r <= learn.rms_stop:
            break
        if len(rms_history) > 1:
            if r > 10.0 * rms_history[0]:
                over_initial += 1
                if over_initial >= 10:
                    raise DivergenceError(
                        f"rms stayed above 10x the initial value for 10 epochs, "
                        f"last at epoch {epoch}", epoch)
            else:
                over_initial = 0
        if epoch == learn.max_epochs - 1:
            break
        rate = min(rate * _RATE_RECOVERY, learn.rate)
        prev_schedule = schedule.copy()
        prev_direction = (gk, ge, gz)
        schedule = schedule.copy()
        schedule.k -= rate * gk
        schedule.epsilon -= rate * ge
        schedule.zeta -= rate * gz
        epoch += 1
    return TrainingReport(
        epochs_run=len(rms_history),
        rms_history=np.array(rms_history),
        final_outputs=outputs.copy(),
        schedule=schedule,
        labels=labels,
        targets=targets.copy(),
        halvings=halvings,
    )


def bootstrap(schedule: ParameterSchedule, n_from: int, n_to: int) -> ParameterSchedule:
    """Transfer a trained schedule from n_from qubits to n_to = n_from + 1.

    The series carry over bit-identically; the larger register reuses them
    through the shared-parameter Hamiltonian.
    """
    if n_to != n_from + 1:
        raise ValueError(f"bootstrap grows one qubit at a time, got {n_from} -> {n_to}")
    if not 2 <= n_from or not n_to <= 5:
        raise ValueError(f"register sizes must stay within 2..5, got {n_from} -> {n_to}")
    return schedule.copy()


def report_to_dict(report: TrainingReport) -> dict:
    return {
        "epochs": int(report.epochs_run),
        "rms_history": [float(v) for v in report.rms_history],
        "outputs": [float(v) for v in report.final_outputs],
        "targets": [float(v) for v in report.targets],
        "labels": list(report.labels),
    }


def write_report(path, report: TrainingReport, extra: dict | None = None) -> None:
    """Report JSON; `extra` entries (version, config) go in front."""
    doc = dict(extra) if extra else {}
    doc.update(report_to_dict(report))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")

"""Noise channels and reproducible random streams.

Three channels, each specified by an RMS amplitude: element-magnitude noise
and off-diagonal phase noise act on the density matrix after every step
unitary (followed by the physicality projection); Hamiltonian noise perturbs
the (K, eps, zeta) triple before each step's Hamiltonian is built.  Draws
are uniform on [-sqrt(3) a, +sqrt(3) a] so their RMS equals a.

An amplitude is the dose for a whole propagation, not for one step: a run of
n steps draws each step at RMS amplitude/sqrt(n), so the accumulated
random walk over the run has RMS equal to the configured amplitude no matter
how finely time is sliced.  Kicks scale like sqrt(dt), the discretization of
a continuous noise process; per-step kicks at the full amplitude would make
the physics depend on the grid, with 251 slices at amplitude 0.0089 fully
depolarizing every state.  A single perturb_density call is the n = 1 case
and applies the full dose at once.

Magnitude noise is relative: m <- m * max(0, 1 + dm).  Phase noise rotates
each off-diagonal element by dphi radians, which is likewise a relative
change, and the two channels at equal amplitude then degrade the dynamics
comparably, matching how they are compared in the sweeps.  An additive kick
on every element was tried first and acts very differently: it inflates the
many zero magnitudes of structured states into a bias that grows linearly in
step count, overwhelming the signal at any useful amplitude.

Reproducibility comes from counter-based Philox streams: the triple
(seed, run_id, step) indexes a dedicated, non-overlapping stream, so draws
never depend on evaluation order or worker count.  Within one step's stream
the consumption order is fixed: Hamiltonian deltas (3 values, only when that
channel is active), then magnitude deltas (upper triangle incl. diagonal,
row-major), then phase deltas (strict upper triangle, row-major).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import DensityMatrix, project_physical

SQRT3 = float(np.sqrt(3.0))

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseConfig:
    """Channel amplitudes (run-cumulative RMS doses) and the base seed."""

    mag_amplitude: float = 0.0
    phase_amplitude: float = 0.0
    hamiltonian_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("mag_amplitude", "phase_amplitude", "hamiltonian_amplitude"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def density_active(self) -> bool:
        return self.mag_amplitude > 0 or self.phase_amplitude > 0

    @property
    def hamiltonian_active(self) -> bool:
        return self.hamiltonian_amplitude > 0

    @property
    def any_active(self) -> bool:
        return self.density_active or self.hamiltonian_active


def total_noise(amplitude: float, seed: int) -> NoiseConfig:
    """Magnitude and phase channels together at one amplitude."""
    return NoiseConfig(mag_amplitude=amplitude, phase_amplitude=amplitude, seed=seed)


def rng_stream_for(seed: int, run_id: int, step: int) -> np.random.Generator:
    """Dedicated random stream for the (seed, run_id, step) triple.

    Philox is counter-based: the seed keys the cipher and (step, run_id)
    occupy the upper counter words, so distinct triples give disjoint streams
    and the same triple always replays the same draws.
    """
    if run_id < 0 or step < 0:
        raise ValueError(f"run_id and step must be nonnegative, got {run_id}, {step}")
    bits = np.random.Philox(key=int(seed) & _MASK64,
                            counter=[0, int(step), int(run_id), 0])
    return np.random.Generator(bits)


def draw_rms_uniform(stream: np.random.Generator, amplitude: float, size: int) -> np.ndarray:
    """Zero-mean uniform draws whose RMS equals `amplitude`."""
    half = SQRT3 * amplitude
    return stream.uniform(-half, half, size)


def perturb_elements(matrix: np.ndarray, mag_deltas: np.ndarray,
                     phase_deltas: np.ndarray) -> np.ndarray:
    """Element-wise polar perturbation before projection.

    Each upper-triangle element m e^{i phi} becomes m max(0, 1 + dm)
    e^{i (phi + dphi)} with dphi fixed at zero on the diagonal, and the lower
    triangle mirrors conjugately.  Exposed separately so the pre-projection
    behaviour (phase noise preserving magnitudes, the clamp, zero elements
    staying zero) is testable.
    """
    m = np.asarray(matrix, dtype=complex).copy()
    d = m.shape[0]
    iu = np.triu_indices(d)
    io = np.triu_indices(d, 1)
    vals = m[iu] * np.maximum(0.0, 1.0 + mag_deltas)
    m[iu] = vals
    m[iu[1], iu[0]] = vals.conj()
    offs = m[io] * np.exp(1j * phase_deltas)
    m[io] = offs
    m[io[1], io[0]] = offs.conj()
    diag = np.arange(d)
    m[diag, diag] = m[diag, diag].real
    return m


def perturb_density(rho: DensityMatrix, cfg: NoiseConfig,
                    stream: np.random.Generator) -> DensityMatrix:
    """One full-dose application of the density channels, then projection.

    This is the single-step specialization of the propagation protocol.
    Zero amplitudes return the input unchanged without consuming any draws.
    """
    if not cfg.density_active:
        return rho
    d = rho.dim
    n_up = d * (d + 1) // 2
    n_off = d * (d - 1) // 2
    mag = draw_rms_uniform(stream, cfg.mag_amplitude, n_up) if cfg.mag_amplitude > 0 \
        else np.zeros(n_up)
    phase = draw_rms_uniform(stream, cfg.phase_amplitude, n_off) if cfg.phase_amplitude > 0 \
        else np.zeros(n_off)
    return project_physical(perturb_elements(rho.matrix, mag, phase))


def perturb_parameters(k: float, epsilon: float, zeta: float, cfg: NoiseConfig,
                       stream: np.random.Generator) -> tuple[float, float, float]:
    """Full-dose independent zero-mean draws added to each parameter.

    Zero amplitude returns the inputs exactly without consuming draws.
    """
    if not cfg.hamiltonian_active:
        return k, epsilon, zeta
    dk, de, dz = draw_rms_uniform(stream, cfg.hamiltonian_amplitude, 3)
    return k + dk, epsilon + de, zeta + dz


def draw_propagation_noise(cfg, run_id: int, n_steps: int, dim: int):
    """Per-step noise buffers for a whole propagation.

    Each step's draws come at RMS amplitude/sqrt(n_steps), spreading the
    configured dose over the run.  Returns (ham_deltas, mag_deltas,
    phase_deltas, use_ham, use_density); inactive channels get empty buffers
    and a False flag.  Step s consumes the stream rng_stream_for(cfg.seed,
    run_id, s) in the documented order, so a manual per-step replay with the
    amplitudes divided by sqrt(n_steps) sees the same values.
    """
    if cfg is None or not cfg.any_active:
        empty = np.zeros((0, 0))
        return empty, empty, empty, False, False
    use_ham = cfg.hamiltonian_active
    use_density = cfg.density_active
    scale = 1.0 / np.sqrt(n_steps)
    n_up = dim * (dim + 1) // 2
    n_off = dim * (dim - 1) // 2
    ham = np.zeros((n_steps, 3)) if use_ham else np.zeros((0, 0))
    mag = np.zeros((n_steps, n_up)) if use_density else np.zeros((0, 0))
    phase = np.zeros((n_steps, n_off)) if use_density else np.zeros((0, 0))
    for s in range(n_steps):
        stream = rng_stream_for(cfg.seed, run_id, s)
        if use_ham:
            ham[s] = draw_rms_uniform(stream, scale * cfg.hamiltonian_amplitude, 3)
        if use_density:
            if cfg.mag_amplitude > 0:
                mag[s] = draw_rms_uniform(stream, scale * cfg.mag_amplitude, n_up)
            if cfg.phase_amplitude > 0:
                phase[s] = draw_rms_uniform(stream, scale * cfg.phase_amplitude, n_off)
    return ham, mag, phase, use_ham, use_density

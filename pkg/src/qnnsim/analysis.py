"""Post-training analysis: Fourier structure of schedules and robustness sweeps.

Trained parameter series are well described by a short Fourier expansion
f(t) = a0 + sum_m [a_m cos(m w t) + b_m sin(m w t)] with a shared base
frequency per series.  The fit is linear once w is known, so the search is
two-stage: a dense scan over (0, pi/dt] followed by golden-section
refinement of the least-squares residual.

The sweep drivers re-run whole training chains over noise amplitudes or
register sizes.  Every cell is a pure function of its arguments, so the
drivers can fan out over a process pool and still merge results in a fixed
order; serial and parallel runs produce identical rows.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import ParameterSchedule, TimeGrid
from .learning import (LearnConfig, bootstrap, initial_schedule, loss_and_outputs,
                       rms_error, train)
from .noise import NoiseConfig, total_noise
from .witness import training_set

# Harmonics per parameter series; K needs the second harmonic, the fields don't.
DEFAULT_FIT_ORDERS = {"K": 2, "epsilon": 1, "zeta": 1}

_COARSE_POINTS = 512
_OMEGA_RTOL = 1e-8
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FourierFit:
    """Least-squares truncated Fourier description of one sampled series."""

    omega: float
    a0: float
    a: np.ndarray
    b: np.ndarray
    order: int
    fit_rms: float
    r_squared: float

    def coefficients(self) -> dict[str, float]:
        """Named coefficients, omega first, harmonics in order."""
        out = {"omega": self.omega, "a0": self.a0}
        for m in range(self.order):
            out[f"a{m + 1}"] = float(self.a[m])
            out[f"b{m + 1}"] = float(self.b[m])
        return out

    def evaluate(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        y = np.full_like(t, self.a0)
        for m in range(self.order):
            y += self.a[m] * np.cos((m + 1) * self.omega * t)
            y += self.b[m] * np.sin((m + 1) * self.omega * t)
        return y


def r_squared(series, model_values) -> float:
    """1 - SS_res/SS_tot about the series mean.

    A series whose spread sits at numerical-noise level has no meaningful
    SS_tot; the convention is 1.0 when the residuals are at that level too
    and 0.0 otherwise.
    """
    y = np.asarray(series, dtype=float)
    m = np.asarray(model_values, dtype=float)
    if y.shape != m.shape or y.ndim != 1 or y.size < 2:
        raise ValueError(f"series and model must be equal 1-d vectors of >= 2, "
                         f"got {y.shape} and {m.shape}")
    ybar = float(y.mean())
    ssres = float(((y - m) ** 2).sum())
    sstot = float(((y - ybar) ** 2).sum())
    floor = y.size * (1e-12 * max(1.0, abs(ybar))) ** 2
    if sstot <= floor:
        return 1.0 if ssres <= floor else 0.0
    return 1.0 - ssres / sstot


def _design(times, omega, order):
    cols = [np.ones_like(times)]
    for m in range(1, order + 1):
        cols.append(np.cos(m * omega * times))
        cols.append(np.sin(m * omega * times))
    return np.column_stack(cols)


def _solve(times, values, omega, order):
    a = _design(times, omega, order)
    coefs, _, _, _ = np.linalg.lstsq(a, values, rcond=None)
    ssres = float(((a @ coefs - values) ** 2).sum())
    return coefs, ssres


def fourier_fit(values, times, order: int) -> FourierFit:
    """Fit a0 + sum a_m cos(m w t) + b_m sin(m w t) to samples at `times`.

    w is scanned over (0, pi/dt] (the band resolvable at the finest sample
    spacing dt) on a dense grid, then refined by golden section to relative
    width 1e-8.  A constant series has no preferred w; its r_squared follows
    the :func:`r_squared` degenerate convention.
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.ndim != 1 or values.shape != times.shape:
        raise ValueError(
            f"values and times must be equal 1-d vectors, got {values.shape} and {times.shape}")
    if values.size < 2 * order + 2:
        raise ValueError(
            f"need at least {2 * order + 2} samples for order {order}, got {values.size}")
    gaps = np.diff(times)
    if values.size < 2 or not np.all(gaps > 0):
        raise ValueError("times must be strictly increasing with at least 2 samples")
    dt = float(gaps.min())

    hi = np.pi / dt
    grid = np.linspace(hi / _COARSE_POINTS, hi, _COARSE_POINTS)
    sses = np.array([_solve(times, values, w, order)[1] for w in grid])
    i = int(np.argmin(sses))
    lo_b = grid[max(i - 1, 0)]
    hi_b = grid[min(i + 1, _COARSE_POINTS - 1)]

    # Golden-section on the bracket around the coarse minimum.
    x1 = hi_b - _GOLDEN * (hi_b - lo_b)
    x2 = lo_b + _GOLDEN * (hi_b - lo_b)
    f1 = _solve(times, values, x1, order)[1]
    f2 = _solve(times, values, x2, order)[1]
    while (hi_b - lo_b) > _OMEGA_RTOL * hi_b:
        if f1 <= f2:
            hi_b, x2, f2 = x2, x1, f1
            x1 = hi_b - _GOLDEN * (hi_b - lo_b)
            f1 = _solve(times, values, x1, order)[1]
        else:
            lo_b, x1, f1 = x1, x2, f2
            x2 = lo_b + _GOLDEN * (hi_b - lo_b)
            f2 = _solve(times, values, x2, order)[1]
    omega = 0.5 * (lo_b + hi_b)

    coefs, ssres = _solve(times, values, omega, order)
    r2 = r_squared(values, _design(times, omega, order) @ coefs)
    return FourierFit(
        omega=float(omega),
        a0=float(coefs[0]),
        a=coefs[1::2].copy(),
        b=coefs[2::2].copy(),
        order=order,
        fit_rms=float(np.sqrt(ssres / values.size)),
        r_squared=float(r2),
    )


def fit_parameter_series(schedule: ParameterSchedule,
                         orders: dict[str, int] | None = None) -> dict[str, FourierFit]:
    """One FourierFit per parameter series, at the default orders unless given."""
    orders = dict(DEFAULT_FIT_ORDERS if orders is None else orders)
    times = schedule.grid.times()
    return {name: fourier_fit(schedule.series(name), times, orders[name])
            for name in ("K", "epsilon", "zeta")}


def noise_for_channel(channel: str, amplitude: float, seed: int) -> NoiseConfig:
    """Map a single sweep amplitude onto one noise channel family."""
    if channel == "density":
        return total_noise(amplitude, seed)
    if channel == "hamiltonian":
        return NoiseConfig(0.0, 0.0, amplitude, seed)
    raise ValueError(f"unknown noise channel {channel!r}, expected density or hamiltonian")


def _coef_rows(key, fits):
    rows = []
    for param in ("K", "epsilon", "zeta"):
        for name, value in fits[param].coefficients().items():
            rows.append(key + (param, name, value))
    return rows


def _noiseless_rms(schedule, pairs, n_qubits):
    _, outputs = loss_and_outputs(schedule, pairs, n_qubits)
    targets = np.array([p.target for p in pairs])
    return rms_error(outputs, targets)


def _matched_train(pairs, n_qubits, grid, learn, noise, start):
    """Noisy training on the epoch budget of a noiseless twin.

    A noisy run's rms floor scales with the amplitude, so letting each cell
    stop on its own rms ties epoch count to noise level and a sweep ends up
    comparing schedules with very different amounts of shaping.  The twin
    from the same start fixes the budget; the noisy leg then runs exactly
    that many epochs with rms stopping disabled.  At zero amplitude the twin
    is the result, so that cell reproduces the noiseless fit identically.
    """
    reference = train(pairs, n_qubits, grid, learn, start=start)
    if noise is None or not noise.any_active:
        return reference, reference
    budget = replace(learn, max_epochs=reference.epochs_run, rms_stop=0.0)
    noisy = train(pairs, n_qubits, grid, budget, noise=noise, start=start)
    return noisy, reference


def _noise_cell(args):
    """One (amplitude, seed) cell: 2q base, bootstrap, matched noisy 3q, fit."""
    amplitude, seed, grid, learn, channel = args
    pairs2 = training_set(2)
    base = train(pairs2, 2, grid, learn,
                 start=initial_schedule(grid, learn, seed))
    pairs3 = training_set(3)
    noise = noise_for_channel(channel, amplitude, seed)
    start3 = bootstrap(base.schedule, 2, 3)
    report, reference = _matched_train(pairs3, 3, grid, learn, noise, start3)
    fits = fit_parameter_series(report.schedule)
    run = {
        "noise": amplitude,
        "seed": seed,
        "epochs": report.epochs_run,
        "reference_epochs": reference.epochs_run,
        "rms_history": [float(v) for v in report.rms_history],
        "noiseless_rms_start": _noiseless_rms(base.schedule, pairs3, 3),
        "noiseless_rms_final": _noiseless_rms(report.schedule, pairs3, 3),
    }
    return _coef_rows((amplitude, seed), fits), run


def _map_cells(func, cells, jobs):
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, cells))
    return [func(c) for c in cells]


def coefficients_vs_noise(noise_grid, seeds, grid: TimeGrid, learn: LearnConfig,
                          channel: str = "density", jobs: int = 1) -> dict:
    """Fitted coefficients of noisy-trained 3-qubit schedules across amplitudes.

    Each cell trains the 2-qubit set noiselessly from its seed's start,
    bootstraps to 3 qubits, trains under the channel at the cell amplitude
    on the matched epoch budget, and fits the result.  Rows are
    (noise, seed, param, coef_name, value).
    """
    cells = [(float(a), int(s), grid, learn, channel)
             for a in noise_grid for s in seeds]
    results = _map_cells(_noise_cell, cells, jobs)
    coef_rows, runs = [], []
    for rows, run in results:
        coef_rows.extend(rows)
        runs.append(run)
    return {"coef_rows": coef_rows, "runs": runs}


def _qubit_chain(args):
    """One seed's chain: matched noisy training at each size, bootstrapping upward."""
    seed, counts, amplitude, grid, learn, channel = args
    noise = noise_for_channel(channel, amplitude, seed)
    schedule = initial_schedule(grid, learn, seed)
    r2_rows, coef_rows, runs = [], [], []
    previous = None
    for n in counts:
        if previous is not None:
            schedule = bootstrap(previous, n - 1, n)
        pairs = training_set(n)
        report, reference = _matched_train(pairs, n, grid, learn, noise, schedule)
        fits = fit_parameter_series(report.schedule)
        for param in ("K", "epsilon", "zeta"):
            r2_rows.append((n, seed, param, fits[param].r_squared))
        coef_rows.extend(_coef_rows((n, seed), fits))
        runs.append({
            "n_qubits": n,
            "seed": seed,
            "epochs": report.epochs_run,
            "reference_epochs": reference.epochs_run,
            "rms_history": [float(v) for v in report.rms_history],
            "noiseless_rms_start": _noiseless_rms(schedule, pairs, n),
            "noiseless_rms_final": _noiseless_rms(report.schedule, pairs, n),
        })
        previous = report.schedule
    return r2_rows, coef_rows, runs


def r2_vs_qubits(qubit_counts, amplitude: float, seeds, grid: TimeGrid,
                 learn: LearnConfig, channel: str = "density",
                 jobs: int = 1) -> dict:
    """Fit quality of noisy-trained schedules as the register grows.

    Per seed, a chain runs noisy training at each size on the matched epoch
    budget and bootstraps the result upward.  Sizes must be consecutive so
    every start schedule comes from the size below.  Rows are
    (n_qubits, seed, param, r2) plus the same coefficient rows as the noise
    sweep, keyed by size instead of amplitude.
    """
    counts = [int(n) for n in qubit_counts]
    if counts != sorted(counts) or len(set(counts)) != len(counts):
        raise ValueError(f"qubit counts must be strictly increasing, got {qubit_counts}")
    if any(b - a != 1 for a, b in zip(counts, counts[1:])):
        raise ValueError(f"qubit counts must be consecutive, got {qubit_counts}")
    cells = [(int(s), tuple(counts), float(amplitude), grid, learn, channel)
             for s in seeds]
    results = _map_cells(_qubit_chain, cells, jobs)
    r2_rows, coef_rows, runs = [], [], []
    for rr, cr, rn in results:
        r2_rows.extend(rr)
        coef_rows.extend(cr)
        runs.extend(rn)
    return {"r2_rows": r2_rows, "coef_rows": coef_rows, "runs": runs}

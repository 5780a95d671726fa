"""Piecewise-constant evolution under the shared-parameter qubit-network Hamiltonian.

H(K, eps, zeta) = K sum_a sx_a + eps sum_a sz_a + zeta sum_{a<b} sz_a sz_b

All qubits share one K and one eps, all couplings share one zeta; a schedule
holds one (K, eps, zeta) triple per time step and the state advances by the
exact step unitary exp(-i H dt) computed through the eigendecomposition.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DegenerateInputError
from .qcore import DensityMatrix, HermitianOperator, hermitian_eigen, pauli_on

MIN_QUBITS = 2
MAX_QUBITS = 5

# Defaults sized so one fundamental oscillation period of the learned
# schedules (angular frequency near 0.025) spans the run.
DEFAULT_T_FINAL = 251.0
DEFAULT_N_STEPS = 251

SCHEDULE_COLUMNS = ("step", "t", "K", "epsilon", "zeta")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid: n_steps constant slices covering [0, t_final]."""

    t_final: float = DEFAULT_T_FINAL
    n_steps: int = DEFAULT_N_STEPS

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be at least 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    def times(self) -> np.ndarray:
        """Start time of each slice."""
        return np.arange(self.n_steps) * self.dt


class ParameterSchedule:
    """Per-step parameter series (K, epsilon, zeta) on a time grid."""

    def __init__(self, grid: TimeGrid, k, epsilon, zeta):
        self.grid = grid
        self.k = np.asarray(k, dtype=float).copy()
        self.epsilon = np.asarray(epsilon, dtype=float).copy()
        self.zeta = np.asarray(zeta, dtype=float).copy()
        for name, series in (("K", self.k), ("epsilon", self.epsilon), ("zeta", self.zeta)):
            if series.shape != (grid.n_steps,):
                raise ValueError(
                    f"{name} series has shape {series.shape}, expected ({grid.n_steps},)"
                )

    @classmethod
    def constant(cls, grid: TimeGrid, k: float, epsilon: float, zeta: float) -> "ParameterSchedule":
        n = grid.n_steps
        return cls(grid, np.full(n, k), np.full(n, epsilon), np.full(n, zeta))

    def copy(self) -> "ParameterSchedule":
        return ParameterSchedule(self.grid, self.k, self.epsilon, self.zeta)

    def series(self, param: str) -> np.ndarray:
        return {"K": self.k, "epsilon": self.epsilon, "zeta": self.zeta}[param]

    def __eq__(self, other):
        return (
            isinstance(other, ParameterSchedule)
            and self.grid == other.grid
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.epsilon, other.epsilon)
            and np.array_equal(self.zeta, other.zeta)
        )


def write_schedule(path, schedule: ParameterSchedule, header_comments=()) -> None:
    """Write a schedule as CSV with full round-trip precision.

    ``header_comments`` lines are emitted first, each prefixed with '# '.
    The grid's t_final rides along in a comment because the t column alone
    cannot reconstruct it exactly when dt is not representable.
    """
    buf = io.StringIO()
    for line in header_comments:
        buf.write(f"# {line}\n")
    buf.write(f"# t_final = {schedule.grid.t_final!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCHEDULE_COLUMNS)
    times = schedule.grid.times()
    for s in range(schedule.grid.n_steps):
        writer.writerow([s, repr(float(times[s])), repr(float(schedule.k[s])),
                         repr(float(schedule.epsilon[s])), repr(float(schedule.zeta[s]))])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_schedule(path) -> ParameterSchedule:
    """Read a schedule CSV written by :func:`write_schedule` (bit-exact)."""
    t_final = None
    data_lines = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                text = line[1:].strip()
                if text.startswith("t_final =") and t_final is None:
                    t_final = float(text.partition("=")[2])
            elif line.strip():
                data_lines.append(line)
    rows = [row for row in csv.reader(data_lines) if row]
    if not rows or tuple(rows[0]) != SCHEDULE_COLUMNS:
        raise ValueError(f"schedule CSV must start with header {','.join(SCHEDULE_COLUMNS)}")
    body = rows[1:]
    if not body:
        raise ValueError("schedule CSV has no data rows")
    steps = [int(r[0]) for r in body]
    if steps != list(range(len(body))):
        raise ValueError("schedule CSV steps must be 0..n_steps-1 in order")
    n = len(body)
    if t_final is None:
        t = [float(r[1]) for r in body]
        t_final = (t[1] - t[0]) * n if n > 1 else (t[0] if t[0] > 0 else 1.0)
    grid = TimeGrid(t_final=t_final, n_steps=n)
    return ParameterSchedule(
        grid,
        [float(r[2]) for r in body],
        [float(r[3]) for r in body],
        [float(r[4]) for r in body],
    )


@lru_cache(maxsize=None)
def basis_matrices(n_qubits: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sum sx_a, sum sz_a, sum_{a<b} sz_a sz_b) as real float64 matrices."""
    if not MIN_QUBITS <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [{MIN_QUBITS}, {MAX_QUBITS}], got {n_qubits}")
    dim = 2**n_qubits
    hx = np.zeros((dim, dim))
    for q in range(n_qubits):
        hx += pauli_on("x", q, n_qubits).matrix.real
    bits = np.array([[(i >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
                     for i in range(dim)])
    signs = 1.0 - 2.0 * bits  # +1 for bit 0, -1 for bit 1
    hz = np.diag(signs.sum(axis=1))
    zz = np.zeros(dim)
    for a in range(n_qubits):
        for b in range(a + 1, n_qubits):
            zz += signs[:, a] * signs[:, b]
    hzz = np.diag(zz)
    for m in (hx, hz, hzz):
        m.setflags(write=False)
    return hx, hz, hzz


def build_hamiltonian(k: float, epsilon: float, zeta: float, n_qubits: int) -> HermitianOperator:
    """Hamiltonian for one time slice of an n-qubit register."""
    hx, hz, hzz = basis_matrices(n_qubits)
    return HermitianOperator(k * hx + epsilon * hz + zeta * hzz, check=False)


def step_unitary(hamiltonian: HermitianOperator, dt: float) -> np.ndarray:
    """exp(-i H dt) via the eigendecomposition of H."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    w, v = hermitian_eigen(hamiltonian)
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


def propagate(rho0: DensityMatrix, schedule: ParameterSchedule, n_qubits: int,
              noise=None, run_id: int = 0, record_trajectory: bool = False):
    """Evolve rho0 through every slice of the schedule.

    With a :class:`qnnsim.noise.NoiseConfig` holding any nonzero amplitude,
    each step draws its perturbations from ``rng_stream_for(seed, run_id,
    step)``: Hamiltonian parameter deltas are applied before the step unitary,
    density-matrix element noise after it, followed by the physicality
    projection.

    Returns ``(rho_final, trajectory)`` where the trajectory is a list of
    n_steps + 1 :class:`DensityMatrix` frames when requested, else None.
    """
    from .noise import draw_propagation_noise  # local import to avoid a cycle

    if not MIN_QUBITS <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [{MIN_QUBITS}, {MAX_QUBITS}], got {n_qubits}")
    if rho0.n_qubits != n_qubits:
        raise ValueError(f"state has {rho0.n_qubits} qubits, expected {n_qubits}")
    hx, hz, hzz = basis_matrices(n_qubits)
    n = schedule.grid.n_steps
    dim = rho0.dim
    ham_deltas, mag_deltas, phase_deltas, use_ham, use_density = draw_propagation_noise(
        noise, run_id, n, dim)
    final, traj, ok = kernels.propagate_kernel(
        rho0.matrix, hx, hz, hzz, schedule.k, schedule.epsilon, schedule.zeta,
        schedule.grid.dt, ham_deltas, mag_deltas, phase_deltas,
        use_ham, use_density, record_trajectory)
    if not ok:
        raise DegenerateInputError(
            "noise clipped the state spectrum to zero trace; no physical projection")
    rho_final = DensityMatrix(final, check=False)
    if record_trajectory:
        frames = [DensityMatrix(traj[s], check=False) for s in range(n + 1)]
        return rho_final, frames
    return rho_final, None

"""Density-matrix primitives for small qubit registers.

Basis convention: qubit A is the most significant bit, so basis index i
assigns qubit q (0 = A) the bit ``(i >> (n_qubits - 1 - q)) & 1`` and
|0...0> is index 0.  Registers hold 1 to 5 qubits; the two-or-more
restriction on interacting systems lives in :mod:`qnnsim.dynamics`.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError

MAX_QUBITS = 5

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = -1e-10
IMAG_RESIDUE_TOL = 1e-10

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

QUBIT_LETTERS = "ABCDE"


def _qubit_count(dim: int, what: str) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim or n > MAX_QUBITS:
        raise ValueError(
            f"{what} dimension must be a power of two between 2 and {2**MAX_QUBITS}, got {dim}"
        )
    return n


def _as_square(matrix, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    return m


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


class PureState:
    """Normalized complex state vector on 1..5 qubits.

    The constructor copies, normalizes, and freezes the amplitudes; a zero
    vector cannot be normalized and raises :class:`DegenerateInputError`.
    """

    def __init__(self, amplitudes):
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        self.n_qubits = _qubit_count(a.size, "state vector")
        norm = np.linalg.norm(a)
        if norm < 1e-12:
            raise DegenerateInputError("cannot normalize a zero state vector")
        self.amplitudes = _frozen(a / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __repr__(self):
        return f"PureState(n_qubits={self.n_qubits})"


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on 1..5 qubits.

    Invariants are verified on construction (Hermitian within 1e-12, trace 1
    within 1e-12, eigenvalues >= -1e-10).  ``check=False`` skips verification
    for matrices produced by routines that guarantee the invariants; external
    inputs must be checked.
    """

    def __init__(self, matrix, check: bool = True):
        m = _as_square(matrix, "density matrix")
        self.n_qubits = _qubit_count(m.shape[0], "density matrix")
        if check:
            if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
                raise ValueError("density matrix is not Hermitian within 1e-12")
            if abs(m.trace() - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix trace {m.trace():.15g} is not 1 within 1e-12")
            lo = np.linalg.eigvalsh(m)[0]
            if lo < EIGENVALUE_TOL:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        self.matrix = _frozen(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


class HermitianOperator:
    """Hermitian observable or Hamiltonian term on 1..5 qubits."""

    def __init__(self, matrix, check: bool = True):
        m = _as_square(matrix, "operator")
        self.n_qubits = _qubit_count(m.shape[0], "operator")
        if check and np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("operator is not Hermitian within 1e-12")
        self.matrix = _frozen(m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"HermitianOperator(n_qubits={self.n_qubits})"


def pauli_on(axis: str, qubit: int, n_qubits: int) -> HermitianOperator:
    """Pauli sigma_axis acting on one qubit of an n-qubit register.

    Parameters
    ----------
    axis : {'x', 'y', 'z'}
    qubit : int
        0-based index; 0 is qubit A, the most significant bit.
    n_qubits : int
        Register size, 1 to 5.
    """
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be between 1 and {MAX_QUBITS}, got {n_qubits}")
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {n_qubits} qubits")
    op = np.eye(1, dtype=complex)
    for q in range(n_qubits):
        op = np.kron(op, _PAULI[axis] if q == qubit else np.eye(2, dtype=complex))
    return HermitianOperator(op, check=False)


def outer_product(state: PureState) -> DensityMatrix:
    """|psi><psi| as a density matrix."""
    a = state.amplitudes
    return DensityMatrix(np.outer(a, a.conj()), check=False)


def hermitian_eigen(operator) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvector columns of a Hermitian matrix.

    Accepts a :class:`HermitianOperator` or a raw array; raw arrays are
    verified Hermitian within 1e-12 first.
    """
    m = operator.matrix if isinstance(operator, HermitianOperator) else np.asarray(operator, dtype=complex)
    m = _as_square(m, "operator")
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
        raise ValueError("hermitian_eigen requires a Hermitian matrix (within 1e-12)")
    return np.linalg.eigh(m)


def expectation(rho: DensityMatrix, operator) -> float:
    """Tr[rho O], checked real within a 1e-10 imaginary residue."""
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    o = operator.matrix if isinstance(operator, HermitianOperator) else np.asarray(operator, dtype=complex)
    if r.shape != o.shape:
        raise ValueError(f"shape mismatch: state {r.shape} vs operator {o.shape}")
    val = np.trace(r @ o)
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e} beyond 1e-10")
    return float(val.real)


def project_physical(matrix) -> DensityMatrix:
    """Nearest physical state: hermitize, clip negative eigenvalues, renormalize.

    The input is replaced by (m + m^dagger)/2, eigenvalues below zero are set
    to zero, and the trace is rescaled to one.  Already-physical inputs come
    back unchanged within 1e-12.  A spectrum that clips to zero trace has no
    physical projection and raises :class:`DegenerateInputError`.
    """
    m = _as_square(matrix, "matrix")
    _qubit_count(m.shape[0], "matrix")
    herm = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(herm)
    if w[0] >= 0.0:
        tr = herm.trace().real
        if tr <= 0.0:
            raise DegenerateInputError("matrix trace is not positive; no physical projection")
        return DensityMatrix(herm / tr, check=False)
    w = np.clip(w, 0.0, None)
    tr = w.sum()
    if tr <= 0.0:
        raise DegenerateInputError("all eigenvalues clipped to zero; no physical projection")
    return DensityMatrix((v * (w / tr)) @ v.conj().T, check=False)

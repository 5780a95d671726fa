"""Entanglement witness targets, training sets, and test states.

The network reads out (Tr[rho_final prod_a sz_a])^2 over a qubit subset; for
two-qubit pure states the training target is the squared concurrence, for
GHZ states over larger subsets it is 1.  Two independent concurrence routes
are kept: the spin-flip overlap and the explicit amplitude formula.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .qcore import (
    QUBIT_LETTERS,
    DensityMatrix,
    HermitianOperator,
    PureState,
    expectation,
    outer_product,
)

_SY_SY = np.array([
    [0, 0, 0, -1],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [-1, 0, 0, 0],
], dtype=complex)


def _two_qubit_ket(state) -> np.ndarray:
    a = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex).reshape(-1)
    if a.size != 4:
        raise ValueError(f"expected a 2-qubit state (4 amplitudes), got {a.size}")
    return a


def concurrence_squared(state) -> float:
    """Squared concurrence via the spin-flip overlap |<psi|sy sy psi*>|^2."""
    psi = _two_qubit_ket(state)
    return float(abs(np.vdot(psi, _SY_SY @ psi.conj())) ** 2)


def concurrence_squared_amplitudes(state) -> float:
    """Squared concurrence from magnitudes and relative phases.

    For psi = (a, b e^{i t1}, c e^{i t2}, d e^{i t3}) with a real,
    C^2 = 4 [a^2 d^2 + b^2 c^2 - 2 a b c d cos(t3 - (t1 + t2))].
    Independent of :func:`concurrence_squared`; kept as its cross-check.
    """
    psi = _two_qubit_ket(state)
    # rotate the global phase so the first nonzero amplitude is real
    for comp in psi:
        if abs(comp) > 1e-14:
            psi = psi * np.exp(-1j * np.angle(comp))
            break
    a, b, c, d = np.abs(psi)
    t1, t2, t3 = np.angle(psi[1]), np.angle(psi[2]), np.angle(psi[3])
    t0 = np.angle(psi[0]) if a > 1e-14 else 0.0
    return float(4.0 * (a**2 * d**2 + b**2 * c**2
                        - 2 * a * b * c * d * np.cos(t3 + t0 - (t1 + t2))))


def entanglement_of_formation(c_squared: float) -> float:
    """E_F of a two-qubit pure state from its squared concurrence."""
    if not 0.0 <= c_squared <= 1.0 + 1e-12:
        raise ValueError(f"squared concurrence must lie in [0, 1], got {c_squared}")
    c_squared = min(c_squared, 1.0)
    x = 0.5 * (1.0 + np.sqrt(1.0 - c_squared))
    out = 0.0
    for p in (x, 1.0 - x):
        if p > 0.0:
            out -= p * np.log2(p)
    return float(out)


# Four two-qubit training states with their squared-concurrence targets.
PAIR_STATE_TABLE = (
    ("Bell", (1, 0, 0, 1), 1.0),
    ("Flat", (1, 1, 1, 1), 0.0),
    ("C", (0, 0, 0.5, 1), 0.0),
    ("P", (1, 0, 1, 1), 4.0 / 9.0),
)


def pair_state(name: str) -> PureState:
    for label, amps, _ in PAIR_STATE_TABLE:
        if label == name:
            return PureState(amps)
    raise ValueError(f"unknown pair state {name!r}")


def ghz_state(n_qubits: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2)."""
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = amps[-1] = 1.0
    return PureState(amps)


def embed_pair(state: PureState, pair: tuple[int, int], n_qubits: int) -> PureState:
    """Two-qubit state on the given (ordered) pair, |0> on every other qubit."""
    alpha, beta = pair
    if not (0 <= alpha < beta < n_qubits):
        raise ValueError(f"pair {pair} must be ordered and inside {n_qubits} qubits")
    src = _two_qubit_ket(state)
    amps = np.zeros(2**n_qubits, dtype=complex)
    for b_alpha in (0, 1):
        for b_beta in (0, 1):
            idx = (b_alpha << (n_qubits - 1 - alpha)) | (b_beta << (n_qubits - 1 - beta))
            amps[idx] = src[(b_alpha << 1) | b_beta]
    return PureState(amps)


def embed_subset(state: PureState, subset: tuple[int, ...], n_qubits: int) -> PureState:
    """k-qubit state on an ordered subset, |0> elsewhere."""
    k = len(subset)
    if list(subset) != sorted(set(subset)) or not all(0 <= q < n_qubits for q in subset):
        raise ValueError(f"subset {subset} must be strictly increasing inside {n_qubits} qubits")
    src = state.amplitudes
    if src.size != 2**k:
        raise ValueError(f"state has {src.size} amplitudes, subset wants {2**k}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    for pattern in range(2**k):
        idx = 0
        for pos, q in enumerate(subset):
            bit = (pattern >> (k - 1 - pos)) & 1
            idx |= bit << (n_qubits - 1 - q)
        amps[idx] = src[pattern]
    return PureState(amps)


@dataclass(frozen=True)
class WitnessObservable:
    """prod_{a in subset} sz_a on an n-qubit register."""

    subset: tuple[int, ...]
    n_qubits: int

    def __post_init__(self):
        if len(self.subset) < 2 or list(self.subset) != sorted(set(self.subset)):
            raise ValueError(f"subset {self.subset} must be >= 2 strictly increasing indices")
        if not all(0 <= q < self.n_qubits for q in self.subset):
            raise ValueError(f"subset {self.subset} outside register of {self.n_qubits}")

    def diagonal(self) -> np.ndarray:
        dim = 2**self.n_qubits
        diag = np.ones(dim)
        for i in range(dim):
            for q in self.subset:
                if (i >> (self.n_qubits - 1 - q)) & 1:
                    diag[i] = -diag[i]
        return diag

    def operator(self) -> HermitianOperator:
        return HermitianOperator(np.diag(self.diagonal().astype(complex)), check=False)

    @property
    def label(self) -> str:
        return "".join(QUBIT_LETTERS[q] for q in self.subset)


def output_value(rho_final: DensityMatrix, observable: WitnessObservable) -> float:
    """(Tr[rho O])^2, the witness readout in [0, 1]."""
    return expectation(rho_final, observable.operator()) ** 2


@dataclass(frozen=True)
class TrainingPair:
    """One labelled training example: input state, readout subset, target."""

    label: str
    state: DensityMatrix
    observable: WitnessObservable
    target: float


def training_set(n_qubits: int) -> list[TrainingPair]:
    """All training pairs for an n-qubit register.

    Every qubit pair gets the four two-qubit examples embedded with |0>
    elsewhere; every subset of three or more qubits gets a GHZ example with
    target 1.  Counts: 4, 13, 29, 56 for n = 2..5.
    """
    pairs = []
    for alpha, beta in itertools.combinations(range(n_qubits), 2):
        for name, amps, target in PAIR_STATE_TABLE:
            embedded = embed_pair(PureState(amps), (alpha, beta), n_qubits)
            obs = WitnessObservable((alpha, beta), n_qubits)
            pairs.append(TrainingPair(f"{name}({obs.label})", outer_product(embedded),
                                      obs, target))
    for k in range(3, n_qubits + 1):
        for subset in itertools.combinations(range(n_qubits), k):
            embedded = embed_subset(ghz_state(k), subset, n_qubits)
            obs = WitnessObservable(subset, n_qubits)
            pairs.append(TrainingPair(f"GHZ({obs.label})", outer_product(embedded),
                                      obs, 1.0))
    return pairs


def test_state_P(gamma: float) -> PureState:
    """(|000> + gamma |001> + |011>) / sqrt(2 + gamma^2); pair B,C entangled."""
    amps = np.zeros(8, dtype=complex)
    amps[0] = 1.0
    amps[1] = gamma
    amps[3] = 1.0
    return PureState(amps)


def p_state_oracle(gamma: float) -> float:
    """Closed-form squared concurrence of the B,C pair of test_state_P."""
    return 4.0 / (2.0 + gamma**2) ** 2


def test_state_M(gamma: float) -> DensityMatrix:
    """Bell projector on B,C mixed with weight gamma of |001><001|.

    The unnormalized matrix has 0.5 at (0,0), (0,3), (3,0), (3,3) and gamma
    at (1,1); trace 1 + gamma.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    m = np.zeros((8, 8), dtype=complex)
    for i, j in ((0, 0), (0, 3), (3, 0), (3, 3)):
        m[i, j] = 0.5
    m[1, 1] = gamma
    return DensityMatrix(m / (1.0 + gamma))


def write_training_set(path, pairs: list[TrainingPair]) -> None:
    """JSON export; complex entries become [re, im] lists."""
    doc = []
    for p in pairs:
        m = p.state.matrix
        doc.append({
            "label": p.label,
            "subset": list(p.observable.subset),
            "n_qubits": p.observable.n_qubits,
            "target": p.target,
            "state": [[[float(v.real), float(v.imag)] for v in row] for row in m],
        })
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_training_set(path) -> list[TrainingPair]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    pairs = []
    for entry in doc:
        m = np.array([[complex(re, im) for re, im in row] for row in entry["state"]])
        obs = WitnessObservable(tuple(entry["subset"]), entry["n_qubits"])
        pairs.append(TrainingPair(entry["label"], DensityMatrix(m), obs,
                                  float(entry["target"])))
    return pairs

import itertools

import numpy as np
import pytest

from qnnsim.qcore import PureState, outer_product
from qnnsim.witness import (PAIR_STATE_TABLE, WitnessObservable,
                            concurrence_squared,
                            concurrence_squared_amplitudes,
                            embed_pair, embed_subset,
                            entanglement_of_formation, ghz_state,
                            output_value, p_state_oracle, pair_state,
                            read_training_set, training_set,
                            write_training_set)
from qnnsim.witness import test_state_M as m_state
from qnnsim.witness import test_state_P as p_state

from conftest import random_pure

# E_F at the two nontrivial table values, frozen from a 40-digit mpmath
# evaluation of -x log2 x - (1-x) log2 (1-x), x = (1 + sqrt(1 - C^2))/2
EF_HALF = 0.600876036692856
EF_FOUR_NINTHS = 0.5500477595827574


class TestConcurrence:
    def test_table_targets_are_exact(self):
        # Bell 1, Flat 0, C 0, P 4/9, each within 1e-12
        for name, amps, target in PAIR_STATE_TABLE:
            c2 = concurrence_squared(PureState(amps))
            assert abs(c2 - target) < 1e-12, name

    def test_both_routes_agree_on_random_states(self):
        rng = np.random.default_rng(99)
        for _ in range(10_000):
            psi = random_pure(rng, 4)
            a = concurrence_squared(psi)
            b = concurrence_squared_amplitudes(psi)
            assert abs(a - b) < 1e-12

    def test_routes_agree_on_table_states(self):
        for name, amps, _ in PAIR_STATE_TABLE:
            s = PureState(amps)
            assert abs(concurrence_squared(s) - concurrence_squared_amplitudes(s)) < 1e-12

    def test_global_phase_invariance(self):
        psi = PureState(np.array([1, 0, 1, 1]) * np.exp(1.3j))
        assert abs(concurrence_squared_amplitudes(psi) - 4 / 9) < 1e-12

    def test_rejects_wrong_size(self):
        with pytest.raises(ValueError):
            concurrence_squared(PureState([1, 0]))


class TestEntanglementOfFormation:
    def test_endpoints(self):
        assert entanglement_of_formation(0.0) == 0.0
        assert entanglement_of_formation(1.0) == 1.0

    def test_frozen_values(self):
        assert abs(entanglement_of_formation(0.5) - EF_HALF) < 1e-12
        assert abs(entanglement_of_formation(4 / 9) - EF_FOUR_NINTHS) < 1e-12

    def test_monotone_on_grid(self):
        grid = np.linspace(0, 1, 101)
        vals = [entanglement_of_formation(c) for c in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            entanglement_of_formation(1.5)


class TestWitnessObservable:
    def test_diagonal_is_parity_of_subset_bits(self):
        obs = WitnessObservable((0, 2), 3)
        diag = obs.diagonal()
        for i in range(8):
            bits = ((i >> 2) & 1) + (i & 1)  # qubits A and C of ABC
            assert diag[i] == (-1) ** bits

    def test_label_uses_qubit_letters(self):
        assert WitnessObservable((1, 2), 3).label == "BC"
        assert WitnessObservable((0, 1, 3), 4).label == "ABD"

    def test_rejects_singleton_and_disorder(self):
        with pytest.raises(ValueError):
            WitnessObservable((1,), 3)
        with pytest.raises(ValueError):
            WitnessObservable((2, 1), 3)

    def test_output_of_bell_projector_is_one(self):
        rho = outer_product(pair_state("Bell"))
        assert abs(output_value(rho, WitnessObservable((0, 1), 2)) - 1.0) < 1e-14


class TestTrainingSet:
    @pytest.mark.parametrize("n,count", [(2, 4), (3, 13), (4, 29), (5, 56)])
    def test_counts(self, n, count):
        assert len(training_set(n)) == count

    def test_targets_match_concurrence_of_embedded_pairs(self):
        # the embedded pair keeps the 2-qubit concurrence of its source
        for p in training_set(3):
            if p.label.startswith("GHZ"):
                assert p.target == 1.0
            else:
                name = p.label.split("(")[0]
                src = pair_state(name)
                assert abs(p.target - concurrence_squared(src)) < 1e-12

    def test_initial_readouts_follow_from_parity(self):
        # untouched inputs have known sz-parity: Bell (1/2, 1/2 on even
        # parity) -> 1; Flat cancels -> 0; C = (0.2, 0.8) on (-,+) -> 0.36;
        # P = (1/3 each on +,-,+) -> 1/9; GHZ on an odd subset cancels -> 0
        expected = {"Bell": 1.0, "Flat": 0.0, "C": 0.36, "P": 1 / 9, "GHZ": 0.0}
        for p in training_set(3):
            val = output_value(p.state, p.observable)
            assert abs(val - expected[p.label.split("(")[0]]) < 1e-12, p.label

    def test_labels_are_unique(self):
        for n in (2, 3, 4, 5):
            labels = [p.label for p in training_set(n)]
            assert len(set(labels)) == len(labels)

    def test_embeddings_cover_all_pairs(self):
        labels = {p.label for p in training_set(3)}
        for a, b in itertools.combinations("ABC", 2):
            assert f"Bell({a}{b})" in labels
        assert "GHZ(ABC)" in labels


class TestEmbedding:
    def test_embed_pair_places_amplitudes_msb_first(self):
        # Bell on (A, C) of 3 qubits: |000> and |101>
        emb = embed_pair(pair_state("Bell"), (0, 2), 3)
        a = emb.amplitudes
        assert abs(a[0b000]) > 0.7 and abs(a[0b101]) > 0.7
        assert np.count_nonzero(np.abs(a) > 1e-14) == 2

    def test_embed_subset_matches_embed_pair_for_pairs(self):
        s = pair_state("P")
        via_pair = embed_pair(s, (1, 3), 4).amplitudes
        via_subset = embed_subset(s, (1, 3), 4).amplitudes
        assert np.allclose(via_pair, via_subset)

    def test_ghz_state_has_two_equal_corners(self):
        g = ghz_state(4).amplitudes
        assert abs(g[0] - g[-1]) < 1e-15
        assert abs(abs(g[0]) - 1 / np.sqrt(2)) < 1e-15


class TestTestStates:
    def test_p_state_oracle_matches_direct_concurrence(self):
        # trace out qubit A (always |0>) and apply the 2-qubit formula
        for gamma in (0.0, 0.25, 0.5, 0.75, 1.0, 2.0):
            psi = p_state(gamma).amplitudes
            pair_ket = psi[:4]  # qubit A = 0 block holds the whole state
            assert abs(concurrence_squared(pair_ket) - p_state_oracle(gamma)) < 1e-12

    def test_m_state_purity_frozen_points(self):
        assert abs(m_state(1.0).purity() - 0.5) < 1e-12
        assert abs(m_state(1 / 3).purity() - 0.625) < 1e-12

    def test_m_state_trace_and_psd(self):
        for gamma in (0.0, 0.4, 1.0):
            m = m_state(gamma).matrix
            assert abs(np.trace(m).real - 1.0) < 1e-14
            assert np.linalg.eigvalsh(m).min() >= -1e-15

    def test_m_state_rejects_negative_gamma(self):
        with pytest.raises(ValueError):
            m_state(-0.1)


def test_training_set_round_trips_through_json(tmp_path):
    pairs = training_set(3)
    path = tmp_path / "train3.json"
    write_training_set(path, pairs)
    back = read_training_set(path)
    assert len(back) == len(pairs)
    for a, b in zip(pairs, back):
        assert a.label == b.label
        assert a.observable.subset == b.observable.subset
        assert a.target == b.target
        assert np.allclose(a.state.matrix, b.state.matrix)

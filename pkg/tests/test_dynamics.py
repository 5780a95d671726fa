import numpy as np
import pytest

from qnnsim.dynamics import (TimeGrid, ParameterSchedule, basis_matrices,
                             build_hamiltonian, propagate, read_schedule,
                             step_unitary, write_schedule)
from qnnsim.qcore import expectation, outer_product, pauli_on
from qnnsim.witness import ghz_state, training_set

from conftest import random_density, random_schedule


class TestTimeGrid:
    def test_defaults(self):
        g = TimeGrid()
        assert g.t_final == 251.0
        assert g.n_steps == 251
        assert g.dt == 1.0

    def test_times_start_at_zero(self):
        g = TimeGrid(10.0, 4)
        assert np.allclose(g.times(), [0.0, 2.5, 5.0, 7.5])

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(-1.0, 10)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)


class TestParameterSchedule:
    def test_constant_and_series_access(self, small_grid):
        s = ParameterSchedule.constant(small_grid, 0.002, 1e-4, 2e-4)
        assert np.all(s.series("K") == 0.002)
        assert np.all(s.series("epsilon") == 1e-4)
        assert np.all(s.series("zeta") == 2e-4)

    def test_shape_mismatch_rejected(self, small_grid):
        with pytest.raises(ValueError):
            ParameterSchedule(small_grid, np.zeros(7), np.zeros(30), np.zeros(30))

    def test_copy_is_independent(self, small_grid):
        a = ParameterSchedule.constant(small_grid, 1e-3, 0.0, 0.0)
        b = a.copy()
        b.k[0] = 9.0
        assert a.k[0] == 1e-3
        assert a != b

    def test_round_trip_is_bit_exact(self, tmp_path, small_grid, rng):
        s = random_schedule(rng, small_grid)
        path = tmp_path / "sched.csv"
        write_schedule(path, s, header_comments=("written by a test",))
        back = read_schedule(path)
        assert back == s
        assert back.grid.t_final == s.grid.t_final

    def test_read_rejects_malformed(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("step,t,K\n0,0.0,1.0\n")
        with pytest.raises(ValueError):
            read_schedule(p)


class TestHamiltonian:
    def test_basis_matrices_are_real_symmetric(self):
        for n in (2, 3, 4, 5):
            for m in basis_matrices(n):
                assert m.dtype == np.float64
                assert np.array_equal(m, m.T)

    def test_two_qubit_structure(self):
        hx, hz, hzz = basis_matrices(2)
        assert np.allclose(np.diag(hz), [2, 0, 0, -2])
        assert np.allclose(np.diag(hzz), [1, -1, -1, 1])
        # sum of single-qubit sigma_x flips exactly one bit
        assert hx[0b00, 0b01] == 1 and hx[0b00, 0b10] == 1 and hx[0b00, 0b11] == 0

    def test_matches_pauli_sum(self):
        n = 3
        hx, hz, hzz = basis_matrices(n)
        sx = sum(pauli_on("x", q, n).matrix for q in range(n))
        sz = sum(pauli_on("z", q, n).matrix for q in range(n))
        szz = sum(pauli_on("z", a, n).matrix @ pauli_on("z", b, n).matrix
                  for a in range(n) for b in range(a + 1, n))
        assert np.allclose(hx, sx.real)
        assert np.allclose(hz, sz.real)
        assert np.allclose(hzz, szz.real)

    def test_build_hamiltonian_combines_terms(self):
        h = build_hamiltonian(2.0, 3.0, 5.0, 2).matrix
        hx, hz, hzz = basis_matrices(2)
        assert np.allclose(h, 2 * hx + 3 * hz + 5 * hzz)

    def test_rejects_out_of_range_sizes(self):
        with pytest.raises(ValueError):
            basis_matrices(1)
        with pytest.raises(ValueError):
            basis_matrices(6)


class TestStepUnitary:
    def test_is_unitary_and_inverts(self):
        h = build_hamiltonian(0.4, 0.1, 0.05, 2)
        u = step_unitary(h, 0.7)
        assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-13)
        u_back = step_unitary(h, 0.7)  # same call, deterministic
        assert np.array_equal(u, u_back)

    def test_small_dt_matches_series_expansion(self):
        h = build_hamiltonian(0.3, 0.2, 0.1, 2)
        dt = 1e-6
        u = step_unitary(h, dt)
        approx = np.eye(4) - 1j * dt * h.matrix
        assert np.max(np.abs(u - approx)) < 1e-11

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step_unitary(build_hamiltonian(1, 0, 0, 2), 0.0)


class TestPropagate:
    @pytest.mark.parametrize("n_qubits", [2, 3, 4, 5])
    def test_invariants_on_default_grid(self, n_qubits):
        """Trace, Hermiticity, purity, <H> conserved to 1e-9 over 251 steps."""
        grid = TimeGrid()
        sched = ParameterSchedule.constant(grid, 0.002, 1e-4, 2e-4)
        rho0 = outer_product(ghz_state(n_qubits))
        h = build_hamiltonian(0.002, 1e-4, 2e-4, n_qubits)
        e0 = expectation(rho0, h)
        rho, _ = propagate(rho0, sched, n_qubits)
        m = rho.matrix
        assert abs(np.trace(m).real - 1.0) < 1e-9
        assert np.abs(m - m.conj().T).max() < 1e-9
        assert abs(rho.purity() - 1.0) < 1e-9
        assert abs(expectation(rho, h) - e0) < 1e-9

    def test_identity_hamiltonian_leaves_diagonal_states(self, small_grid):
        # sz-diagonal input commutes with an x-free Hamiltonian
        sched = ParameterSchedule.constant(small_grid, 0.0, 0.3, 0.2)
        rho0 = random_density(np.random.default_rng(3), 4)
        diag = np.diag(np.diag(rho0.matrix))
        rho0 = type(rho0)(diag / np.trace(diag).real)
        rho, _ = propagate(rho0, sched, 2)
        assert np.allclose(rho.matrix, rho0.matrix, atol=1e-12)

    def test_trajectory_has_step_plus_one_frames(self, small_grid, rng):
        sched = random_schedule(rng, small_grid)
        rho0 = outer_product(ghz_state(2))
        rho, frames = propagate(rho0, sched, 2, record_trajectory=True)
        assert len(frames) == small_grid.n_steps + 1
        assert np.allclose(frames[0].matrix, rho0.matrix)
        assert np.allclose(frames[-1].matrix, rho.matrix)

    def test_composition_of_schedules(self, rng):
        """Running 30 steps equals running 15 then 15 with the same series."""
        grid = TimeGrid(30.0, 30)
        sched = random_schedule(rng, grid)
        half = TimeGrid(15.0, 15)
        first = ParameterSchedule(half, sched.k[:15], sched.epsilon[:15], sched.zeta[:15])
        second = ParameterSchedule(half, sched.k[15:], sched.epsilon[15:], sched.zeta[15:])
        rho0 = outer_product(ghz_state(2))
        full, _ = propagate(rho0, sched, 2)
        mid, _ = propagate(rho0, first, 2)
        end, _ = propagate(mid, second, 2)
        assert np.allclose(full.matrix, end.matrix, atol=1e-13)

    def test_mismatched_register_rejected(self, small_grid):
        sched = ParameterSchedule.constant(small_grid, 1e-3, 0, 0)
        with pytest.raises(ValueError):
            propagate(outer_product(ghz_state(3)), sched, 2)

    def test_mixed_state_purity_is_preserved_noiselessly(self, small_grid, rng):
        sched = random_schedule(rng, small_grid)
        rho0 = random_density(rng, 4)
        p0 = rho0.purity()
        rho, _ = propagate(rho0, sched, 2)
        assert abs(rho.purity() - p0) < 1e-12


def test_training_inputs_survive_propagation(small_grid, rng):
    # every training input stays physical through a random schedule
    sched = random_schedule(rng, small_grid)
    for p in training_set(3):
        rho, _ = propagate(p.state, sched, 3)
        w = np.linalg.eigvalsh(rho.matrix)
        assert w.min() > -1e-12
        assert abs(w.sum() - 1.0) < 1e-12

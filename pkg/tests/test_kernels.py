"""Numba and numpy backends must be numerically interchangeable."""

import numpy as np
import pytest

from qnnsim import kernels
from qnnsim.dynamics import TimeGrid, basis_matrices
from qnnsim.noise import NoiseConfig, draw_propagation_noise
from qnnsim.qcore import outer_product
from qnnsim.witness import training_set, ghz_state

from conftest import random_schedule

def _numba_or_skip():
    try:
        return kernels.get_backend("numba")
    except ImportError:
        pytest.skip("numba not importable")


def _propagate_args(n_qubits, seed, noise=None):
    grid = TimeGrid(40.0, 40)
    rng = np.random.default_rng(seed)
    sched = random_schedule(rng, grid)
    hx, hz, hzz = basis_matrices(n_qubits)
    dim = 2**n_qubits
    buffers = draw_propagation_noise(noise, 3, grid.n_steps, dim)
    rho0 = outer_product(ghz_state(n_qubits)).matrix
    return (rho0, hx, hz, hzz, sched.k, sched.epsilon, sched.zeta, grid.dt) + buffers


class TestBackendAgreement:
    @pytest.mark.parametrize("n_qubits", [2, 3, 4])
    def test_noiseless_propagation(self, n_qubits):
        nb = _numba_or_skip()
        args = _propagate_args(n_qubits, seed=n_qubits)
        a, _, ok_a = kernels.get_backend("numpy").propagate_kernel(*args, False)
        b, _, ok_b = nb.propagate_kernel(*args, False)
        assert ok_a and ok_b
        assert np.max(np.abs(a - b)) < 1e-13

    def test_noisy_propagation(self):
        nb = _numba_or_skip()
        cfg = NoiseConfig(0.02, 0.02, 0.02, seed=5)
        args = _propagate_args(3, seed=1, noise=cfg)
        a, _, ok_a = kernels.get_backend("numpy").propagate_kernel(*args, False)
        b, _, ok_b = nb.propagate_kernel(*args, False)
        assert ok_a and ok_b
        assert np.max(np.abs(a - b)) < 1e-13

    def test_recorded_trajectories_match(self):
        nb = _numba_or_skip()
        args = _propagate_args(2, seed=2)
        _, ta, _ = kernels.get_backend("numpy").propagate_kernel(*args, True)
        _, tb, _ = nb.propagate_kernel(*args, True)
        assert ta.shape == tb.shape == (41, 4, 4)
        assert np.max(np.abs(ta - tb)) < 1e-13

    def test_loss_grad_kernel(self):
        nb = _numba_or_skip()
        grid = TimeGrid(40.0, 40)
        rng = np.random.default_rng(9)
        sched = random_schedule(rng, grid)
        pairs = training_set(2)
        rho0s = np.stack([p.state.matrix for p in pairs])
        odiags = np.stack([p.observable.diagonal() for p in pairs])
        targets = np.array([p.target for p in pairs])
        weights = np.zeros(0)
        hx, hz, hzz = basis_matrices(2)
        args = (rho0s, odiags, targets, weights, False,
                hx, hz, hzz, sched.k, sched.epsilon, sched.zeta, grid.dt)
        out_a = kernels.get_backend("numpy").loss_grad_kernel(*args)
        out_b = nb.loss_grad_kernel(*args)
        for a, b in zip(out_a, out_b):
            assert np.max(np.abs(np.asarray(a) - np.asarray(b))) < 1e-12


def test_backend_name_reports_active():
    assert kernels.backend_name() in ("numpy", "numba")


def test_get_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_flag_selects_numpy_fallback():
    # subprocess so the import-time switch is exercised
    import subprocess, sys
    code = ("import qnnsim.kernels as k; print(k.backend_name())")
    out = subprocess.run([sys.executable, "-c", code],
                         env={"QNNSIM_NO_NUMBA": "1", "PATH": "/usr/bin:/bin"},
                         capture_output=True, text=True, cwd="/")
    assert out.stdout.strip() == "numpy"

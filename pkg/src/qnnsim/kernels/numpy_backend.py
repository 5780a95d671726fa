"""Pure-numpy propagation and gradient kernels.

Semantics here are the reference; the numba backend mirrors them exactly.
Hamiltonians are real symmetric (transverse-field plus Ising terms), so the
per-step eigendecomposition runs in float64 and only the phases are complex.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _phase_factors(lam: np.ndarray, dt: float) -> np.ndarray:
    return np.exp(-1j * dt * lam)


def _phi_matrix(lam: np.ndarray, dt: float) -> np.ndarray:
    """Divided differences of exp(-i dt x) on the spectrum.

    Phi_ab = (e^{-i dt la} - e^{-i dt lb}) / (la - lb) with the a = b limit
    -i dt e^{-i dt la}, evaluated through the cancellation-free identity
    -i dt e^{-i dt (la+lb)/2} sinc(dt (la-lb)/2).
    """
    s = lam[:, None] + lam[None, :]
    x = 0.5 * dt * (lam[:, None] - lam[None, :])
    return -1j * dt * np.exp(-0.5j * dt * s) * np.sinc(x / np.pi)


def _apply_step(rho, vc, ph):
    rt = vc.conj().T @ rho @ vc
    rt = rt * (ph[:, None] * ph.conj()[None, :])
    return vc @ rt @ vc.conj().T


def propagate_kernel(rho, hx, hz, hzz, ks, es, zs, dt,
                     ham_deltas, mag_deltas, phase_deltas,
                     use_ham, use_density, record):
    """Piecewise-constant evolution with optional per-step noise.

    Returns (rho_final, trajectory, ok).  The trajectory holds n_steps + 1
    frames when `record`, else a single unused frame.  `ok` goes False when
    the physicality projection meets an all-zero spectrum.
    """
    n = ks.shape[0]
    d = rho.shape[0]
    rho = rho.astype(np.complex128, copy=True)
    traj = np.empty((n + 1 if record else 1, d, d), dtype=np.complex128)
    if record:
        traj[0] = rho
    iu = np.triu_indices(d)
    io = np.triu_indices(d, 1)
    diag = np.arange(d)
    for s in range(n):
        k, e, z = ks[s], es[s], zs[s]
        if use_ham:
            k = k + ham_deltas[s, 0]
            e = e + ham_deltas[s, 1]
            z = z + ham_deltas[s, 2]
        w, v = np.linalg.eigh(k * hx + e * hz + z * hzz)
        vc = v.astype(np.complex128)
        rho = _apply_step(rho, vc, _phase_factors(w, dt))
        if use_density:
            vals = rho[iu] * np.maximum(0.0, 1.0 + mag_deltas[s])
            rho[iu] = vals
            rho[iu[1], iu[0]] = vals.conj()
            offs = rho[io] * np.exp(1j * phase_deltas[s])
            rho[io] = offs
            rho[io[1], io[0]] = offs.conj()
            rho[diag, diag] = rho[diag, diag].real
            lam, u = np.linalg.eigh(rho)
            lam = np.clip(lam, 0.0, None)
            tr = lam.sum()
            if tr <= 0.0:
                return rho, traj, False
            rho = (u * (lam / tr)) @ u.conj().T
        if record:
            traj[s + 1] = rho
    return rho, traj, True


def loss_grad_kernel(rho0s, odiags, targets, weights, use_weights,
                     hx, hz, hzz, ks, es, zs, dt):
    """Noiseless per-pair outputs and the adjoint gradient of the loss.

    outputs[p] = Tr[rho_final O_p]^2 with O_p diagonal (entries odiags[p]).
    The gradient of L = 1/2 sum_p w_p-weighted squared residuals is assembled
    by backpropagating the Hermitian adjoint G through each step and pairing
    it with the spectral derivative of exp(-i H dt); residual weights are
    (output - target) unless `use_weights` supplies them.
    """
    P, d = rho0s.shape[0], rho0s.shape[1]
    n = ks.shape[0]
    lams = np.empty((n, d))
    vecs = np.empty((n, d, d, ), dtype=np.complex128)
    mx = np.empty((n, d, d))
    mz = np.empty((n, d, d))
    mzz = np.empty((n, d, d))
    phis = np.empty((n, d, d), dtype=np.complex128)
    for s in range(n):
        w, v = np.linalg.eigh(ks[s] * hx + es[s] * hz + zs[s] * hzz)
        lams[s] = w
        vecs[s] = v
        mx[s] = v.T @ hx @ v
        mz[s] = v.T @ hz @ v
        mzz[s] = v.T @ hzz @ v
        phis[s] = _phi_matrix(w, dt)
    outputs = np.empty(P)
    gk = np.zeros(n)
    ge = np.zeros(n)
    gz = np.zeros(n)
    traj = np.empty((n + 1, d, d), dtype=np.complex128)
    for p in range(P):
        rho = rho0s[p].astype(np.complex128, copy=True)
        traj[0] = rho
        for s in range(n):
            rho = _apply_step(rho, vecs[s], _phase_factors(lams[s], dt))
            traj[s + 1] = rho
        f = float(np.sum(rho.diagonal().real * odiags[p]))
        outputs[p] = f * f
        w_p = weights[p] if use_weights else outputs[p] - targets[p]
        coef = 2.0 * w_p * f
        if coef == 0.0:
            continue
        g = np.zeros((d, d), dtype=np.complex128)
        g[np.arange(d), np.arange(d)] = coef * odiags[p]
        for s in range(n - 1, -1, -1):
            vc = vecs[s]
            ph = _phase_factors(lams[s], dt)
            gt = vc.conj().T @ g @ vc
            rt = vc.conj().T @ traj[s] @ vc
            x = rt @ (gt * ph.conj()[:, None])
            t = x.T * phis[s]
            gk[s] += 2.0 * np.sum(t * mx[s]).real
            ge[s] += 2.0 * np.sum(t * mz[s]).real
            gz[s] += 2.0 * np.sum(t * mzz[s]).real
            gt = gt * (ph.conj()[:, None] * ph[None, :])
            g = vc @ gt @ vc.conj().T
    return outputs, gk, ge, gz

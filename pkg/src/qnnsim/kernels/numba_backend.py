"""Numba-jitted twins of the numpy kernels.

Same call signatures, same draw layouts, same math; loops replace fancy
indexing so everything stays in nopython mode.  Compilation is cached on
disk, so the first call per process shape pays the JIT cost once.
"""

from __future__ import annotations

import cmath

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _sinc(x):
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return np.sin(x) / x


@njit(cache=True)
def _phi_matrix(lam, dt):
    d = lam.shape[0]
    out = np.empty((d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            mid = -0.5j * dt * (lam[a] + lam[b])
            x = 0.5 * dt * (lam[a] - lam[b])
            out[a, b] = -1j * dt * cmath.exp(mid) * _sinc(x)
    return out


@njit(cache=True)
def _apply_step(rho, vc, ph):
    rt = vc.conj().T @ rho @ vc
    d = rho.shape[0]
    for a in range(d):
        for b in range(d):
            rt[a, b] *= ph[a] * ph[b].conjugate()
    return vc @ rt @ vc.conj().T


@njit(cache=True)
def propagate_kernel(rho, hx, hz, hzz, ks, es, zs, dt,
                     ham_deltas, mag_deltas, phase_deltas,
                     use_ham, use_density, record):
    n = ks.shape[0]
    d = rho.shape[0]
    rho = rho.astype(np.complex128)
    if record:
        traj = np.empty((n + 1, d, d), dtype=np.complex128)
        traj[0] = rho
    else:
        traj = np.empty((1, d, d), dtype=np.complex128)
    for s in range(n):
        k = ks[s]
        e = es[s]
        z = zs[s]
        if use_ham:
            k += ham_deltas[s, 0]
            e += ham_deltas[s, 1]
            z += ham_deltas[s, 2]
        h = k * hx + e * hz + z * hzz
        w, v = np.linalg.eigh(h)
        vc = v.astype(np.complex128)
        ph = np.exp(-1j * dt * w)
        rho = _apply_step(rho, vc, ph)
        if use_density:
            # magnitude then phase perturbation, upper triangle row-major
            idx = 0
            for i in range(d):
                for j in range(i, d):
                    f = 1.0 + mag_deltas[s, idx]
                    if f < 0.0:
                        f = 0.0
                    val = rho[i, j] * f
                    rho[i, j] = val
                    rho[j, i] = val.conjugate()
                    idx += 1
            idx = 0
            for i in range(d):
                for j in range(i + 1, d):
                    val = rho[i, j] * cmath.exp(1j * phase_deltas[s, idx])
                    rho[i, j] = val
                    rho[j, i] = val.conjugate()
                    idx += 1
            for i in range(d):
                rho[i, i] = complex(rho[i, i].real, 0.0)
            lam, u = np.linalg.eigh(rho)
            tr = 0.0
            for a in range(d):
                if lam[a] < 0.0:
                    lam[a] = 0.0
                tr += lam[a]
            if tr <= 0.0:
                return rho, traj, False
            scaled = np.empty((d, d), dtype=np.complex128)
            for a in range(d):
                fac = lam[a] / tr
                for i in range(d):
                    scaled[i, a] = u[i, a] * fac
            rho = scaled @ u.conj().T
        if record:
            traj[s + 1] = rho
    return rho, traj, True


@njit(cache=True)
def loss_grad_kernel(rho0s, odiags, targets, weights, use_weights,
                     hx, hz, hzz, ks, es, zs, dt):
    P = rho0s.shape[0]
    d = rho0s.shape[1]
    n = ks.shape[0]
    lams = np.empty((n, d))
    vecs = np.empty((n, d, d), dtype=np.complex128)
    mx = np.empty((n, d, d))
    mz = np.empty((n, d, d))
    mzz = np.empty((n, d, d))
    phis = np.empty((n, d, d), dtype=np.complex128)
    for s in range(n):
        h = ks[s] * hx + es[s] * hz + zs[s] * hzz
        w, v = np.linalg.eigh(h)
        lams[s] = w
        vecs[s] = v.astype(np.complex128)
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
        rho = rho0s[p].astype(np.complex128)
        traj[0] = rho
        for s in range(n):
            ph = np.exp(-1j * dt * lams[s])
            rho = _apply_step(rho, vecs[s], ph)
            traj[s + 1] = rho
        f = 0.0
        for i in range(d):
            f += rho[i, i].real * odiags[p, i]
        outputs[p] = f * f
        if use_weights:
            w_p = weights[p]
        else:
            w_p = outputs[p] - targets[p]
        coef = 2.0 * w_p * f
        if coef == 0.0:
            continue
        g = np.zeros((d, d), dtype=np.complex128)
        for i in range(d):
            g[i, i] = coef * odiags[p, i]
        for s in range(n - 1, -1, -1):
            vc = vecs[s]
            ph = np.exp(-1j * dt * lams[s])
            gt = vc.conj().T @ g @ vc
            rt = vc.conj().T @ traj[s] @ vc
            eg = np.empty((d, d), dtype=np.complex128)
            for a in range(d):
                ca = ph[a].conjugate()
                for b in range(d):
                    eg[a, b] = ca * gt[a, b]
            x = rt @ eg
            sk = 0.0
            se = 0.0
            sz_ = 0.0
            for a in range(d):
                for b in range(d):
                    t = x[b, a] * phis[s, a, b]
                    sk += (t * mx[s, a, b]).real
                    se += (t * mz[s, a, b]).real
                    sz_ += (t * mzz[s, a, b]).real
            gk[s] += 2.0 * sk
            ge[s] += 2.0 * se
            gz[s] += 2.0 * sz_
            for a in range(d):
                ca = ph[a].conjugate()
                for b in range(d):
                    gt[a, b] = ca * gt[a, b] * ph[b]
            g = vc @ gt @ vc.conj().T
    return outputs, gk, ge, gz

"""Batched inner-loop kernels.

Every kernel exists twice: a vectorised numpy implementation and an explicit
loop implementation compiled with numba.  :data:`BACKEND` picks one at import
time (see :mod:`umbilic_lab._backend`); :func:`get_kernels` returns either set
explicitly, which the tests and the benchmark use to compare them.

Array conventions (leading batch axis ``B``):

* ``E``  -- ``(B, N, m)`` first partials of the immersion, columns ``d_i f``
* ``D2`` -- ``(B, N, m, m)`` second partials ``d_i d_j f``
* ``nu`` -- ``(B, N)`` unit normal of a level-set ambient (ignored otherwise)
"""

import contextlib
from types import SimpleNamespace

import numpy as np

from ._backend import njit, requested_backend

MODE_PRESCRIBED = 0
MODE_SIGNED = 1
MODE_NORM = 2


# ---------------------------------------------------------------------------
# numpy implementations


def _oriented_normal_np(E, nu, levelset):
    if levelset:
        C = np.concatenate([E, nu[:, :, None]], axis=2)
    else:
        C = E
    B, N, K = C.shape
    if K != N - 1:
        raise ValueError("oriented normal needs exactly N-1 spanning columns")
    out = np.empty((B, N))
    for k in range(N):
        minor = np.delete(C, k, axis=1)
        out[:, k] = (-1.0) ** k * np.linalg.det(minor)
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _curve_rhs_np(E, D2, nu, T, Y, coef, mode, levelset):
    a = np.einsum("bnij,bi,bj->bn", D2, T, T)
    b = np.einsum("bnij,bi,bj->bn", D2, T, Y)
    g = np.einsum("bni,bnj->bij", E, E)
    rhs = np.stack([np.einsum("bni,bn->bi", E, a), np.einsum("bni,bn->bi", E, b)], axis=2)
    sol = np.linalg.solve(g, rhs)
    gtt, gty = sol[:, :, 0], sol[:, :, 1]
    w = a - np.einsum("bni,bi->bn", E, gtt)
    if levelset:
        w = w - nu * np.einsum("bn,bn->b", nu, a)[:, None]
    if mode == MODE_SIGNED:
        nhat = _oriented_normal_np(E, nu, levelset)
        sig = np.einsum("bn,bn->b", w, nhat)
    else:
        sig = np.linalg.norm(w, axis=1)
    s = coef if mode == MODE_PRESCRIBED else coef * sig
    tdot = s[:, None] * Y - gtt
    ydot = -s[:, None] * T - gty
    return tdot, ydot, sig


def _metric_terms_np(E, D2):
    g = np.einsum("bni,bnj->bij", E, E)
    ginv = np.linalg.inv(g)
    ginv = 0.5 * (ginv + np.swapaxes(ginv, 1, 2))
    lower = np.einsum("bnl,bnij->blij", E, D2)
    gamma = np.einsum("bkl,blij->bkij", ginv, lower)
    return g, ginv, gamma


def _renormalize_np(E, T, Y):
    g = np.einsum("bni,bnj->bij", E, E)
    tt = np.einsum("bi,bij,bj->b", T, g, T)
    yy = np.einsum("bi,bij,bj->b", Y, g, Y)
    ty = np.einsum("bi,bij,bj->b", T, g, Y)
    drift = np.maximum(np.maximum(np.abs(np.sqrt(tt) - 1.0), np.abs(np.sqrt(yy) - 1.0)), np.abs(ty))
    T = T / np.sqrt(tt)[:, None]
    Y = Y - np.einsum("bi,bij,bj->b", Y, g, T)[:, None] * T
    Y = Y / np.sqrt(np.einsum("bi,bij,bj->b", Y, g, Y))[:, None]
    return T, Y, drift


def _chain_transport_np(phi, v0):
    out = np.empty((phi.shape[0] + 1,) + v0.shape)
    out[0] = v0
    for i in range(phi.shape[0]):
        out[i + 1] = phi[i] @ out[i]
    return out


# ---------------------------------------------------------------------------
# numba implementations


@njit
def _det_inplace(A):
    """Determinant by partial-pivot elimination; destroys A."""
    K = A.shape[0]
    det = 1.0
    for c in range(K):
        p = c
        best = abs(A[c, c])
        for r in range(c + 1, K):
            if abs(A[r, c]) > best:
                best = abs(A[r, c])
                p = r
        if best == 0.0:
            return 0.0
        if p != c:
            for j in range(K):
                tmp = A[c, j]
                A[c, j] = A[p, j]
                A[p, j] = tmp
            det = -det
        piv = A[c, c]
        det *= piv
        for r in range(c + 1, K):
            f = A[r, c] / piv
            for j in range(c + 1, K):
                A[r, j] -= f * A[c, j]
    return det


@njit
def _cholesky_solve_inplace(g, rhs):
    """Solve g X = rhs for SPD g (m x m) in place; g is overwritten by its factor."""
    m = g.shape[0]
    k = rhs.shape[1]
    for j in range(m):
        d = g[j, j]
        for q in range(j):
            d -= g[j, q] * g[j, q]
        d = np.sqrt(d)
        g[j, j] = d
        for i in range(j + 1, m):
            v = g[i, j]
            for q in range(j):
                v -= g[i, q] * g[j, q]
            g[i, j] = v / d
    for c in range(k):
        for i in range(m):
            v = rhs[i, c]
            for q in range(i):
                v -= g[i, q] * rhs[q, c]
            rhs[i, c] = v / g[i, i]
        for i in range(m - 1, -1, -1):
            v = rhs[i, c]
            for q in range(i + 1, m):
                v -= g[q, i] * rhs[q, c]
            rhs[i, c] = v / g[i, i]


@njit
def _oriented_normal_single(Eb, nub, levelset):
    N, m = Eb.shape
    if N == 3 and not levelset:
        # cofactor expansion reduces to the cross product here
        c0 = Eb[1, 0] * Eb[2, 1] - Eb[2, 0] * Eb[1, 1]
        c1 = Eb[2, 0] * Eb[0, 1] - Eb[0, 0] * Eb[2, 1]
        c2 = Eb[0, 0] * Eb[1, 1] - Eb[1, 0] * Eb[0, 1]
        nrm = np.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
        out = np.empty(3)
        out[0], out[1], out[2] = c0 / nrm, c1 / nrm, c2 / nrm
        return out
    K = m + 1 if levelset else m
    C = np.empty((N, K))
    for n in range(N):
        for i in range(m):
            C[n, i] = Eb[n, i]
        if levelset:
            C[n, m] = nub[n]
    out = np.empty(N)
    minor = np.empty((N - 1, K))
    for k in range(N):
        r = 0
        for n in range(N):
            if n == k:
                continue
            for j in range(K):
                minor[r, j] = C[n, j]
            r += 1
        sign = 1.0 if k % 2 == 0 else -1.0
        out[k] = sign * _det_inplace(minor)
    nrm = 0.0
    for k in range(N):
        nrm += out[k] * out[k]
    nrm = np.sqrt(nrm)
    for k in range(N):
        out[k] /= nrm
    return out


@njit
def _oriented_normal_nb(E, nu, levelset):
    B, N, m = E.shape
    out = np.empty((B, N))
    for b in range(B):
        out[b] = _oriented_normal_single(np.ascontiguousarray(E[b]), nu[b], levelset)
    return out


@njit
def _curve_rhs_nb(E, D2, nu, T, Y, coef, mode, levelset):
    B, N, m = E.shape
    tdot = np.empty((B, m))
    ydot = np.empty((B, m))
    sig = np.empty(B)
    a = np.empty(N)
    bv = np.empty(N)
    g = np.empty((m, m))
    rhs = np.empty((m, 2))
    w = np.empty(N)
    for b in range(B):
        for n in range(N):
            sa = 0.0
            sb = 0.0
            for i in range(m):
                ti = T[b, i]
                for j in range(m):
                    d = D2[b, n, i, j]
                    sa += d * ti * T[b, j]
                    sb += d * ti * Y[b, j]
            a[n] = sa
            bv[n] = sb
        for i in range(m):
            for j in range(m):
                acc = 0.0
                for n in range(N):
                    acc += E[b, n, i] * E[b, n, j]
                g[i, j] = acc
            ra = 0.0
            rb = 0.0
            for n in range(N):
                ra += E[b, n, i] * a[n]
                rb += E[b, n, i] * bv[n]
            rhs[i, 0] = ra
            rhs[i, 1] = rb
        _cholesky_solve_inplace(g, rhs)
        sol = rhs
        nua = 0.0
        if levelset:
            for n in range(N):
                nua += nu[b, n] * a[n]
        for n in range(N):
            acc = a[n]
            for i in range(m):
                acc -= E[b, n, i] * sol[i, 0]
            if levelset:
                acc -= nu[b, n] * nua
            w[n] = acc
        if mode == MODE_SIGNED:
            nhat = _oriented_normal_single(np.ascontiguousarray(E[b]), nu[b], levelset)
            sg = 0.0
            for n in range(N):
                sg += w[n] * nhat[n]
        else:
            sg = 0.0
            for n in range(N):
                sg += w[n] * w[n]
            sg = np.sqrt(sg)
        sig[b] = sg
        s = coef[b] if mode == MODE_PRESCRIBED else coef[b] * sg
        for k in range(m):
            tdot[b, k] = s * Y[b, k] - sol[k, 0]
            ydot[b, k] = -s * T[b, k] - sol[k, 1]
    return tdot, ydot, sig


@njit
def _metric_terms_nb(E, D2):
    B, N, m = E.shape
    g = np.empty((B, m, m))
    ginv = np.empty((B, m, m))
    gamma = np.empty((B, m, m, m))
    lower = np.empty((m, m, m))
    fac = np.empty((m, m))
    inv = np.empty((m, m))
    for b in range(B):
        for i in range(m):
            for j in range(m):
                acc = 0.0
                for n in range(N):
                    acc += E[b, n, i] * E[b, n, j]
                g[b, i, j] = acc
        for i in range(m):
            for j in range(m):
                fac[i, j] = g[b, i, j]
                inv[i, j] = 1.0 if i == j else 0.0
        _cholesky_solve_inplace(fac, inv)
        for i in range(m):
            for j in range(m):
                ginv[b, i, j] = 0.5 * (inv[i, j] + inv[j, i])
        for l in range(m):
            for i in range(m):
                for j in range(m):
                    acc = 0.0
                    for n in range(N):
                        acc += E[b, n, l] * D2[b, n, i, j]
                    lower[l, i, j] = acc
        for k in range(m):
            for i in range(m):
                for j in range(m):
                    acc = 0.0
                    for l in range(m):
                        acc += ginv[b, k, l] * lower[l, i, j]
                    gamma[b, k, i, j] = acc
    return g, ginv, gamma


@njit
def _renormalize_nb(E, T, Y):
    B, N, m = E.shape
    To = np.empty((B, m))
    Yo = np.empty((B, m))
    drift = np.empty(B)
    g = np.empty((m, m))
    for b in range(B):
        for i in range(m):
            for j in range(m):
                acc = 0.0
                for n in range(N):
                    acc += E[b, n, i] * E[b, n, j]
                g[i, j] = acc
        tt = 0.0
        yy = 0.0
        ty = 0.0
        for i in range(m):
            for j in range(m):
                tt += T[b, i] * g[i, j] * T[b, j]
                yy += Y[b, i] * g[i, j] * Y[b, j]
                ty += T[b, i] * g[i, j] * Y[b, j]
        st = np.sqrt(tt)
        drift[b] = max(max(abs(st - 1.0), abs(np.sqrt(yy) - 1.0)), abs(ty))
        for i in range(m):
            To[b, i] = T[b, i] / st
        p = 0.0
        for i in range(m):
            for j in range(m):
                p += Y[b, i] * g[i, j] * To[b, j]
        for i in range(m):
            Yo[b, i] = Y[b, i] - p * To[b, i]
        q = 0.0
        for i in range(m):
            for j in range(m):
                q += Yo[b, i] * g[i, j] * Yo[b, j]
        q = np.sqrt(q)
        for i in range(m):
            Yo[b, i] /= q
    return To, Yo, drift


@njit
def _chain_transport_nb(phi, v0):
    n, K, _ = phi.shape
    J = v0.shape[1]
    out = np.empty((n + 1, K, J))
    out[0] = v0
    for i in range(n):
        for r in range(K):
            for c in range(J):
                acc = 0.0
                for q in range(K):
                    acc += phi[i, r, q] * out[i, q, c]
                out[i + 1, r, c] = acc
    return out


@njit
def _stereographic_jet_nb(U, radius):
    B, m = U.shape
    N = m + 1
    x = np.zeros((B, N))
    E = np.zeros((B, N, m))
    D2 = np.zeros((B, N, m, m))
    dq = np.empty(m)
    for b in range(B):
        r2 = 0.0
        for i in range(m):
            r2 += U[b, i] * U[b, i]
        q = 1.0 / (1.0 + r2)
        q2 = q * q
        q3 = q2 * q
        for i in range(m):
            dq[i] = -2.0 * U[b, i] * q2
            x[b, i] = radius * 2.0 * U[b, i] * q
        x[b, m] = radius * (2.0 * q - 1.0)
        for a in range(m):
            for i in range(m):
                v = 2.0 * U[b, a] * dq[i]
                if a == i:
                    v += 2.0 * q
                E[b, a, i] = radius * v
        for i in range(m):
            E[b, m, i] = radius * 2.0 * dq[i]
        for i in range(m):
            for j in range(m):
                d2q = 8.0 * U[b, i] * U[b, j] * q3
                if i == j:
                    d2q -= 2.0 * q2
                D2[b, m, i, j] = radius * 2.0 * d2q
                for a in range(m):
                    v = 2.0 * U[b, a] * d2q
                    if a == i:
                        v += 2.0 * dq[j]
                    if a == j:
                        v += 2.0 * dq[i]
                    D2[b, a, i, j] = radius * v
    return x, E, D2


@njit
def _ellipsoid_jet_nb(U, a, b, c):
    B = U.shape[0]
    x = np.empty((B, 3))
    E = np.empty((B, 3, 2))
    D2 = np.empty((B, 3, 2, 2))
    for k in range(B):
        st, ct = np.sin(U[k, 0]), np.cos(U[k, 0])
        sp, cp = np.sin(U[k, 1]), np.cos(U[k, 1])
        x[k, 0], x[k, 1], x[k, 2] = a * st * cp, b * st * sp, c * ct
        E[k, 0, 0], E[k, 0, 1] = a * ct * cp, -a * st * sp
        E[k, 1, 0], E[k, 1, 1] = b * ct * sp, b * st * cp
        E[k, 2, 0], E[k, 2, 1] = -c * st, 0.0
        D2[k, 0, 0, 0], D2[k, 0, 0, 1], D2[k, 0, 1, 1] = -a * st * cp, -a * ct * sp, -a * st * cp
        D2[k, 1, 0, 0], D2[k, 1, 0, 1], D2[k, 1, 1, 1] = -b * st * sp, b * ct * cp, -b * st * sp
        D2[k, 2, 0, 0], D2[k, 2, 0, 1], D2[k, 2, 1, 1] = -c * ct, 0.0, 0.0
        for n in range(3):
            D2[k, n, 1, 0] = D2[k, n, 0, 1]
    return x, E, D2


@njit
def _torus_jet_nb(U, R, r):
    B = U.shape[0]
    x = np.empty((B, 3))
    E = np.empty((B, 3, 2))
    D2 = np.empty((B, 3, 2, 2))
    for k in range(B):
        cu, su = np.cos(U[k, 0]), np.sin(U[k, 0])
        cv, sv = np.cos(U[k, 1]), np.sin(U[k, 1])
        rho = R + r * cv
        x[k, 0], x[k, 1], x[k, 2] = rho * cu, rho * su, r * sv
        E[k, 0, 0], E[k, 0, 1] = -rho * su, -r * sv * cu
        E[k, 1, 0], E[k, 1, 1] = rho * cu, -r * sv * su
        E[k, 2, 0], E[k, 2, 1] = 0.0, r * cv
        D2[k, 0, 0, 0], D2[k, 0, 0, 1], D2[k, 0, 1, 1] = -rho * cu, r * sv * su, -r * cv * cu
        D2[k, 1, 0, 0], D2[k, 1, 0, 1], D2[k, 1, 1, 1] = -rho * su, -r * sv * cu, -r * cv * su
        D2[k, 2, 0, 0], D2[k, 2, 0, 1], D2[k, 2, 1, 1] = 0.0, 0.0, -r * sv
        for n in range(3):
            D2[k, n, 1, 0] = D2[k, n, 0, 1]
    return x, E, D2


@njit
def _cylinder_jet_nb(U, radius):
    B = U.shape[0]
    x = np.empty((B, 3))
    E = np.zeros((B, 3, 2))
    D2 = np.zeros((B, 3, 2, 2))
    for k in range(B):
        c, s = np.cos(U[k, 0]), np.sin(U[k, 0])
        x[k, 0], x[k, 1], x[k, 2] = radius * c, radius * s, U[k, 1]
        E[k, 0, 0], E[k, 1, 0], E[k, 2, 1] = -radius * s, radius * c, 1.0
        D2[k, 0, 0, 0], D2[k, 1, 0, 0] = -radius * c, -radius * s
    return x, E, D2


@njit
def _clifford_jet_nb(U):
    B = U.shape[0]
    q = 1.0 / np.sqrt(2.0)
    x = np.empty((B, 4))
    E = np.zeros((B, 4, 2))
    D2 = np.zeros((B, 4, 2, 2))
    for k in range(B):
        cu, su = np.cos(U[k, 0]), np.sin(U[k, 0])
        cv, sv = np.cos(U[k, 1]), np.sin(U[k, 1])
        x[k, 0], x[k, 1], x[k, 2], x[k, 3] = q * cu, q * su, q * cv, q * sv
        E[k, 0, 0], E[k, 1, 0], E[k, 2, 1], E[k, 3, 1] = -q * su, q * cu, -q * sv, q * cv
        D2[k, 0, 0, 0], D2[k, 1, 0, 0] = -q * cu, -q * su
        D2[k, 2, 1, 1], D2[k, 3, 1, 1] = -q * cv, -q * sv
    return x, E, D2


@njit
def _quadratic_jet_nb(P, dP, d2P, Q):
    # x_n = P.Q_n.P composed with a jet (P, dP, d2P) of the inner map
    B, M, m = dP.shape
    K = Q.shape[0]
    x = np.zeros((B, K))
    E = np.zeros((B, K, m))
    D2 = np.zeros((B, K, m, m))
    QP = np.empty(M)
    QdP = np.empty((M, m))
    for b in range(B):
        for n in range(K):
            for a in range(M):
                s = 0.0
                for c in range(M):
                    s += Q[n, a, c] * P[b, c]
                QP[a] = s
                for j in range(m):
                    s = 0.0
                    for c in range(M):
                        s += Q[n, a, c] * dP[b, c, j]
                    QdP[a, j] = s
            v = 0.0
            for a in range(M):
                v += QP[a] * P[b, a]
            x[b, n] = v
            for i in range(m):
                v = 0.0
                for a in range(M):
                    v += QP[a] * dP[b, a, i]
                E[b, n, i] = 2.0 * v
                for j in range(m):
                    v = 0.0
                    for a in range(M):
                        v += dP[b, a, i] * QdP[a, j] + QP[a] * d2P[b, a, i, j]
                    D2[b, n, i, j] = 2.0 * v
    return x, E, D2


# ---------------------------------------------------------------------------
# dispatch

_NUMPY = SimpleNamespace(
    name="numpy",
    curve_rhs=_curve_rhs_np,
    metric_terms=_metric_terms_np,
    oriented_normal=_oriented_normal_np,
    chain_transport=_chain_transport_np,
    renormalize=_renormalize_np,
    stereographic_jet=None,
    ellipsoid_jet=None,
    torus_jet=None,
    cylinder_jet=None,
    clifford_jet=None,
    quadratic_jet=None,
)

_NUMBA = SimpleNamespace(
    name="numba",
    curve_rhs=_curve_rhs_nb,
    metric_terms=_metric_terms_nb,
    oriented_normal=_oriented_normal_nb,
    chain_transport=_chain_transport_nb,
    renormalize=_renormalize_nb,
    stereographic_jet=_stereographic_jet_nb,
    ellipsoid_jet=_ellipsoid_jet_nb,
    torus_jet=_torus_jet_nb,
    cylinder_jet=_cylinder_jet_nb,
    clifford_jet=_clifford_jet_nb,
    quadratic_jet=_quadratic_jet_nb,
)


def get_kernels(backend=None):
    """Return the kernel namespace for ``backend`` ('numba' or 'numpy')."""
    backend = backend or requested_backend()
    return _NUMBA if backend == "numba" else _NUMPY


BACKEND = requested_backend()
_active = get_kernels(BACKEND)


@contextlib.contextmanager
def use_backend(name):
    """Temporarily switch the process-wide kernels (tests and benchmarks only; not thread safe)."""
    global _active
    saved = _active
    _active = get_kernels(name)
    try:
        yield _active
    finally:
        _active = saved


def curve_rhs(E, D2, nu, T, Y, coef, mode, levelset):
    """Right-hand side of the planar-frame system for a batch of curves.

    Returns ``(T_dot, Y_dot, sigma)`` where ``T_dot = s*Y - Gamma(T,T)`` and
    ``Y_dot = -s*T - Gamma(T,Y)``.  ``s`` is ``coef`` itself for prescribed
    curvature, ``coef`` times the oriented normal component of ``alpha(T,T)``
    for ``MODE_SIGNED`` and ``coef`` times its length for ``MODE_NORM``.
    ``sigma`` is that scalar second-form value before scaling by ``coef``.
    """
    return _active.curve_rhs(E, D2, nu, T, Y, coef, int(mode), bool(levelset))


def metric_terms(E, D2):
    """Induced metric, its inverse and Christoffel symbols ``Gamma[k, i, j]``."""
    return _active.metric_terms(E, D2)


def oriented_normal(E, nu, levelset):
    return _active.oriented_normal(E, nu, bool(levelset))


def chain_transport(phi, v0):
    """Accumulate ``V[i+1] = phi[i] @ V[i]`` starting from ``v0``."""
    return _active.chain_transport(np.ascontiguousarray(phi), np.ascontiguousarray(v0))


def renormalize(E, T, Y):
    """Re-orthonormalise ``(T, Y)`` against the induced metric.

    Returns the new pair and the pre-renormalisation drift
    ``max(|‖T‖ - 1|, |‖Y‖ - 1|, |<T, Y>|)`` per seed.
    """
    return _active.renormalize(np.ascontiguousarray(E), np.ascontiguousarray(T), np.ascontiguousarray(Y))

"""Parallel transport, Cartan development and planarity residuals.

Transport along a sampled trajectory solves ``v' = -Gamma(T, v)`` interval by
interval with a linear RK4 step.  Midpoint data come from the quintic Hermite
interpolant of ``(u, u', u'')`` so no extra integration error is introduced
beyond that of the trajectory itself.  The per-interval propagators are built
vectorised and chained with :func:`umbilic_lab.kernels.chain_transport`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import OutOfSpan
from .geometry import frames_along
from .integrators import curvature_profile, extrinsic_shape
from .numerics import centered_derivative, cumulative_corrected_trapezoid, interior_mask, quintic_hermite

THRESHOLD_PLANAR = 1e-6
THRESHOLD_REJECT = 1e-4
EPS_SCALE = 1e-12


def plane_fit_defect(points):
    """``s3 / s1`` of the centred point cloud (0 when it spans < 3 dims)."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < 3 or P.shape[1] < 3:
        return 0.0
    s = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s[2] / s[0])


def _linear_rk4(A0, Am, A1, h):
    """Propagators of ``v' = A(t) v`` over one step, batched over intervals."""
    n, K, _ = A0.shape
    eye = np.broadcast_to(np.eye(K), (n, K, K))
    k1 = A0
    k2 = Am @ (eye + 0.5 * h[:, None, None] * k1)
    k3 = Am @ (eye + 0.5 * h[:, None, None] * k2)
    k4 = A1 @ (eye + h[:, None, None] * k3)
    return eye + h[:, None, None] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _chart_generator(gamma, T):
    return -np.einsum("bkij,bi->bkj", gamma, T)


@dataclass
class _TransportTable:
    """Cumulative chart propagators ``P[k]`` from sample 0 to sample k."""

    traj: object
    P: np.ndarray
    frames: dict

    def solve(self, k, v):
        return np.linalg.solve(self.P[k], v)


def _transport_table(imm, traj, frames=None):
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=False)
    n = len(traj.t)
    m = imm.dim
    if n < 2:
        return _TransportTable(traj, np.eye(m)[None], fr)
    h = np.diff(traj.t)
    um, Tm = quintic_hermite(traj.u[:-1], traj.T[:-1], traj.accel[:-1], traj.u[1:], traj.T[1:], traj.accel[1:],
                             h[:, None], 0.5)
    fm = frames_along(imm, um, normals=False)
    A = _chart_generator(fr["gamma"], traj.T)
    Am = _chart_generator(fm["gamma"], Tm)
    phi = _linear_rk4(A[:-1], Am, A[1:], h)
    P = kernels.chain_transport(phi, np.eye(m))
    return _TransportTable(traj, P, fr)


def _partial_propagator(imm, traj, i, delta):
    """Propagator from sample i over a time ``delta`` (|delta| <= h) inside the interval."""
    if delta == 0.0:
        return np.eye(imm.dim)
    h = traj.t[i + 1] - traj.t[i]
    s = delta / h
    args = (traj.u[i], traj.T[i], traj.accel[i], traj.u[i + 1], traj.T[i + 1], traj.accel[i + 1], h)
    um, Tm = quintic_hermite(*args, 0.5 * s)
    ue, Te = quintic_hermite(*args, s)
    fr = frames_along(imm, np.stack([traj.u[i], um, ue]), normals=False)
    A = _chart_generator(fr["gamma"], np.stack([traj.T[i], Tm, Te]))
    return _linear_rk4(A[0:1], A[1:2], A[2:3], np.array([delta]))[0]


def _locate(traj, t):
    t0, t1 = traj.span
    tol = 1e-9 * max(1.0, abs(t0), abs(t1))
    if t < t0 - tol or t > t1 + tol:
        raise OutOfSpan(f"t = {t} outside the trajectory span [{t0}, {t1}]")
    k = int(np.clip(np.searchsorted(traj.t, t, side="right") - 1, 0, len(traj.t) - 1))
    delta = float(t - traj.t[k])
    if abs(delta) <= tol:
        delta = 0.0
    if k == len(traj.t) - 1 and delta != 0.0:
        k -= 1
        delta = float(t - traj.t[k])
    return k, delta


def _cumulative_at(imm, traj, table, t):
    k, delta = _locate(traj, t)
    if delta == 0.0:
        return table.P[k]
    return _partial_propagator(imm, traj, k, delta) @ table.P[k]


def parallel_transport(imm, traj, v, t_a, t_b, table=None):
    """Transport chart vector ``v`` at ``gamma(t_a)`` to ``gamma(t_b)``."""
    table = table or _transport_table(imm, traj)
    Pa = _cumulative_at(imm, traj, table, float(t_a))
    Pb = _cumulative_at(imm, traj, table, float(t_b))
    return Pb @ np.linalg.solve(Pa, np.asarray(v, dtype=float))


def transport_to_base(table, base, vectors):
    """Pull per-sample chart vectors back to sample ``base``."""
    V = np.asarray(vectors, dtype=float)
    back = np.linalg.solve(table.P, V[..., None])[..., 0]
    return back @ table.P[base].T


@dataclass
class DevelopedCurve:
    """Cartan development in ``T_pM`` (chart components with ``g(p)``)."""

    base_index: int
    base_point: np.ndarray
    g_base: np.ndarray
    points: np.ndarray
    velocity: np.ndarray
    t: np.ndarray

    def orthonormal(self, values=None):
        """Coordinates in a g(p)-orthonormal basis."""
        L = np.linalg.cholesky(self.g_base)
        V = self.points if values is None else values
        return V @ L

    def speed_defect(self):
        s = np.sqrt(np.einsum("bi,ij,bj->b", self.velocity, self.g_base, self.velocity))
        return float(np.max(np.abs(s - 1.0)))


def _base_index(traj, base_time):
    if base_time is None:
        return traj.origin
    k, delta = _locate(traj, float(base_time))
    if delta != 0.0:
        if abs(delta - (traj.t[k + 1] - traj.t[k])) < 1e-9:
            return k + 1
        raise OutOfSpan(f"development base t = {base_time} is not a sample time")
    return k


def cartan_development(imm, traj, base_time=None, table=None):
    """Development of ``traj`` into the tangent space at ``gamma(base_time)``.

    The base defaults to ``t = 0`` and must be a sample time.  Positions use
    the derivative-corrected trapezoid rule with ``(gamma*)'' = transported
    nabla_T T``, which keeps the quadrature fourth order like the integrator.
    """
    table = table or _transport_table(imm, traj)
    base = _base_index(traj, base_time)
    fr = table.frames
    vel = transport_to_base(table, base, traj.T)
    cov = traj.accel + np.einsum("bkij,bi,bj->bk", fr["gamma"], traj.T, traj.T)
    dvel = transport_to_base(table, base, cov)
    pts = cumulative_corrected_trapezoid(vel, dvel, traj.h, base)
    return DevelopedCurve(base, traj.u[base].copy(), fr["g"][base].copy(), pts, vel, traj.t.copy())


def ambient_development(imm, traj, base_time=None, frames=None):
    """Development of the extrinsic shape inside a level-set ambient Q.

    Tangent vectors of Q are transported by ``V' = -<V, nu'> nu``; the
    orthonormal frame of ``T Q`` at the base is carried along and the ambient
    velocity is read in that frame.  Returns points in R^(N-1).
    """
    amb = imm.ambient
    X, V, Acc = extrinsic_shape(traj, frames)
    h = np.diff(traj.t)
    N = amb.dim
    # third derivative is not needed: the Hermite interpolant uses X, V, Acc
    Xm, Vm = quintic_hermite(X[:-1], V[:-1], Acc[:-1], X[1:], V[1:], Acc[1:], h[:, None], 0.5)

    def generator(P, W):
        nu = amb.unit_normal(P)
        dnu = amb.normal_velocity(P, W)
        return -np.einsum("bi,bj->bij", nu, dnu)

    G = generator(X, V)
    phi = _linear_rk4(G[:-1], generator(Xm, Vm), G[1:], h)
    P = kernels.chain_transport(phi, np.eye(N))
    base = _base_index(traj, base_time)
    nu0 = amb.unit_normal(X[base])
    _, _, vt = np.linalg.svd(nu0[None, :])
    F0 = vt[1:].T
    Fk = np.einsum("bij,jk->bik", P, np.linalg.solve(P[base], F0))
    w = np.einsum("bnk,bn->bk", Fk, V)
    dw = np.einsum("bnk,bn->bk", Fk, Acc)
    return cumulative_corrected_trapezoid(w, dw, traj.h, base), w


@dataclass
class PlanarityReport:
    residual_ode: float
    residual_fit: float
    verdict: str
    thresholds: dict
    samples_used: int
    ode_verdict: str = ""
    fit_verdict: str = ""
    kind: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "residual_ode": self.residual_ode,
            "residual_fit": self.residual_fit,
            "verdict": self.verdict,
            "thresholds": dict(self.thresholds),
            "samples_used": self.samples_used,
            "ode_verdict": self.ode_verdict,
            "fit_verdict": self.fit_verdict,
        }


def classify(value, planar=THRESHOLD_PLANAR, reject=THRESHOLD_REJECT):
    if value < planar:
        return "planar"
    if value > reject:
        return "non-planar"
    return "indeterminate"


def _report(kind, ode, fit, n, planar, reject, **extra):
    if max(ode, fit) < planar:
        verdict = "planar"
    elif min(ode, fit) > reject:
        verdict = "non-planar"
    else:
        verdict = "indeterminate"
    return PlanarityReport(ode, fit, verdict, {"planar": planar, "reject": reject}, n,
                           classify(ode, planar, reject), classify(fit, planar, reject), kind, extra)


def _g_norm(g, V):
    return np.sqrt(np.maximum(np.einsum("bi,bij,bj->b", V, g, V), 0.0))


def intrinsic_planarity_residual(imm, traj, planar=THRESHOLD_PLANAR, reject=THRESHOLD_REJECT, profile=None,
                                 development=None, frames=None):
    """Planarity of ``traj`` inside M: ODE residual and development plane fit.

    The ODE is ``k nabla^2 T + k^3 T - k' nabla T = 0`` with the signed
    curvature ``k = <nabla_T T, Y>``; derivatives along the curve are centred
    differences and the two end samples on each side are excluded.  The sup is
    divided by ``max(kappa_tilde)^3 + EPS_SCALE``.
    """
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=False)
    prof = profile or curvature_profile(imm, traj, fr)
    g = fr["g"]
    V = prof.nabla_T
    k = np.einsum("bi,bij,bj->b", V, g, traj.Y)
    dV = centered_derivative(V, traj.h)
    nabla2 = dV + np.einsum("bkij,bi,bj->bk", fr["gamma"], traj.T, V)
    dk = centered_derivative(k, traj.h)
    R = k[:, None] * nabla2 + (k ** 3)[:, None] * traj.T - dk[:, None] * V
    mask = interior_mask(len(traj.t))
    scale = float(np.max(prof.kappa_tilde)) ** 3 + EPS_SCALE
    ode = float(np.max(_g_norm(g, R)[mask])) / scale if mask.any() else 0.0
    dev = development or cartan_development(imm, traj, table=_transport_table(imm, traj, fr))
    fit = plane_fit_defect(dev.orthonormal())
    return _report("intrinsic", ode, fit, int(mask.sum()), planar, reject)


def ambient_planarity_residual(imm, traj, planar=THRESHOLD_PLANAR, reject=THRESHOLD_REJECT, profile=None,
                               frames=None):
    """Planarity of the extrinsic shape inside Q.

    ODE residual: ``kt nabla~^2 T + kt^3 T - kt' nabla~ T`` with the
    TQ-projected ambient derivatives.  Fit: SVD plane fit of the positions
    (flat Q) or of the development inside Q (level-set Q).
    """
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=False)
    prof = profile or curvature_profile(imm, traj, fr)
    X, V, _ = extrinsic_shape(traj, fr)
    A = prof.ambient_accel
    kt = prof.kappa_tilde
    dA = centered_derivative(A, traj.h)
    nu = fr["nu"]
    dA = dA - nu * np.sum(nu * dA, axis=1, keepdims=True)
    dkt = centered_derivative(kt, traj.h)
    R = kt[:, None] * dA + (kt ** 3)[:, None] * V - dkt[:, None] * A
    mask = interior_mask(len(traj.t))
    scale = float(np.max(kt)) ** 3 + EPS_SCALE
    ode = float(np.max(np.linalg.norm(R, axis=1)[mask])) / scale if mask.any() else 0.0
    if imm.ambient.is_levelset:
        pts, _ = ambient_development(imm, traj, frames=fr)
        fit = plane_fit_defect(pts)
    else:
        fit = plane_fit_defect(X)
    return _report("ambient", ode, fit, int(mask.sum()), planar, reject)

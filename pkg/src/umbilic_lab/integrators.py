"""Fixed-step RK4 integration of geodesics and planar curves on an immersion.

All three curve families share one first-order system on ``(u, T, Y)``::

    u' = T
    T' = s Y - Gamma(T, T)
    Y' = -s T - Gamma(T, Y)

with ``s = 0`` (geodesic), ``s = kappa(t)`` (prescribed curvature) or
``s = c * sigma(T, T)`` (planar c-pseudo-geodesic; signed second form for
hypersurfaces, its length in higher codimension).  Seeds are integrated as a
batch so the per-step Python overhead is shared.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .errors import DomainExceeded, StepRejected
from .geometry import frames_along

DEFAULT_STEP = 1e-3
DEFAULT_SPAN = (-math.pi, math.pi)
UNIT_TOL = 1e-10
THETA_FLOOR = 1e-6
TAU_EVENT_FLOOR = 1e-6

GEODESIC = "geodesic"
PSEUDO_GEODESIC = "pseudo-geodesic"
PRESCRIBED = "planar-prescribed-kappa"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class PseudoGeodesicSpec:
    p: np.ndarray
    x: np.ndarray
    y: np.ndarray
    c: float
    t_span: tuple = DEFAULT_SPAN
    h: float = DEFAULT_STEP

    def validate(self, imm):
        check_seed(imm, self.p, self.x, self.y)
        check_span(self.t_span, self.h)


def check_span(t_span, h):
    a, b = float(t_span[0]), float(t_span[1])
    if not (a <= 0.0 <= b) or a == b:
        raise ValueError(f"t_span {t_span} must contain 0 and have positive length")
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")


def check_seed(imm, p, x, y=None, tol=UNIT_TOL):
    """Raise ValueError unless (x, y) is g-orthonormal at chart point p."""
    p = np.asarray(p, dtype=float)
    imm.check_domain(p)
    _, E, _ = imm.derivatives(p)
    g = E.T @ E
    x = np.asarray(x, dtype=float)
    if abs(x @ g @ x - 1.0) > tol:
        raise ValueError(f"x is not g-unit: <x,x> = {x @ g @ x!r}")
    if y is not None:
        y = np.asarray(y, dtype=float)
        if abs(y @ g @ y - 1.0) > tol or abs(x @ g @ y) > tol:
            raise ValueError("y is not a g-unit vector orthogonal to x")


@dataclass
class CurveTrajectory:
    """Sampled curve on ``imm``.

    ``accel`` holds the chart second derivative ``u''`` at each sample, ``x``
    the ambient positions.  ``origin`` is the sample index of ``t = 0``.
    """

    imm: object
    t: np.ndarray
    u: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    accel: np.ndarray
    x: np.ndarray
    kind: str
    c: Optional[float]
    h: float
    origin: int
    status: str = "ok"
    events: list = field(default_factory=list)
    max_drift: float = 0.0
    sigma: Optional[np.ndarray] = None
    label: str = ""

    def __len__(self):
        return len(self.t)

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def reversed(self):
        """The same curve traversed backwards (``t -> -t``)."""
        t = -self.t[::-1]
        return CurveTrajectory(
            self.imm, t, self.u[::-1].copy(), -self.T[::-1], self.Y[::-1].copy(), self.accel[::-1].copy(),
            self.x[::-1].copy(), self.kind, self.c, self.h, len(t) - 1 - self.origin, self.status,
            list(self.events), self.max_drift, None if self.sigma is None else self.sigma[::-1].copy(),
            self.label + "[rev]" if self.label else "",
        )


# ---------------------------------------------------------------------------
# batched RK4


def _state_rhs(imm, U, T, Y, coef, mode, jet=None):
    x, E, D2 = imm.derivatives(U) if jet is None else jet
    nu = imm.ambient.unit_normal(x)
    tdot, ydot, sig = kernels.curve_rhs(
        np.ascontiguousarray(E), np.ascontiguousarray(D2), np.ascontiguousarray(nu),
        np.ascontiguousarray(T), np.ascontiguousarray(Y), coef, mode, imm.ambient.is_levelset,
    )
    return x, E, tdot, ydot, sig


def _mode_for(imm, kind):
    if kind == PRESCRIBED or kind == GEODESIC or imm.codim == 0:
        return kernels.MODE_PRESCRIBED
    return kernels.MODE_SIGNED if imm.codim == 1 else kernels.MODE_NORM


def _coef_at(kind, imm, c, kappa, t, B):
    if kind == GEODESIC or (kind == PSEUDO_GEODESIC and imm.codim == 0):
        return np.zeros(B)
    if kind == PSEUDO_GEODESIC:
        sign = imm.orientation if imm.codim == 1 else 1.0
        return sign * c
    k = kappa(t)
    return np.broadcast_to(np.asarray(k, dtype=float), (B,)).copy()


def _renormalize(E, T, Y):
    return kernels.renormalize(E, T, Y)


def _sweep(imm, kind, c, kappa, u0, T0, Y0, h, nsteps, direction):
    """Integrate ``nsteps`` steps of size ``direction * h`` from t = 0.

    Returns per-seed lists of samples (starting with the initial state) and
    the index at which each seed stopped.
    """
    B, m = u0.shape
    mode = _mode_for(imm, kind)
    dt = direction * h
    N = imm.ambient_dim
    U = np.empty((nsteps + 1, B, m))
    TT = np.empty((nsteps + 1, B, m))
    YY = np.empty((nsteps + 1, B, m))
    AC = np.empty((nsteps + 1, B, m))
    XX = np.empty((nsteps + 1, B, N))
    SG = np.empty((nsteps + 1, B))
    last = np.full(B, nsteps)
    status = ["ok"] * B
    drift = np.zeros(B)

    alive = np.arange(B)
    u, T, Y = u0.copy(), T0.copy(), Y0.copy()
    x, E, k1T, k1Y, sig = _state_rhs(imm, u, T, Y, _coef_at(kind, imm, c, kappa, 0.0, B), mode)
    if imm.codim == 1 and mode == kernels.MODE_SIGNED:
        sig = imm.orientation * sig
    U[0], TT[0], YY[0], AC[0], XX[0], SG[0] = u, T, Y, k1T, x, sig
    coef_full = None if kind != PSEUDO_GEODESIC else _coef_at(kind, imm, c, kappa, 0.0, B)

    lo, hi = imm.lower, imm.upper

    def outside(P):
        # every RK stage point is range-checked, not only accepted steps; NaN fails both bounds
        return ~((P >= lo) & (P <= hi)).all(axis=1)

    def coef(t, idx):
        if coef_full is not None:
            return coef_full[idx]
        return _coef_at(kind, imm, c, kappa, t, B)[idx]

    def step(t0, u, T, Y, k1T, k1Y, idx):
        cm = coef(t0 + 0.5 * dt, idx)
        u2 = u + 0.5 * dt * T
        T2 = T + 0.5 * dt * k1T
        Y2 = Y + 0.5 * dt * k1Y
        u3 = u + 0.5 * dt * T2
        bad = outside(u2) | outside(u3)
        if bad.any():
            return bad, None
        _, _, k2T, k2Y, _ = _state_rhs(imm, u2, T2, Y2, cm, mode)
        T3 = T + 0.5 * dt * k2T
        Y3 = Y + 0.5 * dt * k2Y
        u4 = u + dt * T3
        bad = outside(u4)
        if bad.any():
            return bad, None
        _, _, k3T, k3Y, _ = _state_rhs(imm, u3, T3, Y3, cm, mode)
        T4 = T + dt * k3T
        Y4 = Y + dt * k3Y
        _, _, k4T, k4Y, _ = _state_rhs(imm, u4, T4, Y4, coef(t0 + dt, idx), mode)
        un = u + dt / 6.0 * (T + 2 * T2 + 2 * T3 + T4)
        Tn = T + dt / 6.0 * (k1T + 2 * k2T + 2 * k3T + k4T)
        Yn = Y + dt / 6.0 * (k1Y + 2 * k2Y + 2 * k3Y + k4Y)
        bad = outside(un) | ~np.isfinite(Tn).all(axis=1) | ~np.isfinite(Yn).all(axis=1)
        return bad, (un, Tn, Yn)

    for n in range(nsteps):
        t0 = n * dt
        while len(alive):
            bad, new = step(t0, u, T, Y, k1T, k1Y, alive)
            if not bad.any():
                break
            # drop the failing seeds and redo the step for the others
            for j in np.nonzero(bad)[0]:
                b = alive[j]
                last[b] = n
                finite = new is None or (np.isfinite(new[1][j]).all() and np.isfinite(new[2][j]).all())
                status[b] = "domain-exceeded" if finite else "step-rejected"
            keep = ~bad
            alive = alive[keep]
            u, T, Y, k1T, k1Y = u[keep], T[keep], Y[keep], k1T[keep], k1Y[keep]
        if len(alive) == 0:
            break
        un, Tn, Yn = new
        jet = imm.derivatives(un)
        x, E, _ = jet
        Tn, Yn, dr = _renormalize(E, Tn, Yn)
        drift[alive] = np.maximum(drift[alive], dr)
        u, T, Y = un, Tn, Yn
        _, _, k1T, k1Y, sig = _state_rhs(imm, u, T, Y, coef(t0 + dt, alive), mode, jet)
        if imm.codim == 1 and mode == kernels.MODE_SIGNED:
            sig = imm.orientation * sig
        U[n + 1, alive], TT[n + 1, alive], YY[n + 1, alive] = u, T, Y
        AC[n + 1, alive], XX[n + 1, alive], SG[n + 1, alive] = k1T, x, sig
    return U, TT, YY, AC, XX, SG, last, status, drift


def _grid(t_span, h):
    nf = int(math.floor(float(t_span[1]) / h + 1e-9))
    nb = int(math.floor(-float(t_span[0]) / h + 1e-9))
    return nb, nf


def integrate_batch(imm, kind, seeds, t_span=DEFAULT_SPAN, h=DEFAULT_STEP, c=None, kappa=None, labels=None):
    """Integrate a batch of seeds ``(p, x, y)`` sharing kind, span and step.

    ``c`` is a scalar or one value per seed (pseudo-geodesics); ``kappa`` is a
    callable of t returning a scalar or one value per seed (prescribed
    curvature).  Seeds leaving the chart box are truncated with status
    ``domain-exceeded``; non-finite states give ``step-rejected``.
    """
    check_span(t_span, h)
    seeds = list(seeds)
    B = len(seeds)
    P = np.array([np.asarray(s[0], dtype=float) for s in seeds])
    X0 = np.array([np.asarray(s[1], dtype=float) for s in seeds])
    if len(seeds[0]) > 2 and seeds[0][2] is not None:
        Y0 = np.array([np.asarray(s[2], dtype=float) for s in seeds])
    else:
        Y0 = np.array([_complement(imm, p, x) for p, x in zip(P, X0)])
    for p, x, y in zip(P, X0, Y0):
        check_seed(imm, p, x, y)
    cvec = None
    if kind == PSEUDO_GEODESIC:
        cvec = np.broadcast_to(np.asarray(c, dtype=float), (B,)).astype(float)
    if kind == PRESCRIBED and kappa is None:
        raise ValueError("prescribed-curvature integration needs kappa")
    if kind == PRESCRIBED and not callable(kappa):
        kval = np.broadcast_to(np.asarray(kappa, dtype=float), (B,)).copy()

        def kappa(t, _k=kval):
            return _k

    nb, nf = _grid(t_span, h)
    fwd = _sweep(imm, kind, cvec, kappa, P, X0, Y0, h, nf, 1.0)
    if nb > 0:
        # the kappa callable sees the true (negative) time on the backward sweep
        bwd = _sweep(imm, kind, cvec, kappa, P, X0, Y0, h, nb, -1.0)
    out = []
    for b in range(B):
        parts_f = [arr[: fwd[6][b] + 1, b] for arr in fwd[:6]]
        if nb > 0:
            parts_b = [arr[1: bwd[6][b] + 1, b][::-1] for arr in bwd[:6]]
            arrays = [np.concatenate([pb, pf]) for pb, pf in zip(parts_b, parts_f)]
            origin = bwd[6][b]
            status = fwd[7][b] if fwd[7][b] != "ok" else bwd[7][b]
            drift = max(fwd[8][b], bwd[8][b])
        else:
            arrays = parts_f
            origin = 0
            status = fwd[7][b]
            drift = fwd[8][b]
        u, T, Y, acc, x, sig = arrays
        t = (np.arange(len(u)) - origin) * h
        cb = None if cvec is None else float(cvec[b])
        traj = CurveTrajectory(imm, t, u, T, Y, acc, x, kind, cb, h, origin, status, [], float(drift),
                               sig if kind == PSEUDO_GEODESIC else None,
                               labels[b] if labels is not None else "")
        if kind == PSEUDO_GEODESIC and cb != 0.0:
            traj.events = _sigma_events(imm, traj)
        if status != "ok":
            end = "forward" if fwd[7][b] != "ok" else "backward"
            traj.events.append({"event": status, "t": float(t[-1] if end == "forward" else t[0])})
        out.append(traj)
    return out


def _sigma_events(imm, traj):
    """Zeros of sigma(T, T) (signed case) or near-zeros of its length."""
    sig = traj.sigma
    events = []
    if imm.codim == 1:
        idx = np.nonzero(np.sign(sig[:-1]) * np.sign(sig[1:]) < 0)[0]
        for i in idx:
            events.append({"event": "sigma-zero", "t": float(0.5 * (traj.t[i] + traj.t[i + 1]))})
    else:
        low = np.abs(sig) < TAU_EVENT_FLOOR
        starts = np.nonzero(low & ~np.concatenate([[False], low[:-1]]))[0]
        for i in starts:
            events.append({"event": "sigma-zero", "t": float(traj.t[i])})
    return events


def _complement(imm, p, x):
    """A g-unit chart vector orthogonal to x (first by Gram-Schmidt)."""
    _, E, _ = imm.derivatives(np.asarray(p, dtype=float))
    g = E.T @ E
    m = len(x)
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        v = e - (x @ g @ e) * x
        n = math.sqrt(v @ g @ v)
        if n > 1e-3:
            return v / n
    raise ValueError("could not complete x to an orthonormal pair")


def integrate_geodesic(imm, p, x, t_span=DEFAULT_SPAN, h=DEFAULT_STEP, y=None, strict=False):
    traj = integrate_batch(imm, GEODESIC, [(p, x, y)], t_span, h)[0]
    return _strict(traj, strict)


def integrate_planar_pseudo_geodesic(imm, spec, strict=False):
    spec.validate(imm)
    traj = integrate_batch(imm, PSEUDO_GEODESIC, [(spec.p, spec.x, spec.y)], spec.t_span, spec.h, c=spec.c)[0]
    return _strict(traj, strict)


def integrate_planar_prescribed_kappa(imm, p, x, y, kappa: Union[float, Callable], t_span=DEFAULT_SPAN,
                                      h=DEFAULT_STEP, strict=False):
    traj = integrate_batch(imm, PRESCRIBED, [(p, x, y)], t_span, h, kappa=kappa)[0]
    return _strict(traj, strict)


def _strict(traj, strict):
    if strict and traj.status == "domain-exceeded":
        raise DomainExceeded(f"trajectory left the chart box: {traj.events[-1]}")
    if strict and traj.status == "step-rejected":
        raise StepRejected(f"non-finite state: {traj.events[-1]}")
    return traj


# ---------------------------------------------------------------------------
# explicit curves


def trajectory_from_chart_curve(imm, t, u, du, d2u, label="", Y=None):
    """Wrap an explicit unit-speed chart curve as a trajectory.

    ``u, du, d2u`` are sample arrays of the chart curve and its first two
    derivatives.  Without ``Y`` the unit principal normal is used where the
    geodesic curvature is positive, continued from neighbours elsewhere.
    """
    t = np.asarray(t, dtype=float)
    u, du, d2u = (np.asarray(a, dtype=float) for a in (u, du, d2u))
    fr = frames_along(imm, u, normals=False)
    if Y is None:
        Y = _principal_normal(fr, du, d2u)
    h = float(t[1] - t[0])
    origin = int(np.argmin(np.abs(t)))
    return CurveTrajectory(imm, t, u, du, np.asarray(Y, dtype=float), d2u, fr["x"], EXPLICIT, None, h, origin,
                           label=label)


def trajectory_from_ambient_curve(imm, t, X, dX, d2X, label=""):
    """Pull back an explicit unit-speed ambient curve on imm through the chart."""
    if imm.chart_inverse is None:
        raise ValueError(f"{imm.name} has no chart inverse")
    X, dX, d2X = (np.asarray(a, dtype=float) for a in (X, dX, d2X))
    u = np.asarray(imm.chart_inverse(X), dtype=float)
    _, E, D2 = imm.derivatives(u)
    du = _pinv_apply(E, dX)
    rest = d2X - np.einsum("bnij,bi,bj->bn", D2, du, du)
    d2u = _pinv_apply(E, rest)
    return trajectory_from_chart_curve(imm, t, u, du, d2u, label=label)


def _pinv_apply(E, V):
    g = np.einsum("bni,bnj->bij", E, E)
    rhs = np.einsum("bni,bn->bi", E, V)
    return np.linalg.solve(g, rhs[..., None])[..., 0]


def _principal_normal(fr, T, acc):
    cov = acc + np.einsum("bkij,bi,bj->bk", fr["gamma"], T, T)
    g = fr["g"]
    nrm = np.sqrt(np.einsum("bi,bij,bj->b", cov, g, cov))
    Y = np.zeros_like(T)
    good = nrm > THETA_FLOOR
    Y[good] = cov[good] / nrm[good, None]
    if not good.all():
        idx = np.nonzero(good)[0]
        for i in np.nonzero(~good)[0]:
            if len(idx):
                j = idx[np.argmin(np.abs(idx - i))]
                v = Y[j] - np.einsum("i,ij,j->", Y[j], g[i], T[i]) * T[i]
            else:
                v = np.eye(T.shape[1])[np.argmin(np.abs(T[i]))]
                v = v - (v @ g[i] @ T[i]) * T[i]
            Y[i] = v / math.sqrt(v @ g[i] @ v)
    return Y


def helix_chart_curve(radius, pitch, t):
    """Unit-speed circular helix in flat coordinates of R3."""
    L = math.hypot(radius, pitch)
    s = np.asarray(t, dtype=float) / L
    u = np.stack([radius * np.cos(s), radius * np.sin(s), pitch * s], axis=1)
    du = np.stack([-radius * np.sin(s), radius * np.cos(s), np.full_like(s, pitch)], axis=1) / L
    d2u = np.stack([-radius * np.cos(s), -radius * np.sin(s), np.zeros_like(s)], axis=1) / L ** 2
    return u, du, d2u


def sphere_section(normal, offset, t, radius=1.0):
    """Unit-speed circle cut from the sphere |X| = radius by <X, normal> = offset.

    Returns samples of the position and its first two derivatives.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    if abs(offset) >= radius:
        raise ValueError("plane misses the sphere")
    rho = math.sqrt(radius ** 2 - offset ** 2)
    a = np.zeros_like(n)
    a[np.argmin(np.abs(n))] = 1.0
    a -= (a @ n) * n
    a /= np.linalg.norm(a)
    b = np.cross(n, a) if len(n) == 3 else _complete(n, a)
    s = np.asarray(t, dtype=float) / rho
    cs, sn = np.cos(s)[:, None], np.sin(s)[:, None]
    X = offset * n + rho * (cs * a + sn * b)
    dX = -sn * a + cs * b
    d2X = -(cs * a + sn * b) / rho
    return X, dX, d2X


def _complete(n, a):
    M = np.stack([n, a])
    _, _, vt = np.linalg.svd(M)
    return vt[2]


# ---------------------------------------------------------------------------
# curvature


@dataclass
class CurvatureProfile:
    kappa: np.ndarray
    tau: np.ndarray
    kappa_tilde: np.ndarray
    theta: np.ndarray
    theta_defined: np.ndarray
    kappa_signed: np.ndarray
    nabla_T: np.ndarray
    alpha_TT: np.ndarray
    ambient_accel: np.ndarray

    def pythagoras_defect(self):
        return float(np.max(np.abs(self.kappa_tilde ** 2 - self.kappa ** 2 - self.tau ** 2)))


def curvature_profile(imm, traj, frames=None):
    """kappa, tau, kappa-tilde and the acceleration-normal angle theta along a trajectory.

    ``theta`` is only meaningful for surfaces in R3; it is computed wherever
    kappa-tilde exceeds ``THETA_FLOOR`` and is NaN elsewhere.
    """
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=False)
    T, acc = traj.T, traj.accel
    cov = acc + np.einsum("bkij,bi,bj->bk", fr["gamma"], T, T)
    g = fr["g"]
    kappa = np.sqrt(np.maximum(np.einsum("bi,bij,bj->b", cov, g, cov), 0.0))
    kappa_signed = np.einsum("bi,bij,bj->b", cov, g, traj.Y)
    d2t = np.einsum("bnij,bi,bj->bn", fr["D2"], T, T)
    alpha_tt = np.einsum("bnm,bm->bn", fr["Pn"], d2t)
    tau = np.linalg.norm(alpha_tt, axis=1)
    amb = np.einsum("bni,bi->bn", fr["E"], acc) + d2t
    nu = fr["nu"]
    amb = amb - nu * np.sum(nu * amb, axis=1, keepdims=True)
    kt = np.linalg.norm(amb, axis=1)
    defined = kt > THETA_FLOOR
    theta = np.full_like(kt, np.nan)
    theta[defined] = np.arccos(np.clip(tau[defined] / kt[defined], -1.0, 1.0))
    return CurvatureProfile(kappa, tau, kt, theta, defined, kappa_signed, cov, alpha_tt, amb)


def extrinsic_shape(traj, frames=None):
    """Ambient positions with first and second derivatives by the chain rule."""
    imm = traj.imm
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=False)
    vel = np.einsum("bni,bi->bn", fr["E"], traj.T)
    acc = np.einsum("bni,bi->bn", fr["E"], traj.accel) + np.einsum("bnij,bi,bj->bn", fr["D2"], traj.T, traj.T)
    return fr["x"], vel, acc


# ---------------------------------------------------------------------------
# export


def trajectory_rows(traj, profile=None):
    """Header and rows for CSV export (floats as 17 significant digits)."""
    imm = traj.imm
    m, N = imm.dim, imm.ambient_dim
    profile = profile or curvature_profile(imm, traj)
    ambient_names = ["X", "Y", "Z"] if N == 3 else [f"x{i + 1}" for i in range(N)]
    header = (["t"] + [f"u{i + 1}" for i in range(m)] + [f"T{i + 1}" for i in range(m)]
              + [f"Y{i + 1}" for i in range(m)] + ambient_names
              + ["kappa", "tau", "kappa_tilde", "theta"])
    cols = [traj.t[:, None], traj.u, traj.T, traj.Y, traj.x, profile.kappa[:, None], profile.tau[:, None],
            profile.kappa_tilde[:, None], profile.theta[:, None]]
    data = np.concatenate(cols, axis=1)
    fmt = "%.17g".__mod__
    rows = [list(map(fmt, row)) for row in data.tolist()]
    return header, rows


def format_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


def write_trajectory_csv(path, traj, profile=None):
    header, rows = trajectory_rows(traj, profile)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

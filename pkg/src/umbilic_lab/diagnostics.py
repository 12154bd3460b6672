"""Defect functionals for umbilic, isotropic and extrinsic-sphere immersions.

All defects are even in the normal frame vectors and in ``Y`` so that the
unspecified codimension-one orientation cannot change a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeanCurvatureVanishes
from .geometry import frame_at, frames_along
from .integrators import curvature_profile
from .numerics import centered_derivative, interior_mask

H_FLOOR = 1e-8
TAU_FLOOR = 1e-6
EPS_SCALE = 1e-12
DEFAULT_DIRECTIONS = 64


@dataclass
class DefectReport:
    name: str
    values: list
    sup: float
    mean: float
    sampling: dict
    threshold: float = float("nan")
    verdict: str = ""
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, name, values, sampling, threshold=None, **extra):
        vals = [float(v) for v in values]
        sup = max(vals) if vals else 0.0
        mean = sum(vals) / len(vals) if vals else 0.0
        verdict = ""
        if threshold is not None:
            verdict = "pass" if sup <= threshold else "fail"
        return cls(name, vals, sup, mean, dict(sampling), float("nan") if threshold is None else float(threshold),
                   verdict, extra)

    def to_dict(self):
        out = {"name": self.name, "sup": self.sup, "mean": self.mean, "values": list(self.values),
               "sampling": self.sampling, "verdict": self.verdict}
        if not math.isnan(self.threshold):
            out["threshold"] = self.threshold
        if self.extra:
            out["extra"] = self.extra
        return out


# ---------------------------------------------------------------------------
# pointwise


def _orthonormal_alpha(fp):
    """Second-form components in a g-orthonormal tangent frame, shape (n, m, m)."""
    B = fp.orthonormal_basis()
    return np.einsum("ia,sij,jb->sab", B, fp.alpha, B), B


def unit_directions(m, count=DEFAULT_DIRECTIONS, seed=0):
    """Deterministic low-discrepancy unit vectors of R^m.

    Circle: equally spaced angles with a seeded phase.  Sphere: Fibonacci
    lattice under a seeded rotation.  Higher m: seeded Gaussian directions.
    """
    rng = np.random.default_rng(seed)
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        ang = 2.0 * np.pi * (np.arange(count) + rng.random()) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if m == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        phi = np.pi * (1.0 + 5 ** 0.5) * k
        r = np.sqrt(1.0 - z * z)
        pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        return pts @ q.T
    v = rng.normal(size=(count, m))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def umbilicity_defect(imm, u, n_pairs=32, seed=0):
    """Distance of each shape operator from a multiple of the identity.

    Max of the traceless Frobenius norm over the normal frame and of the
    sampled ``|alpha(X, Y) - <X, Y> H|`` over g-orthonormal X, Y.
    """
    fp = frame_at(imm, u)
    ahat, B = _orthonormal_alpha(fp)
    m = imm.dim
    eye = np.eye(m)
    frob = 0.0
    for a in ahat:
        frob = max(frob, float(np.linalg.norm(a - np.trace(a) / m * eye)))
    hcomp = np.einsum("saa->s", ahat) / m
    rng = np.random.default_rng(seed)
    sampled = 0.0
    for _ in range(n_pairs):
        q, _ = np.linalg.qr(rng.normal(size=(m, m)))
        x = q[:, 0]
        y = q[:, 1] if m > 1 else q[:, 0]
        for a, b, ip in ((x, y, 0.0), (x, x, 1.0)):
            val = np.einsum("sab,a,b->s", ahat, a, b) - ip * hcomp
            sampled = max(sampled, float(np.linalg.norm(val)))
    return max(frob, sampled)


@dataclass
class IsotropyResult:
    defect: float
    lam: float
    spread: float
    n_dirs: int


def isotropy_defect(imm, u, n_dirs=DEFAULT_DIRECTIONS, seed=0):
    """O'Neill isotropy defect at u.

    ``defect`` is the max over sampled unit x of the exact sup over unit
    ``y`` orthogonal to x of ``|<alpha(x,x), alpha(x,y)>|``; ``lam`` and
    ``spread`` are the mean and range of ``|alpha(x,x)|^2``.
    """
    m = imm.dim
    if n_dirs < 2 * m:
        raise ValueError(f"need at least {2 * m} directions")
    fp = frame_at(imm, u)
    ahat, _ = _orthonormal_alpha(fp)
    Z = unit_directions(m, n_dirs, seed)
    axx = np.einsum("sab,ka,kb->ks", ahat, Z, Z)
    ax = np.einsum("sab,kb->ksa", ahat, Z)
    v = np.einsum("ks,ksa->ka", axx, ax)
    v = v - np.sum(v * Z, axis=1, keepdims=True) * Z
    defect = float(np.max(np.linalg.norm(v, axis=1)))
    sq = np.sum(axx * axx, axis=1)
    return IsotropyResult(defect, float(np.mean(sq)), float(np.max(sq) - np.min(sq)), n_dirs)


def eigenvector_defect(imm, u, x):
    """``min |A x -+ tau x|_g`` for a unit x on a hypersurface (tau = |alpha(x,x)|)."""
    fp = frame_at(imm, u)
    if fp.alpha.shape[0] != 1:
        raise ValueError("eigenvector check needs a hypersurface")
    x = np.asarray(x, dtype=float)
    A = -fp.g_inv @ fp.alpha[0]
    tau = abs(float(x @ fp.alpha[0] @ x))
    Ax = A @ x
    return min(math.sqrt(max((Ax - s * tau * x) @ fp.g @ (Ax - s * tau * x), 0.0)) for s in (1.0, -1.0)), tau


def alpha_vanishing_check(imm, u, n_dirs=DEFAULT_DIRECTIONS, tol=1e-10, seed=0):
    """Spot check at u that alpha vanishes identically under the hypotheses below.

    If some sampled unit x has ``alpha(x, x) = 0`` and every sampled
    orthonormal pair has ``alpha(x, y) = 0`` or ``alpha(x,x) = alpha(y,y) = 0``,
    returns the sup of ``|alpha|`` over the frame (expected 0); otherwise None.
    """
    fp = frame_at(imm, u)
    ahat, _ = _orthonormal_alpha(fp)
    m = imm.dim
    Z = unit_directions(m, n_dirs, seed)
    axx = np.linalg.norm(np.einsum("sab,ka,kb->ks", ahat, Z, Z), axis=1)
    if not np.any(axx <= tol):
        return None
    for z in Z:
        basis = np.linalg.svd(z[None, :])[2][1:]
        for w in basis:
            axy = np.linalg.norm(np.einsum("sab,a,b->s", ahat, z, w))
            ayy = np.linalg.norm(np.einsum("sab,a,b->s", ahat, w, w))
            azz = np.linalg.norm(np.einsum("sab,a,b->s", ahat, z, z))
            if axy > tol and not (azz <= tol and ayy <= tol):
                return None
    return float(np.max(np.abs(ahat))) if ahat.size else 0.0


# ---------------------------------------------------------------------------
# along curves


def _normal_derivative(fr, V, h):
    dV = centered_derivative(V, h)
    return np.einsum("bnm,bm->bn", fr["Pn"], dV)


def parallel_normalized_H_defect(imm, traj, frames=None):
    """sup of ``|nabla^perp_T (H / |H|)|`` over the interior samples."""
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=True)
    H = fr["H"]
    hn = np.linalg.norm(H, axis=1)
    if np.min(hn) < H_FLOOR:
        raise MeanCurvatureVanishes(f"|H| = {np.min(hn):.3e} below {H_FLOOR:g} along the curve")
    d = _normal_derivative(fr, H / hn[:, None], traj.h)
    mask = interior_mask(len(traj.t))
    return float(np.max(np.linalg.norm(d, axis=1)[mask])) if mask.any() else 0.0


def extrinsic_sphere_defect(imm, traj, frames=None):
    """sup of ``|nabla^perp_T H|`` over the interior samples."""
    fr = frames if frames is not None else frames_along(imm, traj.u, normals=True)
    d = _normal_derivative(fr, fr["H"], traj.h)
    mask = interior_mask(len(traj.t))
    return float(np.max(np.linalg.norm(d, axis=1)[mask])) if mask.any() else 0.0


def normal_equation_residuals(imm, traj, tau_floor=TAU_FLOOR):
    """Tangent/normal decomposition of extrinsic planarity along ``traj``.

    Returns sup-norms (divided by ``max(kappa_tilde)^3 + EPS_SCALE``) of

    * ``tangent``: nabla^2 T + A_{alpha(T,T)} T + (k^2 + t^2) T - q nabla T
    * ``normal``:  alpha(T, nabla T) + nabla^perp alpha(T,T) - q alpha(T,T)
    * ``pg_tangent`` / ``pg_normal``: the pair with kappa = c tau substituted
    * ``umbilic_tangent`` / ``umbilic_normal``: the pair for a totally umbilic M

    with ``q = (k k' + t t') / (k^2 + t^2)``.  Blocks dividing by tau skip
    samples with ``tau < tau_floor``; the count is reported as ``excluded``.
    """
    fr = frames_along(imm, traj.u, normals=False)
    prof = curvature_profile(imm, traj, fr)
    h = traj.h
    g, ginv, gamma, D2, Pn = fr["g"], fr["ginv"], fr["gamma"], fr["D2"], fr["Pn"]
    T = traj.T
    V = prof.nabla_T
    k, t = prof.kappa, prof.tau
    dk, dt = centered_derivative(k, h), centered_derivative(t, h)
    kt2 = k * k + t * t
    q = np.where(kt2 > EPS_SCALE, (k * dk + t * dt) / np.where(kt2 > EPS_SCALE, kt2, 1.0), 0.0)
    nabla2 = centered_derivative(V, h) + np.einsum("bkij,bi,bj->bk", gamma, T, V)
    att = prof.alpha_TT
    at_v = np.einsum("bnm,bmij,bi,bj->bn", Pn, D2, T, V)
    dperp_att = np.einsum("bnm,bm->bn", Pn, centered_derivative(att, h))
    lower = np.einsum("bnij,bj,bn->bi", D2, T, att)
    A_T = -np.einsum("bij,bj->bi", ginv, lower)

    def gnorm(W):
        return np.sqrt(np.maximum(np.einsum("bi,bij,bj->b", W, g, W), 0.0))

    tangent = gnorm(nabla2 + A_T + kt2[:, None] * T - q[:, None] * V)
    normal = np.linalg.norm(at_v + dperp_att - q[:, None] * att, axis=1)
    ok = t >= tau_floor
    safe_t = np.where(ok, t, 1.0)
    pg_tangent = gnorm(A_T + (t * t)[:, None] * T)
    pg_normal = np.linalg.norm(at_v + dperp_att - (dt / safe_t)[:, None] * att, axis=1)
    abar = att / safe_t[:, None]
    dperp_abar = np.einsum("bnm,bm->bn", Pn, centered_derivative(abar, h))
    um_tangent = gnorm(nabla2 + (k * k)[:, None] * T - q[:, None] * V)
    um_normal = np.linalg.norm(t[:, None] * dperp_abar + dt[:, None] * abar - (t * q)[:, None] * abar, axis=1)

    mask = interior_mask(len(traj.t))
    # a tau-floor sample also spoils the centred differences of its neighbours
    near = np.convolve((~ok).astype(float), np.ones(5), mode="same") > 0
    tau_mask = mask & ~near
    scale = float(np.max(prof.kappa_tilde)) ** 3 + EPS_SCALE

    def sup(vals, msk):
        return float(np.max(vals[msk])) / scale if msk.any() else float("nan")

    return {
        "tangent": sup(tangent, mask),
        "normal": sup(normal, mask),
        "pg_tangent": sup(pg_tangent, tau_mask),
        "pg_normal": sup(pg_normal, tau_mask),
        "umbilic_tangent": sup(um_tangent, tau_mask),
        "umbilic_normal": sup(um_normal, tau_mask),
        "samples": int(mask.sum()),
        "excluded": int((mask & ~tau_mask).sum()),
    }

"""Named immersions with analytic derivatives and known ground truth.

Every entry carries a seed sampler that draws chart points and g-orthonormal
direction pairs from a region where test curves stay well inside the chart.
Round spheres use stereographic charts from the south pole, so seeds are
drawn with a bounded "height" so their great and small circles never come
near the excluded pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .geometry import ParametricImmersion, euclidean, frames_along, sphere_ambient

SQRT3 = np.sqrt(3.0)


# ---------------------------------------------------------------------------
# analytic maps, each returning (x, E, D2)


def _stereographic(U, radius=1.0):
    """Inverse stereographic chart of the sphere of ``radius`` in R^(m+1)."""
    U = np.asarray(U, dtype=float)
    fast = kernels._active.stereographic_jet
    if fast is not None and U.ndim == 2:
        return fast(np.ascontiguousarray(U), float(radius))
    m = U.shape[-1]
    q = 1.0 / (1.0 + np.sum(U * U, axis=-1))
    eye = np.eye(m)
    dq = -2.0 * U * q[..., None] ** 2
    d2q = -2.0 * eye * q[..., None, None] ** 2 + 8.0 * U[..., :, None] * U[..., None, :] * q[..., None, None] ** 3
    x = np.concatenate([2.0 * U * q[..., None], (2.0 * q - 1.0)[..., None]], axis=-1)
    E_top = 2.0 * eye * q[..., None, None] + 2.0 * U[..., :, None] * dq[..., None, :]
    E = np.concatenate([E_top, 2.0 * dq[..., None, :]], axis=-2)
    # d2 of 2 u_a q: 2 delta_ai dq_j + 2 delta_aj dq_i + 2 u_a d2q_ij
    D_top = (2.0 * eye[:, :, None] * dq[..., None, None, :]
             + 2.0 * eye[:, None, :] * dq[..., None, :, None]
             + 2.0 * U[..., :, None, None] * d2q[..., None, :, :])
    D2 = np.concatenate([D_top, 2.0 * d2q[..., None, :, :]], axis=-3)
    return radius * x, radius * E, radius * D2


def _stereographic_inverse(X, radius=1.0):
    Y = np.asarray(X, dtype=float) / radius
    return Y[..., :-1] / (1.0 + Y[..., -1:])


def _pad(jet, total):
    def padded(U):
        x, E, D2 = jet(U)
        extra = total - x.shape[-1]
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (extra,))], axis=-1)
        E = np.concatenate([E, np.zeros(E.shape[:-2] + (extra, E.shape[-1]))], axis=-2)
        D2 = np.concatenate([D2, np.zeros(D2.shape[:-3] + (extra,) + D2.shape[-2:])], axis=-3)
        return x, E, D2

    return padded


def _plane(U):
    U = np.asarray(U, dtype=float)
    shape = U.shape[:-1]
    x = np.concatenate([U, np.zeros(shape + (1,))], axis=-1)
    E = np.broadcast_to(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), shape + (3, 2)).copy()
    return x, E, np.zeros(shape + (3, 2, 2))


def _flat3(U):
    U = np.asarray(U, dtype=float)
    shape = U.shape[:-1]
    return U.copy(), np.broadcast_to(np.eye(3), shape + (3, 3)).copy(), np.zeros(shape + (3, 3, 3))


def _cylinder(U, radius=1.0):
    U = np.asarray(U, dtype=float)
    fast = kernels._active.cylinder_jet
    if fast is not None and U.ndim == 2:
        return fast(np.ascontiguousarray(U), float(radius))
    u = U[..., 0]
    c, s = np.cos(u), np.sin(u)
    z = np.zeros_like(u)
    o = np.ones_like(u)
    x = np.stack([radius * c, radius * s, U[..., 1]], axis=-1)
    E = np.stack([np.stack([-radius * s, z], -1), np.stack([radius * c, z], -1), np.stack([z, o], -1)], axis=-2)
    D2 = np.zeros(U.shape[:-1] + (3, 2, 2))
    D2[..., 0, 0, 0] = -radius * c
    D2[..., 1, 0, 0] = -radius * s
    return x, E, D2


def _ellipsoid(U, a=1.0, b=1.0, c=2.0):
    U = np.asarray(U, dtype=float)
    fast = kernels._active.ellipsoid_jet
    if fast is not None and U.ndim == 2:
        return fast(np.ascontiguousarray(U), float(a), float(b), float(c))
    th, ph = U[..., 0], U[..., 1]
    st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    x = np.stack([a * st * cp, b * st * sp, c * ct], axis=-1)
    E = np.empty(U.shape[:-1] + (3, 2))
    E[..., 0, 0], E[..., 0, 1] = a * ct * cp, -a * st * sp
    E[..., 1, 0], E[..., 1, 1] = b * ct * sp, b * st * cp
    E[..., 2, 0], E[..., 2, 1] = -c * st, 0.0
    D2 = np.empty(U.shape[:-1] + (3, 2, 2))
    D2[..., 0, 0, 0], D2[..., 0, 0, 1], D2[..., 0, 1, 1] = -a * st * cp, -a * ct * sp, -a * st * cp
    D2[..., 1, 0, 0], D2[..., 1, 0, 1], D2[..., 1, 1, 1] = -b * st * sp, b * ct * cp, -b * st * sp
    D2[..., 2, 0, 0], D2[..., 2, 0, 1], D2[..., 2, 1, 1] = -c * ct, 0.0, 0.0
    D2[..., :, 1, 0] = D2[..., :, 0, 1]
    return x, E, D2


def _polar_sphere(U):
    return _ellipsoid(U, 1.0, 1.0, 1.0)


def _torus(U, R=2.0, r=1.0):
    U = np.asarray(U, dtype=float)
    fast = kernels._active.torus_jet
    if fast is not None and U.ndim == 2:
        return fast(np.ascontiguousarray(U), float(R), float(r))
    u, v = U[..., 0], U[..., 1]
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    rho = R + r * cv
    x = np.stack([rho * cu, rho * su, r * sv], axis=-1)
    E = np.empty(U.shape[:-1] + (3, 2))
    E[..., 0, 0], E[..., 0, 1] = -rho * su, -r * sv * cu
    E[..., 1, 0], E[..., 1, 1] = rho * cu, -r * sv * su
    E[..., 2, 0], E[..., 2, 1] = 0.0, r * cv
    D2 = np.empty(U.shape[:-1] + (3, 2, 2))
    D2[..., 0, 0, 0], D2[..., 0, 0, 1], D2[..., 0, 1, 1] = -rho * cu, r * sv * su, -r * cv * cu
    D2[..., 1, 0, 0], D2[..., 1, 0, 1], D2[..., 1, 1, 1] = -rho * su, -r * sv * cu, -r * cv * su
    D2[..., 2, 0, 0], D2[..., 2, 0, 1], D2[..., 2, 1, 1] = 0.0, 0.0, -r * sv
    D2[..., :, 1, 0] = D2[..., :, 0, 1]
    return x, E, D2


def _clifford(U):
    U = np.asarray(U, dtype=float)
    fast = kernels._active.clifford_jet
    if fast is not None and U.ndim == 2:
        return fast(np.ascontiguousarray(U))
    u, v = U[..., 0], U[..., 1]
    k = 1.0 / np.sqrt(2.0)
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    z = np.zeros_like(u)
    x = k * np.stack([cu, su, cv, sv], axis=-1)
    E = k * np.stack([np.stack([-su, z], -1), np.stack([cu, z], -1),
                      np.stack([z, -sv], -1), np.stack([z, cv], -1)], axis=-2)
    D2 = np.zeros(U.shape[:-1] + (4, 2, 2))
    D2[..., 0, 0, 0], D2[..., 1, 0, 0] = -k * cu, -k * su
    D2[..., 2, 1, 1], D2[..., 3, 1, 1] = -k * cv, -k * sv
    return x, E, D2


def _veronese_forms():
    s = 1.0 / SQRT3
    Q = np.zeros((5, 3, 3))
    Q[0, 1, 2] = Q[0, 2, 1] = 0.5 * s
    Q[1, 0, 2] = Q[1, 2, 0] = 0.5 * s
    Q[2, 0, 1] = Q[2, 1, 0] = 0.5 * s
    Q[3, 0, 0], Q[3, 1, 1] = 0.5 * s, -0.5 * s
    Q[4, 0, 0], Q[4, 1, 1], Q[4, 2, 2] = 1.0 / 6.0, 1.0 / 6.0, -2.0 / 6.0
    return Q


_VERONESE_Q = _veronese_forms()


def _veronese(U):
    """Veronese surface: S^2(sqrt 3) -> S^4(1), via a stereographic chart."""
    P, dP, d2P = _stereographic(U, SQRT3)
    Q = _VERONESE_Q
    fast = kernels._active.quadratic_jet
    if fast is not None and P.ndim == 2:
        return fast(P, dP, d2P, Q)
    # pairwise contractions only: multi-operand einsum is far slower here
    QP = np.einsum("nab,...b->...na", Q, P)
    QdP = np.einsum("nab,...bj->...naj", Q, dP)
    x = np.einsum("...na,...a->...n", QP, P)
    E = 2.0 * np.einsum("...na,...ai->...ni", QP, dP)
    D2 = 2.0 * (np.einsum("...ai,...naj->...nij", dP, QdP) + np.einsum("...na,...aij->...nij", QP, d2P))
    return x, E, D2


# ---------------------------------------------------------------------------
# seed samplers


def _orthonormal_pair(fp_g, rng):
    """Random g-orthonormal (x, y) in chart components."""
    m = fp_g.shape[0]
    L = np.linalg.cholesky(fp_g)
    basis = np.linalg.inv(L).T
    a = rng.normal(size=m)
    a /= np.linalg.norm(a)
    b = rng.normal(size=m)
    b -= a * (a @ b)
    b /= np.linalg.norm(b)
    return basis @ a, basis @ b


def _metric_at(imm, u):
    _, E, _ = imm.derivatives(np.asarray(u, dtype=float))
    return E.T @ E


def _box_sampler(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def points(imm, rng, count):
        return [lo + (hi - lo) * rng.random(lo.size) for _ in range(count)]

    def seeds(imm, rng, count):
        out = []
        for p in points(imm, rng, count):
            x, y = _orthonormal_pair(_metric_at(imm, p), rng)
            out.append((p, x, y))
        return out

    return points, seeds


_TEST_RADII = np.linspace(0.3, 0.5 * np.pi, 13)


def _lowest_circle_height(p, x, y):
    """Lowest last coordinate over circles through p tangent to x.

    Covers geodesic radii in ``_TEST_RADII`` curving towards y; the circle
    with radius r and centre ``q = cos r p + sin r y`` is
    ``cos r q + sin r (cos t a + sin t x)`` with ``a = sin r p - cos r y``.
    """
    low = np.inf
    for r in _TEST_RADII:
        cr, sr = np.cos(r), np.sin(r)
        q = cr * p + sr * y
        a = sr * p - cr * y
        low = min(low, cr * q[-1] - sr * np.hypot(a[-1], x[-1]))
    return low


def _sphere_sampler(m, scale=1.0, floor=-0.7, base_height=(-0.3, 0.6)):
    """Seeds on unit S^m whose test circles stay away from the south pole.

    Circles bending towards y are checked; sphere entries orient their
    normal inwards so positive-c pseudo-geodesics bend that way too.
    """

    def ambient_seed(rng):
        while True:
            p = rng.normal(size=m + 1)
            p /= np.linalg.norm(p)
            if not base_height[0] <= p[-1] <= base_height[1]:
                continue
            vecs = []
            for _ in range(2):
                v = rng.normal(size=m + 1)
                v -= p * (p @ v)
                for w in vecs:
                    v -= w * (w @ v)
                v /= np.linalg.norm(v)
                vecs.append(v)
            for y in (vecs[1], -vecs[1]):
                if _lowest_circle_height(p, vecs[0], y) >= floor:
                    return p, vecs[0], y

    def to_chart(p, v):
        u = _stereographic_inverse(p)
        _, E, _ = _stereographic(u)
        return u, np.linalg.lstsq(E, v, rcond=None)[0]

    def points(imm, rng, count):
        return [to_chart(ambient_seed(rng)[0], np.zeros(m + 1))[0] for _ in range(count)]

    def seeds(imm, rng, count):
        out = []
        for _ in range(count):
            p, xa, ya = ambient_seed(rng)
            u, xc = to_chart(p, xa)
            _, yc = to_chart(p, ya)
            out.append((u, xc / scale, yc / scale))
        return out

    return points, seeds


def _equatorial_sampler(band=0.3, max_angle=np.deg2rad(40.0)):
    """Seeds near the equator of a (theta, phi) surface of revolution."""

    def points(imm, rng, count):
        return [np.array([0.5 * np.pi + band * (2 * rng.random() - 1), np.pi * (2 * rng.random() - 1)])
                for _ in range(count)]

    def seeds(imm, rng, count):
        out = []
        for p in points(imm, rng, count):
            g = _metric_at(imm, p)
            e_th = np.array([1.0, 0.0]) / np.sqrt(g[0, 0])
            e_ph = np.array([0.0, 1.0]) / np.sqrt(g[1, 1])
            beta = max_angle * (2 * rng.random() - 1)
            if rng.random() < 0.5:
                beta += np.pi
            x = np.cos(beta) * e_ph + np.sin(beta) * e_th
            y = -np.sin(beta) * e_ph + np.cos(beta) * e_th
            if rng.random() < 0.5:
                y = -y
            out.append((p, x, y))
        return out

    return points, seeds


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    immersion: ParametricImmersion
    flags: dict
    description: str
    point_sampler: Callable = field(compare=False)
    seed_sampler: Callable = field(compare=False)
    round_sphere: Optional[dict] = None

    def sample_points(self, rng, count):
        return [np.asarray(p, dtype=float) for p in self.point_sampler(self.immersion, rng, count)]

    def sample_seeds(self, rng, count):
        return [tuple(np.asarray(v, dtype=float) for v in s) for s in self.seed_sampler(self.immersion, rng, count)]


def _flags(umbilic, sphere, isotropic, hyper):
    return {"totally_umbilic": umbilic, "extrinsic_sphere": sphere,
            "constant_isotropic": isotropic, "hypersurface": hyper}


def _immersion(name, m, ambient, jet, domain, chart_inverse=None, orientation=1.0):
    return ParametricImmersion(
        name, m, ambient,
        lambda U: jet(U)[0], lambda U: jet(U)[1], lambda U: jet(U)[2],
        domain, chart_inverse=chart_inverse, jet=jet, orientation=orientation,
    )


def _build():
    entries = []
    big = 50.0

    def add(name, m, ambient, jet, domain, flags, description, sampler, chart_inverse=None,
            round_sphere=None, orientation=1.0):
        imm = _immersion(name, m, ambient, jet, domain, chart_inverse, orientation)
        entries.append(CatalogEntry(name, imm, flags, description, sampler[0], sampler[1], round_sphere))

    add("plane", 2, euclidean(3), _plane, ([-big, -big], [big, big]),
        _flags(True, True, True, True), "coordinate plane z = 0 in R3",
        _box_sampler([-1, -1], [1, 1]), chart_inverse=lambda X: np.asarray(X)[..., :2])
    add("flat3", 3, euclidean(3), _flat3, ([-big] * 3, [big] * 3),
        _flags(True, True, True, False), "identity chart of R3 (codimension zero)",
        _box_sampler([-1] * 3, [1] * 3), chart_inverse=lambda X: np.asarray(X, dtype=float))
    add("cylinder", 2, euclidean(3), _cylinder, ([-big, -big], [big, big]),
        _flags(False, False, False, True), "unit circular cylinder in R3",
        _box_sampler([-np.pi, -1], [np.pi, 1]))
    stereo_box2 = ([-4.0, -4.0], [4.0, 4.0])
    add("sphere2", 2, euclidean(3), _stereographic, stereo_box2,
        _flags(True, True, True, True), "unit S2 in R3, stereographic chart",
        _sphere_sampler(2), chart_inverse=_stereographic_inverse,
        round_sphere={"dim": 2, "ambient_dim": 3, "radius": 1.0}, orientation=-1.0)
    add("sphere2-polar", 2, euclidean(3), _polar_sphere, ([0.1, -big], [np.pi - 0.1, big]),
        _flags(True, True, True, True), "unit S2 in R3, polar chart (theta, phi)",
        _equatorial_sampler(), orientation=-1.0)
    add("sphere3", 3, euclidean(4), _stereographic, ([-4.0] * 3, [4.0] * 3),
        _flags(True, True, True, True), "unit S3 in R4, stereographic chart",
        _sphere_sampler(3), chart_inverse=_stereographic_inverse,
        round_sphere={"dim": 3, "ambient_dim": 4, "radius": 1.0})
    add("sphere2-in-R4", 2, euclidean(4), _pad(_stereographic, 4), stereo_box2,
        _flags(True, True, True, False), "unit S2 in R3 x {0} inside R4",
        _sphere_sampler(2), chart_inverse=lambda X: _stereographic_inverse(np.asarray(X)[..., :3]),
        round_sphere={"dim": 2, "ambient_dim": 4, "radius": 1.0})
    add("ellipsoid-1-1-2", 2, euclidean(3), _ellipsoid, ([0.15, -big], [np.pi - 0.15, big]),
        _flags(False, False, False, True), "ellipsoid x^2 + y^2 + z^2/4 = 1, polar chart",
        _equatorial_sampler(band=0.3, max_angle=np.deg2rad(45.0)))
    add("torus-2-1", 2, euclidean(3), _torus, ([-big, -big], [big, big]),
        _flags(False, False, False, True), "torus of revolution R = 2, r = 1",
        _box_sampler([-np.pi, -np.pi], [np.pi, np.pi]))
    add("clifford-in-S3", 2, sphere_ambient(4), _clifford, ([-big, -big], [big, big]),
        _flags(False, False, False, True), "Clifford torus in the unit S3 (level set)",
        _box_sampler([-np.pi, -np.pi], [np.pi, np.pi]))
    add("veronese-in-S4", 2, sphere_ambient(5), _veronese, stereo_box2,
        _flags(False, False, True, False), "Veronese surface S2(sqrt3) -> S4 (level set)",
        _sphere_sampler(2, scale=SQRT3))
    add("veronese-in-R5", 2, euclidean(5), _veronese, stereo_box2,
        _flags(False, False, True, False), "Veronese surface viewed in R5",
        _sphere_sampler(2, scale=SQRT3))
    return {e.name: e for e in entries}


CATALOG = _build()


def list_catalog():
    """Catalog names with their ground-truth flags, in a stable order."""
    return [(name, dict(CATALOG[name].flags)) for name in sorted(CATALOG)]


def get_entry(name):
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(sorted(CATALOG))}") from None


def get_immersion(name):
    return get_entry(name).immersion


def sample_grid(entry, seed, count):
    """Deterministic grid of chart points for defect evaluation."""
    rng = np.random.default_rng(seed)
    pts = np.array(entry.sample_points(rng, count))
    frames_along(entry.immersion, pts, normals=False)  # fails fast on bad regions
    return pts


def custom_entry(imm, sample_box=None, flags=None, description="inline immersion"):
    """Wrap a user immersion as a catalog entry with a box seed sampler.

    Without ``sample_box`` the middle half of the domain box is used.
    Ground-truth flags are unknown (``None``) unless given.
    """
    if sample_box is None:
        lo, hi = imm.lower, imm.upper
        mid, half = 0.5 * (lo + hi), 0.25 * (hi - lo)
        sample_box = (mid - half, mid + half)
    points, seeds = _box_sampler(*sample_box)
    flags = flags or _flags(None, None, None, imm.codim == 1)
    return CatalogEntry(imm.name, imm, flags, description, points, seeds)

"""Pointwise extrinsic geometry of an immersion into a flat or level-set ambient.

Conventions
-----------
* Chart data live in arrays with a trailing chart axis; batched evaluation
  broadcasts over any leading axes.
* ``alpha`` is the vector-valued second fundamental form, stored as ambient
  vectors or as components on an orthonormal normal frame.
* The shape operator follows ``D_X eta = A_eta(X) + nabla^perp_X eta``, so
  ``<alpha(X, Y), eta> + <A_eta X, Y> = 0``.  For the outward normal of the
  unit sphere this gives ``A = +I`` and ``alpha(X, X) = -|X|^2 x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import (
    ContainmentViolated,
    DerivativeUnavailable,
    DomainExceeded,
    NormalOutsideBundle,
    RankDeficient,
)
from .expr import VectorExpression
from .numerics import centered_derivative

RANK_TOL = 1e-8
GRADIENT_TOL = 1e-8
CONTAINMENT_TOL = 1e-8
FD_STEP = 1e-5
FD_STEP_SECOND = 1e-4


# ---------------------------------------------------------------------------
# ambient spaces


@dataclass(frozen=True)
class AmbientSpace:
    """Flat ``R^N`` or a level set ``{F = 0}`` of ``R^N``.

    For a level set, ``grad`` and ``hess`` are vectorised callables returning
    ``(..., N)`` and ``(..., N, N)`` arrays.
    """

    kind: str
    dim: int
    F: Optional[Callable] = None
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    containment_tol: float = CONTAINMENT_TOL
    label: str = ""

    @property
    def is_levelset(self):
        return self.kind == "levelset"

    @property
    def intrinsic_dim(self):
        return self.dim - 1 if self.is_levelset else self.dim

    def unit_normal(self, X):
        """Unit normal of ``Q`` at points ``X`` (zeros for a flat ambient)."""
        X = np.asarray(X, dtype=float)
        if not self.is_levelset:
            return np.zeros_like(X)
        gvec = self.grad(X)
        return gvec / np.linalg.norm(gvec, axis=-1, keepdims=True)

    def normal_velocity(self, X, V):
        """Derivative of the unit normal along ambient velocity ``V``."""
        X = np.asarray(X, dtype=float)
        if not self.is_levelset:
            return np.zeros_like(X)
        gvec = self.grad(X)
        gn = np.linalg.norm(gvec, axis=-1, keepdims=True)
        nu = gvec / gn
        hv = np.einsum("...ij,...j->...i", self.hess(X), V) / gn
        return hv - nu * np.sum(nu * hv, axis=-1, keepdims=True)

    def tangent_projection(self, X, V):
        """Project ambient vectors ``V`` onto ``T_X Q``."""
        V = np.asarray(V, dtype=float)
        if not self.is_levelset:
            return V
        nu = self.unit_normal(X)
        return V - nu * np.sum(nu * V, axis=-1, keepdims=True)

    def check_point(self, x):
        if not self.is_levelset:
            return
        value = float(self.F(np.asarray(x, dtype=float)))
        if abs(value) >= self.containment_tol:
            raise ContainmentViolated(f"|F(p)| = {abs(value):.3e} exceeds {self.containment_tol:g}")
        if np.linalg.norm(self.grad(np.asarray(x, dtype=float))) <= GRADIENT_TOL:
            raise ContainmentViolated("level-set gradient vanishes at the point")


def euclidean(dim):
    return AmbientSpace("euclidean", int(dim), label=f"R{dim}")


def sphere_ambient(dim, radius=1.0):
    """The round sphere ``|x| = radius`` in ``R^dim`` as a level set."""
    r2 = float(radius) ** 2

    def F(X):
        return 0.5 * (np.sum(np.asarray(X) ** 2, axis=-1) - r2)

    def grad(X):
        return np.asarray(X, dtype=float)

    def hess(X):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(np.eye(X.shape[-1]), X.shape + (X.shape[-1],)).copy()

    return AmbientSpace("levelset", int(dim), F, grad, hess, label=f"S{dim - 1}")


def levelset_from_expression(expression, variables):
    """Level-set ambient from a scalar expression ``F(x1, ..., xN)``."""
    vec = VectorExpression([expression], variables)

    def F(X):
        return vec.value(X)[..., 0]

    def grad(X):
        return vec.jacobian(X)[..., 0, :]

    def hess(X):
        return vec.hessian(X)[..., 0, :, :]

    return AmbientSpace("levelset", len(variables), F, grad, hess, label="levelset")


# ---------------------------------------------------------------------------
# immersions


@dataclass(frozen=True)
class ParametricImmersion:
    """A chart-domain map ``f: box in R^m -> R^N`` with partial derivatives.

    ``f``, ``df`` and ``d2f`` accept arrays of shape ``(..., m)`` and return
    ``(..., N)``, ``(..., N, m)`` and ``(..., N, m, m)``.  In finite-difference
    mode only ``f`` is used.
    """

    name: str
    dim: int
    ambient: AmbientSpace
    f: Callable
    df: Optional[Callable]
    d2f: Optional[Callable]
    domain: tuple
    d3f: Optional[Callable] = None
    derivative_mode: str = "analytic"
    fd_step: float = FD_STEP
    chart_inverse: Optional[Callable] = field(default=None, compare=False)
    jet: Optional[Callable] = field(default=None, compare=False)
    orientation: float = 1.0

    @property
    def ambient_dim(self):
        return self.ambient.dim

    @property
    def codim(self):
        """Codimension of M inside Q."""
        return self.ambient.intrinsic_dim - self.dim

    @property
    def lower(self):
        return np.asarray(self.domain[0], dtype=float)

    @property
    def upper(self):
        return np.asarray(self.domain[1], dtype=float)

    def in_domain(self, U):
        U = np.asarray(U, dtype=float)
        return np.all((U >= self.lower) & (U <= self.upper), axis=-1)

    def check_domain(self, u):
        if not bool(self.in_domain(u)):
            raise DomainExceeded(f"chart point {np.asarray(u).tolist()} outside the domain box")

    def position(self, U):
        return np.asarray(self.f(np.asarray(U, dtype=float)), dtype=float)

    def derivatives(self, U):
        """Return ``(x, E, D2)`` at chart points ``U``."""
        U = np.asarray(U, dtype=float)
        if self.derivative_mode == "analytic":
            if self.jet is not None:
                x, E, D2 = self.jet(U)
                return np.asarray(x, dtype=float), np.asarray(E, dtype=float), np.asarray(D2, dtype=float)
            return self.position(U), np.asarray(self.df(U), dtype=float), np.asarray(self.d2f(U), dtype=float)
        return self.position(U), _fd_first(self.f, U, self.fd_step), _fd_second(self.f, U, FD_STEP_SECOND)

    def with_finite_differences(self, step=FD_STEP):
        return ParametricImmersion(
            self.name + "[fd]", self.dim, self.ambient, self.f, None, None, self.domain,
            derivative_mode="finite-difference", fd_step=step, chart_inverse=self.chart_inverse,
            orientation=self.orientation,
        )

    def scaled(self, factor):
        """The homothetic image ``factor * f`` (flat ambient only)."""
        if self.ambient.is_levelset:
            raise ValueError("scaling is only defined for flat ambients")
        lam = float(factor)
        inverse = None
        if self.chart_inverse is not None:
            base_inverse = self.chart_inverse

            def inverse(X):
                return base_inverse(np.asarray(X) / lam)

        base = self

        def jet(U):
            x, E, D2 = base.derivatives(U)
            return lam * x, lam * E, lam * D2

        return ParametricImmersion(
            f"{self.name}*{lam:g}", self.dim, self.ambient,
            lambda U: lam * base.position(U),
            lambda U: jet(U)[1],
            lambda U: jet(U)[2],
            self.domain,
            d3f=None if self.d3f is None else (lambda U: lam * base.d3f(U)),
            chart_inverse=inverse, jet=jet, orientation=self.orientation,
        )


def _fd_first(f, U, step):
    m = U.shape[-1]
    cols = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = step
        cols.append((f(U + e) - f(U - e)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def _fd_second(f, U, step):
    m = U.shape[-1]
    rows = []
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = step
        row = []
        for j in range(m):
            ej = np.zeros(m)
            ej[j] = step
            row.append((f(U + ei + ej) - f(U + ei - ej) - f(U - ei + ej) + f(U - ei - ej)) / (4.0 * step * step))
        rows.append(np.stack(row, axis=-1))
    return np.stack(rows, axis=-2)


def immersion_from_expressions(name, variables, components, domain, ambient, derivatives="symbolic"):
    """Build an immersion from component expressions in the chart variables.

    ``derivatives`` is ``"symbolic"`` (exact derivatives up to third order from
    the expression tree) or ``"finite-difference"`` (position only).
    """
    vec = VectorExpression(components, variables)
    lower = [float(a) for a, _ in domain]
    upper = [float(b) for _, b in domain]
    if len(components) != ambient.dim:
        raise ValueError(f"{len(components)} components for an ambient of dimension {ambient.dim}")
    if derivatives == "finite-difference":
        return ParametricImmersion(name, len(variables), ambient, vec.value, None, None, (lower, upper),
                                   derivative_mode="finite-difference")
    third = [[[[d.diff(v) for v in variables] for d in r] for r in row] for row in vec.second]

    def d3f(U):
        env, shape = vec._env(U)
        out = np.empty(shape + (len(components),) + (len(variables),) * 3)
        for n, block in enumerate(third):
            for i, mat in enumerate(block):
                for j, row in enumerate(mat):
                    for k, node in enumerate(row):
                        out[..., n, i, j, k] = vec._fill(node, env, shape)
        return out

    return ParametricImmersion(name, len(variables), ambient, vec.value, vec.jacobian, vec.hessian,
                               (lower, upper), d3f=d3f)


# ---------------------------------------------------------------------------
# frames


@dataclass(frozen=True)
class FramePacket:
    """Geometry bundle at a single chart point.

    ``normals`` is ``N x n`` (columns orthonormal, tangent to ``Q``),
    ``alpha[s, i, j] = <d_i d_j f, normal_s>`` and ``gamma[k, i, j]`` are the
    Christoffel symbols of the induced metric.
    """

    u: np.ndarray
    x: np.ndarray
    E: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    normals: np.ndarray
    alpha: np.ndarray
    H: np.ndarray
    H_norm: float
    ambient_normal: np.ndarray
    normal_projector: np.ndarray

    @property
    def dim(self):
        return self.E.shape[1]

    def second_form(self, X, Y):
        """``alpha(X, Y)`` as an ambient vector for chart vectors X, Y."""
        comps = np.einsum("sij,i,j->s", self.alpha, X, Y)
        return self.normals @ comps

    def inner(self, X, Y):
        return float(X @ self.g @ Y)

    def orthonormal_basis(self):
        """Chart components of a g-orthonormal basis (columns)."""
        L = np.linalg.cholesky(self.g)
        return np.linalg.inv(L).T


def _frame_arrays(imm, U, normals=True):
    """Batched frame data at chart points ``U`` of shape ``(B, m)``."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    x, E, D2 = imm.derivatives(U)
    nu = imm.ambient.unit_normal(x)
    g, ginv, gamma = kernels.metric_terms(np.ascontiguousarray(E), np.ascontiguousarray(D2))
    N = imm.ambient_dim
    proj_t = np.einsum("bni,bij,bmj->bnm", E, ginv, E)
    Pn = np.eye(N) - proj_t - np.einsum("bn,bm->bnm", nu, nu)
    out = {"u": U, "x": x, "E": E, "D2": D2, "nu": nu, "g": g, "ginv": ginv, "gamma": gamma, "Pn": Pn}
    if normals:
        frame = normal_frames(imm, E, nu, Pn)
        alpha = np.einsum("bns,bnij->bsij", frame, D2)
        alpha = 0.5 * (alpha + np.swapaxes(alpha, 2, 3))
        trace = np.einsum("bij,bsij->bs", ginv, alpha)
        H = np.einsum("bns,bs->bn", frame, trace) / imm.dim
        out.update(normals=frame, alpha=alpha, H=H)
    return out


def normal_frames(imm, E, nu, Pn):
    """Orthonormal frames of ``N_pM`` inside ``T_pQ`` for a batch of points.

    Codimension one uses the oriented generalised cross product (times the
    immersion's ``orientation``) so the sign varies smoothly over the chart; higher codimension uses Gram-Schmidt of
    the canonical basis with pivoting on the largest residual.
    """
    B, N, _ = E.shape
    n = imm.codim
    if n == 0:
        return np.zeros((B, N, 0))
    if n == 1:
        nhat = kernels.oriented_normal(np.ascontiguousarray(E), np.ascontiguousarray(nu), imm.ambient.is_levelset)
        return imm.orientation * nhat[:, :, None]
    frame = np.zeros((B, N, n))
    R = Pn.copy()
    idx = np.arange(B)
    for s in range(n):
        norms = np.linalg.norm(R, axis=1)
        pick = np.argmax(norms, axis=1)
        v = R[idx, :, pick] / norms[idx, pick][:, None]
        frame[:, :, s] = v
        R = R - np.einsum("bn,bm->bnm", v, np.einsum("bn,bnm->bm", v, R))
    return frame


def frame_at(imm, u):
    """All pointwise geometry of ``imm`` at chart point ``u``."""
    u = np.asarray(u, dtype=float).reshape(imm.dim)
    imm.check_domain(u)
    x, E, _ = imm.derivatives(u)
    smin = np.linalg.svd(E, compute_uv=False)[-1]
    if smin <= RANK_TOL:
        raise RankDeficient(f"smallest singular value of df is {smin:.3e} at u={u.tolist()}")
    imm.ambient.check_point(x)
    d = _frame_arrays(imm, u[None, :])
    H = d["H"][0]
    return FramePacket(
        u=u, x=d["x"][0], E=d["E"][0], g=d["g"][0], g_inv=d["ginv"][0], gamma=d["gamma"][0],
        normals=d["normals"][0], alpha=d["alpha"][0], H=H, H_norm=float(np.linalg.norm(H)),
        ambient_normal=d["nu"][0], normal_projector=d["Pn"][0],
    )


def shape_operator_at(fp, eta):
    """Matrix of ``A_eta`` in the chart basis (tangential part of ``D eta``)."""
    eta = np.asarray(eta, dtype=float)
    resid = eta - fp.normal_projector @ eta
    if np.linalg.norm(resid) > 1e-8 * max(1.0, float(np.linalg.norm(eta))):
        raise NormalOutsideBundle(f"normal-bundle residual {np.linalg.norm(resid):.3e}")
    comps = fp.normals.T @ eta
    alpha_eta = np.einsum("sij,s->ij", fp.alpha, comps)
    return -fp.g_inv @ alpha_eta


def nabla_star_alpha(imm, u, X, Y, Z, step=1e-3):
    """``(nabla*_X alpha)(Y, Z)`` at ``u`` as an ambient normal vector.

    Y and Z are extended with constant chart components, so ``nabla_X Y`` is
    ``Gamma(X, Y)``.  The normal derivative of ``alpha(Y, Z)`` uses the
    analytic third partials when the immersion carries them, otherwise a
    five-point difference along the chart line ``u + s X``.
    """
    u = np.asarray(u, dtype=float)
    X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
    fp = frame_at(imm, u)
    P = fp.normal_projector
    if imm.d3f is not None and imm.derivative_mode == "analytic":
        D3 = np.asarray(imm.d3f(u), dtype=float)
        D2 = imm.derivatives(u)[2]
        w = np.einsum("nij,i,j->n", D2, Y, Z)
        gyz = np.einsum("kij,i,j->k", fp.gamma, Y, Z)
        dnu = imm.ambient.normal_velocity(fp.x, fp.E @ X)
        deriv = (np.einsum("nijk,i,j,k->n", D3, X, Y, Z)
                 - np.einsum("nij,i,j->n", D2, X, gyz)
                 - dnu * (fp.ambient_normal @ w))
    else:
        offsets = np.array([-2.0, -1.0, 1.0, 2.0]) * step
        pts = u[None, :] + offsets[:, None] * X[None, :]
        if not np.all(imm.in_domain(pts)):
            raise DerivativeUnavailable("finite-difference stencil leaves the chart domain")
        d = _frame_arrays(imm, pts, normals=False)
        vals = np.einsum("bnm,bmij,i,j->bn", d["Pn"], d["D2"], Y, Z)
        deriv = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * step)
    nabla_perp = P @ deriv
    gxy = np.einsum("kij,i,j->k", fp.gamma, X, Y)
    gxz = np.einsum("kij,i,j->k", fp.gamma, X, Z)
    return nabla_perp - fp.second_form(gxy, Z) - fp.second_form(Y, gxz)


def frames_along(imm, U, normals=True):
    """Batched frame arrays at a sequence of chart points (no error checks)."""
    return _frame_arrays(imm, U, normals=normals)


def normal_derivative_along(imm, traj, xi, frames=None):
    """``nabla^perp_T xi`` for a normal field sampled along a trajectory.

    ``xi`` has shape ``(n_samples, N)``; the ambient derivative is taken with
    centered differences on the trajectory grid and projected onto the normal
    space of M inside Q.
    """
    xi = np.asarray(xi, dtype=float)
    if frames is None:
        frames = frames_along(imm, traj.u, normals=False)
    dxi = centered_derivative(xi, traj.h)
    return np.einsum("bnm,bm->bn", frames["Pn"], dxi)

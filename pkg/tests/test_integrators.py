import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umbilic_lab.catalog import CATALOG, get_immersion
from umbilic_lab.development import ambient_planarity_residual, plane_fit_defect
from umbilic_lab.errors import DomainExceeded
from umbilic_lab.geometry import frame_at
from umbilic_lab.integrators import (
    GEODESIC,
    PRESCRIBED,
    PSEUDO_GEODESIC,
    PseudoGeodesicSpec,
    check_seed,
    check_span,
    curvature_profile,
    helix_chart_curve,
    integrate_batch,
    integrate_geodesic,
    integrate_planar_prescribed_kappa,
    integrate_planar_pseudo_geodesic,
    sphere_section,
    trajectory_from_ambient_curve,
    trajectory_from_chart_curve,
    trajectory_rows,
)


def _unit_seed(imm, p, direction):
    fp = frame_at(imm, p)
    x = np.asarray(direction, dtype=float)
    return x / math.sqrt(fp.inner(x, x))


def test_great_circle_on_sphere2():
    imm = get_immersion("sphere2")
    p = np.array([0.3, -0.1])
    x = _unit_seed(imm, p, [1.0, 0.4])
    tr = integrate_geodesic(imm, p, x, (-1.2, 1.2), 1e-3)
    fp = frame_at(imm, p)
    P, V = fp.x, fp.E @ x
    exact = np.cos(tr.t)[:, None] * P + np.sin(tr.t)[:, None] * V
    assert tr.status == "ok"
    assert np.abs(tr.x - exact).max() < 1e-10


def test_great_circle_on_sphere3():
    imm = get_immersion("sphere3")
    p = np.array([0.2, 0.1, -0.3])
    x = _unit_seed(imm, p, [0.3, -1.0, 0.5])
    tr = integrate_geodesic(imm, p, x, (-1.5, 1.5), 1e-3)
    fp = frame_at(imm, p)
    exact = np.cos(tr.t)[:, None] * fp.x + np.sin(tr.t)[:, None] * (fp.E @ x)
    assert np.abs(tr.x - exact).max() < 1e-10


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_sphere_pseudo_geodesic_is_small_circle(c):
    e = CATALOG["sphere2"]
    p, x, y = e.sample_seeds(np.random.default_rng(1), 1)[0]
    tr = integrate_planar_pseudo_geodesic(e.immersion, PseudoGeodesicSpec(p, x, y, c, (-1.5, 1.5), 1e-3))
    prof = curvature_profile(e.immersion, tr)
    assert np.allclose(prof.kappa, c, atol=1e-9)
    assert np.allclose(prof.tau, 1.0, atol=1e-12)
    assert np.allclose(prof.kappa_tilde, math.sqrt(1 + c * c), atol=1e-9)
    assert np.nanmax(np.abs(prof.theta - math.atan(c))) < 1e-9
    # circle of radius 1 / sqrt(1 + c^2) in a plane
    centre = tr.x.mean(axis=0)
    assert plane_fit_defect(tr.x) < 1e-10
    n = np.linalg.svd(tr.x - centre)[2][2]
    d = float(np.mean(tr.x @ n))
    assert math.sqrt(1 - d * d) == pytest.approx(1 / math.sqrt(1 + c * c), abs=1e-9)


@pytest.mark.parametrize("psi", [0.3, 0.8, 1.2])
def test_cylinder_geodesic_is_helix(psi):
    imm = get_immersion("cylinder")
    p = np.array([0.1, 0.0])
    x = np.array([math.cos(psi), math.sin(psi)])
    tr = integrate_geodesic(imm, p, x, (-2, 2), 1e-3)
    assert np.allclose(tr.u[:, 0], 0.1 + math.cos(psi) * tr.t, atol=1e-11)
    assert np.allclose(tr.u[:, 1], math.sin(psi) * tr.t, atol=1e-11)
    prof = curvature_profile(imm, tr)
    assert np.allclose(prof.kappa, 0.0, atol=1e-10)
    assert np.allclose(prof.tau, math.cos(psi) ** 2, atol=1e-12)
    assert ambient_planarity_residual(imm, tr).verdict == "non-planar"


def test_prescribed_kappa_in_plane_is_circle():
    imm = get_immersion("plane")
    tr = integrate_planar_prescribed_kappa(imm, [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], 2.0, (-1.0, 1.0), 1e-3)
    centre = np.array([0.0, 0.5, 0.0])
    assert np.abs(np.linalg.norm(tr.x - centre, axis=1) - 0.5).max() < 1e-11


def test_time_dependent_kappa_sees_signed_time():
    imm = get_immersion("plane")
    seen = []

    def kappa(t):
        seen.append(float(np.min(t)) if np.ndim(t) else float(t))
        return 1.0 + 0.0 * np.asarray(t)

    integrate_planar_prescribed_kappa(imm, [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], kappa, (-0.1, 0.1), 1e-2)
    assert min(seen) < 0 < max(seen)


def test_unit_speed_and_drift_are_tracked():
    e = CATALOG["veronese-in-S4"]
    seeds = e.sample_seeds(np.random.default_rng(2), 3)
    for tr in integrate_batch(e.immersion, PSEUDO_GEODESIC, seeds, (-1, 1), 1e-3, c=1.0):
        E = e.immersion.derivatives(tr.u)[1]
        g = np.einsum("bni,bnj->bij", E, E)
        speed = np.einsum("bi,bij,bj->b", tr.T, g, tr.T)
        assert np.abs(speed - 1).max() < 1e-13
        assert tr.max_drift < 1e-9


def test_domain_exit_truncates_and_strict_raises():
    imm = get_immersion("ellipsoid-1-1-2")
    p = np.array([0.5, 0.0])
    x = _unit_seed(imm, p, [-1.0, 0.0])  # straight at the chart's polar cut
    tr = integrate_geodesic(imm, p, x, (0, 3), 1e-3)
    assert tr.status == "domain-exceeded"
    assert tr.t[-1] < 3 and imm.in_domain(tr.u).all()
    assert tr.events[-1]["event"] == "domain-exceeded"
    with pytest.raises(DomainExceeded):
        integrate_geodesic(imm, p, x, (0, 3), 1e-3, strict=True)


def test_failing_seed_does_not_disturb_others():
    imm = get_immersion("ellipsoid-1-1-2")
    good = (np.array([1.5, 0.0]), _unit_seed(imm, [1.5, 0.0], [0.0, 1.0]), None)
    bad = (np.array([0.5, 0.0]), _unit_seed(imm, [0.5, 0.0], [-1.0, 0.0]), None)
    alone = integrate_batch(imm, GEODESIC, [good], (0, 2), 1e-3)[0]
    mixed = integrate_batch(imm, GEODESIC, [bad, good], (0, 2), 1e-3)
    assert mixed[0].status == "domain-exceeded"
    assert np.array_equal(mixed[1].x, alone.x)


def test_seed_and_span_validation():
    imm = get_immersion("sphere2")
    with pytest.raises(ValueError):
        check_seed(imm, [0.0, 0.0], [1.0, 0.0])  # metric is 4 I at the origin
    with pytest.raises(ValueError):
        check_seed(imm, [0.0, 0.0], [0.5, 0.0], [0.5, 0.1])
    check_seed(imm, [0.0, 0.0], [0.5, 0.0], [0.0, 0.5])
    for span, h in [((0.1, 1.0), 1e-3), ((0, 0), 1e-3), ((-1, 1), 0.0)]:
        with pytest.raises(ValueError):
            check_span(span, h)


def test_grid_is_shared_and_anchored_at_zero():
    imm = get_immersion("plane")
    tr = integrate_geodesic(imm, [0, 0], [1, 0], (-0.0105, 0.02), 1e-3)
    assert tr.t[tr.origin] == 0.0
    assert len(tr) == 10 + 20 + 1
    assert np.allclose(np.diff(tr.t), 1e-3)


def test_reversal_leaves_planarity_defects_unchanged():
    e = CATALOG["ellipsoid-1-1-2"]
    seeds = e.sample_seeds(np.random.default_rng(5), 1)
    tr = integrate_batch(e.immersion, PSEUDO_GEODESIC, seeds, (-1.5, 1.5), 1e-3, c=1.0)[0]
    a = ambient_planarity_residual(e.immersion, tr)
    b = ambient_planarity_residual(e.immersion, tr.reversed())
    assert a.residual_fit == pytest.approx(b.residual_fit, abs=1e-10)
    assert a.residual_ode == pytest.approx(b.residual_ode, abs=1e-10)


def test_chart_and_ambient_constructions_agree_on_sphere_section():
    imm = get_immersion("sphere2")
    t = np.arange(-500, 501) * 1e-3
    X, dX, d2X = sphere_section([0.2, 0.5, 0.8], 0.3, t)
    tr = trajectory_from_ambient_curve(imm, t, X, dX, d2X)
    assert np.abs(tr.x - X).max() < 1e-12
    prof = curvature_profile(imm, tr)
    assert np.allclose(prof.kappa_tilde, 1 / math.sqrt(1 - 0.09), atol=1e-9)


def test_helix_chart_curve_is_unit_speed_with_constant_curvature():
    t = np.linspace(-1, 1, 201)
    u, du, d2u = helix_chart_curve(0.5, 0.2, t)
    assert np.allclose(np.linalg.norm(du, axis=1), 1.0)
    tr = trajectory_from_chart_curve(get_immersion("flat3"), t, u, du, d2u)
    prof = curvature_profile(tr.imm, tr)
    assert np.allclose(prof.kappa, 0.5 / (0.25 + 0.04), atol=1e-12)


@given(st.floats(-1e300, 1e300), st.floats(1e-300, 1e-3))
def test_csv_floats_round_trip(v, w):
    imm = get_immersion("plane")
    tr = integrate_geodesic(imm, [0, 0], [1, 0], (0, 0.003), 1e-3)
    tr.t[1], tr.u[2, 0] = v, w
    header, rows = trajectory_rows(tr)
    assert header[:3] == ["t", "u1", "u2"]
    assert float(rows[1][0]) == v and float(rows[2][1]) == w

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umbilic_lab.catalog import CATALOG, get_immersion
from umbilic_lab.development import (
    ambient_development,
    ambient_planarity_residual,
    cartan_development,
    classify,
    intrinsic_planarity_residual,
    parallel_transport,
    plane_fit_defect,
)
from umbilic_lab.errors import OutOfSpan
from umbilic_lab.geometry import frame_at
from umbilic_lab.integrators import (
    GEODESIC,
    PRESCRIBED,
    PSEUDO_GEODESIC,
    helix_chart_curve,
    integrate_batch,
    trajectory_from_chart_curve,
)


def _seeds(name, n, seed=0):
    return CATALOG[name].sample_seeds(np.random.default_rng(seed), n)


def test_plane_fit_defect_basics():
    line = np.outer(np.linspace(0, 1, 10), [1.0, 2.0, 3.0])
    assert plane_fit_defect(line) < 1e-15
    t = np.linspace(0, 2 * np.pi, 50)
    circle = np.stack([np.cos(t), np.sin(t), 0.0 * t], axis=1) @ np.linalg.qr(np.random.default_rng(0).normal(
        size=(3, 3)))[0]
    assert plane_fit_defect(circle) < 1e-15
    assert plane_fit_defect(np.eye(3) - 1 / 3) < 1e-15  # three points always fit a plane
    assert plane_fit_defect(np.vstack([np.eye(3), -np.eye(3)])) == pytest.approx(1.0)
    assert plane_fit_defect(np.zeros((2, 5))) == 0.0


@given(st.floats(1e-3, 1e3))
def test_plane_fit_defect_is_scale_invariant(s):
    P = np.random.default_rng(1).normal(size=(20, 4))
    assert plane_fit_defect(s * P) == pytest.approx(plane_fit_defect(P), rel=1e-9)


def test_classify_bands():
    assert classify(1e-9) == "planar"
    assert classify(1e-5) == "indeterminate"
    assert classify(1e-2) == "non-planar"


def test_geodesic_development_is_straight_unit_speed():
    imm = get_immersion("sphere3")
    tr = integrate_batch(imm, GEODESIC, _seeds("sphere3", 1), (-1, 1), 1e-3)[0]
    dev = cartan_development(imm, tr)
    pts = dev.orthonormal()
    assert dev.speed_defect() < 1e-10
    assert np.allclose(np.linalg.norm(pts, axis=1), np.abs(tr.t), atol=1e-10)
    assert plane_fit_defect(pts) < 1e-10


def test_prescribed_curvature_development_is_circle():
    imm = get_immersion("sphere3")
    k = 1.7
    tr = integrate_batch(imm, PRESCRIBED, _seeds("sphere3", 1, 3), (-1, 1), 1e-3, kappa=k)[0]
    pts = cartan_development(imm, tr).orthonormal()
    n = np.linalg.svd(pts - pts.mean(axis=0))[2][2]
    flat = pts - np.outer(pts @ n, n)
    # circle of radius 1/k passing through the origin
    centre = np.linalg.lstsq(np.c_[2 * flat, np.ones(len(flat))], np.sum(flat ** 2, axis=1), rcond=None)[0][:3]
    assert np.allclose(np.linalg.norm(flat - centre, axis=1), 1 / k, atol=1e-9)


def test_parallel_transport_along_geodesic_carries_velocity():
    imm = get_immersion("ellipsoid-1-1-2")
    tr = integrate_batch(imm, GEODESIC, _seeds("ellipsoid-1-1-2", 1), (-1, 1), 1e-3)[0]
    i = tr.origin
    v = parallel_transport(imm, tr, tr.T[i], 0.0, 0.8)
    j = int(np.argmin(np.abs(tr.t - 0.8)))
    assert np.allclose(v, tr.T[j], atol=1e-9)
    # transport is an isometry for any vector and any end time
    w = tr.Y[i] + 0.3 * tr.T[i]
    fp0 = frame_at(imm, tr.u[i])
    for tb in (-0.6, 0.25, 0.9995):
        moved = parallel_transport(imm, tr, w, 0.0, tb)
        k = np.searchsorted(tr.t, tb)
        gb = frame_at(imm, tr.u[min(k, len(tr.t) - 1)]).g
        if abs(tr.t[min(k, len(tr.t) - 1)] - tb) < 1e-12:
            assert moved @ gb @ moved == pytest.approx(w @ fp0.g @ w, rel=1e-9)
    with pytest.raises(OutOfSpan):
        parallel_transport(imm, tr, w, 0.0, 1.5)


def test_intrinsic_residual_separates_planar_and_helical_curves():
    imm = get_immersion("flat3")
    t = np.arange(-1000, 1001) * 1e-3
    u, du, d2u = helix_chart_curve(0.5, 0.3, t)
    helix = trajectory_from_chart_curve(imm, t, u, du, d2u)
    r = intrinsic_planarity_residual(imm, helix)
    assert r.verdict == "non-planar" and r.ode_verdict == r.fit_verdict
    tr = integrate_batch(imm, PRESCRIBED, _seeds("flat3", 1), (-1, 1), 1e-3, kappa=2.0)[0]
    r = intrinsic_planarity_residual(imm, tr)
    assert r.verdict == "planar" and max(r.residual_ode, r.residual_fit) < 1e-9


def test_ambient_residual_on_levelset_uses_development():
    # great circles of S3 inside S3: planar in Q, although the positions span a plane through the centre
    e = CATALOG["clifford-in-S3"]
    tr = integrate_batch(e.immersion, GEODESIC, _seeds("clifford-in-S3", 1), (-1, 1), 1e-3)[0]
    pts, _ = ambient_development(e.immersion, tr)
    assert pts.shape[1] == 3
    r = ambient_planarity_residual(e.immersion, tr)
    assert r.ode_verdict == r.fit_verdict


def test_veronese_geodesics_are_planar_circles_in_s4():
    e = CATALOG["veronese-in-S4"]
    for tr in integrate_batch(e.immersion, GEODESIC, _seeds("veronese-in-S4", 2), (-1.5, 1.5), 1e-3):
        r = ambient_planarity_residual(e.immersion, tr)
        assert r.verdict == "planar"

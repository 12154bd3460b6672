import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from umbilic_lab import kernels
from umbilic_lab._backend import BACKEND_ENV, requested_backend
from umbilic_lab.catalog import CATALOG
from umbilic_lab.integrators import PSEUDO_GEODESIC, integrate_batch

NB = kernels.get_kernels("numba")
NP = kernels.get_kernels("numpy")


def _state(name, batch, seed=0):
    rng = np.random.default_rng(seed)
    e = CATALOG[name]
    imm = e.immersion
    U = np.array(e.sample_points(rng, batch))
    x, E, D2 = imm.derivatives(U)
    nu = imm.ambient.unit_normal(x)
    T = rng.normal(size=(batch, imm.dim))
    Y = rng.normal(size=(batch, imm.dim))
    return imm, U, np.ascontiguousarray(E), np.ascontiguousarray(D2), np.ascontiguousarray(nu), T, Y


_RHS_NAMES = ["sphere2", "sphere3", "ellipsoid-1-1-2", "clifford-in-S3", "veronese-in-S4", "veronese-in-R5", "flat3"]
_RHS_CASES = [(n, mode) for n in _RHS_NAMES
              for mode in (kernels.MODE_PRESCRIBED, kernels.MODE_SIGNED, kernels.MODE_NORM)
              if mode != kernels.MODE_SIGNED or CATALOG[n].immersion.codim == 1]


@pytest.mark.parametrize("name,mode", _RHS_CASES)
def test_curve_rhs_parity(name, mode):
    imm, _, E, D2, nu, T, Y = _state(name, 9)
    coef = np.linspace(-2, 2, 9)
    lev = imm.ambient.is_levelset
    a = NB.curve_rhs(E, D2, nu, T, Y, coef, mode, lev)
    b = NP.curve_rhs(E, D2, nu, T, Y, coef, mode, lev)
    for x, y in zip(a, b):
        assert np.allclose(x, y, atol=1e-12, rtol=1e-12)


@pytest.mark.parametrize("name", ["sphere3", "torus-2-1", "veronese-in-S4"])
def test_metric_terms_parity(name):
    _, _, E, D2, *_ = _state(name, 7)
    for x, y in zip(NB.metric_terms(E, D2), NP.metric_terms(E, D2)):
        assert np.allclose(x, y, atol=1e-12, rtol=1e-12)


@pytest.mark.parametrize("name", ["sphere2", "ellipsoid-1-1-2", "clifford-in-S3"])
def test_oriented_normal_parity(name):
    imm, _, E, _, nu, *_ = _state(name, 7)
    a = NB.oriented_normal(E, nu, imm.ambient.is_levelset)
    b = NP.oriented_normal(E, nu, imm.ambient.is_levelset)
    assert np.allclose(a, b, atol=1e-14)


def test_chain_transport_parity():
    rng = np.random.default_rng(3)
    phi = np.eye(3) + 0.01 * rng.normal(size=(50, 3, 3))
    v0 = rng.normal(size=(3, 2))
    assert np.allclose(NB.chain_transport(phi, v0), NP.chain_transport(phi, v0), atol=1e-13)


@pytest.mark.parametrize("name", ["sphere3", "veronese-in-S4"])
def test_renormalize_parity(name):
    _, _, E, _, _, T, Y = _state(name, 8, seed=5)
    for x, y in zip(NB.renormalize(E, T, Y), NP.renormalize(E, T, Y)):
        assert np.allclose(x, y, atol=1e-13)


@given(arrays(np.float64, (4, 3), elements=st.floats(-3, 3)), arrays(np.float64, (4, 3), elements=st.floats(-3, 3)))
def test_renormalize_returns_g_orthonormal_pair(T, Y):
    _, _, E, *_ = _state("sphere3", 4)
    for ns in (NB, NP):
        g = np.einsum("bni,bnj->bij", E, E)
        gram_T = np.einsum("bi,bij,bj->b", T, g, T)
        if np.any(gram_T < 1e-3):
            return
        Yp = Y - (np.einsum("bi,bij,bj->b", Y, g, T) / gram_T)[:, None] * T
        if np.any(np.einsum("bi,bij,bj->b", Yp, g, Yp) < 1e-3):
            return
        To, Yo, drift = ns.renormalize(E, T, Y)
        assert np.allclose(np.einsum("bi,bij,bj->b", To, g, To), 1.0, atol=1e-12)
        assert np.allclose(np.einsum("bi,bij,bj->b", Yo, g, Yo), 1.0, atol=1e-12)
        assert np.allclose(np.einsum("bi,bij,bj->b", To, g, Yo), 0.0, atol=1e-12)
        assert drift.shape == (4,)


@pytest.mark.parametrize("name", ["cylinder", "ellipsoid-1-1-2", "torus-2-1", "clifford-in-S3", "sphere2", "sphere3",
                                  "veronese-in-S4"])
def test_catalog_jet_parity(name):
    imm = CATALOG[name].immersion
    U = np.array(CATALOG[name].sample_points(np.random.default_rng(9), 11))
    fast = imm.derivatives(U)
    with kernels.use_backend("numpy"):
        slow = imm.derivatives(U)
    for a, b in zip(fast, slow):
        assert np.allclose(a, b, atol=1e-14, rtol=1e-13)


def test_integration_parity_between_backends():
    e = CATALOG["veronese-in-S4"]
    seeds = e.sample_seeds(np.random.default_rng(0), 3)
    a = integrate_batch(e.immersion, PSEUDO_GEODESIC, seeds, (-0.5, 0.5), 1e-3, c=1.0)
    with kernels.use_backend("numpy"):
        b = integrate_batch(e.immersion, PSEUDO_GEODESIC, seeds, (-0.5, 0.5), 1e-3, c=1.0)
    for x, y in zip(a, b):
        assert np.allclose(x.x, y.x, atol=1e-11)
        assert np.allclose(x.T, y.T, atol=1e-11)


def test_backend_env_var(monkeypatch):
    monkeypatch.setenv(BACKEND_ENV, "numpy")
    assert requested_backend() == "numpy"
    monkeypatch.setenv(BACKEND_ENV, "auto")
    assert requested_backend() in ("numba", "numpy")
    monkeypatch.setenv(BACKEND_ENV, "fortran")
    with pytest.raises(ValueError):
        requested_backend()

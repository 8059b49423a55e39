import numpy as np
import pytest

from lieint import algebra as A
from lieint import biquot as Q
from lieint.errors import NotSubalgebra


@pytest.fixture(scope="module", params=sorted(Q.PRESETS))
def spec(request):
    return Q.preset(request.param)


def test_presets_dims():
    assert Q.preset("su3-circles").dimQ == 6
    assert Q.preset("so5-so2-so3").dimQ == 6
    assert Q.preset("so4-blocks").dimQ == 4


def test_build_validation():
    alg = A.build_classical("so", 3)
    full = A.SubalgebraEmbedding(np.eye(3) / np.sqrt(2), "all")
    with pytest.raises(ValueError):
        Q.build(alg, full, A.trivial_subalgebra(alg))
    bad = A.SubalgebraEmbedding(np.eye(3)[:, :2] / np.sqrt(2), "bad")
    with pytest.raises(NotSubalgebra):
        Q.build(alg, bad, A.trivial_subalgebra(alg))
    with pytest.raises(ValueError):
        Q.subgroup_from_preset(alg, "nonsense")


def test_freeness_presets(spec):
    v = Q.freeness_infinitesimal(spec, samples=20)
    assert v.ok and v.max_intersection_dim == 0
    assert v.samples == 21
    assert "group-level" in v.as_dict()["caveat"]


def test_freeness_fails_when_k_equals_h():
    alg = A.build_classical("so", 4)
    blk = A.block_subalgebra(alg, [0, 1])
    v = Q.freeness_infinitesimal(Q.build(alg, blk, blk), samples=5)
    assert not v.ok and v.max_intersection_dim == 1
    np.testing.assert_array_equal(v.first_violation, np.eye(4))


def test_sample_C(spec):
    for seed in range(5):
        s = Q.sample_C(spec, seed)
        assert max(s.residual_k, s.residual_h) < 1e-12
        assert A.unitarity_residual(s.g) < 1e-12
        assert np.linalg.norm(s.xi) > 0


def test_sample_C_reproducible():
    spec = Q.preset("su3-circles")
    np.testing.assert_array_equal(Q.sample_C(spec, 4).xi, Q.sample_C(spec, 4).xi)


def test_generic_sample_is_regular():
    spec = Q.preset("su3-circles")
    s = Q.sample_C(spec, 0)
    assert A.centralizer_dim(spec.alg, s.xi) == spec.alg.rank


def test_tangent_C_trivial_subgroups():
    # with k = 0 the fibre condition is empty: T_xi C = Ad_g h^perp + [xi, g]
    alg = A.build_classical("su", 3)
    triv = A.trivial_subalgebra(alg)
    h = A.maximal_torus(alg)
    spec = Q.build(alg, triv, h)
    s = Q.sample_C(spec, 1)
    assert Q.tangent_C(spec, s.xi, s.g).dim == alg.dim
    # with h = 0, C = k^perp, so T_xi C = k^perp
    spec = Q.build(alg, h, triv)
    s = Q.sample_C(spec, 1)
    assert Q.tangent_C(spec, s.xi, s.g).dim == alg.dim - 2


def test_routes_agree(spec):
    s = Q.sample_C(spec, 3)
    entry = Q.ddim_F1(spec, s.xi, s.g)
    assert entry.agree
    m = Q.sample_C(spec.mirrored(), 3)
    assert Q.ddim_F2(spec, m.xi, m.g).agree


@pytest.mark.parametrize("name,f1,f2", [("su3-circles", 6, 6), ("so5-so2-so3", 8, 4), ("so4-blocks", 4, 4)])
def test_identity(name, f1, f2):
    v = Q.identity_check(Q.preset(name), samples=20, seed=0)
    assert (v.ddim_F1, v.ddim_F2) == (f1, f2)
    assert v.total == v.expected and v.ok
    assert v.report_F1.agreement >= 0.9 and v.report_F2.agreement >= 0.9
    d = v.as_dict()
    assert d["sum"] == 2 * Q.preset(name).dimQ and d["verdict"]


def test_identity_trivial_k():
    alg = A.build_classical("so", 4)
    spec = Q.build(alg, A.trivial_subalgebra(alg), A.block_subalgebra(alg, [1, 2, 3]))
    v = Q.identity_check(spec, samples=10)
    assert v.total == 2 * spec.dimQ == 6 and v.ok


def test_horizontal_geodesic(spec):
    g0 = A.random_group_element(spec.alg, np.random.default_rng(0))
    rec = Q.horizontal_geodesic(spec, g0, 1, T=2.0, steps=40)
    tracked = np.asarray(rec.tracked)
    assert tracked[:, :2].max() < 1e-10
    # eta commutes with exp(t eta), so both trivialized velocities are constant
    assert rec.extra["right_deviation"] < 1e-10
    assert rec.extra["left_deviation"] < 1e-10
    assert spec.alg.norm(rec.extra["eta"]) == pytest.approx(1.0)
    np.testing.assert_allclose(rec.states[0], A.group_Ad(spec.alg, g0, rec.extra["eta"]), atol=1e-14)
    assert rec.max_drift < 1e-10


def test_horizontal_space_dimension(spec):
    g0 = A.random_group_element(spec.alg, np.random.default_rng(2))
    assert Q.horizontal_space(spec, g0).dim == spec.dimQ

import numpy as np
import pytest

from lieint import algebra as A
from lieint.errors import NotSubalgebra, NotUnitary, SamplingFailure, UnsupportedFamily

FAMILIES = [("so", 3), ("so", 4), ("so", 5), ("su", 2), ("su", 3), ("su", 4), ("u", 2), ("u", 3)]


@pytest.fixture(scope="module", params=FAMILIES, ids=lambda p: f"{p[0]}{p[1]}")
def alg(request):
    return A.build_classical(*request.param)


@pytest.mark.parametrize("fam,n,d,r", [("so", 3, 3, 1), ("so", 4, 6, 2), ("so", 5, 10, 2),
                                       ("su", 3, 8, 2), ("su", 4, 15, 3), ("u", 2, 4, 2)])
def test_dimension_and_rank(fam, n, d, r):
    alg = A.build_classical(fam, n)
    assert alg.dim == d
    assert alg.rank == r
    x = A.random_regular(alg, 7)
    assert A.centralizer_dim(alg, x) == r


def test_unknown_family():
    with pytest.raises(UnsupportedFamily):
        A.build_classical("sp", 4)
    with pytest.raises(UnsupportedFamily):
        A.build_classical("so", 1)


def test_gram_is_twice_identity(alg):
    np.testing.assert_allclose(alg.gram, 2.0 * np.eye(alg.dim), atol=1e-14)
    x = A.random_element(alg, np.random.default_rng(0))
    assert alg.inner(x, x) == pytest.approx(-np.trace(alg.to_matrix(x) @ alg.to_matrix(x)).real)


def test_coordinates_roundtrip(alg):
    x = A.random_element(alg, np.random.default_rng(1))
    np.testing.assert_allclose(alg.to_coords(alg.to_matrix(x)), x, atol=1e-13)


def test_so3_cyclic_brackets():
    alg = A.build_classical("so", 3)
    e = np.eye(3)
    np.testing.assert_allclose(A.bracket(alg, e[0], e[1]), e[2], atol=1e-15)
    np.testing.assert_allclose(A.bracket(alg, e[1], e[2]), e[0], atol=1e-15)
    np.testing.assert_allclose(A.bracket(alg, e[2], e[0]), e[1], atol=1e-15)


def test_bracket_two_routes_and_identities(alg):
    worst = dict(route=0.0, jacobi=0.0, anti=0.0, inv=0.0)
    for rng in A.seeds(3, 50):
        x, y, z = (A.random_element(alg, rng) for _ in range(3))
        b = A.bracket
        worst["route"] = max(worst["route"], np.abs(b(alg, x, y) - A.bracket_matrix_route(alg, x, y)).max())
        jac = b(alg, x, b(alg, y, z)) + b(alg, y, b(alg, z, x)) + b(alg, z, b(alg, x, y))
        worst["jacobi"] = max(worst["jacobi"], np.linalg.norm(jac))
        worst["anti"] = max(worst["anti"], np.linalg.norm(b(alg, x, y) + b(alg, y, x)))
        worst["inv"] = max(worst["inv"], abs(alg.inner(b(alg, x, y), z) + alg.inner(y, b(alg, x, z))))
    assert worst["route"] < 1e-12
    assert max(worst.values()) < 1e-11


def test_ad_is_b_antisymmetric(alg):
    x = A.random_element(alg, np.random.default_rng(4))
    ad = A.ad_matrix(alg, x)
    assert np.abs(alg.gram @ ad + ad.T @ alg.gram).max() < 1e-11
    y = A.random_element(alg, np.random.default_rng(5))
    np.testing.assert_allclose(ad @ y, A.bracket(alg, x, y), atol=1e-13)


def test_centralizer_of_zero(alg):
    assert A.centralizer_dim(alg, np.zeros(alg.dim)) == alg.dim


def test_exp_and_Ad(alg):
    rng = np.random.default_rng(6)
    x, y, z = (A.random_element(alg, rng) for _ in range(3))
    g = A.exp_defining(alg, x)
    ginv = A.exp_defining(alg, -x)
    assert np.abs(g @ ginv - np.eye(alg.n)).max() < 1e-11
    assert A.unitarity_residual(g) < 1e-12
    np.testing.assert_allclose(A.group_Ad(alg, np.eye(alg.n), y), y, atol=1e-15)
    gy, gz = A.group_Ad(alg, g, y), A.group_Ad(alg, g, z)
    assert abs(alg.inner(gy, gz) - alg.inner(y, z)) < 1e-10
    np.testing.assert_allclose(A.Ad_matrix(alg, g) @ y, gy, atol=1e-12)


def test_Ad_taylor(alg):
    rng = np.random.default_rng(8)
    x, y = A.random_element(alg, rng), A.random_element(alg, rng)
    t = 1e-5
    plus = A.group_Ad(alg, A.exp_defining(alg, t * y), x)
    minus = A.group_Ad(alg, A.exp_defining(alg, -t * y), x)
    assert np.abs((plus - x) / t - A.bracket(alg, y, x)).max() < 1e-3    # O(t)
    assert np.abs((plus - minus) / (2 * t) - A.bracket(alg, y, x)).max() < 1e-8


def test_Ad_rejects_non_unitary():
    alg = A.build_classical("so", 3)
    with pytest.raises(NotUnitary):
        A.group_Ad(alg, 2.0 * np.eye(3), np.ones(3))


def test_regular_sampler_and_stability():
    for fam, n in [("so", 4), ("su", 3)]:
        alg = A.build_classical(fam, n)
        for seed in range(5):
            x = A.random_regular(alg, seed)
            assert A.centralizer_dim(alg, x) == 2
            d = A.random_element(alg, np.random.default_rng(seed + 100))
            assert A.centralizer_dim(alg, x + 1e-8 * d) == 2
        # reproducible
        np.testing.assert_array_equal(A.random_regular(alg, 3), A.random_regular(alg, 3))


def test_regular_sampler_fails_on_bad_tolerance():
    alg = A.build_classical("su", 3)
    with pytest.raises(SamplingFailure):
        A.random_regular(alg, 0, tol=0.99, max_tries=3)


def test_seed_splitting_is_fixed():
    a = [r.standard_normal() for r in A.seeds(11, 4)]
    b = [r.standard_normal() for r in A.seeds(11, 4)]
    assert a == b
    assert len(set(a)) == 4


def test_orthocomplement_and_reductivity():
    alg = A.build_classical("su", 3)
    h = A.real_so_subalgebra(alg)
    v = A.orthocomplement(alg, h)
    assert v.shape[1] == 5
    assert np.abs(v.T @ alg.gram @ v - np.eye(5)).max() < 1e-12
    assert np.abs(h.basis.T @ alg.gram @ v).max() < 1e-12
    assert A.reductivity_residual(alg, h.basis, v) < 1e-10


def test_subalgebra_closure_check():
    alg = A.build_classical("so", 3)
    with pytest.raises(NotSubalgebra):
        A.subalgebra(alg, np.eye(3)[:, :2])
    sub = A.subalgebra(alg, np.eye(3)[:, :1])
    assert sub.dim == 1


@pytest.mark.parametrize("fam,n,idx,dim", [("so", 4, [1, 2, 3], 3), ("su", 3, [0, 1], 3),
                                           ("so", 5, [0, 1], 1)])
def test_block_presets(fam, n, idx, dim):
    alg = A.build_classical(fam, n)
    h = A.block_subalgebra(alg, idx)
    assert h.dim == dim
    assert A.closure_residual(alg, h.basis) < 1e-12


def test_circle_and_torus_presets():
    alg = A.build_classical("su", 3)
    assert A.circle_subalgebra(alg, (1, 1, -2)).dim == 1
    assert A.maximal_torus(alg).dim == 2
    with pytest.raises(ValueError):
        A.circle_subalgebra(alg, (1, 1, 1))
    assert A.maximal_torus(A.build_classical("so", 5)).dim == 2
    assert A.trivial_subalgebra(alg).dim == 0

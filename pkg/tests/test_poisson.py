from dataclasses import replace

import numpy as np
import pytest

from lieint import algebra as A
from lieint import poisson as P
from lieint.errors import InconclusiveSampling
from lieint.linsub import numerical_rank


@pytest.fixture(scope="module")
def so3():
    return A.build_classical("so", 3)


def gaussian(dim):
    return lambda rng: rng.standard_normal(dim)


def test_so3_coordinate_brackets(so3):
    mu = np.array([0.3, -1.2, 0.7])
    x = [P.coordinate(i) for i in range(3)]
    # B = 2I, so {x1, x2} = <mu, [e1, e2]/4> = mu_3 / 2
    assert P.lie_poisson_bracket(so3, x[0], x[1], mu) == pytest.approx(mu[2] / 2)
    assert P.lie_poisson_bracket(so3, x[1], x[2], mu) == pytest.approx(mu[0] / 2)
    # momenta m = B mu close on the structure constants
    m = [P.ScalarFunction(lambda v, i=i: (so3.gram @ v)[i], lambda v, i=i: so3.gram[i]) for i in range(3)]
    assert P.lie_poisson_bracket(so3, m[0], m[1], mu) == pytest.approx((so3.gram @ mu)[2])


def test_tensor_matches_bracket(so3):
    poisson = P.lie_poisson_structure(so3)
    rng = np.random.default_rng(0)
    f = P.ScalarFunction(lambda v: v[0] * v[1] ** 2)
    g = P.ScalarFunction(lambda v: np.sin(v[2]) + v[0])
    mu = rng.standard_normal(3)
    assert poisson.bracket(f, g, mu) == pytest.approx(P.lie_poisson_bracket(so3, f, g, mu), rel=1e-8)


def test_casimir_and_self_bracket(so3):
    cas = P.ScalarFunction(lambda v: so3.inner(v, v), lambda v: 2 * so3.gram @ v)
    g = P.ScalarFunction(lambda v: v[0] ** 3 - v[1] * v[2])
    for rng in A.seeds(1, 10):
        mu = rng.standard_normal(3)
        assert abs(P.lie_poisson_bracket(so3, cas, g, mu)) < 1e-8
        assert abs(P.lie_poisson_bracket(so3, g, g, mu)) < 1e-12


def test_leibniz_and_jacobi():
    alg = A.build_classical("su", 3)
    poisson = P.lie_poisson_structure(alg)
    f = P.ScalarFunction(lambda v: v[0] * v[3] + v[1] ** 2)
    g = P.ScalarFunction(lambda v: v[2] - v[5] * v[7])
    h = P.ScalarFunction(lambda v: v[4] ** 2 + v[6])
    for rng in A.seeds(2, 5):
        mu = rng.standard_normal(alg.dim)
        lhs = poisson.bracket(P.product(f, g), h, mu)
        rhs = f(mu) * poisson.bracket(g, h, mu) + g(mu) * poisson.bracket(f, h, mu)
        assert abs(lhs - rhs) < 1e-8
        jac = (poisson.bracket(f, P.bracket_function(poisson, g, h), mu)
               + poisson.bracket(g, P.bracket_function(poisson, h, f), mu)
               + poisson.bracket(h, P.bracket_function(poisson, f, g), mu))
        assert abs(jac) < 1e-6


def test_gram_is_antisymmetric(so3):
    fam = P.FunctionFamily(3, [P.coordinate(i) for i in range(3)], P.lie_poisson_structure(so3))
    gram = fam.gram(np.array([1.0, 2.0, 3.0])).matrix
    np.testing.assert_array_equal(gram, -gram.T)


@pytest.mark.parametrize("fam,n,dind", [("so", 3, 1), ("su", 3, 2)])
def test_coordinate_family_ranks(fam, n, dind):
    alg = A.build_classical(fam, n)
    family = P.FunctionFamily(alg.dim, [P.coordinate(i) for i in range(alg.dim)],
                              P.lie_poisson_structure(alg))
    assert P.ddim(family, gaussian(alg.dim)) == alg.dim
    assert P.dind(family, gaussian(alg.dim)) == dind


def test_constant_family(so3):
    family = P.FunctionFamily(3, [P.constant(1.0), P.constant(-2.0)], P.lie_poisson_structure(so3))
    assert P.ddim(family, gaussian(3)) == 0


def test_completeness_canonical():
    n = 2
    can = P.canonical_structure(n)
    full = P.FunctionFamily(4, [P.coordinate(i) for i in range(4)], can)
    rep = P.completeness_check(full, 4, gaussian(4))
    assert (rep.ddim, rep.dind, rep.verdict) == (4, 0, True)
    qs = P.FunctionFamily(4, [P.coordinate(0), P.coordinate(1)], can)
    rep = P.completeness_check(qs, 4, gaussian(4))
    assert (rep.ddim, rep.dind, rep.verdict) == (2, 2, True)
    one = P.FunctionFamily(4, [P.coordinate(0)], can)
    rep = P.completeness_check(one, 4, gaussian(4))
    assert (rep.ddim, rep.dind, rep.verdict) == (1, 1, False)
    assert rep.as_dict()["ambient"] == 4


def test_inconclusive_sampling(so3):
    # rank 1 on half the sampled points only
    f = P.ScalarFunction(lambda v: max(v[0], 0.0) ** 3)
    family = P.FunctionFamily(3, [f], P.lie_poisson_structure(so3))
    with pytest.raises(InconclusiveSampling):
        P.ddim(family, gaussian(3), samples=40)


def test_gradient_check(so3):
    f = P.ScalarFunction(lambda v: v[0] * v[1], lambda v: np.array([v[1], v[0], 0.0]))
    fam = P.FunctionFamily(3, [f], P.lie_poisson_structure(so3))
    pts = [rng.standard_normal(3) for rng in A.seeds(0, 5)]
    assert fam.gradient_check(pts) < 1e-6


# bump family

@pytest.fixture(scope="module")
def chart():
    return P.so3_demo_chart()


def test_bump_profile():
    eps = 0.1
    assert P.bump_profile(0.1, eps) == 0.0 and P.bump_profile(-0.2, eps) == 0.0
    s = np.linspace(-0.099, 0.0, 50)
    vals = [P.bump_profile(x, eps) for x in s]
    assert np.all(np.diff(vals) > 0)
    x, h = 0.03, 1e-7
    fd = (P.bump_profile(x + h, eps) - P.bump_profile(x - h, eps)) / (2 * h)
    assert P.bump_profile_derivative(x, eps) == pytest.approx(fd, rel=1e-6)


def test_chart_invariants(chart):
    rng = np.random.default_rng(0)
    pts = [chart.sample_ball(rng, 0.1) for _ in range(30)]
    assert chart.bracket_residual(pts) < 1e-8
    assert chart.center_residual() < 1e-15
    assert (chart.q, chart.l, chart.n) == (1, 3, 2)


def test_bump_family(chart):
    rng = np.random.default_rng(1)
    fam = P.bump_family(chart, [chart.sample_ball(rng, 0.1) for _ in range(5)])
    assert len(fam) == chart.n
    inside = [chart.sample_ball(rng, 0.1) for _ in range(20)]
    assert fam.gradient_check(inside) < 1e-5
    for x in inside:
        assert numerical_rank(fam.gradients(x)) == chart.n
        assert np.all(fam.values(x) >= 0.0)
    cloud = [chart.center + 0.15 * rng.standard_normal(3) for _ in range(200)]
    out = [x for x in cloud if not chart.inside(x)]
    assert out
    for x in out:
        assert np.all(fam.values(x) == 0.0)
        assert np.all(fam.gradients(x) == 0.0)
    assert max(np.abs(fam.gram(x).matrix).max() for x in cloud) < 1e-8


def test_bump_family_rejects_bad_chart(chart):
    g1, g2, g3 = chart.functions
    doubled = P.ScalarFunction(lambda v: 2 * g2(v), lambda v: 2 * g2.gradient(v))
    bad = replace(chart, functions=(g1, doubled, g3))
    with pytest.raises(ValueError):
        P.bump_family(bad, [chart.center])

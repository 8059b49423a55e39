import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lieint import linsub as L
from lieint.errors import DegenerateForm, DimensionMismatch, RankIdentityError


def rand_subspace(m, k, rng):
    return L.Subspace.span(rng.standard_normal((m, k)))


def test_rank_info_margin():
    mat = np.diag([3.0, 1.0, 1e-12])
    info = L.rank_info(mat)
    assert info.rank == 2
    assert info.margin > 1e9
    assert L.numerical_rank(np.zeros((3, 3))) == 0


def test_subspace_basics():
    s = L.Subspace.coordinate(4, [0, 2])
    assert s.dim == 2 and s.ambient == 4
    assert s.orthonormality_residual() < 1e-12
    assert L.Subspace.zero(4).dim == 0
    assert L.Subspace.full(4).dim == 4


def test_sum_and_intersect_trivial_cases():
    a = L.Subspace.coordinate(4, [0, 1])
    b = L.Subspace.coordinate(4, [2, 3])
    assert L.intersect(a, b).dim == 0
    assert L.sum(a, b).dim == 4
    assert L.equal(L.sum(a, a), a)
    assert L.equal(L.intersect(a, a), a)


@pytest.mark.parametrize("seed", range(10))
def test_rank_identity_random(seed):
    rng = np.random.default_rng(seed)
    a, b = rand_subspace(6, 3, rng), rand_subspace(6, 4, rng)
    cap, cup = L.intersect(a, b), L.sum(a, b)
    assert cap.dim + cup.dim == a.dim + b.dim
    assert cap.dim == 1
    assert L.equal(L.intersect(b, a), cap)
    assert L.equal(L.sum(b, a), cup)


def test_shared_direction_found():
    rng = np.random.default_rng(3)
    common = rng.standard_normal((5, 1))
    a = L.Subspace.span(np.hstack([common, rng.standard_normal((5, 1))]))
    b = L.Subspace.span(np.hstack([common, rng.standard_normal((5, 1))]))
    cap = L.intersect(a, b)
    assert cap.dim == 1
    assert L.equal(cap, L.Subspace.span(common))


def test_ambient_mismatch():
    with pytest.raises(DimensionMismatch):
        L.sum(L.Subspace.full(3), L.Subspace.full(4))


def test_intersect_flags_inconsistent_tolerance():
    # nearly coincident planes straddling the tolerance make the two rank counts disagree
    rng = np.random.default_rng(0)
    base = rng.standard_normal((6, 3))
    a = L.Subspace.span(base)
    b = L.Subspace.span(base + 1e-6 * rng.standard_normal((6, 3)))
    try:
        cap = L.intersect(a, b, tol=1e-6)
    except RankIdentityError:
        return
    assert cap.dim + L.sum(a, b, tol=1e-6).dim == 6


def test_principal_angles():
    a = L.Subspace.coordinate(3, [0])
    b = L.Subspace.span(np.array([[1.0], [1.0], [0.0]]))
    assert L.principal_angles(a, b)[0] == pytest.approx(np.pi / 4)


def test_symplectic_form_validation():
    with pytest.raises(ValueError):
        L.SymplecticForm(np.array([[0.0, 1.0], [0.5, 0.0]]))
    form = L.SymplecticForm.from_matrix(np.array([[0.0, 1.0], [0.5, 0.0]]))
    np.testing.assert_array_equal(form.matrix, -form.matrix.T)
    with pytest.raises(DegenerateForm):
        L.symplectic_orthogonal(L.Subspace.full(2), L.SymplecticForm(np.zeros((2, 2))))


def test_symplectic_orthogonal_examples():
    form = L.SymplecticForm.standard(2)
    assert L.symplectic_orthogonal(L.Subspace.full(4), form).dim == 0
    lag = L.Subspace.coordinate(4, [0, 1])
    assert L.equal(L.symplectic_orthogonal(lag, form), lag)
    rng = np.random.default_rng(1)
    for k in range(5):
        w = rand_subspace(4, k, rng) if k else L.Subspace.zero(4)
        wo = L.symplectic_orthogonal(w, form)
        assert w.dim + wo.dim == 4
        assert L.equal(L.symplectic_orthogonal(wo, form), w)


def test_coisotropy_examples():
    form = L.SymplecticForm.standard(3)
    assert L.coisotropy_check(L.Subspace.full(6), form).ok
    assert L.coisotropy_check(L.Subspace.coordinate(6, [0, 1, 2]), form).ok
    v = L.coisotropy_check(rand_subspace(6, 2, np.random.default_rng(0)), form)
    assert not v.ok and v.detail["dim_orth"] == 4


def test_random_symplectic_preserves_form():
    rng = np.random.default_rng(2)
    j = L.SymplecticForm.standard(3).matrix
    s = L.random_symplectic(3, rng)
    assert np.abs(s.T @ j @ s - j).max() < 1e-10


# intersection equals symplectic orthogonal of the sum

def test_cap_identity_r4_examples():
    form = L.SymplecticForm.standard(2)   # coordinates (q1, q2, p1, p2)
    w1 = L.Subspace.coordinate(4, [0, 2])
    w2 = L.Subspace.coordinate(4, [1, 3])
    rep = L.lemma51_check(w1, w2, form)
    assert rep.preconditions_met and rep.verdict
    lag = L.Subspace.coordinate(4, [0, 1])
    rep = L.lemma51_check(lag, lag, form)
    assert rep.verdict and rep.intersection_residual < 1e-12


def test_cap_identity_precondition_report():
    form = L.SymplecticForm.standard(2)
    rep = L.lemma51_check(L.Subspace.coordinate(4, [0]), L.Subspace.coordinate(4, [2]), form)
    assert not rep.preconditions_met and rep.verdict is None
    rep = L.lemma51_check(L.Subspace.coordinate(4, [0, 2]), L.Subspace.coordinate(4, [0, 2]), form)
    assert not rep.preconditions_met and "residual" in rep.message


R4_CASES = [([0, 2], [1, 3]), ([0, 1], [0, 1])]


@settings(max_examples=100, deadline=None)
@given(case=st.sampled_from(R4_CASES), seed=st.integers(0, 2**32 - 1),
       scale=st.floats(0.05, 1.0))
def test_cap_identity_conjugated_r4(case, seed, scale):
    rng = np.random.default_rng(seed)
    s = L.random_symplectic(2, rng, scale)
    form = L.SymplecticForm.standard(2)
    w1 = L.Subspace.coordinate(4, case[0]).transform(s)
    w2 = L.Subspace.coordinate(4, case[1]).transform(s)
    rep = L.lemma51_check(w1, w2, form)
    assert rep.preconditions_met
    assert rep.verdict, rep


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 4), data=st.data(), seed=st.integers(0, 2**32 - 1))
def test_cap_identity_general(n, data, seed):
    # any pair meeting the preconditions has W1 = W2^omega
    rng = np.random.default_rng(seed)
    k = data.draw(st.integers(0, 2 * n))
    s = rng.standard_normal((2 * n, 2 * n))
    form = L.SymplecticForm.from_matrix(s - s.T)
    w2 = rand_subspace(2 * n, k, rng) if k else L.Subspace.zero(2 * n)
    w1 = L.symplectic_orthogonal(w2, form)
    rep = L.lemma51_check(w1, w2, form)
    assert rep.preconditions_met
    assert rep.verdict, rep

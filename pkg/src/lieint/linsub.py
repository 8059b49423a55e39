"""Subspace arithmetic and symplectic linear algebra.

Subspaces are stored by an orthonormal basis (columns). Ranks are decided by
SVD with a relative threshold: a singular value counts as zero when it is below
``tol * s_max``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateForm, DimensionMismatch, RankIdentityError

DEFAULT_RANK_TOL = 1e-9
SUBSPACE_EQ_TOL = 1e-8


@dataclass(frozen=True)
class RankInfo:
    rank: int
    singular_values: np.ndarray
    # smallest kept / largest kept and largest dropped / largest kept
    kept_min: float
    dropped_max: float

    @property
    def margin(self) -> float:
        """Ratio between the smallest counted and largest discarded singular value."""
        if self.dropped_max == 0.0:
            return np.inf
        return self.kept_min / self.dropped_max


def rank_info(mat, tol: float = DEFAULT_RANK_TOL, scale: float | None = None) -> RankInfo:
    """Numerical rank with diagnostics.

    ``scale`` replaces the largest singular value as the reference magnitude
    when given (useful when the matrix may be identically zero).
    """
    mat = np.atleast_2d(np.asarray(mat))
    if mat.size == 0:
        return RankInfo(0, np.zeros(0), 0.0, 0.0)
    s = np.linalg.svd(mat, compute_uv=False)
    ref = s[0] if scale is None else scale
    if ref <= 0.0:
        return RankInfo(0, s, 0.0, float(s[0]) if s.size else 0.0)
    keep = s > tol * ref
    r = int(keep.sum())
    kept_min = float(s[r - 1] / ref) if r else 0.0
    dropped_max = float(s[r] / ref) if r < s.size else 0.0
    return RankInfo(r, s, kept_min, dropped_max)


def numerical_rank(mat, tol: float = DEFAULT_RANK_TOL) -> int:
    return rank_info(mat, tol).rank


def null_space(mat, tol: float = DEFAULT_RANK_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the right null space, as columns."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    n = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(mat)
    ref = (s[0] if s.size else 0.0) if scale is None else scale
    if ref <= 0.0:
        return np.eye(n)
    r = int((s > tol * ref).sum())
    return vh[r:].T.copy()


def orth(mat, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[1] == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((mat.shape[0], 0))
    r = int((s > tol * s[0]).sum())
    return u[:, :r].copy()


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^m held as orthonormal columns."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise DimensionMismatch("basis must be a 2-d array of columns")
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Span of the given columns (an m x k array)."""
        return cls(orth(vectors, tol))

    @classmethod
    def zero(cls, m: int) -> "Subspace":
        return cls(np.zeros((m, 0)))

    @classmethod
    def full(cls, m: int) -> "Subspace":
        return cls(np.eye(m))

    @classmethod
    def coordinate(cls, m: int, indices) -> "Subspace":
        return cls(np.eye(m)[:, list(indices)])

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def orthonormality_residual(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.abs(self.basis.T @ self.basis - np.eye(self.dim)).max())

    def transform(self, mat, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Image under a linear map."""
        return Subspace.span(np.asarray(mat) @ self.basis, tol)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def _check_ambient(a: Subspace, b: Subspace):
    if a.ambient != b.ambient:
        raise DimensionMismatch(f"ambient dimensions differ: {a.ambient} vs {b.ambient}")


def inclusion_residual(a: Subspace, b: Subspace) -> float:
    """Sine of the largest principal angle from ``a`` into ``b`` (0 iff a <= b)."""
    _check_ambient(a, b)
    if a.dim == 0:
        return 0.0
    resid = a.basis - b.basis @ (b.basis.T @ a.basis)
    return float(np.linalg.norm(resid, 2))


def contains(b: Subspace, a: Subspace, tol: float = SUBSPACE_EQ_TOL) -> bool:
    """True when ``a`` is a subspace of ``b``."""
    return inclusion_residual(a, b) < tol


def distance(a: Subspace, b: Subspace) -> float:
    """Largest of the two one-sided inclusion residuals."""
    return max(inclusion_residual(a, b), inclusion_residual(b, a))


def equal(a: Subspace, b: Subspace, tol: float = SUBSPACE_EQ_TOL) -> bool:
    return a.dim == b.dim and distance(a, b) < tol


def principal_angles(a: Subspace, b: Subspace) -> np.ndarray:
    _check_ambient(a, b)
    if a.dim == 0 or b.dim == 0:
        return np.zeros(0)
    s = np.linalg.svd(a.basis.T @ b.basis, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def sum(a: Subspace, b: Subspace, tol: float = DEFAULT_RANK_TOL) -> Subspace:  # noqa: A001
    _check_ambient(a, b)
    return Subspace.span(np.hstack([a.basis, b.basis]), tol)


def intersect(a: Subspace, b: Subspace, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Intersection via the null space of the stacked projector complements.

    The result is cross-checked against dim(A+B) computed at the same tolerance.
    """
    _check_ambient(a, b)
    m = a.ambient
    eye = np.eye(m)
    stacked = np.vstack([eye - a.projector(), eye - b.projector()])
    s0 = np.linalg.svd(stacked, compute_uv=False)[0] if m else 0.0
    basis = null_space(stacked, tol, scale=max(s0, 1.0))
    expected = a.dim + b.dim - sum(a, b, tol).dim
    if basis.shape[1] != expected:
        raise RankIdentityError(
            f"dim(A∩B)={basis.shape[1]} but dimA+dimB-dim(A+B)={expected}; "
            "rank tolerance is inconsistent with the data"
        )
    return Subspace(basis)


def orthogonal_complement(a: Subspace) -> Subspace:
    if a.dim == 0:
        return Subspace.full(a.ambient)
    q, _ = np.linalg.qr(a.basis, mode="complete")
    return Subspace(q[:, a.dim:])


@dataclass(frozen=True, eq=False)
class SymplecticForm:
    """Antisymmetric bilinear form omega(x, y) = x^T W y."""

    matrix: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionMismatch("form matrix must be square")
        if not np.array_equal(w.T, -w):
            raise ValueError("form matrix must be exactly antisymmetric")
        object.__setattr__(self, "matrix", w)

    @classmethod
    def from_matrix(cls, mat) -> "SymplecticForm":
        """Antisymmetrize exactly, then wrap."""
        mat = np.asarray(mat, dtype=float)
        return cls(0.5 * (mat - mat.T))

    @classmethod
    def standard(cls, n: int) -> "SymplecticForm":
        """dq ^ dp on R^{2n} with coordinates (q_1..q_n, p_1..p_n)."""
        z = np.zeros((n, n))
        eye = np.eye(n)
        return cls(np.block([[z, eye], [-eye, z]]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x, y):
        return np.asarray(x).T @ self.matrix @ np.asarray(y)

    def is_nondegenerate(self, tol: float = DEFAULT_RANK_TOL) -> bool:
        return rank_info(self.matrix, tol).rank == self.dim

    def require_nondegenerate(self, tol: float = DEFAULT_RANK_TOL):
        info = rank_info(self.matrix, tol)
        if info.rank != self.dim:
            raise DegenerateForm(f"form has rank {info.rank} < {self.dim}")

    def pullback(self, mat) -> "SymplecticForm":
        """The form (x, y) -> omega(Sx, Sy)."""
        s = np.asarray(mat, dtype=float)
        return SymplecticForm.from_matrix(s.T @ self.matrix @ s)


def symplectic_orthogonal(w: Subspace, form: SymplecticForm,
                          tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """{v : omega(v, x) = 0 for all x in W}."""
    if w.ambient != form.dim:
        raise DimensionMismatch("subspace and form live in different spaces")
    form.require_nondegenerate(tol)
    if w.dim == 0:
        return Subspace.full(w.ambient)
    scale = np.linalg.norm(form.matrix, 2)
    return Subspace(null_space(w.basis.T @ form.matrix, tol, scale=scale))


def isotropy_residual(a: Subspace, b: Subspace, form: SymplecticForm) -> float:
    """max |omega(x, y)| over unit x in A, y in B."""
    if a.dim == 0 or b.dim == 0:
        return 0.0
    return float(np.linalg.norm(a.basis.T @ form.matrix @ b.basis, 2))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    residual: float
    detail: dict

    def __bool__(self):
        return bool(self.ok)


def coisotropy_check(w: Subspace, form: SymplecticForm,
                     tol: float = DEFAULT_RANK_TOL,
                     incl_tol: float = SUBSPACE_EQ_TOL) -> Verdict:
    """W^omega contained in W."""
    wo = symplectic_orthogonal(w, form, tol)
    r = inclusion_residual(wo, w)
    return Verdict(r < incl_tol, r, {"dim": w.dim, "dim_orth": wo.dim})


@dataclass(frozen=True)
class Lemma51Report:
    preconditions_met: bool
    isotropy_residual: float
    dim_sum: int
    ambient: int
    verdict: bool | None
    intersection_residual: float | None
    coisotropy_residual: float | None
    message: str = ""


def lemma51_check(w1: Subspace, w2: Subspace, form: SymplecticForm,
                  tol: float = DEFAULT_RANK_TOL,
                  incl_tol: float = SUBSPACE_EQ_TOL) -> Lemma51Report:
    """For omega(W1, W2) = 0 and dim W1 + dim W2 = m, check W1∩W2 = (W1+W2)^omega
    and coisotropy of W1+W2.

    Violated preconditions produce a report with ``verdict=None``.
    """
    m = form.dim
    iso = isotropy_residual(w1, w2, form) / max(np.linalg.norm(form.matrix, 2), 1e-300)
    dsum = w1.dim + w2.dim
    if iso > incl_tol or dsum != m:
        msg = []
        if iso > incl_tol:
            msg.append(f"omega(W1,W2) residual {iso:.3e}")
        if dsum != m:
            msg.append(f"dim W1 + dim W2 = {dsum} != {m}")
        return Lemma51Report(False, iso, dsum, m, None, None, None, "; ".join(msg))
    cap = intersect(w1, w2, tol)
    cup = sum(w1, w2, tol)
    cup_o = symplectic_orthogonal(cup, form, tol)
    eq_res = distance(cap, cup_o) if cap.dim == cup_o.dim else np.inf
    co_res = inclusion_residual(cup_o, cup)
    ok = bool(eq_res < incl_tol and co_res < incl_tol)
    return Lemma51Report(True, iso, dsum, m, ok, float(eq_res), float(co_res))


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random element of Sp(2n, R) preserving the standard form, exp(J S)."""
    from scipy.linalg import expm

    s = rng.standard_normal((2 * n, 2 * n))
    s = 0.5 * (s + s.T)
    j = SymplecticForm.standard(n).matrix
    return expm(scale * np.linalg.solve(j, s))

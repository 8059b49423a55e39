"""Compact classical Lie algebras so(n), su(n), u(n) in a fixed matrix basis.

Elements are coordinate vectors of length ``d`` in the basis ``alg.basis``.
The invariant inner product is <x, y> = -Re tr(XY) in the defining
representation; with the bases below its Gram matrix is 2*I.

Basis conventions
-----------------
so(n)
    E_ji - E_ij for pairs i < j in lexicographic order, so in so(3)
    [e1, e2] = e3, [e2, e3] = e1, [e3, e1] = e2.
su(n)
    i * (generalized Gell-Mann matrices), ordered as for su(3): for each column
    k = 2..n, the symmetric and antisymmetric off-diagonal pairs (j, k), j < k,
    followed by the k-th diagonal generator.
u(n)
    the su(n) basis followed by i * sqrt(2/n) * I.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, polar

from .errors import (DimensionMismatch, NotSubalgebra, NotUnitary,
                     SamplingFailure, UnsupportedFamily)
from .linsub import DEFAULT_RANK_TOL, numerical_rank

FAMILIES = ("so", "su", "u")
UNITARY_TOL = 1e-10


def _so_basis(n):
    mats = []
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n))
            m[j, i] = 1.0
            m[i, j] = -1.0
            mats.append(m)
    return mats


def _su_basis(n):
    mats = []
    for k in range(1, n):
        for j in range(k):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1j
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = 1.0
            a[k, j] = -1.0
            mats.extend([s, a])
        diag = np.zeros(n)
        diag[:k] = 1.0
        diag[k] = -k
        diag *= np.sqrt(2.0 / (k * (k + 1)))
        mats.append(np.diag(1j * diag))
    return mats


@dataclass(frozen=True, eq=False)
class LieAlgebraSpec:
    family: str
    n: int
    basis: np.ndarray          # (d, n, n) defining-representation matrices
    structure: np.ndarray      # c[i, j, k]: [E_i, E_j] = sum_k c[i, j, k] E_k
    gram: np.ndarray           # B[i, j] = <E_i, E_j>
    rank: int
    _gram_inv: np.ndarray = field(repr=False, default=None)
    _whiten: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.basis)

    @property
    def name(self) -> str:
        return f"{self.family}({self.n})"

    # coordinates <-> matrices

    def to_matrix(self, x) -> np.ndarray:
        x = self._vec(x)
        return np.tensordot(x, self.basis, axes=1)

    def to_coords(self, mat) -> np.ndarray:
        mat = np.asarray(mat)
        pair = -np.real(np.einsum("kab,ba->k", self.basis, mat))
        return self._gram_inv @ pair

    def _vec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates, got {x.shape[-1]}")
        return x

    # metric

    def inner(self, x, y) -> float:
        return float(self._vec(x) @ self.gram @ self._vec(y))

    def norm(self, x) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def whiten(self, x) -> np.ndarray:
        """Coordinates in a B-orthonormal frame: <x, y> = whiten(x) . whiten(y)."""
        return self._whiten @ np.asarray(x, dtype=float)

    @property
    def whitener(self) -> np.ndarray:
        return self._whiten

    def sharp(self, covector) -> np.ndarray:
        """Element of g representing a covector through B (gradient lift)."""
        return self._gram_inv @ np.asarray(covector, dtype=float)

    def b_orthonormalize(self, vectors, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
        """B-orthonormal basis (columns) of the span of the given columns."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        if v.shape[1] == 0:
            return np.zeros((self.dim, 0))
        w = self._whiten @ v
        u, s, _ = np.linalg.svd(w, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return np.zeros((self.dim, 0))
        r = int((s > tol * s[0]).sum())
        return np.linalg.solve(self._whiten, u[:, :r])


def build_classical(family: str, n: int) -> LieAlgebraSpec:
    """Construct so(n), su(n) or u(n) with exact structure constants."""
    if family not in FAMILIES:
        raise UnsupportedFamily(f"unsupported family {family!r}; expected one of {FAMILIES}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise UnsupportedFamily(f"matrix size must be an integer >= 2, got {n!r}")
    n = int(n)
    if family == "so":
        mats = _so_basis(n)
        rank = n // 2
    elif family == "su":
        mats = _su_basis(n)
        rank = n - 1
    else:
        mats = _su_basis(n) + [1j * np.sqrt(2.0 / n) * np.eye(n)]
        rank = n
    basis = np.array(mats)
    d = basis.shape[0]
    gram = -np.real(np.einsum("iab,jba->ij", basis, basis))
    gram = 0.5 * (gram + gram.T)
    gram_inv = np.linalg.inv(gram)
    comm = np.einsum("iab,jbc->ijac", basis, basis)
    comm = comm - comm.transpose(1, 0, 2, 3)
    pair = -np.real(np.einsum("kab,ijba->ijk", basis, comm))
    structure = pair @ gram_inv.T
    # the chosen bases give integer or sqrt-rational constants; clear round-off
    structure[np.abs(structure) < 1e-14] = 0.0
    structure = 0.5 * (structure - structure.transpose(1, 0, 2))
    whiten = np.linalg.cholesky(gram).T
    return LieAlgebraSpec(family, n, basis, structure, gram, rank, gram_inv, whiten)


def bracket(alg: LieAlgebraSpec, x, y) -> np.ndarray:
    return np.einsum("i,j,ijk->k", alg._vec(x), alg._vec(y), alg.structure)


def bracket_matrix_route(alg: LieAlgebraSpec, x, y) -> np.ndarray:
    """Bracket computed as a commutator in the defining representation."""
    a, b = alg.to_matrix(x), alg.to_matrix(y)
    return alg.to_coords(a @ b - b @ a)


def ad_matrix(alg: LieAlgebraSpec, x) -> np.ndarray:
    """Matrix of ad_x, so that ad_matrix(x) @ y == bracket(x, y)."""
    return np.einsum("i,ijk->kj", alg._vec(x), alg.structure)


def centralizer_dim(alg: LieAlgebraSpec, x, tol: float = DEFAULT_RANK_TOL) -> int:
    return alg.dim - numerical_rank(ad_matrix(alg, x), tol)


def centralizer_basis(alg: LieAlgebraSpec, x, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """B-orthonormal basis of {y : [x, y] = 0}."""
    ad = ad_matrix(alg, x)
    # ad_x is B-antisymmetric, so its kernel is the B-orthocomplement of its image
    w = alg.whitener
    ad_w = w @ ad @ np.linalg.inv(w)
    from .linsub import null_space
    return np.linalg.solve(w, null_space(ad_w, tol))


def exp_defining(alg: LieAlgebraSpec, x) -> np.ndarray:
    """exp in the defining representation (scaling-and-squaring Pade), re-unitarized."""
    g = expm(alg.to_matrix(x))
    return reunitarize(g)


def reunitarize(g) -> np.ndarray:
    """Nearest unitary (orthogonal) matrix via the polar decomposition."""
    u, _ = polar(np.asarray(g))
    return u


def unitarity_residual(g) -> float:
    g = np.asarray(g)
    return float(np.abs(g.conj().T @ g - np.eye(g.shape[0])).max())


def group_Ad(alg: LieAlgebraSpec, g, x, tol: float = UNITARY_TOL) -> np.ndarray:
    """Ad_g x = g X g^{-1}."""
    g = np.asarray(g)
    if g.shape != (alg.n, alg.n):
        raise DimensionMismatch(f"group element must be {alg.n}x{alg.n}")
    res = unitarity_residual(g)
    if res > tol:
        raise NotUnitary(f"group element fails unitarity by {res:.3e}")
    return alg.to_coords(g @ alg.to_matrix(x) @ g.conj().T)


def Ad_matrix(alg: LieAlgebraSpec, g) -> np.ndarray:
    """Matrix of Ad_g acting on coordinates."""
    return np.column_stack([group_Ad(alg, g, e) for e in np.eye(alg.dim)])


def seeds(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-sample generators derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def random_element(alg: LieAlgebraSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(alg.dim)


def random_group_element(alg: LieAlgebraSpec, rng: np.random.Generator) -> np.ndarray:
    return exp_defining(alg, random_element(alg, rng))


def random_regular(alg: LieAlgebraSpec, seed, tol: float = DEFAULT_RANK_TOL,
                   max_tries: int = 50) -> np.ndarray:
    """Gaussian element whose centralizer has dimension equal to the rank."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(max_tries):
        x = random_element(alg, rng)
        if centralizer_dim(alg, x, tol) == alg.rank:
            return x
    raise SamplingFailure(
        f"no regular element of {alg.name} after {max_tries} draws; check the rank tolerance"
    )


# subalgebras

@dataclass(frozen=True, eq=False)
class SubalgebraEmbedding:
    """B-orthonormal coordinate columns spanning a subalgebra."""

    basis: np.ndarray
    name: str = ""

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def closure_residual(alg: LieAlgebraSpec, cols) -> float:
    """Largest component of [col_i, col_j] off the span of the columns."""
    cols = np.asarray(cols, dtype=float)
    k = cols.shape[1]
    if k == 0:
        return 0.0
    proj = cols @ cols.T @ alg.gram
    worst = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            z = bracket(alg, cols[:, i], cols[:, j])
            worst = max(worst, alg.norm(z - proj @ z))
    return worst


def subalgebra(alg: LieAlgebraSpec, vectors, name: str = "",
               tol: float = 1e-10) -> SubalgebraEmbedding:
    """Wrap the span of coordinate columns, verifying bracket closure."""
    cols = alg.b_orthonormalize(np.asarray(vectors, dtype=float).reshape(alg.dim, -1))
    res = closure_residual(alg, cols)
    if res > tol:
        raise NotSubalgebra(f"{name or 'span'} is not closed under the bracket (residual {res:.3e})")
    return SubalgebraEmbedding(cols, name)


def subalgebra_from_matrices(alg: LieAlgebraSpec, mats, name: str = "") -> SubalgebraEmbedding:
    vecs = np.column_stack([alg.to_coords(m) for m in mats]) if len(mats) else np.zeros((alg.dim, 0))
    for m, v in zip(mats, vecs.T):
        if np.abs(alg.to_matrix(v) - m).max() > 1e-10:
            raise NotSubalgebra(f"{name}: generator is not in {alg.name}")
    return subalgebra(alg, vecs, name)


def orthocomplement(alg: LieAlgebraSpec, sub) -> np.ndarray:
    """B-orthonormal basis of the B-orthogonal complement of a subspace of g."""
    cols = sub.basis if isinstance(sub, SubalgebraEmbedding) else np.asarray(sub, dtype=float)
    cols = cols.reshape(alg.dim, -1)
    w = alg.whitener
    wc = w @ cols
    if wc.shape[1] == 0:
        comp = np.eye(alg.dim)
    else:
        q, _ = np.linalg.qr(wc, mode="complete")
        r = np.linalg.matrix_rank(wc)
        comp = q[:, r:]
    return np.linalg.solve(w, comp)


def b_projector(alg: LieAlgebraSpec, cols) -> np.ndarray:
    """B-orthogonal projector onto the span of B-orthonormal columns."""
    cols = np.asarray(cols, dtype=float).reshape(alg.dim, -1)
    return cols @ cols.T @ alg.gram


def reductivity_residual(alg: LieAlgebraSpec, h_cols, v_cols) -> float:
    """Largest component of [h_i, v_j] outside span(v)."""
    pv = b_projector(alg, v_cols)
    worst = 0.0
    for hi in np.asarray(h_cols).T:
        for vj in np.asarray(v_cols).T:
            z = bracket(alg, hi, vj)
            worst = max(worst, alg.norm(z - pv @ z))
    return worst


# presets

def block_subalgebra(alg: LieAlgebraSpec, indices, name: str | None = None) -> SubalgebraEmbedding:
    """so(k) (for so(n)) or su(k) (for su(n)/u(n)) acting on the given index block."""
    idx = sorted(int(i) for i in indices)
    if len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= alg.n:
        raise ValueError(f"bad index block {indices} for n={alg.n}")
    k = len(idx)
    small = _so_basis(k) if alg.family == "so" else _su_basis(k)
    mats = []
    for m in small:
        big = np.zeros((alg.n, alg.n), dtype=complex if alg.family != "so" else float)
        big[np.ix_(idx, idx)] = m
        mats.append(big)
    tag = name or f"{'so' if alg.family == 'so' else 'su'}({k})@{idx}"
    return subalgebra_from_matrices(alg, mats, tag)


def real_so_subalgebra(alg: LieAlgebraSpec, indices=None, name: str | None = None) -> SubalgebraEmbedding:
    """Real antisymmetric matrices on an index block, inside su(n) or u(n)."""
    idx = list(range(alg.n)) if indices is None else sorted(int(i) for i in indices)
    mats = []
    for m in _so_basis(len(idx)):
        big = np.zeros((alg.n, alg.n), dtype=complex)
        big[np.ix_(idx, idx)] = m
        mats.append(big)
    return subalgebra_from_matrices(alg, mats, name or f"so({len(idx)})@{idx}")


def circle_subalgebra(alg: LieAlgebraSpec, weights, name: str | None = None) -> SubalgebraEmbedding:
    """span{ i * diag(weights) } for integer weights (sum zero inside su(n))."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (alg.n,) or not np.any(w):
        raise ValueError(f"need {alg.n} weights, not all zero")
    if alg.family == "so":
        raise ValueError("diagonal circles are not in so(n); use a block preset")
    if alg.family == "su" and abs(w.sum()) > 0:
        raise ValueError("weights of a circle in su(n) must sum to zero")
    return subalgebra_from_matrices(alg, [np.diag(1j * w)], name or f"circle{list(map(int, w))}")


def maximal_torus(alg: LieAlgebraSpec, name: str = "torus") -> SubalgebraEmbedding:
    if alg.family == "so":
        mats = []
        for p in range(alg.n // 2):
            m = np.zeros((alg.n, alg.n))
            m[2 * p + 1, 2 * p] = 1.0
            m[2 * p, 2 * p + 1] = -1.0
            mats.append(m)
        return subalgebra_from_matrices(alg, mats, name)
    mats = []
    for k in range(alg.n - 1):
        d = np.zeros(alg.n)
        d[k], d[k + 1] = 1.0, -1.0
        mats.append(np.diag(1j * d))
    if alg.family == "u":
        mats.append(1j * np.eye(alg.n))
    return subalgebra_from_matrices(alg, mats, name)


def trivial_subalgebra(alg: LieAlgebraSpec, name: str = "0") -> SubalgebraEmbedding:
    return SubalgebraEmbedding(np.zeros((alg.dim, 0)), name)

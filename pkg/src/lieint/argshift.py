"""Invariant polynomials, argument-shift families, sectional operators, Euler flows."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import algebra as A
from .errors import DimensionMismatch, NonFiniteState, UnsupportedFamily
from .linsub import DEFAULT_RANK_TOL, rank_info
from .poisson import FunctionFamily, ScalarFunction, lie_poisson_bracket, lie_poisson_structure
from .trajectory import TrajectoryRecord

# Euler field is EULER_SIGN * [xi, grad h(xi)]; with this choice df/dt = {h, f}
EULER_SIGN = 1.0


# Pfaffians

def pfaffian(m) -> float:
    """Pfaffian of a real antisymmetric matrix (closed form up to 4x4, else expansion)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    if n == 2:
        return float(m[0, 1])
    if n == 4:
        return float(m[0, 1] * m[2, 3] - m[0, 2] * m[1, 3] + m[0, 3] * m[1, 2])
    total = 0.0
    rest = np.arange(1, n)
    for pos, j in enumerate(rest):
        if m[0, j] == 0.0:
            continue
        keep = np.delete(rest, pos)
        total += (-1) ** pos * m[0, j] * pfaffian(m[np.ix_(keep, keep)])
    return float(total)


def pfaffian_gradient(m) -> np.ndarray:
    """dPf/da_ij for i < j (upper triangle; zeros elsewhere)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    g = np.zeros_like(m)
    for i in range(n):
        for j in range(i + 1, n):
            keep = [k for k in range(n) if k not in (i, j)]
            g[i, j] = (-1) ** (i + j + 1) * pfaffian(m[np.ix_(keep, keep)])
    return g


@dataclass(frozen=True, eq=False)
class InvariantPolynomial:
    """Ad-invariant polynomial: a power trace or the Pfaffian."""

    alg: A.LieAlgebraSpec
    degree: int
    kind: str = "trace"

    @property
    def label(self) -> str:
        return "Pf" if self.kind == "pfaffian" else f"tr^{self.degree}"

    def _phase(self):
        # (-i)^k tr X^k is real for anti-Hermitian X
        return 1.0 if self.alg.is_real else (-1j) ** self.degree

    def __call__(self, x) -> float:
        mat = self.alg.to_matrix(x)
        if self.kind == "pfaffian":
            return pfaffian(mat)
        return float(np.real(self._phase() * np.trace(np.linalg.matrix_power(mat, self.degree))))

    def gradient(self, x) -> np.ndarray:
        """Coordinate gradient (covector)."""
        mat = self.alg.to_matrix(x)
        basis = self.alg.basis
        if self.kind == "pfaffian":
            g = pfaffian_gradient(mat)
            return np.einsum("ab,kab->k", g, basis)
        k = self.degree
        pw = np.linalg.matrix_power(mat, k - 1)
        return np.real(self._phase() * k * np.einsum("ab,jba->j", pw, basis))

    def as_function(self) -> ScalarFunction:
        return ScalarFunction(self.__call__, self.gradient, self.label)


def invariant_generators(alg: A.LieAlgebraSpec) -> list[InvariantPolynomial]:
    """Basic invariants: rank-many generators of the invariant ring."""
    n = alg.n
    if alg.family == "so":
        if n % 2:
            return [InvariantPolynomial(alg, k) for k in range(2, n, 2)]
        m = n // 2
        return [InvariantPolynomial(alg, k) for k in range(2, 2 * m - 1, 2)] + [
            InvariantPolynomial(alg, m, "pfaffian")]
    if alg.family == "su":
        return [InvariantPolynomial(alg, k) for k in range(2, n + 1)]
    if alg.family == "u":
        return [InvariantPolynomial(alg, k) for k in range(1, n + 1)]
    raise UnsupportedFamily(alg.family)


def invariance_residual(p: InvariantPolynomial, samples: int = 50, seed: int = 0) -> float:
    """max |p(Ad_g xi) - p(xi)| / max(1, |p(xi)|) over random (g, xi)."""
    worst = 0.0
    for rng in A.seeds(seed, samples):
        xi = A.random_element(p.alg, rng)
        g = A.random_group_element(p.alg, rng)
        v = p(xi)
        worst = max(worst, abs(p(A.group_Ad(p.alg, g, xi)) - v) / max(1.0, abs(v)))
    return worst


# argument shift

def chebyshev_nodes(count: int) -> np.ndarray:
    j = np.arange(count)
    return np.cos((2 * j + 1) * np.pi / (2 * count))


@dataclass(frozen=True, eq=False)
class ShiftExpansion:
    """Coefficients p^i_a of p(xi + lam a) = sum_i p^i_a(xi) lam^i, i = 0..deg."""

    poly: InvariantPolynomial
    a: np.ndarray
    nodes: np.ndarray = field(init=False)
    _vinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = self.poly.degree
        nodes = chebyshev_nodes(k + 1)
        vinv = np.linalg.inv(np.vander(nodes, k + 1, increasing=True))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_vinv", vinv)

    @property
    def degree(self) -> int:
        return self.poly.degree

    def coefficients(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        vals = np.array([self.poly(xi + lam * self.a) for lam in self.nodes])
        return self._vinv @ vals

    def coefficient_gradients(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        grads = np.array([self.poly.gradient(xi + lam * self.a) for lam in self.nodes])
        return self._vinv @ grads

    def function(self, i: int) -> ScalarFunction:
        return ScalarFunction(lambda x: self.coefficients(x)[i],
                              lambda x: self.coefficient_gradients(x)[i],
                              f"{self.poly.label}[{i}]")

    def reconstruction_residual(self, xi, lam) -> float:
        lhs = self.poly(np.asarray(xi) + lam * self.a)
        rhs = float(np.polyval(self.coefficients(xi)[::-1], lam))
        return abs(lhs - rhs) / max(1.0, abs(lhs))


def shift_expand(p: InvariantPolynomial, a) -> ShiftExpansion:
    a = np.asarray(a, dtype=float)
    if a.shape != (p.alg.dim,) or not np.all(np.isfinite(a)):
        raise DimensionMismatch("shift element must be a finite coordinate vector")
    return ShiftExpansion(p, a)


@dataclass(frozen=True, eq=False)
class ShiftFamily:
    """Non-constant shifted coefficients of the basic invariants for one shift a."""

    alg: A.LieAlgebraSpec
    a: np.ndarray
    expansions: tuple[ShiftExpansion, ...]

    @property
    def terms(self) -> list[tuple[int, int]]:
        """(generator index, lambda power) for every non-constant coefficient."""
        return [(g, i) for g, e in enumerate(self.expansions) for i in range(e.degree)]

    @property
    def labels(self) -> list[str]:
        return [f"{self.expansions[g].poly.label}[{i}]" for g, i in self.terms]

    def __len__(self):
        return len(self.terms)

    def values(self, xi) -> np.ndarray:
        return np.concatenate([e.coefficients(xi)[: e.degree] for e in self.expansions])

    def gradients(self, xi) -> np.ndarray:
        return np.vstack([e.coefficient_gradients(xi)[: e.degree] for e in self.expansions])

    def functions(self) -> list[ScalarFunction]:
        return [self.expansions[g].function(i) for g, i in self.terms]

    def as_family(self) -> FunctionFamily:
        return FunctionFamily(self.alg.dim, self.functions(), lie_poisson_structure(self.alg))

    def reconstruction_residual(self, samples: int = 20, seed: int = 0) -> float:
        worst = 0.0
        for rng in A.seeds(seed, samples):
            xi = A.random_element(self.alg, rng)
            lam = rng.uniform(-2.0, 2.0)
            worst = max(worst, *(e.reconstruction_residual(xi, lam) for e in self.expansions))
        return worst


def shift_family(alg: A.LieAlgebraSpec, a) -> ShiftFamily:
    a = np.asarray(a, dtype=float)
    return ShiftFamily(alg, a, tuple(shift_expand(p, a) for p in invariant_generators(alg)))


def normalized_bracket(alg, mu, gf, gg) -> float:
    """|<mu, [df, dg]>| / (|df| |dg|) from coordinate gradients."""
    df, dg = alg.sharp(gf), alg.sharp(gg)
    nf, ng = alg.norm(df), alg.norm(dg)
    if nf == 0.0 or ng == 0.0:
        return 0.0
    return abs(alg.inner(mu, A.bracket(alg, df, dg))) / (nf * ng)


def involutivity_residual(fam: ShiftFamily, samples: int = 100, seed: int = 0) -> float:
    """Largest normalized Lie-Poisson bracket over all pairs and sampled points."""
    worst = 0.0
    for rng in A.seeds(seed, samples):
        mu = A.random_element(fam.alg, rng)
        grads = fam.gradients(mu)
        for i, j in combinations(range(len(grads)), 2):
            worst = max(worst, normalized_bracket(fam.alg, mu, grads[i], grads[j]))
    return worst


def mixed_residual(alg, f: ScalarFunction, g: ScalarFunction, samples: int = 20, seed: int = 0) -> float:
    """Typical (median) normalized bracket of two functions over random points."""
    vals = []
    for rng in A.seeds(seed, samples):
        mu = A.random_element(alg, rng)
        vals.append(normalized_bracket(alg, mu, f.gradient(mu), g.gradient(mu)))
    return float(np.median(vals))


@dataclass(frozen=True)
class OrbitCompleteness:
    span_dim: int
    orbit_dim: int
    ok: bool
    margin: float


def hamiltonian_directions(fam: ShiftFamily, mu) -> np.ndarray:
    """Rows [grad p(mu), mu] for every member of the family."""
    mu = np.asarray(mu, dtype=float)
    return np.array([A.bracket(fam.alg, fam.alg.sharp(g), mu) for g in fam.gradients(mu)])


def orbit_completeness(fam: ShiftFamily, mu, tol: float = DEFAULT_RANK_TOL) -> OrbitCompleteness:
    """Span of Hamiltonian directions versus half the coadjoint orbit dimension."""
    alg = fam.alg
    orbit = alg.dim - A.centralizer_dim(alg, mu, tol)
    dirs = hamiltonian_directions(fam, mu)
    info = rank_info(dirs @ alg.whitener.T, tol)
    return OrbitCompleteness(info.rank, orbit, 2 * info.rank == orbit, info.margin)


# sectional operators

@dataclass(frozen=True, eq=False)
class SectionalOperator:
    alg: A.LieAlgebraSpec
    a: np.ndarray
    b: np.ndarray
    D: np.ndarray
    centralizer: np.ndarray      # B-orthonormal basis of g_a
    image: np.ndarray            # B-orthonormal basis of [a, g]
    matrix: np.ndarray           # d x d operator in coordinates

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def symmetry_residual(self) -> float:
        bm = self.alg.gram @ self.matrix
        return float(np.abs(bm - bm.T).max())

    def intertwining_residual(self) -> float:
        """max over [a,g] basis of |ad_a phi(x) - ad_b x|."""
        ada = A.ad_matrix(self.alg, self.a)
        adb = A.ad_matrix(self.alg, self.b)
        if self.image.shape[1] == 0:
            return 0.0
        return float(np.abs(ada @ self.matrix @ self.image - adb @ self.image).max())

    def restriction_residual(self) -> float:
        """|phi restricted to g_a minus D| in the cached basis."""
        c = self.centralizer
        block = c.T @ self.alg.gram @ self.matrix @ c
        leak = self.matrix @ c - c @ block
        return float(max(np.abs(block - self.D).max(), np.abs(leak).max()))

    def eigenvalues(self) -> np.ndarray:
        w = self.alg.whitener
        sym = w @ self.matrix @ np.linalg.inv(w)
        return np.linalg.eigvalsh(0.5 * (sym + sym.T))

    def is_positive(self) -> bool:
        return bool(self.eigenvalues().min() > 0.0)

    def hamiltonian(self) -> ScalarFunction:
        """h(xi) = 1/2 <phi xi, xi>."""
        bm = self.alg.gram @ self.matrix
        bm = 0.5 * (bm + bm.T)
        return ScalarFunction(lambda x: 0.5 * float(x @ bm @ x), lambda x: bm @ x, "h_abD")


def sectional_operator(alg: A.LieAlgebraSpec, a, b, D=None,
                       tol: float = DEFAULT_RANK_TOL) -> SectionalOperator:
    """phi = D on g_a and ad_a^{-1} ad_b on [a, g]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.centralizer_dim(alg, a, tol) != alg.rank:
        raise ValueError("shift element a is not regular")
    comm = alg.norm(A.bracket(alg, a, b))
    if comm > 1e-10 * max(1.0, alg.norm(a) * alg.norm(b)):
        raise ValueError(f"b is not in the centralizer of a ([a,b] = {comm:.3e})")
    cent = A.centralizer_basis(alg, a, tol)
    r = cent.shape[1]
    D = np.eye(r) if D is None else np.asarray(D, dtype=float)
    if D.shape != (r, r):
        raise DimensionMismatch(f"D must be {r}x{r}")
    if np.abs(D - D.T).max() > 1e-12:
        raise ValueError("D must be symmetric")
    image = A.orthocomplement(alg, cent)
    ada = A.ad_matrix(alg, a)
    adb = A.ad_matrix(alg, b)
    restricted = ada @ image
    cols = []
    for v in image.T:
        coef, *_ = np.linalg.lstsq(restricted, adb @ v, rcond=None)
        cols.append(image @ coef)
    phi_image = np.column_stack(cols) if cols else np.zeros((alg.dim, 0))
    g = alg.gram
    mat = cent @ D @ cent.T @ g + phi_image @ image.T @ g
    return SectionalOperator(alg, a, b, D, cent, image, mat)


# Euler equations

def euler_field(alg: A.LieAlgebraSpec, h: ScalarFunction, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    return EULER_SIGN * A.bracket(alg, xi, alg.sharp(h.gradient(xi)))


def euler_flow(alg: A.LieAlgebraSpec, h: ScalarFunction, xi0, T: float, dt: float,
               tracked=None) -> TrajectoryRecord:
    """Classical RK4 integration of the Euler equations; tracked integrals recorded per step.

    ``tracked`` is anything exposing ``values(x)`` and ``labels`` (a
    FunctionFamily or ShiftFamily), or None.
    """
    if dt <= 0.0 or T < 0.0:
        raise ValueError("need dt > 0 and T >= 0")
    steps = int(round(T / dt))
    x = np.asarray(xi0, dtype=float).copy()
    states = np.empty((steps + 1, alg.dim))
    states[0] = x
    n_tr = len(tracked.labels) if tracked is not None else 0
    vals = np.empty((steps + 1, n_tr))
    if n_tr:
        vals[0] = tracked.values(x)

    def f(y):
        return euler_field(alg, h, y)

    for s in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"non-finite state at step {s}")
        states[s] = x
        if n_tr:
            vals[s] = tracked.values(x)
    times = dt * np.arange(steps + 1)
    return TrajectoryRecord(times, states, [f"xi{i}" for i in range(alg.dim)],
                            vals, list(tracked.labels) if n_tr else [])


def rigid_body(alg: A.LieAlgebraSpec, inertia=(1.0, 2.0, 3.0)) -> ScalarFunction:
    """h = 1/2 <phi xi, xi> with phi diagonal in the coordinate basis."""
    phi = np.diag(np.asarray(inertia, dtype=float))
    bm = alg.gram @ phi
    bm = 0.5 * (bm + bm.T)
    return ScalarFunction(lambda x: 0.5 * float(x @ bm @ x), lambda x: bm @ x, "energy")


def casimir_norm(alg: A.LieAlgebraSpec) -> ScalarFunction:
    return ScalarFunction(lambda x: alg.inner(x, x), lambda x: 2.0 * alg.gram @ x, "<xi,xi>")


def lie_poisson_residual(alg, fam: ShiftFamily, samples: int = 10, seed: int = 0) -> float:
    """Cross-check: the normalized bracket route vs lie_poisson_bracket."""
    funcs = fam.functions()
    worst = 0.0
    for rng in A.seeds(seed, samples):
        mu = A.random_element(alg, rng)
        grads = fam.gradients(mu)
        for i, j in combinations(range(len(funcs)), 2):
            direct = lie_poisson_bracket(alg, funcs[i], funcs[j], mu)
            via = alg.inner(mu, A.bracket(alg, alg.sharp(grads[i]), alg.sharp(grads[j])))
            worst = max(worst, abs(direct - via))
    return worst


def default_sectional(alg: A.LieAlgebraSpec, seed: int = 0) -> tuple[SectionalOperator, ShiftFamily]:
    """Reproducible sectional operator: random regular a, b = a + 0.5 (random element of g_a),
    D = diag(1, ..., rank); returned with the shift family of a."""
    rng = np.random.default_rng(seed)
    a = A.random_regular(alg, seed)
    cent = A.centralizer_basis(alg, a)
    b = a + 0.5 * cent @ rng.standard_normal(cent.shape[1])
    op = sectional_operator(alg, a, b, np.diag(np.arange(1.0, cent.shape[1] + 1)))
    return op, shift_family(alg, a)

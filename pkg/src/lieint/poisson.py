"""Poisson brackets, differential dimension/index, completeness, bump families.

Sign convention used everywhere in the package: a Hamiltonian H generates the
flow along which every observable evolves as ``df/dt = {H, f}``. On g* this is
the Euler field ``[xi, grad h(xi)]`` (see ``argshift.euler_field``); on a
symplectic chart it is the field X_H with ``omega(v, X_H) = dH(v)``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import qr

from . import algebra as alg_mod
from .errors import InconclusiveSampling
from .linsub import DEFAULT_RANK_TOL, rank_info

FD_REL_STEP = 1e-6
AGREEMENT = 0.9


def central_gradient(fun: Callable, x, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central differences with step rel_step * (1 + |x_i|)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g


@dataclass(frozen=True)
class ScalarFunction:
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""

    def __call__(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return central_gradient(self.value, x)

    def numeric(self) -> "ScalarFunction":
        """Same function with the gradient replaced by finite differences."""
        return ScalarFunction(self.value, None, self.label)


def product(f: ScalarFunction, g: ScalarFunction) -> ScalarFunction:
    return ScalarFunction(lambda x: f(x) * g(x), None, f"({f.label})*({g.label})")


def constant(c: float, label: str = "") -> ScalarFunction:
    return ScalarFunction(lambda x: c, lambda x: np.zeros_like(x), label or f"const {c}")


def coordinate(i: int, label: str = "") -> ScalarFunction:
    def grad(x):
        e = np.zeros_like(x)
        e[i] = 1.0
        return e
    return ScalarFunction(lambda x: x[i], grad, label or f"x{i}")


@dataclass(frozen=True)
class PoissonStructure:
    """Poisson tensor field: {f, g}(x) = grad f . P(x) grad g."""

    dim: int
    tensor: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def bracket(self, f: ScalarFunction, g: ScalarFunction, x) -> float:
        return float(f.gradient(x) @ self.tensor(np.asarray(x, dtype=float)) @ g.gradient(x))


def lie_poisson_structure(alg) -> PoissonStructure:
    """Lie-Poisson tensor on coordinates of g* (identified with g through B)."""
    c = alg.structure
    b = alg.gram
    binv = np.linalg.inv(b)

    def tensor(mu):
        cm = np.einsum("ijk,k->ij", c, b @ mu)
        return binv @ cm @ binv

    return PoissonStructure(alg.dim, tensor, f"lie-poisson {alg.name}")


def canonical_structure(n: int) -> PoissonStructure:
    """{q_i, p_j} = delta_ij on R^{2n}, coordinates (q, p)."""
    z = np.zeros((n, n))
    eye = np.eye(n)
    mat = np.block([[z, eye], [-eye, z]])
    return PoissonStructure(2 * n, lambda x: mat, f"canonical R^{2 * n}")


def lie_poisson_bracket(alg, f: ScalarFunction, g: ScalarFunction, mu) -> float:
    """<mu, [grad f(mu), grad g(mu)]> with gradients lifted to g by B."""
    mu = np.asarray(mu, dtype=float)
    df = alg.sharp(f.gradient(mu))
    dg = alg.sharp(g.gradient(mu))
    return alg.inner(mu, alg_mod.bracket(alg, df, dg))


def bracket_function(poisson: PoissonStructure, f: ScalarFunction, g: ScalarFunction) -> ScalarFunction:
    """{f, g} as a function (finite-difference gradient)."""
    return ScalarFunction(lambda x: poisson.bracket(f, g, x), None, f"{{{f.label},{g.label}}}")


@dataclass(frozen=True)
class FunctionFamily:
    dim: int
    functions: tuple[ScalarFunction, ...]
    poisson: PoissonStructure

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))

    def __len__(self):
        return len(self.functions)

    @property
    def labels(self) -> list[str]:
        return [f.label for f in self.functions]

    def values(self, x) -> np.ndarray:
        return np.array([f(x) for f in self.functions])

    def gradients(self, x) -> np.ndarray:
        if not self.functions:
            return np.zeros((0, self.dim))
        return np.array([f.gradient(x) for f in self.functions])

    def gram(self, x) -> "BracketGram":
        g = self.gradients(x)
        p = self.poisson.tensor(np.asarray(x, dtype=float))
        m = g @ p @ g.T
        return BracketGram(np.asarray(x, dtype=float), 0.5 * (m - m.T))

    def gradient_check(self, points, rel: float = 1e-6) -> float:
        """Largest relative mismatch between stored and finite-difference gradients."""
        worst = 0.0
        for x in points:
            for f in self.functions:
                ga = f.gradient(x)
                gn = central_gradient(f.value, x)
                scale = max(np.linalg.norm(gn), 1.0)
                worst = max(worst, float(np.linalg.norm(ga - gn) / scale))
        return worst


@dataclass(frozen=True)
class BracketGram:
    point: np.ndarray
    matrix: np.ndarray


@dataclass(frozen=True)
class PointRanks:
    rank: int
    corank: int
    grad_margin: float
    gram_margin: float


def point_ranks(family: FunctionFamily, x, tol: float = DEFAULT_RANK_TOL) -> PointRanks:
    """Gradient rank and corank of the bracket restricted to an independent subset."""
    x = np.asarray(x, dtype=float)
    grads = family.gradients(x)
    norms = np.linalg.norm(grads, axis=1) if len(grads) else np.zeros(0)
    big = norms.max() if norms.size else 0.0
    live = norms > 1e-14 * max(big, 1e-300)
    if big == 0.0 or not live.any():
        return PointRanks(0, 0, np.inf, np.inf)
    unit = grads[live] / norms[live, None]
    info = rank_info(unit, tol)
    _, _, piv = qr(unit.T, pivoting=True, mode="economic")
    chosen = unit[np.sort(piv[: info.rank])]
    ptensor = family.poisson.tensor(x)
    gram = chosen @ ptensor @ chosen.T
    gram = 0.5 * (gram - gram.T)
    pscale = np.linalg.norm(ptensor, 2)
    ginfo = rank_info(gram, tol, scale=pscale)
    return PointRanks(info.rank, info.rank - ginfo.rank, info.margin, ginfo.margin)


@dataclass(frozen=True)
class CompletenessReport:
    samples: int
    ddim: int
    dind: int
    ambient: int
    verdict: bool
    ranks: list[int] = field(default_factory=list)
    coranks: list[int] = field(default_factory=list)
    grad_margin: float = np.inf
    gram_margin: float = np.inf

    def as_dict(self) -> dict:
        return {
            "samples": self.samples, "ddim": self.ddim, "dind": self.dind,
            "ambient": self.ambient, "verdict": self.verdict,
            "ranks": list(self.ranks), "coranks": list(self.coranks),
            "grad_margin": float(self.grad_margin), "gram_margin": float(self.gram_margin),
        }


def _sample_points(sampler, samples: int, seed: int):
    return [sampler(rng) for rng in alg_mod.seeds(seed, samples)]


def _profile(family, sampler, samples, seed, tol):
    if samples < 1:
        raise ValueError("need at least one sample")
    return [point_ranks(family, x, tol) for x in _sample_points(sampler, samples, seed)]


def _generic(values, what: str, agreement: float = AGREEMENT):
    counts = Counter(values)
    value, hits = counts.most_common(1)[0]
    if hits < agreement * len(values):
        raise InconclusiveSampling(f"{what}: sampled values {dict(counts)} lack {agreement:.0%} agreement")
    return value


def _ddim_from(profile) -> int:
    ranks = [p.rank for p in profile]
    top = max(ranks)
    if ranks.count(top) < AGREEMENT * len(ranks):
        raise InconclusiveSampling(f"ddim: ranks {Counter(ranks)} lack {AGREEMENT:.0%} agreement")
    return top


def _dind_from(profile, top) -> int:
    return _generic([p.corank for p in profile if p.rank == top], "dind")


def ddim(family: FunctionFamily, sampler, samples: int = 20, seed: int = 0,
         tol: float = DEFAULT_RANK_TOL) -> int:
    """Generic number of independent differentials."""
    return _ddim_from(_profile(family, sampler, samples, seed, tol))


def dind(family: FunctionFamily, sampler, samples: int = 20, seed: int = 0,
         tol: float = DEFAULT_RANK_TOL) -> int:
    """Generic corank of the bracket restricted to the span of differentials."""
    prof = _profile(family, sampler, samples, seed, tol)
    return _dind_from(prof, _ddim_from(prof))


def completeness_check(family: FunctionFamily, dim_m: int, sampler, samples: int = 20,
                       seed: int = 0, tol: float = DEFAULT_RANK_TOL) -> CompletenessReport:
    prof = _profile(family, sampler, samples, seed, tol)
    top = _ddim_from(prof)
    corank = _dind_from(prof, top)
    return CompletenessReport(
        samples=samples, ddim=top, dind=corank, ambient=dim_m,
        verdict=(top + corank == dim_m),
        ranks=[p.rank for p in prof], coranks=[p.corank for p in prof],
        grad_margin=min(p.grad_margin for p in prof),
        gram_margin=min(p.gram_margin for p in prof),
    )


# Bump-glued commuting family on a canonical chart

def bump_profile(s, eps: float) -> float:
    """Smooth, zero for |s| >= eps, increasing on [-eps, 0], decreasing on [0, eps]."""
    t = 1.0 - (s / eps) ** 2
    return float(np.exp(-1.0 / t)) if t > 0.0 else 0.0


def bump_profile_derivative(s, eps: float) -> float:
    t = 1.0 - (s / eps) ** 2
    if t <= 0.0:
        return 0.0
    return float(np.exp(-1.0 / t) / t**2 * (-2.0 * s / eps**2))


@dataclass(frozen=True)
class BumpChart:
    """Canonical functions G_1..G_l on a ball {sum G_i^2 < radius} around ``center``.

    The first 2q functions form conjugate pairs {G_i, G_{i+q}} = 1; the rest
    are Casimir-like. All G vanish at the center.
    """

    functions: tuple[ScalarFunction, ...]
    q: int
    center: np.ndarray
    radius: float
    poisson: PoissonStructure

    @property
    def l(self) -> int:
        return len(self.functions)

    @property
    def n(self) -> int:
        return self.l - self.q

    def squared_radius(self, x) -> float:
        return float(sum(g(x) ** 2 for g in self.functions))

    def inside(self, x) -> bool:
        return self.squared_radius(x) < self.radius

    def canonical_table(self) -> np.ndarray:
        t = np.zeros((self.l, self.l))
        for i in range(self.q):
            t[i, i + self.q] = 1.0
            t[i + self.q, i] = -1.0
        return t

    def bracket_residual(self, points) -> float:
        """Largest deviation of {G_i, G_j} from the canonical table over the points."""
        fam = FunctionFamily(self.poisson.dim, self.functions, self.poisson)
        table = self.canonical_table()
        worst = 0.0
        for x in points:
            worst = max(worst, float(np.abs(fam.gram(x).matrix - table).max()))
        return worst

    def center_residual(self) -> float:
        return max(abs(g(self.center)) for g in self.functions)

    def sample_ball(self, rng: np.random.Generator, spread: float) -> np.ndarray:
        """Rejection sample a point of the ball from a Gaussian cloud around the center."""
        for _ in range(10000):
            x = self.center + spread * rng.standard_normal(self.center.size)
            if self.inside(x):
                return x
        raise RuntimeError("ball sampling failed; shrink the spread")


def bump_family(chart: BumpChart, check_points=None, tol: float = 1e-8) -> FunctionFamily:
    """F_i = g(h_1+...+h_n) * h_i from the involutive squares h_i of the chart."""
    if check_points is not None:
        res = chart.bracket_residual(check_points)
        if res > tol:
            raise ValueError(f"chart bracket residual {res:.3e} exceeds {tol:.1e}")
    q, l, eps = chart.q, chart.l, chart.radius
    G = chart.functions
    groups = [(i, i + q) for i in range(q)] + [(j,) for j in range(2 * q, l)]

    def make(idx, label):
        def value(x):
            vals = np.array([g(x) for g in G])
            s = float(vals @ vals)
            if s >= eps:
                return 0.0
            return bump_profile(s, eps) * float(sum(vals[k] ** 2 for k in idx))

        def grad(x):
            vals = np.array([g(x) for g in G])
            s = float(vals @ vals)
            if s >= eps:
                return np.zeros_like(x)
            grads = np.array([g.gradient(x) for g in G])
            hi = float(sum(vals[k] ** 2 for k in idx))
            dh = sum(2.0 * vals[k] * grads[k] for k in idx)
            ds = 2.0 * vals @ grads
            return bump_profile_derivative(s, eps) * hi * ds + bump_profile(s, eps) * dh

        return ScalarFunction(value, grad, label)

    funcs = [make(idx, "F[" + ",".join(f"G{k + 1}" for k in idx) + "]") for idx in groups]
    return FunctionFamily(chart.poisson.dim, funcs, chart.poisson)


def so3_demo_chart(center=(0.3, 1.0, 0.4), radius: float = 0.04) -> BumpChart:
    """Angle / axial / Casimir chart on so(3)* around a point off the first axis.

    With m = B mu the linear momenta ({m_a, m_b} = c_abk m_k):
    G1 = angle of (m_2, m_3) about the m_1 axis, measured from the center,
    G2 = m_1 - m_1(center), G3 = <mu, mu> - <center, center>.
    """
    alg = alg_mod.build_classical("so", 3)
    b = alg.gram
    binv = np.linalg.inv(b)
    m0 = np.asarray(center, dtype=float)
    mu0 = binv @ m0
    kappa = alg.structure[0, 1, 2]
    theta0 = np.arctan2(m0[2], m0[1])
    c0, s0 = np.cos(theta0), np.sin(theta0)
    cas0 = float(mu0 @ b @ mu0)

    def m_of(mu):
        return b @ mu

    def angle(mu):
        m = m_of(mu)
        return kappa * np.arctan2(-s0 * m[1] + c0 * m[2], c0 * m[1] + s0 * m[2])

    def angle_grad(mu):
        m = m_of(mu)
        rho2 = m[1] ** 2 + m[2] ** 2
        dm = np.array([0.0, -m[2] / rho2, m[1] / rho2])
        return kappa * (b.T @ dm)

    def axial(mu):
        return m_of(mu)[0] - m0[0]

    def axial_grad(mu):
        return b.T @ np.array([1.0, 0.0, 0.0])

    def casimir(mu):
        return float(mu @ b @ mu) - cas0

    def casimir_grad(mu):
        return 2.0 * b @ mu

    funcs = (
        ScalarFunction(angle, angle_grad, "angle"),
        ScalarFunction(axial, axial_grad, "axial"),
        ScalarFunction(casimir, casimir_grad, "casimir"),
    )
    return BumpChart(funcs, 1, mu0, radius, lie_poisson_structure(alg))

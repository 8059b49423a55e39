"""Bi-quotients K\\G/H: freeness, the set C, dimension counts and horizontal geodesics.

Subspaces of g are handled in whitened coordinates, where B-orthogonality is
Euclidean orthogonality, so linsub applies directly.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import algebra as A
from . import linsub as L
from .argshift import invariant_generators
from .errors import InconclusiveSampling, NotSubalgebra, SamplingFailure
from .trajectory import TrajectoryRecord

PERTURBATION = 1e-6
AGREEMENT = 0.9
MAX_RETRY_FACTOR = 5
ORTHO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BiquotientSpec:
    alg: A.LieAlgebraSpec
    k: A.SubalgebraEmbedding
    h: A.SubalgebraEmbedding

    @property
    def dimQ(self) -> int:
        return self.alg.dim - self.k.dim - self.h.dim

    @property
    def name(self) -> str:
        return f"{self.k.name}\\{self.alg.name}/{self.h.name}"

    def mirrored(self) -> "BiquotientSpec":
        return BiquotientSpec(self.alg, self.h, self.k)


def build(alg: A.LieAlgebraSpec, k: A.SubalgebraEmbedding, h: A.SubalgebraEmbedding) -> BiquotientSpec:
    for sub in (k, h):
        res = A.closure_residual(alg, sub.basis)
        if res > 1e-10:
            raise NotSubalgebra(f"{sub.name} not closed (residual {res:.3e})")
    spec = BiquotientSpec(alg, k, h)
    if spec.dimQ <= 0:
        raise ValueError(f"quotient dimension {spec.dimQ} is not positive")
    return spec


PRESETS = {
    "su3-circles": ("su", 3, ("weights", (1, 1, -2)), ("weights", (1, -1, 0))),
    "so5-so2-so3": ("so", 5, ("block", (0, 1)), ("block", (2, 3, 4))),
    "so4-blocks": ("so", 4, ("block", (0, 1)), ("block", (2, 3))),
}


def subgroup_from_preset(alg: A.LieAlgebraSpec, kind: str, arg=None) -> A.SubalgebraEmbedding:
    if kind == "block":
        return A.block_subalgebra(alg, arg)
    if kind == "weights":
        return A.circle_subalgebra(alg, arg)
    if kind == "torus":
        return A.maximal_torus(alg)
    if kind == "so_real":
        return A.real_so_subalgebra(alg, arg)
    if kind == "trivial":
        return A.trivial_subalgebra(alg)
    raise ValueError(f"unknown subgroup preset {kind!r}")


def preset(name: str) -> BiquotientSpec:
    fam, n, kp, hp = PRESETS[name]
    alg = A.build_classical(fam, n)
    return build(alg, subgroup_from_preset(alg, *kp), subgroup_from_preset(alg, *hp))


# subspace helpers (whitened coordinates)

def _span(alg, cols) -> L.Subspace:
    cols = np.asarray(cols, dtype=float).reshape(alg.dim, -1)
    return L.Subspace.span(alg.whitener @ cols) if cols.shape[1] else L.Subspace.zero(alg.dim)


def _from_white(alg, y) -> np.ndarray:
    return np.linalg.solve(alg.whitener, y)


def _conj(alg, g, sub: A.SubalgebraEmbedding) -> np.ndarray:
    return A.Ad_matrix(alg, g) @ sub.basis if sub.dim else sub.basis


def _image(alg, xi) -> L.Subspace:
    """[xi, g]."""
    return _span(alg, A.ad_matrix(alg, xi))


@dataclass(frozen=True)
class FreenessVerdict:
    ok: bool
    samples: int
    max_intersection_dim: int
    first_violation: np.ndarray | None
    caveat: str = "Lie-algebra level only; group-level freeness is not decided"

    def as_dict(self) -> dict:
        return {"ok": self.ok, "samples": self.samples,
                "max_intersection_dim": self.max_intersection_dim,
                "violation_found": self.first_violation is not None, "caveat": self.caveat}


def freeness_infinitesimal(spec: BiquotientSpec, samples: int = 100, seed: int = 0,
                           include_identity: bool = True) -> FreenessVerdict:
    """dim(Ad_g k intersect h) = 0 over sampled g (the identity first, if requested)."""
    alg = spec.alg
    gs = [np.eye(alg.n, dtype=alg.basis.dtype)] if include_identity else []
    gs += [A.random_group_element(alg, r) for r in A.seeds(seed, samples)]
    worst, bad = 0, None
    hs = _span(alg, spec.h.basis)
    for g in gs:
        dim = L.intersect(_span(alg, _conj(alg, g, spec.k)), hs).dim
        if dim > worst:
            worst = dim
        if dim and bad is None:
            bad = g
    return FreenessVerdict(bad is None, len(gs), worst, bad)


@dataclass(frozen=True)
class CSample:
    g: np.ndarray
    xi: np.ndarray
    residual_k: float
    residual_h: float


def _c_point(spec: BiquotientSpec, g, rng) -> CSample:
    alg = spec.alg
    cols = np.column_stack([spec.k.basis, _conj(alg, g, spec.h)])
    perp = L.orthogonal_complement(_span(alg, cols))
    if perp.dim == 0:
        raise SamplingFailure("(k + Ad_g h)^perp is zero")
    xi = _from_white(alg, perp.basis @ rng.standard_normal(perp.dim))
    return _with_residuals(spec, g, xi)


def _with_residuals(spec, g, xi) -> CSample:
    alg = spec.alg
    rk = max((abs(alg.inner(xi, c)) for c in spec.k.basis.T), default=0.0)
    rh = max((abs(alg.inner(xi, c)) for c in _conj(alg, g, spec.h).T), default=0.0)
    return CSample(g, xi, float(rk), float(rh))


def sample_C(spec: BiquotientSpec, seed) -> CSample:
    """Random g, then xi Gaussian in (k + Ad_g h)^perp."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = A.random_group_element(spec.alg, rng)
    return _c_point(spec, g, rng)


def tangent_C(spec: BiquotientSpec, xi, g=None) -> L.Subspace:
    """T_xi C = (Ad_g h^perp + [xi, g]) intersect k^perp, g the element that produced xi."""
    alg = spec.alg
    g = np.eye(alg.n, dtype=alg.basis.dtype) if g is None else g
    hperp = L.orthogonal_complement(_span(alg, _conj(alg, g, spec.h)))
    kperp = L.orthogonal_complement(_span(alg, spec.k.basis))
    return L.intersect(L.sum(hperp, _image(alg, xi)), kperp)


@dataclass(frozen=True)
class DdimSample:
    dim_hperp_plus_image: int
    dim_image_plus_kperp: int
    dim_TC: int
    dim_xi_k: int
    route_a: int
    route_b: int

    @property
    def agree(self) -> bool:
        return self.route_a == self.route_b

    def key(self) -> tuple:
        return (self.dim_hperp_plus_image, self.dim_image_plus_kperp, self.dim_TC,
                self.dim_xi_k, self.route_a, self.route_b)


def ddim_F1(spec: BiquotientSpec, xi, g=None) -> DdimSample:
    """Route (a): dim T_xi C - dim [xi, k]; route (b): the closed form."""
    alg = spec.alg
    d, dk = alg.dim, spec.k.dim
    g = np.eye(alg.n, dtype=alg.basis.dtype) if g is None else g
    image = _image(alg, xi)
    hperp = L.orthogonal_complement(_span(alg, _conj(alg, g, spec.h)))
    kperp = L.orthogonal_complement(_span(alg, spec.k.basis))
    a_dim = L.sum(hperp, image).dim
    b_dim = L.sum(image, kperp).dim
    tc = tangent_C(spec, xi, g).dim
    xik = _span(alg, A.ad_matrix(alg, xi) @ spec.k.basis).dim if dk else 0
    return DdimSample(a_dim, b_dim, tc, xik, tc - xik, d - 2 * dk + a_dim - b_dim)


def ddim_F2(spec: BiquotientSpec, xi, g=None) -> DdimSample:
    """Mirror of ddim_F1 with k and h interchanged; xi from the mirrored set."""
    return ddim_F1(spec.mirrored(), xi, g)


def _perturbed(spec: BiquotientSpec, s: CSample, rng) -> CSample:
    """Nearby point of C: move g slightly and project xi back onto the new fibre."""
    alg = spec.alg
    g2 = s.g @ A.exp_defining(alg, PERTURBATION * A.random_element(alg, rng))
    cols = np.column_stack([spec.k.basis, _conj(alg, g2, spec.h)])
    perp = L.orthogonal_complement(_span(alg, cols))
    y = alg.whitener @ s.xi + PERTURBATION * rng.standard_normal(alg.dim)
    xi2 = _from_white(alg, perp.projector() @ y)
    return _with_residuals(spec, g2, xi2)


@dataclass(frozen=True)
class DdimReport:
    samples: list
    rejected: int
    generic: int | None
    agreement: float
    routes_agree: bool

    def as_dict(self) -> dict:
        return {"generic": self.generic, "agreement": self.agreement,
                "routes_agree": self.routes_agree, "accepted": len(self.samples),
                "rejected": self.rejected,
                "dim_TC": sorted({s.dim_TC for s in self.samples})}


def ddim_generic(spec: BiquotientSpec, samples: int = 20, seed: int = 0,
                 mirrored: bool = False) -> DdimReport:
    """Mode of ddim over rank-stable samples of C (or its mirror), 90% agreement required."""
    work = spec.mirrored() if mirrored else spec
    rng = np.random.default_rng(seed)
    accepted, rejected = [], 0
    for _ in range(MAX_RETRY_FACTOR * samples):
        if len(accepted) == samples:
            break
        s = sample_C(work, rng)
        entry = ddim_F1(work, s.xi, s.g)
        near = _perturbed(work, s, rng)
        if ddim_F1(work, near.xi, near.g).key() != entry.key():
            rejected += 1
            continue
        accepted.append(entry)
    if not accepted:
        return DdimReport([], rejected, None, 0.0, False)
    value, count = Counter(e.route_a for e in accepted).most_common(1)[0]
    frac = count / len(accepted)
    generic = value if frac >= AGREEMENT and len(accepted) == samples else None
    return DdimReport(accepted, rejected, generic, frac, all(e.agree for e in accepted))


@dataclass(frozen=True)
class IdentityVerdict:
    ddim_F1: int
    ddim_F2: int
    expected: int
    routes_agree: bool
    free: FreenessVerdict
    report_F1: DdimReport
    report_F2: DdimReport

    @property
    def total(self) -> int:
        return self.ddim_F1 + self.ddim_F2

    @property
    def ok(self) -> bool:
        return self.total == self.expected and self.routes_agree

    def as_dict(self) -> dict:
        return {"ddim_F1": self.ddim_F1, "ddim_F2": self.ddim_F2, "sum": self.total,
                "expected": self.expected, "routes_agree": self.routes_agree,
                "verdict": self.ok, "freeness": self.free.as_dict(),
                "F1": self.report_F1.as_dict(), "F2": self.report_F2.as_dict()}


def identity_check(spec: BiquotientSpec, samples: int = 20, seed: int = 0) -> IdentityVerdict:
    """Generic ddim F1 + generic ddim F2 against 2 dim K\\G/H."""
    r1 = ddim_generic(spec, samples, seed)
    r2 = ddim_generic(spec, samples, seed + 1, mirrored=True)
    if r1.generic is None or r2.generic is None:
        raise InconclusiveSampling(
            f"no generic ddim value (agreement {r1.agreement:.2f} / {r2.agreement:.2f})")
    free = freeness_infinitesimal(spec, samples, seed)
    return IdentityVerdict(r1.generic, r2.generic, 2 * spec.dimQ,
                           r1.routes_agree and r2.routes_agree, free, r1, r2)


def horizontal_space(spec: BiquotientSpec, g0) -> L.Subspace:
    """h^perp intersect Ad_{g0^-1} k^perp (left-trivialized), in whitened coordinates."""
    alg = spec.alg
    ginv = g0.conj().T
    hperp = L.orthogonal_complement(_span(alg, spec.h.basis))
    kperp = L.orthogonal_complement(_span(alg, _conj(alg, ginv, spec.k)))
    return L.intersect(hperp, kperp)


def horizontal_geodesic(spec: BiquotientSpec, g0, seed, T: float, steps: int) -> TrajectoryRecord:
    """gamma(t) = g0 exp(t eta) for a random unit horizontal eta.

    States are the right-trivialized velocity Ad_gamma eta. Tracked: the two
    horizontality residuals, then the invariant generators on the right- and
    left-trivialized velocities.
    """
    alg = spec.alg
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    hor = horizontal_space(spec, g0)
    if hor.dim == 0:
        raise SamplingFailure("horizontal space is zero")
    eta = _from_white(alg, hor.basis @ rng.standard_normal(hor.dim))
    eta = eta / alg.norm(eta)
    invs = invariant_generators(alg)
    labels = (["horiz_h", "horiz_k"] + [f"R:{p.label}" for p in invs]
              + [f"L:{p.label}" for p in invs])
    ph = A.b_projector(alg, spec.h.basis)
    times = np.linspace(0.0, T, steps + 1)
    states, tracked, left = [], [], []
    for t in times:
        gam = g0 @ A.exp_defining(alg, t * eta) if t else g0
        right = A.group_Ad(alg, gam, eta)
        lvel = A.group_Ad(alg, gam.conj().T, right)
        hk = max((abs(alg.inner(right, c)) for c in spec.k.basis.T), default=0.0)
        hh = abs(alg.inner(lvel, ph @ lvel))
        states.append(right)
        left.append(lvel)
        tracked.append([hh, hk] + [p(right) for p in invs] + [p(lvel) for p in invs])
    states = np.array(states)
    ref = A.group_Ad(alg, g0, eta)
    extra = {"eta": eta, "g0": g0,
             "right_deviation": float(np.abs(states - ref).max()),
             "left_deviation": float(np.abs(np.array(left) - eta).max()),
             "horizontality": float(np.abs(np.array(tracked)[:, :2]).max())}
    return TrajectoryRecord(times, states, [f"R{i}" for i in range(alg.dim)],
                            np.array(tracked), labels, extra)

"""Tangent bundles of homogeneous spaces G/H and their moment map.

Chart: a point with coordinates z = (s, t) in R^{2k} (k = dim v) is the
tangent vector exp(u) . w with u = V s, w = V t, where the columns of V are a
B-orthonormal basis of v = h^perp.

Conventions (fixed here, used by every check):

* omega = -d(theta) for the tautological form theta, so the infinitesimal
  action field sigma(eta) satisfies i_sigma omega = d<Phi, eta>.
* Hamiltonian fields follow the package rule df/dt = {H, f}:
  omega(v, X_H) = dH(v), i.e. X_H = Omega^{-1} dH for the matrix Omega.
  The chart bracket is {F, G} = dF . (-Omega^{-1}) dG.

Point-level checks run at u = 0 only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import algebra as A
from . import linsub as L
from .argshift import euler_field
from .errors import DegenerateForm, NotSubalgebra, SamplingFailure
from .poisson import ScalarFunction
from .trajectory import TrajectoryRecord

OMEGA_SIGN = -1.0
FD_STEP = 1e-5
FD_RANK_TOL = 1e-6
REDUCTIVE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class HomogeneousSpace:
    alg: A.LieAlgebraSpec
    h: A.SubalgebraEmbedding
    v: np.ndarray                 # B-orthonormal columns spanning h^perp
    P_h: np.ndarray
    P_v: np.ndarray

    @property
    def k(self) -> int:
        return self.v.shape[1]

    @property
    def phase_dim(self) -> int:
        return 2 * self.k

    @property
    def name(self) -> str:
        return f"{self.alg.name}/{self.h.name}"

    def v_coords(self, y) -> np.ndarray:
        """Coordinates in the v basis of (the v-part of) an algebra element."""
        return self.v.T @ self.alg.gram @ np.asarray(y, dtype=float)

    def point(self, z) -> "ChartPoint":
        z = np.asarray(z, dtype=float)
        return ChartPoint(self.v @ z[: self.k], self.v @ z[self.k:])

    def coords(self, p: "ChartPoint") -> np.ndarray:
        return np.concatenate([self.v_coords(p.u), self.v_coords(p.w)])

    def random_w(self, rng: np.random.Generator, unit: bool = True) -> np.ndarray:
        w = self.v @ rng.standard_normal(self.k)
        return w / self.alg.norm(w) if unit else w


@dataclass(frozen=True)
class ChartPoint:
    u: np.ndarray
    w: np.ndarray

    def residual(self, space: HomogeneousSpace) -> float:
        return float(max(np.abs(space.P_h @ self.u).max(), np.abs(space.P_h @ self.w).max()))


def build(alg: A.LieAlgebraSpec, h: A.SubalgebraEmbedding) -> HomogeneousSpace:
    res = A.closure_residual(alg, h.basis)
    if res > REDUCTIVE_TOL:
        raise NotSubalgebra(f"{h.name} not closed (residual {res:.3e})")
    v = A.orthocomplement(alg, h)
    red = A.reductivity_residual(alg, h.basis, v)
    if red > REDUCTIVE_TOL:
        raise NotSubalgebra(f"[h, v] not inside v (residual {red:.3e})")
    return HomogeneousSpace(alg, h, v, A.b_projector(alg, h.basis), A.b_projector(alg, v))


def moment_map(space: HomogeneousSpace, p: ChartPoint) -> np.ndarray:
    """Phi(exp(u) . w) = Ad_{exp u} w."""
    if not np.any(p.u):
        return np.asarray(p.w, dtype=float).copy()
    g = A.exp_defining(space.alg, p.u)
    return A.group_Ad(space.alg, g, p.w)


def moment_map_z(space: HomogeneousSpace, z) -> np.ndarray:
    return moment_map(space, space.point(z))


# tautological and symplectic forms

def dexp_series(ad: np.ndarray, terms: int | None = None, tol: float = 1e-16,
                max_terms: int = 80) -> np.ndarray:
    """(1 - e^{-ad}) / ad = sum_n (-ad)^n / (n+1)!; fixed length if ``terms`` given."""
    d = ad.shape[0]
    out = np.eye(d)
    power = np.eye(d)
    limit = terms if terms is not None else max_terms
    for n in range(1, limit):
        power = power @ (-ad)
        term = power / factorial(n + 1)
        out = out + term
        if terms is None and np.abs(term).max() < tol * max(1.0, np.abs(out).max()):
            break
    return out


def tautological_form(space: HomogeneousSpace, p: ChartPoint, du, dw=None) -> float:
    """theta_(u,w)(du, dw) = <w, P_v T(u) du>; the dw slot does not enter."""
    t = dexp_series(A.ad_matrix(space.alg, p.u))
    return space.alg.inner(p.w, space.P_v @ t @ np.asarray(du, dtype=float))


def theta_components(space: HomogeneousSpace, z) -> np.ndarray:
    """theta evaluated on the coordinate vectors d/dz_j."""
    p = space.point(z)
    t = dexp_series(A.ad_matrix(space.alg, p.u))
    pos = (space.P_v @ t @ space.v).T @ space.alg.gram @ p.w
    return np.concatenate([pos, np.zeros(space.k)])


def _jacobian(fun, z, step: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = step
        cols.append((fun(z + e) - fun(z - e)) / (2.0 * step))
    return np.column_stack(cols)


def symplectic_form_at(space: HomogeneousSpace, z, step: float = FD_STEP) -> L.SymplecticForm:
    """omega = OMEGA_SIGN * d(theta) by central differences of theta's components."""
    jac = _jacobian(lambda y: theta_components(space, y), z, step)   # jac[j, i] = d_i theta_j
    form = L.SymplecticForm.from_matrix(OMEGA_SIGN * (jac.T - jac))
    if not form.is_nondegenerate(FD_RANK_TOL):
        raise DegenerateForm("chart symplectic form is degenerate at this point")
    return form


def symplectic_form_closed(space: HomogeneousSpace, w) -> L.SymplecticForm:
    """Closed form of omega at (0, w), used as an independent oracle."""
    alg, v, k = space.alg, space.v, space.k
    ss = np.array([[-alg.inner(w, A.bracket(alg, v[:, i], v[:, j])) for j in range(k)]
                   for i in range(k)])
    eye = np.eye(k)
    dtheta = np.block([[ss, -eye], [eye, np.zeros((k, k))]])
    return L.SymplecticForm.from_matrix(OMEGA_SIGN * dtheta)


def moment_jacobian(space: HomogeneousSpace, z, rel_step: float = FD_STEP) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    step = rel_step * (1.0 + np.linalg.norm(z))
    return _jacobian(lambda y: moment_map_z(space, y), z, step)


def hamiltonian_field(form: L.SymplecticForm, dH) -> np.ndarray:
    return np.linalg.solve(form.matrix, np.asarray(dH, dtype=float))


def chart_poisson_tensor(form: L.SymplecticForm) -> np.ndarray:
    return -np.linalg.inv(form.matrix)


def action_field(space: HomogeneousSpace, w, eta) -> np.ndarray:
    """Chart velocity of exp(t eta) acting at (0, w): (P_v eta, [P_h eta, w])."""
    eta = np.asarray(eta, dtype=float)
    hpart = space.P_h @ eta
    return np.concatenate([space.v_coords(space.P_v @ eta),
                           space.v_coords(A.bracket(space.alg, hpart, w))])


def orbit_tangent_at(space: HomogeneousSpace, w, tol: float = L.DEFAULT_RANK_TOL) -> L.Subspace:
    cols = np.column_stack([action_field(space, w, e) for e in np.eye(space.alg.dim)])
    return L.Subspace.span(cols, tol)


def stabilizer_dim_h(space: HomogeneousSpace, w, tol: float = L.DEFAULT_RANK_TOL) -> int:
    """dim {eta in h : [eta, w] = 0}."""
    if space.h.dim == 0:
        return 0
    imgs = np.column_stack([A.bracket(space.alg, e, w) for e in space.h.basis.T])
    return space.h.dim - L.numerical_rank(space.alg.whitener @ imgs, tol)


def hamiltonian_consistency(space: HomogeneousSpace, w, eta) -> float:
    """|i_sigma(eta) omega - d<Phi, eta>| at (0, w)."""
    z = np.concatenate([np.zeros(space.k), space.v_coords(w)])
    form = symplectic_form_at(space, z)
    sigma = action_field(space, w, eta)
    df = moment_jacobian(space, z).T @ space.alg.gram @ np.asarray(eta, dtype=float)
    return float(np.abs(form.matrix.T @ sigma - df).max())


def _base(space, w):
    return np.concatenate([np.zeros(space.k), space.v_coords(w)])


@dataclass(frozen=True)
class NoetherReport:
    dim_kernel: int
    dim_orbit: int
    phase_dim: int
    residual: float
    ok: bool


def noether_check(space: HomogeneousSpace, w, tol: float = FD_RANK_TOL,
                  eq_tol: float = 1e-7) -> NoetherReport:
    """ker dPhi = (tangent to the orbit)^omega at (0, w)."""
    z = _base(space, w)
    jac = space.alg.whitener @ moment_jacobian(space, z)
    kernel = L.Subspace(L.null_space(jac, tol))
    form = symplectic_form_at(space, z)
    orbit = orbit_tangent_at(space, w)
    orth = L.symplectic_orthogonal(orbit, form, tol)
    res = L.distance(kernel, orth) if kernel.dim == orth.dim else np.inf
    return NoetherReport(kernel.dim, orbit.dim, space.phase_dim, float(res),
                         bool(res < eq_tol and kernel.dim + orbit.dim == space.phase_dim))


@dataclass(frozen=True)
class Theorem21Report:
    w: np.ndarray
    dim_M: int
    dim_G_x: int
    dim_G_mu: int
    ddim_formula: int
    dind_formula: int
    ddim_measured: int
    dind_measured: int
    residual_W1o_in_W2: float
    residual_W2_in_W1o: float
    noether_residual: float
    coisotropy_residual: float
    generic: bool
    verdict: bool

    @property
    def torus_dim(self) -> int:
        return self.dim_G_mu - self.dim_G_x

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "w"}
        d["torus_dim"] = self.torus_dim
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in d.items()}


def is_generic_w(space: HomogeneousSpace, w, rng=None, eps: float = 1e-6) -> bool:
    """Stabilizer dimensions unchanged under a small perturbation inside v."""
    rng = np.random.default_rng(0) if rng is None else rng
    w2 = w + eps * (space.v @ rng.standard_normal(space.k))
    return (stabilizer_dim_h(space, w) == stabilizer_dim_h(space, w2)
            and A.centralizer_dim(space.alg, w) == A.centralizer_dim(space.alg, w2))


def sample_generic_w(space: HomogeneousSpace, seed, max_tries: int = 20) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(max_tries):
        w = space.random_w(rng)
        if is_generic_w(space, w, rng):
            return w
    raise SamplingFailure("no rank-stable w found")


def theorem21_check(space: HomogeneousSpace, w, tol: float = FD_RANK_TOL,
                    eq_tol: float = 1e-7) -> Theorem21Report:
    """Completeness of F1 + F2 at (0, w), at subspace level and against the dimension formulas."""
    alg = space.alg
    z = _base(space, w)
    form = symplectic_form_at(space, z)
    jac = moment_jacobian(space, z)
    # Hamiltonian vectors of the moment-map components span W1
    w1 = L.Subspace.span(np.linalg.solve(form.matrix, jac.T), tol)
    orbit = orbit_tangent_at(space, w)
    w2 = L.symplectic_orthogonal(orbit, form, tol)
    w1o = L.symplectic_orthogonal(w1, form, tol)
    kernel = L.Subspace(L.null_space(alg.whitener @ jac, tol))
    noether = L.distance(kernel, w2) if kernel.dim == w2.dim else np.inf
    total = L.sum(w1, w2, tol)
    total_o = L.symplectic_orthogonal(total, form, tol)
    ddim_m = total.dim
    dind_m = L.intersect(total, total_o, tol).dim
    gx = stabilizer_dim_h(space, w)
    gmu = A.centralizer_dim(alg, moment_map_z(space, z))
    dim_m = space.phase_dim
    ddim_f = dim_m + gx - gmu
    dind_f = gmu - gx
    r12 = L.inclusion_residual(w1o, w2)
    r21 = L.inclusion_residual(w2, w1o)
    cois = L.inclusion_residual(total_o, total)
    generic = is_generic_w(space, w)
    ok = (ddim_f == ddim_m and dind_f == dind_m and ddim_m + dind_m == dim_m
          and r12 < eq_tol and r21 < eq_tol and noether < eq_tol and cois < eq_tol)
    return Theorem21Report(np.asarray(w), dim_m, gx, gmu, ddim_f, dind_f, ddim_m, dind_m,
                           float(r12), float(r21), float(noether), float(cois), generic, bool(ok))


def collective_consistency(space: HomogeneousSpace, w, h: ScalarFunction) -> float:
    """max |dPhi X_H - Euler field| for H = h o Phi at (0, w)."""
    z = _base(space, w)
    form = symplectic_form_at(space, z)
    step = FD_STEP * (1.0 + np.linalg.norm(z))
    dH = _jacobian(lambda y: np.atleast_1d(h(moment_map_z(space, y))), z, step)[0]
    xh = hamiltonian_field(form, dH)
    push = moment_jacobian(space, z) @ xh
    euler = euler_field(space.alg, h, moment_map_z(space, z))
    return float(np.abs(push - euler).max())


def pullback_bracket(space: HomogeneousSpace, w, h1: ScalarFunction, h2: ScalarFunction) -> float:
    """{h1 o Phi, h2 o Phi} at (0, w) computed in the chart."""
    z = _base(space, w)
    form = symplectic_form_at(space, z)
    step = FD_STEP * (1.0 + np.linalg.norm(z))
    d1 = _jacobian(lambda y: np.atleast_1d(h1(moment_map_z(space, y))), z, step)[0]
    d2 = _jacobian(lambda y: np.atleast_1d(h2(moment_map_z(space, y))), z, step)[0]
    return float(d1 @ chart_poisson_tensor(form) @ d2)


def geodesic_flow_ds0(space: HomogeneousSpace, w0, T: float, steps: int,
                      tracked=None) -> TrajectoryRecord:
    """Exact geodesic of the normal metric: (g(t), xi) = (exp(t w0), w0).

    States are Phi(t) = Ad_{g(t)} w0; ``tracked`` is a list of ScalarFunctions of
    xi (Ad_H-invariant functions); group elements are kept in ``extra['group']``.
    """
    alg = space.alg
    w0 = np.asarray(w0, dtype=float)
    if alg.norm(w0) == 0.0:
        raise ValueError("initial velocity must be nonzero")
    tracked = list(tracked or [])
    times = np.linspace(0.0, T, steps + 1)
    states, group, vals = [], [], []
    for t in times:
        g = A.exp_defining(alg, t * w0) if t else np.eye(alg.n, dtype=alg.basis.dtype)
        group.append(g)
        states.append(A.group_Ad(alg, g, w0))
        vals.append([f(w0) for f in tracked])
    return TrajectoryRecord(times, np.array(states), [f"Phi{i}" for i in range(alg.dim)],
                            np.array(vals).reshape(len(times), -1), [f.label for f in tracked],
                            extra={"group": group})


def rotation_rate(alg: A.LieAlgebraSpec, w) -> float:
    """Largest |eigenvalue| of the defining matrix of w (angular speed of exp(t w))."""
    return float(np.abs(np.linalg.eigvals(alg.to_matrix(w))).max())


def sphere_closing_residual(space: HomogeneousSpace, w0, steps: int = 200) -> dict:
    """S^2 = SO(3)/SO(2): geodesic through the pole fixed by H, run for one period."""
    alg = space.alg
    period = 2.0 * np.pi / rotation_rate(alg, w0)
    rec = geodesic_flow_ds0(space, w0, period, steps)
    hm = alg.to_matrix(space.h.basis[:, 0])
    axis = L.null_space(hm)[:, 0]
    g0, g1 = rec.extra["group"][0], rec.extra["group"][-1]
    pos = float(np.linalg.norm(g1 @ axis - g0 @ axis))
    vel0 = alg.to_matrix(w0) @ axis
    vel1 = g1 @ alg.to_matrix(w0) @ axis
    return {"period": period, "position": pos,
            "velocity": float(np.linalg.norm(vel1 - vel0)),
            "group": float(np.abs(g1 - np.eye(alg.n)).max()),
            "midpoint": float(np.linalg.norm(rec.extra["group"][steps // 2] @ axis - g0 @ axis))}

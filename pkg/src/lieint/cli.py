"""Config-driven scenario runner.

Exit codes: 0 all verdicts true, 1 some verdict false, 2 execution error.
The default rank tolerance can be overridden with LIEINT_TOL_RANK.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import algebra as A
from . import argshift as S
from . import biquot as Q
from . import homspace as H
from . import linsub as L
from . import poisson as P
from .errors import ConfigError, LieintError
from .poisson import ScalarFunction
from .trajectory import TrajectoryRecord, relative_drift

ENV_TOL_RANK = "LIEINT_TOL_RANK"

CHECKS = ("involutivity", "orbit-completeness", "theorem21", "noether", "collective",
          "euler", "geodesic", "biq-identity", "biq-geodesic", "bump-demo", "freeness")


def default_rank_tol() -> float:
    raw = os.environ.get(ENV_TOL_RANK, "").strip()
    if not raw:
        return L.DEFAULT_RANK_TOL
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"{ENV_TOL_RANK}={raw!r} is not a number") from None
    if not val > 0:
        raise ConfigError(f"{ENV_TOL_RANK} must be positive")
    return val


@dataclass
class Tolerances:
    rank: float = field(default_factory=default_rank_tol)
    involutivity: float = 1e-9
    drift: float = 1e-6
    subspace: float = 1e-7
    collective: float = 1e-5
    conservation: float = 1e-10


@dataclass
class Integrator:
    T: float = 10.0
    dt: float = 1e-2


@dataclass
class Outputs:
    report: str | None = None
    trajectories: str | None = None


@dataclass
class ScenarioConfig:
    family: str
    n: int
    checks: list[str]
    h: dict | None = None
    k: dict | None = None
    seed: int = 0
    samples: int = 20
    tolerances: Tolerances = field(default_factory=Tolerances)
    integrator: Integrator = field(default_factory=Integrator)
    outputs: Outputs = field(default_factory=Outputs)
    timing: bool = True

    def echo(self) -> dict:
        return asdict(self)


def _strict(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    return cls(**data)


def _subgroup_spec(raw, where: str) -> dict | None:
    if raw is None:
        return None
    if not isinstance(raw, dict) or set(raw) - {"kind", "arg"} or "kind" not in raw:
        raise ConfigError(f"{where}: expected {{'kind': ..., 'arg': ...}}")
    return {"kind": raw["kind"], "arg": raw.get("arg")}


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a JSON-like mapping; unknown keys and bad values raise ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError("config must be an object")
    data = dict(data)
    alg = data.pop("algebra", None)
    if not isinstance(alg, dict) or set(alg) != {"family", "n"}:
        raise ConfigError("'algebra' must be {'family': ..., 'n': ...}")
    subs = data.pop("subgroups", {}) or {}
    if not isinstance(subs, dict) or set(subs) - {"h", "k"}:
        raise ConfigError("'subgroups' may only contain 'h' and 'k'")
    tols = _strict(Tolerances, data.pop("tolerances", {}), "tolerances")
    integ = _strict(Integrator, data.pop("integrator", {}), "integrator")
    outs = _strict(Outputs, data.pop("outputs", {}), "outputs")
    allowed = {"checks", "seed", "samples", "timing"}
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)}")
    checks = data.get("checks")
    if not isinstance(checks, list) or not checks:
        raise ConfigError("'checks' must be a nonempty list")
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}; choose from {list(CHECKS)}")
    cfg = ScenarioConfig(alg["family"], int(alg["n"]), list(checks),
                         _subgroup_spec(subs.get("h"), "subgroups.h"),
                         _subgroup_spec(subs.get("k"), "subgroups.k"),
                         int(data.get("seed", 0)), int(data.get("samples", 20)),
                         tols, integ, outs, bool(data.get("timing", True)))
    for name, val in asdict(tols).items():
        if not float(val) > 0:
            raise ConfigError(f"tolerance {name} must be positive")
    if cfg.samples <= 0:
        raise ConfigError("samples must be positive")
    if not (integ.T > 0 and integ.dt > 0):
        raise ConfigError("integrator T and dt must be positive")
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


# report

@dataclass
class ReportDocument:
    scenario: dict
    checks: list[dict]
    seed: int
    version: str = __version__
    wall_clock_s: float | None = None
    trajectories: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return all(c.get("verdict") is True for c in self.checks)

    def body(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "checks": self.checks,
                "verdict": self.ok}

    def to_dict(self) -> dict:
        meta = {"version": self.version}
        if self.wall_clock_s is not None:
            meta["wall_clock_s"] = self.wall_clock_s
        return {"meta": meta, "body": self.body()}

    def body_json(self) -> str:
        return _dumps(self.body())

    def to_json(self) -> str:
        return _dumps(self.to_dict())


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    return x


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def emit_trajectory(record: TrajectoryRecord, path) -> Path:
    """CSV: t, state columns, tracked columns; 17 significant digits."""
    if len(record) == 0:
        raise ValueError("empty trajectory record")
    path = Path(path)
    header = ["t", *record.state_labels, *record.tracked_labels]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(record)):
            row = [record.times[i], *record.states[i], *record.tracked[i]]
            w.writerow([f"{v:.17g}" for v in row])
    return path


def read_trajectory(path, n_states: int) -> TrajectoryRecord:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float).reshape(len(rows) - 1, -1)
    return TrajectoryRecord(data[:, 0], data[:, 1:1 + n_states], header[1:1 + n_states],
                            data[:, 1 + n_states:], header[1 + n_states:])


# checks

class _Context:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.alg = A.build_classical(cfg.family, cfg.n)
        self.trajectories: dict[str, TrajectoryRecord] = {}

    def subgroup(self, which: str) -> A.SubalgebraEmbedding:
        raw = getattr(self.cfg, which)
        if raw is None:
            raise ConfigError(f"check needs subgroups.{which}")
        try:
            return Q.subgroup_from_preset(self.alg, raw["kind"], raw["arg"])
        except (ValueError, TypeError, IndexError) as exc:
            raise ConfigError(f"subgroups.{which}: {exc}") from exc

    def space(self) -> H.HomogeneousSpace:
        return H.build(self.alg, self.subgroup("h"))

    def biquotient(self) -> Q.BiquotientSpec:
        return Q.build(self.alg, self.subgroup("k"), self.subgroup("h"))


def _check_involutivity(ctx: _Context) -> dict:
    cfg, alg = ctx.cfg, ctx.alg
    a = A.random_regular(alg, cfg.seed, cfg.tolerances.rank)
    fam = S.shift_family(alg, a)
    res = S.involutivity_residual(fam, max(cfg.samples, 1), cfg.seed)
    return {"residual": res, "tolerance": cfg.tolerances.involutivity,
            "members": len(fam.labels), "expected_members": (alg.dim + alg.rank) // 2,
            "verdict": res < cfg.tolerances.involutivity}


def _check_orbit(ctx: _Context) -> dict:
    cfg, alg = ctx.cfg, ctx.alg
    a = A.random_regular(alg, cfg.seed, cfg.tolerances.rank)
    fam = S.shift_family(alg, a)
    rows = []
    for i in range(cfg.samples):
        mu = A.random_regular(alg, cfg.seed + 1000 + i, cfg.tolerances.rank)
        rows.append(S.orbit_completeness(fam, mu, cfg.tolerances.rank))
    return {"span_dims": sorted({r.span_dim for r in rows}),
            "orbit_dims": sorted({r.orbit_dim for r in rows}),
            "min_margin": min(r.margin for r in rows),
            "verdict": all(r.ok for r in rows)}


def _sample_ws(ctx: _Context, space: H.HomogeneousSpace):
    rng = np.random.default_rng(ctx.cfg.seed)
    return [H.sample_generic_w(space, rng) for _ in range(ctx.cfg.samples)]


def _check_theorem21(ctx: _Context) -> dict:
    space = ctx.space()
    reps = [H.theorem21_check(space, w, eq_tol=ctx.cfg.tolerances.subspace) for w in _sample_ws(ctx, space)]
    match = np.mean([r.ddim_formula == r.ddim_measured and r.dind_formula == r.dind_measured
                     for r in reps])
    resid = max(max(r.residual_W1o_in_W2, r.residual_W2_in_W1o, r.noether_residual,
                    r.coisotropy_residual) for r in reps)
    ddims = sorted({(r.ddim_measured, r.dind_measured) for r in reps})
    return {"space": space.name, "dim_M": space.phase_dim, "ddim_dind": ddims,
            "formula_agreement": float(match), "max_subspace_residual": resid,
            "tolerance": ctx.cfg.tolerances.subspace,
            "verdict": bool(match >= P.AGREEMENT and resid < ctx.cfg.tolerances.subspace)}


def _check_noether(ctx: _Context) -> dict:
    space = ctx.space()
    reps = [H.noether_check(space, w, eq_tol=ctx.cfg.tolerances.subspace) for w in _sample_ws(ctx, space)]
    return {"space": space.name, "kernel_dims": sorted({r.dim_kernel for r in reps}),
            "orbit_dims": sorted({r.dim_orbit for r in reps}),
            "max_residual": max(r.residual for r in reps),
            "tolerance": ctx.cfg.tolerances.subspace, "verdict": all(r.ok for r in reps)}


def _check_collective(ctx: _Context) -> dict:
    alg, cfg = ctx.alg, ctx.cfg
    space = ctx.space()
    rng = np.random.default_rng(cfg.seed)
    eta = A.random_element(alg, rng)
    op, _ = S.default_sectional(alg, cfg.seed)
    hams = {"linear": ScalarFunction(lambda x: alg.inner(x, eta), lambda x: alg.gram @ eta),
            "casimir": S.casimir_norm(alg), "sectional": op.hamiltonian()}
    w = H.sample_generic_w(space, rng)
    res = {k: H.collective_consistency(space, w, h) for k, h in hams.items()}
    worst = max(res.values())
    return {"space": space.name, "residuals": res, "tolerance": cfg.tolerances.collective,
            "verdict": worst < cfg.tolerances.collective}


def _check_euler(ctx: _Context) -> dict:
    alg, cfg = ctx.alg, ctx.cfg
    op, fam = S.default_sectional(alg, cfg.seed)
    xi0 = A.random_element(alg, np.random.default_rng(cfg.seed + 1))
    rec = S.euler_flow(alg, op.hamiltonian(), xi0, cfg.integrator.T, cfg.integrator.dt, fam)
    ctx.trajectories["euler"] = rec
    return {"T": cfg.integrator.T, "dt": cfg.integrator.dt, "steps": len(rec) - 1,
            "drift": rec.drift, "max_drift": rec.max_drift, "tolerance": cfg.tolerances.drift,
            "verdict": rec.max_drift < cfg.tolerances.drift}


def _check_geodesic(ctx: _Context) -> dict:
    cfg = ctx.cfg
    space = ctx.space()
    w0 = H.sample_generic_w(space, cfg.seed)
    steps = max(1, int(round(cfg.integrator.T / cfg.integrator.dt)))
    invs = [p.as_function() for p in S.invariant_generators(ctx.alg)]
    rec = H.geodesic_flow_ds0(space, w0, cfg.integrator.T, steps, invs)
    ctx.trajectories["geodesic"] = rec
    worst = max(rec.state_drift, rec.max_drift)
    return {"space": space.name, "phi_drift": rec.state_drift, "invariant_drift": rec.drift,
            "tolerance": cfg.tolerances.conservation,
            "verdict": worst < cfg.tolerances.conservation}


def _check_biq_identity(ctx: _Context) -> dict:
    return Q.identity_check(ctx.biquotient(), ctx.cfg.samples, ctx.cfg.seed).as_dict()


def _check_biq_geodesic(ctx: _Context) -> dict:
    cfg = ctx.cfg
    spec = ctx.biquotient()
    g0 = A.random_group_element(ctx.alg, np.random.default_rng(cfg.seed))
    steps = max(1, int(round(cfg.integrator.T / cfg.integrator.dt)))
    rec = Q.horizontal_geodesic(spec, g0, cfg.seed, cfg.integrator.T, steps)
    ctx.trajectories["biq-geodesic"] = rec
    inv_drift = max(v for k, v in rec.drift.items() if k[:2] in ("R:", "L:"))
    worst = max(rec.extra["horizontality"], rec.extra["right_deviation"],
                rec.extra["left_deviation"], inv_drift)
    return {"biquotient": spec.name, "horizontality": rec.extra["horizontality"],
            "right_deviation": rec.extra["right_deviation"],
            "left_deviation": rec.extra["left_deviation"], "invariant_drift": inv_drift,
            "tolerance": cfg.tolerances.conservation,
            "verdict": worst < cfg.tolerances.conservation}


def bump_demo(samples: int = 500, seed: int = 0, tol: float = 1e-8) -> dict:
    """Bump family on so(3)*: brackets, vanishing outside the ball, rank inside."""
    chart = P.so3_demo_chart()
    rng = np.random.default_rng(seed)
    fam = P.bump_family(chart, [chart.sample_ball(rng, 0.1) for _ in range(5)])
    spread = 0.15
    pts = [chart.center + spread * rng.standard_normal(3) for _ in range(samples)]
    worst = max(float(np.abs(fam.gram(x).matrix).max()) for x in pts)
    outside = [x for x in pts if not chart.inside(x)]
    vanish = max((float(np.abs(fam.values(x)).max() + np.abs(fam.gradients(x)).max())
                  for x in outside), default=0.0)
    inner = [chart.sample_ball(rng, 0.1) for _ in range(20)]
    ranks = [L.numerical_rank(fam.gradients(x)) for x in inner]
    return {"bracket_residual": worst, "points": samples, "outside_points": len(outside),
            "outside_max": vanish, "ranks_inside": sorted(set(ranks)), "n": chart.n,
            "tolerance": tol,
            "verdict": worst < tol and vanish == 0.0 and all(r == chart.n for r in ranks)}


def _check_bump(ctx: _Context) -> dict:
    return bump_demo(ctx.cfg.samples, ctx.cfg.seed)


def _check_freeness(ctx: _Context) -> dict:
    v = Q.freeness_infinitesimal(ctx.biquotient(), ctx.cfg.samples, ctx.cfg.seed)
    out = v.as_dict()
    out["verdict"] = out.pop("ok")
    return out


_RUNNERS = {
    "involutivity": _check_involutivity, "orbit-completeness": _check_orbit,
    "theorem21": _check_theorem21, "noether": _check_noether,
    "collective": _check_collective, "euler": _check_euler, "geodesic": _check_geodesic,
    "biq-identity": _check_biq_identity, "biq-geodesic": _check_biq_geodesic,
    "bump-demo": _check_bump, "freeness": _check_freeness,
}


def run_scenario(cfg: ScenarioConfig) -> ReportDocument:
    """Run the configured checks in order. Mathematical failures become false verdicts;
    configuration problems and sampling failures raise LieintError."""
    start = time.perf_counter()
    ctx = _Context(cfg)
    records = []
    for name in cfg.checks:
        rec = {"check": name}
        rec.update(_RUNNERS[name](ctx))
        rec["verdict"] = bool(rec["verdict"])
        records.append(_clean(rec))
    if cfg.outputs.trajectories:
        out = Path(cfg.outputs.trajectories)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create {out}: {exc}") from exc
        for name, tr in ctx.trajectories.items():
            emit_trajectory(tr, out / f"{name}.csv")
    wall = time.perf_counter() - start if cfg.timing else None
    doc = ReportDocument(_clean(cfg.echo()), records, cfg.seed, wall_clock_s=wall,
                         trajectories=ctx.trajectories)
    if cfg.outputs.report:
        write_report(doc, cfg.outputs.report)
    return doc


def write_report(doc: ReportDocument, path) -> None:
    try:
        Path(path).write_text(doc.to_json())
    except OSError as exc:
        raise ConfigError(f"cannot write report {path}: {exc}") from exc


# command line

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="report (check) or CSV (euler, geodesic) path")
    common.add_argument("--samples", type=int)
    common.add_argument("--tol-rank", type=float)
    common.add_argument("--tol-drift", type=float)
    common.add_argument("--no-timing", action="store_true", help="omit wall-clock from the report")

    p = argparse.ArgumentParser(prog="lieint", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("info", parents=[common], help="list algebras, presets and checks")
    c = sub.add_parser("check", parents=[common], help="run a scenario config")
    c.add_argument("--config", required=True)
    for name, helptext in (("euler", "sectional Euler flow"), ("geodesic", "geodesic flow of ds0")):
        e = sub.add_parser(name, parents=[common], help=helptext)
        e.add_argument("--family", default="so")
        e.add_argument("--n", type=int, default=4 if name == "euler" else 3)
        e.add_argument("--T", type=float, default=10.0)
        e.add_argument("--dt", type=float, default=1e-2)
        if name == "geodesic":
            e.add_argument("--h", default="block:0,1",
                           help="subgroup preset kind[:comma-separated ints]")
    sub.add_parser("bump-demo", parents=[common], help="bump family on so(3)*")
    return p


def _preset_arg(text: str) -> dict:
    kind, _, rest = text.partition(":")
    return {"kind": kind, "arg": [int(t) for t in rest.split(",")] if rest else None}


def _overrides(cfg: ScenarioConfig, ns) -> ScenarioConfig:
    if ns.seed is not None:
        cfg.seed = ns.seed
    if ns.samples is not None:
        if ns.samples <= 0:
            raise ConfigError("--samples must be positive")
        cfg.samples = ns.samples
    if ns.tol_rank is not None:
        cfg.tolerances.rank = ns.tol_rank
    if ns.tol_drift is not None:
        cfg.tolerances.drift = ns.tol_drift
    if ns.no_timing:
        cfg.timing = False
    for name, val in asdict(cfg.tolerances).items():
        if not val > 0:
            raise ConfigError(f"tolerance {name} must be positive")
    return cfg


def _info() -> dict:
    return {"version": __version__, "families": ["so", "su", "u"], "checks": list(CHECKS),
            "subgroup_presets": ["block", "weights", "torus", "so_real", "trivial"],
            "biquotient_presets": sorted(Q.PRESETS),
            "env": {ENV_TOL_RANK: "default rank tolerance"}}


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        if ns.command == "info":
            print(_dumps(_info()), end="")
            return 0
        if ns.command == "check":
            cfg = _overrides(load_config(ns.config), ns)
            if ns.out:
                cfg.outputs.report = ns.out
            doc = run_scenario(cfg)
            if not cfg.outputs.report:
                print(doc.to_json(), end="")
            else:
                for rec in doc.checks:
                    print(f"{rec['check']}: {'ok' if rec['verdict'] else 'FAIL'}")
            return 0 if doc.ok else 1
        if ns.command == "bump-demo":
            seed = ns.seed if ns.seed is not None else 0
            res = _clean(bump_demo(ns.samples or 500, seed))
            print(_dumps(res), end="")
            return 0 if res["verdict"] else 1
        check = ns.command
        cfg = ScenarioConfig(ns.family, ns.n, [check],
                             h=_preset_arg(ns.h) if check == "geodesic" else None,
                             integrator=Integrator(ns.T, ns.dt))
        cfg = _overrides(cfg, ns)
        if cfg.integrator.T <= 0 or cfg.integrator.dt <= 0:
            raise ConfigError("T and dt must be positive")
        cfg.timing = False
        doc = run_scenario(cfg)
        if ns.out:
            emit_trajectory(doc.trajectories[check], ns.out)
        print(_dumps(doc.checks[0]), end="")
        return 0 if doc.ok else 1
    except (LieintError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

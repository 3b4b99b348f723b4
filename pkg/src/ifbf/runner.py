"""Batch runs: configuration files, solver dispatch and convergence traces."""

from __future__ import annotations

import csv
import dataclasses
import inspect
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import convex as cvx
from .errors import NonFiniteError, ParameterError
from .fbf import (FbfParams, FbfState, SolveReport, Termination, classical_tseng_params,
                  inertial_proximal_point, solve, summability_diagnostics)
from .primal_dual import pd_solve, product_operators
from .zoo import ZOO, ZooProblem, zoo

TRACE_FIELDS = ("n", "residual", "step_sq_partial", "gap_sq_partial",
                "primal_value", "dual_value", "objective_gap")
SOLVERS = ("fbf", "inertial_ppa", "primal_dual", "convex")
COMPATIBLE = {
    "inclusion": ("fbf", "inertial_ppa"),
    "primal_dual": ("primal_dual", "fbf"),
    "convex": ("convex", "primal_dual", "fbf"),
}

EXIT_CONVERGED, EXIT_MAX_ITERS, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str
    solver: str
    sigma: float = 0.05
    alpha1: float = 0.0
    alpha2: float = 0.0
    problem_params: dict = field(default_factory=dict)
    lambda_policy: str = "factor"
    lambda_value: float = 0.99
    lambda_min: Optional[float] = None
    classical_epsilon: Optional[float] = None
    equal_start: bool = True
    ramp: int = 10
    relaxed_monotonicity: bool = False
    improved_bound: bool = True
    condition: Optional[str] = None
    tol: float = 1e-8
    max_iters: int = 10000
    seed: int = 0
    trace_path: Optional[str] = None
    trace_format: str = "csv"
    stride: int = 1
    record_wall_time: bool = False

    def with_overrides(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})


def _float(section: dict, key: str, default):
    v = section.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {v!r}") from None


def _int(section: dict, key: str, default):
    v = section.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return v


def _bool(section: dict, key: str, default: bool) -> bool:
    v = section.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{key} must be true or false, got {v!r}")
    return v


def parse_config(text: str) -> RunConfig:
    """Parse a TOML run description.

    Sections: ``[problem]`` (``name`` plus a ``[problem.params]`` table),
    ``[solver]`` (``kind``, ``tol``, ``max_iters``, ``seed``), ``[params]``
    (inertia caps, ``sigma``, step policy, ``classical_epsilon``) and
    ``[trace]`` (``path``, ``format``, ``stride``, ``wall_time``).
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {"problem", "solver", "params", "trace"}
    if set(data) - known:
        raise ConfigError(f"unknown sections: {', '.join(sorted(set(data) - known))}")
    prob = data.get("problem", {})
    sol = data.get("solver", {})
    par = data.get("params", {})
    tr = data.get("trace", {})
    if "name" not in prob:
        raise ConfigError("[problem] needs a name")
    kind = sol.get("kind")
    if kind not in SOLVERS:
        raise ConfigError(f"[solver] kind must be one of {', '.join(SOLVERS)}, got {kind!r}")
    policy = par.get("lambda_policy", "factor")
    if policy not in ("factor", "constant"):
        raise ConfigError(f"lambda_policy must be 'factor' or 'constant', got {policy!r}")
    fmt = tr.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"trace format must be csv or json, got {fmt!r}")
    pp = dict(prob.get("params", {}))
    for k, v in pp.items():
        if isinstance(v, int) and not isinstance(v, bool) and k not in ("n", "m", "seed"):
            pp[k] = float(v)
    cfg = RunConfig(
        problem=prob["name"], solver=kind, problem_params=pp,
        sigma=_float(par, "sigma", 0.05), alpha1=_float(par, "alpha1", 0.0),
        alpha2=_float(par, "alpha2", 0.0), lambda_policy=policy,
        lambda_value=_float(par, "lambda_value", 0.99 if policy == "factor" else None),
        lambda_min=_float(par, "lambda_min", None),
        classical_epsilon=_float(par, "classical_epsilon", None),
        equal_start=_bool(par, "equal_start", True), ramp=_int(par, "ramp", 10),
        relaxed_monotonicity=_bool(par, "relaxed_monotonicity", False),
        improved_bound=_bool(par, "improved_bound", True), condition=par.get("condition"),
        tol=_float(sol, "tol", 1e-8), max_iters=_int(sol, "max_iters", 10000),
        seed=_int(sol, "seed", 0), trace_path=tr.get("path"), trace_format=fmt,
        stride=_int(tr, "stride", 1), record_wall_time=_bool(tr, "wall_time", False))
    if cfg.lambda_value is None:
        raise ConfigError("lambda_policy 'constant' needs lambda_value")
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def build_problem(cfg: RunConfig) -> ZooProblem:
    if cfg.problem not in ZOO:
        raise ConfigError(f"unknown zoo problem {cfg.problem!r}")
    params = dict(cfg.problem_params)
    if "seed" in inspect.signature(ZOO[cfg.problem]).parameters:
        params.setdefault("seed", cfg.seed)
    try:
        return zoo(cfg.problem, **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def build_params(cfg: RunConfig, beta: float) -> FbfParams:
    """FBF parameters for ``cfg``; raises :class:`ParameterError` naming a violated inequality."""
    extra = dict(equal_start=cfg.equal_start, ramp=cfg.ramp,
                 relaxed_monotonicity=cfg.relaxed_monotonicity, improved_bound=cfg.improved_bound)
    if cfg.condition is not None:
        extra["condition"] = cfg.condition
    if cfg.lambda_policy == "constant":
        lam = cfg.lambda_value
        extra["lambda_schedule"] = lambda n: lam
    else:
        extra["lambda_factor"] = cfg.lambda_value
    if cfg.classical_epsilon is not None:
        p = classical_tseng_params(beta, cfg.classical_epsilon, **extra)
        if cfg.lambda_min is not None:
            p = dataclasses.replace(p, lambda_min=cfg.lambda_min)
        return p
    return FbfParams(sigma=cfg.sigma, alpha1=cfg.alpha1, alpha2=cfg.alpha2,
                     lambda_min=cfg.lambda_min, **extra)


def validate(cfg: RunConfig) -> tuple[ZooProblem, FbfParams]:
    """Check a config completely before running; raises ConfigError or ParameterError."""
    if cfg.tol <= 0 or not math.isfinite(cfg.tol):
        raise ConfigError(f"tol must be positive, got {cfg.tol}")
    if cfg.max_iters < 1:
        raise ConfigError(f"max_iters must be >= 1, got {cfg.max_iters}")
    if cfg.stride < 1:
        raise ConfigError(f"stride must be >= 1, got {cfg.stride}")
    zp = build_problem(cfg)
    if cfg.solver not in COMPATIBLE[zp.kind]:
        raise ConfigError(f"solver {cfg.solver!r} cannot run {zp.kind} problem {zp.name!r}")
    if cfg.solver == "inertial_ppa" and zp.problem.B.lipschitz != 0:
        raise ConfigError(f"inertial_ppa needs a problem without forward operator; {zp.name} has one")
    params = build_params(cfg, zp.beta)
    bound = params.step_bound(zp.beta)
    if params.lambda_min is not None and params.lambda_min > bound:
        raise ParameterError(f"lambda_min {params.lambda_min:g} exceeds the {params.bound_kind} "
                             f"step bound {bound:.12g}")
    return zp, params


@dataclass
class RunResult:
    config: RunConfig
    exit_code: int
    termination: Optional[str]
    report: Optional[SolveReport] = None
    x: Optional[np.ndarray] = None
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    message: str = ""
    wall_time: float = 0.0


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _objective_monitor(zp: ZooProblem, stride: int):
    """Callback recording primal/dual objectives at the backward-step points."""
    values = {}
    if zp.kind != "convex":
        return None, values
    prob = zp.problem
    space = zp.inclusion().space

    def monitor(n, state):
        if (n - 1) % stride:
            return
        if isinstance(state, FbfState):
            pv = space.split(state.p_last)
            x, v = pv.head, pv.blocks
        else:
            x, v = state.p1, state.p2
        values[n] = (cvx.primal_objective(prob, x), cvx.dual_objective(prob, v))

    return monitor, values


def _execute(zp: ZooProblem, cfg: RunConfig, params: FbfParams, callback):
    kw = dict(tol=cfg.tol, max_iters=cfg.max_iters, callback=callback)
    if cfg.solver == "inertial_ppa":
        rep = inertial_proximal_point(zp.problem.A, params, zp.start, **kw)
        return rep, rep.x
    if cfg.solver == "fbf":
        if zp.kind == "inclusion":
            rep = solve(zp.problem.A, zp.problem.B, params, zp.start, **kw)
            return rep, rep.x
        M, Q = product_operators(zp.inclusion())
        rep = solve(M, Q, params, np.zeros(M.dim), **kw)
        head = zp.inclusion().space.split(rep.p if rep.p is not None else rep.x).head
        return rep, head
    if cfg.solver == "convex":
        sol, rep = cvx.solve_convex(zp.problem, params, **kw)
    else:
        sol, rep = pd_solve(zp.inclusion(), params, **kw)
    return rep, sol.x


def run(cfg: RunConfig, write: bool = True) -> RunResult:
    """Validate and execute one configuration, optionally writing its trace."""
    try:
        zp, params = validate(cfg)
    except (ConfigError, ParameterError) as exc:
        return RunResult(cfg, EXIT_INVALID, None, message=f"invalid config: {exc}")
    monitor, objectives = _objective_monitor(zp, cfg.stride)
    t0 = time.perf_counter()
    try:
        rep, x = _execute(zp, cfg, params, monitor)
    except NonFiniteError as exc:
        return RunResult(cfg, EXIT_NUMERIC, None, message=f"numeric failure: {exc}")
    wall = time.perf_counter() - t0

    rows = []
    for k in range(0, len(rep.residual_history), cfg.stride):
        n = k + 1
        pv, dv = objectives.get(n, (None, None))
        gap = pv - dv if (pv is not None and dv is not None and math.isfinite(pv - dv)) else None
        rows.append({"n": n, "residual": rep.residual_history[k],
                     "step_sq_partial": rep.sq_step_partial_sums[k],
                     "gap_sq_partial": rep.sq_gap_partial_sums[k],
                     "primal_value": pv, "dual_value": dv, "objective_gap": gap})
    diag = summability_diagnostics(rep)
    summary = {
        "problem": zp.name, "solver": cfg.solver, "termination": rep.termination.value,
        "iterations": rep.iterations, "final_residual": rep.final_residual,
        "solution_error": float(np.max(np.abs(x - zp.solution))),
        "x": [float(t) for t in x], "step_bound": rep.step_bound, "bound_kind": rep.bound_kind,
        "summable": diag.consistent,
    }
    if rep.violation:
        summary["violation"] = rep.violation
        summary["violation_index"] = rep.violation_index
    if rep.notes:
        summary["notes"] = list(rep.notes)
    if cfg.record_wall_time:
        summary["wall_time"] = wall
    code = {Termination.CONVERGED: EXIT_CONVERGED, Termination.MAX_ITERS: EXIT_MAX_ITERS,
            Termination.PARAMETER_VIOLATION: EXIT_INVALID}[rep.termination]
    result = RunResult(cfg, code, rep.termination.value, rep, x, rows, summary, wall_time=wall)
    if write and cfg.trace_path:
        write_trace(cfg.trace_path, rows, summary, cfg.trace_format)
    return result


def render_trace(rows, summary, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps({"trace": rows, "summary": summary}, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in TRACE_FIELDS])
    for k, v in summary.items():
        buf.write(f"# {k}={json.dumps(v)}\n")
    return buf.getvalue()


def write_trace(path, rows, summary, fmt: str = "csv") -> None:
    Path(path).write_text(render_trace(rows, summary, fmt))


def read_trace_csv(path) -> tuple[list[dict], dict]:
    """Inverse of the CSV trace writer (numbers as floats, empty fields as ``None``)."""
    rows, summary = [], {}
    lines = Path(path).read_text().splitlines()
    data = [ln for ln in lines if not ln.startswith("#")]
    for rec in csv.DictReader(data):
        rows.append({k: (None if v == "" else (int(v) if k == "n" else float(v))) for k, v in rec.items()})
    for ln in lines:
        if ln.startswith("# "):
            k, _, v = ln[2:].partition("=")
            summary[k] = json.loads(v)
    return rows, summary


@dataclass
class Comparison:
    a: RunResult
    b: RunResult
    final_distance: Optional[float]
    asymmetric_stopping: bool
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "iterations": [self.a.summary.get("iterations"), self.b.summary.get("iterations")],
            "termination": [self.a.termination, self.b.termination],
            "final_distance": self.final_distance,
            "asymmetric_stopping": self.asymmetric_stopping,
            "traces": [self.a.config.trace_path, self.b.config.trace_path],
        }


def compare(cfg_a: RunConfig, cfg_b: RunConfig) -> Comparison:
    """Run two configurations of the same problem and compare their outcomes."""
    pa = build_problem(cfg_a).params
    pb = build_problem(cfg_b).params
    if cfg_a.problem != cfg_b.problem or pa != pb:
        raise ConfigError(f"configs target different problems: {cfg_a.problem} {pa} vs {cfg_b.problem} {pb}")
    if cfg_a.trace_path and cfg_a.trace_path == cfg_b.trace_path:
        raise ConfigError("both configs write the same trace file")
    ra, rb = run(cfg_a), run(cfg_b)
    dist = None
    if ra.x is not None and rb.x is not None:
        dist = float(np.linalg.norm(ra.x - rb.x))
    asym = (cfg_a.tol != cfg_b.tol) or (cfg_a.max_iters != cfg_b.max_iters)
    return Comparison(ra, rb, dist, asym)

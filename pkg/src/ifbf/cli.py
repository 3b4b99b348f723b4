"""Command line interface.

Usage::

    ifbf run CONFIG [--tol T] [--max-iters N] [--seed S] [--trace PATH] [--format csv|json]
    ifbf compare CONFIG_A CONFIG_B [--tol T] [--max-iters N] [--seed S]
    ifbf validate CONFIG
    ifbf zoo list

Exit codes: 0 converged, 2 iteration limit reached, 3 invalid configuration
(including a step-size schedule rejected during the run), 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import runner
from .errors import ParameterError
from .zoo import describe


def _overrides(args) -> dict:
    return dict(tol=args.tol, max_iters=args.max_iters, seed=args.seed,
                trace_path=getattr(args, "trace", None), trace_format=getattr(args, "format", None))


def _load(path, args):
    return runner.load_config(path).with_overrides(**_overrides(args))


def _add_overrides(p, trace=True):
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--seed", type=int)
    if trace:
        p.add_argument("--trace", help="trace output path")
        p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifbf", description="Inertial forward-backward-forward solvers")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config")
    _add_overrides(p)
    p = sub.add_parser("compare", help="run two configurations of the same problem")
    p.add_argument("config_a")
    p.add_argument("config_b")
    _add_overrides(p, trace=False)
    p = sub.add_parser("validate", help="check a configuration without running it")
    p.add_argument("config")
    _add_overrides(p)
    p = sub.add_parser("zoo", help="problem catalogue")
    p.add_argument("action", choices=("list",))
    return parser


def _print_result(res: runner.RunResult, label: str = "") -> None:
    if res.termination is None:
        print(f"{label}{res.message}", file=sys.stderr)
        return
    s = res.summary
    line = (f"{label}termination={s['termination']} iterations={s['iterations']} "
            f"final_residual={s['final_residual']:.3e} solution_error={s['solution_error']:.3e} "
            f"wall_time={res.wall_time:.3f}s")
    print(line)
    if "violation" in s:
        print(f"{label}rejected: {s['violation']}", file=sys.stderr)
    for note in s.get("notes", []):
        print(f"{label}note: {note}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "zoo":
            for name, doc in describe():
                print(f"{name:16s} {doc.replace('``', '')}")
            return 0
        if args.command == "validate":
            cfg = _load(args.config, args)
            zp, params = runner.validate(cfg)
            print(f"ok: {zp.name} ({zp.kind}) with {cfg.solver}; beta={zp.beta:.6g}, "
                  f"{params.bound_kind} step bound={params.step_bound(zp.beta):.6g}")
            return 0
        if args.command == "run":
            res = runner.run(_load(args.config, args))
            _print_result(res)
            return res.exit_code
        cmp = runner.compare(_load(args.config_a, args), _load(args.config_b, args))
        _print_result(cmp.a, "A: ")
        _print_result(cmp.b, "B: ")
        print(json.dumps(cmp.as_dict()))
        if cmp.asymmetric_stopping:
            print("warning: the two runs use different stopping rules", file=sys.stderr)
        return max(cmp.a.exit_code, cmp.b.exit_code)
    except (runner.ConfigError, ParameterError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return runner.EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

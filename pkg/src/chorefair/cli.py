"""Command-line entry point: ``chorefair <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .core import Allocation, fairness_report
from .estimators import ALLOCATORS, make_allocator
from .experiments import (ConfigError, ExperimentConfig, records_to_csv, records_to_json,
                          run_grid, summarize)
from .instance import DisutilityMatrix, DistributionSpec, sample_instance
from .oracle import exists_envy_free, exists_proportional
from .theory import (ef_nonexistence_certificate, expected_repeated_favorites,
                     expected_repeated_favorites_lower_bound, nu_equation,
                     prop_nonexistence_certificate, solve_nu)

EXIT_CONFIG = 2


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(payload):
    print(json.dumps(payload, default=_default, indent=1))


def parse_dist(text: str) -> DistributionSpec:
    if text == "uniform":
        return DistributionSpec.uniform()
    if text.startswith("piecewise:"):
        return DistributionSpec.from_json(text.split(":", 1)[1])
    raise ConfigError(f"bad --dist {text!r}; use uniform or piecewise:<path>")


def parse_int_list(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None


def _cmd_sample(args):
    inst = sample_instance(args.n, args.m, parse_dist(args.dist), args.seed)
    text = json.dumps(inst.to_dict())
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)


def _cmd_check(args):
    inst = DisutilityMatrix.load(args.instance)
    alloc = Allocation.load(args.allocation, m=inst.m)
    if alloc.n != inst.n:
        raise ConfigError(f"allocation has {alloc.n} bundles, instance has {inst.n} agents")
    _emit(fairness_report(inst, alloc).to_dict())


def _allocator_params(args):
    return {"tau": args.tau, "big_m_c": args.big_m_c, "group_constant": args.group_constant,
            "beta": args.beta, "max_passes": args.max_passes}


def _cmd_allocate(args):
    inst = DisutilityMatrix.load(args.instance)
    est = make_allocator(args.algo, **_allocator_params(args)).fit(np.asarray(inst))
    payload = est.outcome_.to_dict()
    payload["fairness"] = None if not est.found_ else fairness_report(inst, est.allocation_).to_dict()
    if args.dump_graph:
        graphs = [json.loads(g.to_json()) for g in est.outcome_.graphs]
        Path(args.dump_graph).write_text(json.dumps(graphs[0] if len(graphs) == 1 else graphs))
    _emit(payload)


def _cmd_oracle(args):
    inst = DisutilityMatrix.load(args.instance)
    fn = exists_envy_free if args.notion == "ef" else exists_proportional
    _emit(fn(inst).to_dict())


def _cmd_certify(args):
    inst = DisutilityMatrix.load(args.instance)
    fn = ef_nonexistence_certificate if args.notion == "ef" else prop_nonexistence_certificate
    _emit(fn(inst).to_dict())


def _cmd_theory(args):
    if args.what == "nu":
        nu = solve_nu()
        _emit({"nu": nu, "residual": nu_equation(nu)})
    else:
        if args.n is None or args.m is None:
            raise ConfigError("theory et needs --n and --m")
        _emit({"n": args.n, "m": args.m, "expected_T": expected_repeated_favorites(args.n, args.m),
               "lower_bound": expected_repeated_favorites_lower_bound(args.n, args.m)})


def _cmd_mc(args):
    options = {k: v for k, v in _allocator_params(args).items() if v is not None}
    config = ExperimentConfig(
        n_values=parse_int_list(args.n), m_rule=args.m_rule, dist=parse_dist(args.dist),
        algorithm=args.algo, trials=args.trials, seed=args.seed, workers=args.workers,
        options=options)
    records = run_grid(config)
    summary = summarize(records)
    text = records_to_csv(records) if args.format == "csv" else records_to_json(records, summary)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise OSError(f"writing {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)
    for cell in summary:
        print(json.dumps(asdict(cell)), file=sys.stderr if not args.out else sys.stdout)


def _add_allocator_flags(p):
    p.add_argument("--tau", type=float)
    p.add_argument("--big-m-c", type=float)
    p.add_argument("--group-constant", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--max-passes", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="chorefair", description="Fair allocation of chores.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--dist", default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("check", help="fairness report for an allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--allocation", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("allocate", help="run an allocator on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", required=True, choices=sorted(ALLOCATORS))
    p.add_argument("--dump-graph", metavar="PATH")
    _add_allocator_flags(p)
    p.set_defaults(func=_cmd_allocate)

    for name, fn in (("oracle", _cmd_oracle), ("certify", _cmd_certify)):
        p = sub.add_parser(name)
        p.add_argument("--instance", required=True)
        p.add_argument("--notion", required=True, choices=["ef", "prop"])
        p.set_defaults(func=fn)

    p = sub.add_parser("theory", help="closed-form quantities")
    p.add_argument("what", choices=["nu", "et"])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("mc", help="Monte Carlo grid")
    p.add_argument("--n", required=True, help="comma-separated agent counts")
    p.add_argument("--m-rule", required=True, help="fixed:M, ratio:RHO or divisible:R")
    p.add_argument("--dist", default="uniform")
    p.add_argument("--algo", default="ef", choices=sorted(ALLOCATORS) + ["none"])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_allocator_flags(p)
    p.set_defaults(func=_cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        args.func(args)
    except (ConfigError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"chorefair: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"chorefair: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: ``pdist`` (build a sided p-value distribution), ``adjust``,
``combine``, ``metrics``, ``simulate``, and ``example gene``.  Single
objects are emitted as JSON (floats at full round-trip precision), tables
as CSV; all diagnostics go to stderr.  Exit codes: 0 success, 2 usage
error, 1 computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .adjust import METHODS, adjust
from .combine import combine, combine_observations
from .distributions import (DiscretePValueDist, StatisticModel,
                            custom_pvalue_distribution, pvalue_distribution)
from .metrics import rank_methods
from .simulate import (LRT_GEOMETRIC, gene_example, power_experiment,
                       scenario_from_json, type1_experiment)

SEED_ENV = "PCOMB_SEED"


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _read_json(path: str):
    return json.loads(_read_text(path))


def _emit(args, text: str) -> None:
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2) + "\n")


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _model_from_args(args) -> StatisticModel:
    if args.model:
        return StatisticModel.from_json(_read_json(args.model))
    flags = {"trials": args.trials, "prob": args.prob, "rate": args.rate,
             "successes": args.successes, "population": args.population,
             "draws": args.draws, "odds": args.odds}
    params = {k: v for k, v in flags.items() if v is not None}
    if args.family == "custom":
        if not (args.support and args.pmf):
            raise ValueError("custom family needs --support and --pmf")
        params = {"support": _ints(args.support), "pmf": _floats(args.pmf)}
    from .distributions import make_statistic_model
    return make_statistic_model(args.family, params)


def _dist_from_path(path: str) -> DiscretePValueDist:
    return DiscretePValueDist.from_json(_read_json(path))


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", help="statistic family (binomial, poisson, ...)")
    p.add_argument("--model", help="JSON model file ('-' for stdin) instead of flags")
    p.add_argument("--trials", type=int)
    p.add_argument("--prob", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--successes", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--odds", type=float)
    p.add_argument("--support", help="comma-separated outcomes (custom family)")
    p.add_argument("--pmf", help="comma-separated masses (custom family)")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="pcomb",
                                  description="discrete p-value combination toolkit")
    sub = top.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--out", default="-", help="output path (default stdout)")
        return p

    p = add_parser("pdist", help="build a sided discrete p-value distribution")
    _add_model_flags(p)
    p.add_argument("--side", required=True, choices=("left", "right", "two"))
    p.add_argument("--atoms", help="comma-separated atoms for a direct custom distribution")

    p = add_parser("adjust", help="adjusted statistic for one method")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--pdist", required=True, help="JSON distribution file ('-' for stdin)")

    p = add_parser("combine", help="combined statistic and global p-value")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--input", required=True,
                   help="JSON file ('-' for stdin); either "
                        '{"tests": [{"model": ..., "side": ..., "x": ...}, ...]} or '
                        '{"pvalues": [...], "dists": [...]}')

    p = add_parser("metrics", help="method-selection diagnostics")
    p.add_argument("--pdist", required=True, nargs="+",
                   help="one or more JSON distribution files")
    p.add_argument("--format", default="csv", choices=("csv", "json"))

    p = add_parser("simulate", help="Monte-Carlo Type I error / power experiments")
    p.add_argument("--scenario", required=True, help="scenario JSON file ('-' for stdin)")
    p.add_argument("--mode", default="type1", choices=("type1", "power"))
    p.add_argument("--methods", default=",".join(METHODS),
                   help=f"comma-separated methods (power mode also accepts {LRT_GEOMETRIC})")
    p.add_argument("--n-grid", default="2,5,10,20,50,100",
                   help="comma-separated test counts (type1 mode)")
    p.add_argument("--n", type=int, default=100, help="tests per replicate (power mode)")
    p.add_argument("--alt-grid", help="comma-separated alternative parameters (power mode)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=20000)
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default from ${SEED_ENV}, else 0)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", default="csv", choices=("csv", "json"))

    p = add_parser("example", help="built-in worked examples")
    p.add_argument("which", choices=("gene",))
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    return top


def _cmd_pdist(args) -> None:
    if args.atoms:
        dist = custom_pvalue_distribution(_floats(args.atoms), args.side)
    else:
        if not (args.family or args.model):
            raise ValueError("pdist needs --family/--model or --atoms")
        dist = pvalue_distribution(_model_from_args(args), args.side)
    _emit_json(args, dist.to_json())


def _cmd_adjust(args) -> None:
    dist = _dist_from_path(args.pdist)
    _emit_json(args, adjust(args.method, dist).to_json())


def _cmd_combine(args) -> None:
    spec = _read_json(args.input)
    if "tests" in spec:
        models = [StatisticModel.from_json(t["model"]) for t in spec["tests"]]
        dists = [pvalue_distribution(m, t["side"]) for m, t in zip(models, spec["tests"])]
        xs = [int(t["x"]) for t in spec["tests"]]
        result = combine_observations(args.method, xs, dists)
    elif "pvalues" in spec:
        dists = [DiscretePValueDist.from_json(d) for d in spec["dists"]]
        result = combine(args.method, [float(p) for p in spec["pvalues"]], dists)
    else:
        raise ValueError("combine input needs either 'tests' or 'pvalues'+'dists'")
    _emit_json(args, result.to_json())


def _cmd_metrics(args) -> None:
    dists = [_dist_from_path(p) for p in args.pdist]
    report = rank_methods(dists if len(dists) > 1 else dists[0])
    if args.format == "json":
        _emit_json(args, report.to_json())
    else:
        _emit(args, report.to_csv())


def _cmd_simulate(args) -> None:
    scenario = scenario_from_json(_read_json(args.scenario))
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(SEED_ENV, "0"))
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.mode == "type1":
        report = type1_experiment(scenario, methods, _ints(args.n_grid),
                                  args.alpha, args.reps, seed, args.workers)
    else:
        if not args.alt_grid:
            raise ValueError("power mode needs --alt-grid")
        report = power_experiment(scenario, methods, _floats(args.alt_grid),
                                  args.n, args.alpha, args.reps, seed, args.workers)
    if args.format == "json":
        _emit_json(args, {"seed": report.seed, "generator": report.generator,
                          "rows": [dict(scenario=r.scenario, method=r.method, n=r.n,
                                        alt_param=r.alt_param, alpha=r.alpha,
                                        reps=r.reps, rejections=r.rejections,
                                        proportion=r.proportion, mc_se=r.mc_se)
                                   for r in report.rows]})
    else:
        _emit(args, report.to_csv())


def _cmd_example(args) -> None:
    report = gene_example()
    if args.format == "json":
        _emit_json(args, report.to_json())
    else:
        _emit(args, report.to_csv())


_DISPATCH = {"pdist": _cmd_pdist, "adjust": _cmd_adjust, "combine": _cmd_combine,
             "metrics": _cmd_metrics, "simulate": _cmd_simulate, "example": _cmd_example}


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _DISPATCH[args.command](args)
    except BrokenPipeError:
        return 1
    except (ValueError, RuntimeError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"pcomb: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

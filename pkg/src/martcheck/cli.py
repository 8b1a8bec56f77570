"""Command line front end.

Subcommands map one-to-one onto the library evaluators:

    verify-discrete    exact inequality checks on a tree file
    verify-continuous  Monte Carlo checks of the integral inequalities
    sharpness          parametric search for near-extremal witnesses
    random-trees       randomized sweep over generated trees
    compare-constants  classic vs improved constants at given exponents
    gaussian-moment    E|Z|^p reference value

Exit codes: 0 all checks passed, 1 violation / invalid input / error,
2 at least one inconclusive Monte Carlo verdict (without
--allow-inconclusive). Every run with --out BASE writes BASE.json
(a manifest plus results) and, for tabular commands, BASE.csv; reruns of
the same command line are byte-identical apart from the duration field.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from typing import Any, Sequence

from . import __version__, formats, ineq, ptree, sharpness, wiener_mc
from .errors import ConfigError, MartcheckError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, keeping 2 for the inconclusive verdict
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_FAIL)


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _report_line(r: ineq.InequalityReport) -> str:
    parts = [f"{r.id} p={r.p:g} n_or_t={r.n_or_t:g}",
             f"lhs={r.lhs:.12g} rhs={r.rhs:.12g} ratio={r.ratio:.12g}"]
    if r.ci_lhs is not None:
        parts.append(f"ci_lhs={r.ci_lhs:.3g} ci_rhs={r.ci_rhs:.3g}")
    parts.append(r.verdict)
    return "  ".join(parts)


def _write_out(base: str, command: str, argv: Sequence[str], params: dict,
               results: Any, rows: list[dict] | None, started: float) -> None:
    manifest = {
        "command": command,
        "argv": list(argv),
        "params": params,
        "version": __version__,
        "duration_s": time.monotonic() - started,
    }
    with open(base + ".json", "w", encoding="utf-8") as fh:
        json.dump({"manifest": manifest, "results": results},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    if rows is not None:
        with open(base + ".csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=formats.CSV_FIELDS)
            writer.writeheader()
            writer.writerows(rows)


def _coerce_ids(values: Sequence[str] | None, default, coerce):
    if not values:
        return list(default)
    return [coerce(v) for v in values]


def _cmd_verify_discrete(args, argv) -> int:
    started = time.monotonic()
    ids = _coerce_ids(args.ineq, ineq.DISCRETE_EVAL_IDS, ineq.coerce_id)
    for iid in ids:
        if iid not in ineq.DISCRETE_EVAL_IDS:
            raise ConfigError(f"{iid.value} is not a tree inequality")
    tree = formats.parse_tree(_load_json(args.tree))
    tree.require_valid()
    levels = range(tree.depth + 1) if args.n is None else [args.n]
    reports = [ineq.eval_discrete(tree, n, p, iid)
               for n in levels for p in args.p for iid in ids]
    for r in reports:
        print(_report_line(r))
    if args.out:
        _write_out(args.out, "verify-discrete", argv,
                   {"tree": args.tree, "p": list(args.p), "n": args.n,
                    "ineq": [i.value for i in ids]},
                   [formats.report_row(r) for r in reports],
                   [formats.csv_row(r) for r in reports], started)
    return EXIT_OK if all(r.satisfied for r in reports) else EXIT_FAIL


def _cmd_verify_continuous(args, argv) -> int:
    started = time.monotonic()
    ids = _coerce_ids(args.ineq, wiener_mc.ContinuousId,
                      wiener_mc.coerce_continuous_id)
    spec = formats.parse_integrand(_load_json(args.integrand))
    t = spec.horizon if args.t is None else args.t
    reports = [wiener_mc.eval_continuous(spec, t, args.p, cid, args.paths, args.seed)
               for cid in ids]
    for r in reports:
        print(_report_line(r))
    if args.out:
        _write_out(args.out, "verify-continuous", argv,
                   {"integrand": args.integrand, "t": t, "p": args.p,
                    "paths": args.paths, "seed": args.seed,
                    "ineq": [i.value for i in ids]},
                   [formats.report_row(r) for r in reports],
                   [formats.csv_row(r) for r in reports], started)
    verdicts = {r.verdict for r in reports}
    if "violation-candidate" in verdicts:
        return EXIT_FAIL
    if "inconclusive" in verdicts and not args.allow_inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _cmd_sharpness(args, argv) -> int:
    started = time.monotonic()
    config = formats.parse_search(_load_json(args.config))
    result = sharpness.search(config)
    print(f"family={config.family.tag} method={config.method} "
          f"target={config.target} p={config.family.p:g}")
    print(f"best_ratio={result.best_ratio:.12g} bound={result.bound:.12g} "
          f"evaluations={result.evaluations}")
    print("best_params=" + json.dumps(result.best_params, sort_keys=True))
    if result.exceeded:
        print("soundness bound exceeded: violation finding", file=sys.stderr)
    if args.out:
        _write_out(args.out, "sharpness", argv,
                   formats.search_to_obj(config),
                   formats.search_result_to_obj(result), None, started)
    return EXIT_FAIL if result.exceeded else EXIT_OK


def _cmd_random_trees(args, argv) -> int:
    started = time.monotonic()
    ids = _coerce_ids(args.ineq, ineq.DISCRETE_EVAL_IDS, ineq.coerce_id)
    for iid in ids:
        if iid not in ineq.DISCRETE_EVAL_IDS:
            raise ConfigError(f"{iid.value} is not a tree inequality")
    reports = list(ineq.sweep_random_trees(
        args.count, args.max_depth, args.max_dim, args.seed, args.p, ids))
    bad = [r for r in reports if not r.satisfied]
    for r in bad:
        print(_report_line(r) + f"  [{r.notes}]")
    print(f"{len(reports)} checks on {args.count} trees: "
          f"{len(reports) - len(bad)} satisfied, {len(bad)} violations")
    if args.out:
        _write_out(args.out, "random-trees", argv,
                   {"count": args.count, "max_depth": args.max_depth,
                    "max_dim": args.max_dim, "seed": args.seed,
                    "p": list(args.p), "ineq": [i.value for i in ids]},
                   [formats.report_row(r) for r in reports],
                   [formats.csv_row(r) for r in reports], started)
    return EXIT_FAIL if bad else EXIT_OK


def _cmd_compare_constants(args, argv) -> int:
    started = time.monotonic()
    rows = []
    for p in args.p:
        c = ineq.compare_constants(p)
        rows.append(vars(c).copy())
        print(f"p={c.p:g}  main: {c.classic_main:g} -> {c.new_main:g} "
              f"(improved={c.improved_main})  max: {c.classic_max:g} -> "
              f"{c.new_max:g} (improved={c.improved_max})")
    if args.out:
        _write_out(args.out, "compare-constants", argv,
                   {"p": list(args.p)}, rows, None, started)
    return EXIT_OK


def _cmd_gaussian_moment(args, argv) -> int:
    started = time.monotonic()
    value = wiener_mc.gaussian_abs_moment(args.p)
    print(f"E|Z|^{args.p:g} = {value:.12g}")
    if args.out:
        _write_out(args.out, "gaussian-moment", argv,
                   {"p": args.p}, {"value": value}, None, started)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="martcheck",
                     description="exact and Monte Carlo checks of martingale "
                                 "moment inequalities")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", metavar="BASE",
                       help="write BASE.json (and BASE.csv for tabular output)")

    p = sub.add_parser("verify-discrete", help="exact checks on a tree file")
    p.add_argument("--tree", required=True, help="tree JSON file")
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--n", type=int, default=None,
                   help="level to check (default: all levels)")
    p.add_argument("--ineq", nargs="+", help="inequality ids (default: all)")
    common(p)
    p.set_defaults(func=_cmd_verify_discrete)

    p = sub.add_parser("verify-continuous", help="Monte Carlo integral checks")
    p.add_argument("--integrand", required=True, help="integrand JSON file")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t", type=float, default=None,
                   help="evaluation time (default: the horizon)")
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ineq", nargs="+", help="inequality ids (default: all)")
    p.add_argument("--allow-inconclusive", action="store_true",
                   help="exit 0 instead of 2 on inconclusive verdicts")
    common(p)
    p.set_defaults(func=_cmd_verify_continuous)

    p = sub.add_parser("sharpness", help="run a witness search")
    p.add_argument("--config", required=True, help="search config JSON file")
    common(p)
    p.set_defaults(func=_cmd_sharpness)

    p = sub.add_parser("random-trees", help="randomized tree sweep")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--max-dim", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, nargs="+", default=[2.0, 3.0, 4.0])
    p.add_argument("--ineq", nargs="+", help="inequality ids (default: all)")
    common(p)
    p.set_defaults(func=_cmd_random_trees)

    p = sub.add_parser("compare-constants", help="constant comparison table")
    p.add_argument("--p", type=float, nargs="+", required=True)
    common(p)
    p.set_defaults(func=_cmd_compare_constants)

    p = sub.add_parser("gaussian-moment", help="Gaussian absolute moment")
    p.add_argument("--p", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_gaussian_moment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except MartcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``cpcomplete <subcommand> ...``.

Exit status is 0 for a definitive answer, 2 for an inconclusive one and 1 for
any error, usage errors included.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bounds as B
from .checker import INCONCLUSIVE, CheckerLimits, check_pattern
from .constraint import build_constraint_tensor, read_basis
from .errors import CompletionError
from .experiments import ExperimentConfig, GenConfig, format_experiment_csv, generate_pattern, \
    run_experiment
from .oracle import FULL, REDUCED, VARIETY, generic_jacobian_rank, oracle_report
from .pattern import format_pattern, read_pattern

SEED_ENV = "CPCOMPLETE_SEED"
EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _limits(text: str | None, seed: int) -> CheckerLimits:
    keys = {"exhaustive": "max_subset_exhaustive", "nodes": "max_candidate_search",
            "random": "random_subsets"}
    kw = {"seed": seed}
    for item in filter(None, (text or "").split(",")):
        name, _, value = item.partition("=")
        if name.strip() not in keys or not value.strip().isdigit():
            raise UsageError(f"bad --limits item {item!r}; use exhaustive=N,nodes=N,random=N")
        kw[keys[name.strip()]] = int(value)
    return CheckerLimits(**kw)


def _p_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise UsageError("p-grid step must be positive")
        n = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(v) for v in text.split(","))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    pattern = read_pattern(args.pattern, one_based=args.one_based)
    basis = None
    if getattr(args, "basis", None):
        basis = read_basis(args.basis, pattern, args.rank, one_based=args.one_based)
    return pattern, basis


def _ids(ids, shift):
    return [j + shift for j in ids]


def cmd_check(args) -> int:
    pattern, basis = _load(args)
    unique = args.command == "check-unique"
    res = check_pattern(pattern, args.rank, _limits(args.limits, args.seed), basis, unique)
    shift = 1 if args.one_based else 0
    fin = res.finite
    out = {"finite": {"verdict": fin.verdict, "required_count": fin.required, "K": fin.K,
                      "reason": fin.reason,
                      "witness": _ids(fin.witness.slice_ids, shift) if fin.witness else None,
                      "witness_m": list(fin.witness.m) if fin.witness else None}}
    verdict = fin.verdict
    if unique:
        u = res.unique
        verdict = u.verdict
        out["unique"] = {"verdict": u.verdict, "reason": u.reason,
                         "extras": [_ids(s.slice_ids, shift) for s in u.witness.extras]
                         if u.witness else None}
    if args.json:
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        print(verdict)
        for key, part in out.items():
            if part.get("reason"):
                print(f"{key}: {part['reason']}")
        if fin.witness is not None:
            print("witness:", " ".join(map(str, out["finite"]["witness"])))
    return EXIT_INCONCLUSIVE if verdict == INCONCLUSIVE else EXIT_OK


def cmd_constraint(args) -> int:
    pattern, basis = _load(args)
    ct = build_constraint_tensor(pattern, args.rank, basis)
    _emit(ct.format(args.one_based), args.output)
    if args.output:
        Path(args.output + ".rows").write_text(ct.format_rows(args.one_based))
    return EXIT_OK


def cmd_oracle(args) -> int:
    pattern, basis = _load(args)
    if args.mode == "all":
        out = oracle_report(pattern, args.rank, args.trials, args.seed, basis=basis).as_dict()
    else:
        kw = {"basis": basis} if args.mode == REDUCED else {}
        est = generic_jacobian_rank(pattern, args.rank, args.mode, args.trials, args.seed, **kw)
        out = {"mode": args.mode, "rank": est.rank, "per_trial": list(est.per_trial),
               "stable_fraction": est.stable_fraction}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_bounds(args) -> int:
    n, d, r, eps = args.n, args.d, args.r, args.eps
    results = {}
    kinds = ["unfolding", "cp-finite", "cp-unique", "probability-finite",
             "probability-unique"] if args.kind == "all" else [args.kind]
    for kind in kinds:
        if kind == "matrix":
            res = B.matrix_bound(n, r, eps)
        elif kind == "unfolding":
            res = (B.unfolding_bound(n, d, r, eps, args.isize) if args.isize
                   else B.best_unfolding_bound(n, d, r, eps))
        elif kind == "cp-finite":
            res = B.cp_finite_bound(n, d, r, eps)
        elif kind == "cp-unique":
            res = B.cp_unique_bound(n, d, r, eps)
        else:
            res = B.sampling_probability_bound(n, d, r, eps, kind.split("-")[1])
        results[kind] = res.as_dict(args.integer)
    print(json.dumps({"n": n, "d": d, "r": r, "eps": eps, "bounds": results},
                     indent=2, sort_keys=True))
    return EXIT_OK


def cmd_figure1(args) -> int:
    lines = ["r,unfolding_total,cp_total"]
    if args.rmin > args.rmax:
        raise UsageError(f"--rmin {args.rmin} exceeds --rmax {args.rmax}")
    for r in range(args.rmin, args.rmax + 1):
        unf = B.best_unfolding_bound(args.n, args.d, r, args.eps)
        cp = B.cp_finite_bound(args.n, args.d, r, args.eps)
        if args.integer:
            lines.append(f"{r},{int(unf.columns) * B.integer_samples(unf.per_column_l)},"
                         f"{int(cp.columns) * B.integer_samples(cp.per_column_l)}")
        else:
            lines.append(f"{r},{unf.total_samples!r},{cp.total_samples!r}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = GenConfig(tuple(args.dims), args.p, args.seed, args.enforce_rank is not None,
                    args.enforce_rank or 1)
    pattern, forced = generate_pattern(cfg)
    comments = [f"p={args.p} seed={args.seed}"]
    if cfg.enforce_occupancy:
        comments.append(f"row top-up to {cfg.rank} entries: {forced} forced entries")
    _emit(format_pattern(pattern, args.one_based, comments), args.output)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig(tuple(args.dims), args.rank, _p_grid(args.p_grid), args.trials,
                           args.seed, args.checker, args.enforce, args.unique,
                           args.oracle_trials, _limits(args.limits, args.seed), args.workers)
    _emit(format_experiment_csv(run_experiment(cfg)), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    p = _Parser(prog="cpcomplete",
                description="Finite and unique completability of sampled CP-rank tensors.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pattern_cmd(name, help_, basis=True):
        s = sub.add_parser(name, help=help_)
        s.add_argument("pattern", help="pattern file")
        s.add_argument("--rank", "-r", type=int, required=True)
        s.add_argument("--one-based", action="store_true", help="1-based coordinates in files")
        if basis:
            s.add_argument("--basis", help="file listing r observed entries per mode-d row")
        s.add_argument("--seed", type=int, default=seed, help=f"default from ${SEED_ENV}")
        return s

    for name in ("check-finite", "check-unique"):
        s = pattern_cmd(name, f"combinatorial {name.split('-')[1]} completability check")
        s.add_argument("--limits", help="exhaustive=N,nodes=N,random=N")
        s.add_argument("--json", action="store_true")
        s.set_defaults(func=cmd_check)

    s = pattern_cmd("constraint", "write the constraint tensor as a pattern file")
    s.add_argument("-o", "--output", help="output path (a .rows sidecar maps slices to rows)")
    s.set_defaults(func=cmd_constraint)

    s = pattern_cmd("oracle", "generic Jacobian rank over a prime field (JSON)")
    s.add_argument("--mode", choices=[REDUCED, FULL, VARIETY, "all"], default="all")
    s.add_argument("--trials", type=int, default=3)
    s.add_argument("--json", action="store_true", help="accepted for symmetry; output is JSON")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("bounds", help="evaluate the sample-complexity bounds (JSON)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--isize", type=int, help="unfolding row-mode count; best choice if omitted")
    s.add_argument("--kind", default="all",
                   choices=["all", "matrix", "unfolding", "cp-finite", "cp-unique",
                            "probability-finite", "probability-unique"])
    s.add_argument("--integer", action="store_true", help="smallest integer l above each bound")
    s.add_argument("--json", action="store_true", help="accepted for symmetry; output is JSON")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("figure1", help="CSV comparing unfolding and CP totals over r")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--d", type=int, default=7)
    s.add_argument("--eps", type=float, default=0.001)
    s.add_argument("--rmin", type=int, default=1)
    s.add_argument("--rmax", type=int, default=150)
    s.add_argument("--integer", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_figure1)

    s = sub.add_parser("gen", help="random Bernoulli sampling pattern")
    s.add_argument("--dims", type=int, nargs="+", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--enforce-rank", type=int, help="top up mode-d rows to this many entries")
    s.add_argument("--one-based", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("experiment", help="Monte-Carlo completability sweep (CSV)")
    s.add_argument("--dims", type=int, nargs="+", required=True)
    s.add_argument("--rank", "-r", type=int, required=True)
    s.add_argument("--p-grid", default="0.05:0.95:0.05", help="start:stop:step or a,b,c")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=seed)
    s.add_argument("--checker", choices=["oracle-reduced", "oracle-full", "combinatorial"],
                   default="oracle-reduced")
    s.add_argument("--oracle-trials", type=int, default=1)
    s.add_argument("--enforce", action="store_true", help="top up sparse mode-d rows to the rank")
    s.add_argument("--unique", action="store_true", help="also run the unique check")
    s.add_argument("--limits")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except (CompletionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

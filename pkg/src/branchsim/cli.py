"""Command-line entry point: ``branchsim <subcommand>``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric
failure (overflow or no convergence).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .core import INFEASIBLE, MAX_TREE_SIZE, build_dominance_dag, read_instance
from .errors import BranchSimError, NumericError, VerificationFailed
from .gvb import gvb_opt_size, gvb_opt_size_with_forced_root, verify_prop3_counterexample
from .ratio import classify_solvability, compute_phi
from .scoring import RuleKind, ScoringParams, SelectionRule
from .sim import (
    GENERATOR,
    REFERENCE_GAPS,
    Category,
    ExperimentConfig,
    RunRecord,
    continuous_pairs,
    count_nondominated_subsets,
    enumerate_frontiers,
    expected_nondominated_count,
    generate_instance,
    instance_seed,
    run_experiment,
)
from .trees import mvb_table, svb_size, verify_mvb_counterexample

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 20190101


@dataclass
class RunManifest:
    command: list[str]
    seed: int | None
    generator: str = GENERATOR
    version: str = __version__
    python: str = platform.python_version()
    numpy: str = np.__version__
    started: float = field(default_factory=time.time)
    wall_clock_s: float = 0.0
    parameters: dict = field(default_factory=dict)


def default_seed() -> int:
    env = os.environ.get("BRANCHSIM_SEED")
    return int(env) if env else DEFAULT_SEED


def _size_str(size) -> str:
    return "infeasible" if size == INFEASIBLE else str(size)


def _emit(args, table_text: str, rows: list[dict], fields: list[str], extra=None):
    fmt = getattr(args, "format", "table")
    if fmt == "json":
        payload = {"rows": rows}
        if extra:
            payload.update(extra)
        payload["manifest"] = asdict(args.manifest)
        print(json.dumps(payload, indent=2, default=str))
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        print(table_text)


# -- subcommands -------------------------------------------------------------


def cmd_phi(args):
    res = compute_phi((args.l, args.r), tol=args.tol)
    row = {
        "l": min(args.l, args.r),
        "r": max(args.l, args.r),
        "phi": repr(res.phi),
        "phi_pow_l": repr(res.phi_pow_l),
        "iterations": res.iterations,
        "method": res.method.value,
    }
    text = "\n".join(f"{k:<11}{v}" for k, v in row.items())
    _emit(args, text, [row], list(row))
    return EXIT_OK


def cmd_classify(args):
    res = classify_solvability((args.l, args.r))
    row = {
        "verdict": res.verdict.value,
        "d": res.d,
        "k1": res.k1,
        "k2": res.k2,
        "reducible": res.reducible,
        "detail": res.detail,
    }
    text = "\n".join(f"{k:<10}{v}" for k, v in row.items())
    _emit(args, text, [row], list(row))
    return EXIT_OK


def _limit(args):
    return None if getattr(args, "unbounded", False) else MAX_TREE_SIZE


def cmd_svb(args):
    size = svb_size((args.l, args.r), args.gap, limit=_limit(args))
    _emit(args, str(size), [{"gap": args.gap, "size": size}], ["gap", "size"])
    return EXIT_OK


def cmd_mvb(args):
    inst = read_instance(args.instance)
    gap = inst.gap if args.gap is None else args.gap
    table = mvb_table(inst.variables, gap, limit=_limit(args))
    rows = [{"gap": g, "size": table.sizes[g], "choice": table.choice[g]} for g in range(gap + 1)]
    text = f"{table.sizes[gap]} (root variable {table.choice[gap]})"
    if args.format == "table":
        _emit(args, text, rows[-1:], ["gap", "size", "choice"])
    else:
        _emit(args, text, rows, ["gap", "size", "choice"])
    return EXIT_OK


def cmd_gvb(args):
    inst = read_instance(args.instance)
    if args.force_root is None:
        size = gvb_opt_size(inst)
    else:
        size = gvb_opt_size_with_forced_root(inst, args.force_root)
    row = {"gap": inst.gap, "force_root": args.force_root, "size": _size_str(size)}
    _emit(args, _size_str(size), [row], list(row))
    return EXIT_OK


def cmd_score(args):
    inst = read_instance(args.instance)
    gap = inst.gap if args.gap is None else args.gap
    rule = SelectionRule(RuleKind(args.rule), ScoringParams(height_mode=args.height_mode))
    cands = [(i, v) for i, (v, m) in enumerate(zip(inst.variables, inst.multiplicities)) if m > 0]
    scores = rule.scores(cands, gap)
    chosen = rule.select(cands, gap)
    rows = [
        {"index": i, "l": v.l, "r": v.r, "score": s, "selected": i == chosen}
        for (i, v), s in zip(cands, scores)
    ]
    lines = [f"{'index':>5} {'l':>6} {'r':>6} {'score':>22}"]
    lines += [
        f"{r['index']:>5} {r['l']:>6} {r['r']:>6} {r['score']:>22.12g}{'  *' if r['selected'] else ''}"
        for r in rows
    ]
    lines.append(f"selected: {chosen}")
    _emit(args, "\n".join(lines), rows, ["index", "l", "r", "score", "selected"])
    return EXIT_OK


def _parse_rules(text: str) -> list[RuleKind]:
    return [RuleKind(t.strip()) for t in text.split(",") if t.strip()]


def _write_records(path, records: list[RunRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RunRecord.CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(r.as_row() for r in records)


def _render_summary(rows, rules) -> str:
    names = [RuleKind(r).value for r in rules]
    head = f"{'Category':<22}{'Gap':>7}" + "".join(f"{n:>10}" for n in names) + f"{'used':>7}{'excl':>6}"
    lines = [head, "-" * len(head)]
    for row in rows:
        finite = {n: v for n, v in row.relative.items() if not math.isnan(v)}
        best = min(finite, key=finite.get) if finite else None
        cells = ""
        for n in names:
            val = row.relative[n]
            cell = f"{val:.2f}" + ("*" if n == best and val < 0 else "")
            cells += f"{cell:>10}"
        lines.append(f"{row.category:<22}{row.gap:>7}{cells}{row.n_used:>7}{row.n_excluded:>6}")
    return "\n".join(lines)


def _summary_rows(rows, rules):
    out = []
    for row in rows:
        d = {"category": row.category, "gap": row.gap}
        for n in [RuleKind(r).value for r in rules]:
            d[n] = row.relative[n]
        d["n_used"] = row.n_used
        d["n_excluded"] = row.n_excluded
        out.append(d)
    return out


def _progress_printer(enabled: bool):
    if not enabled:
        return None

    def show(done, total):
        if done == total or done % max(1, total // 100) == 0:
            print(f"\r{done}/{total} instances", end="" if done < total else "\n", file=sys.stderr)

    return show


def cmd_simulate(args):
    cat = Category.parse(args.category)
    rules = _parse_rules(args.rules)
    cfg = ExperimentConfig(
        [cat],
        n_vars=args.n,
        gaps={cat: tuple(args.gap)},
        n_instances=args.instances,
        seed=args.seed,
        rules=rules,
        params=ScoringParams(height_mode=args.height_mode),
    )
    args.manifest.parameters.update(config_manifest(cfg))
    if args.emit_dag:
        first = generate_instance(cat, args.n, instance_seed(args.seed, cat, 0))
        with open(args.emit_dag, "w") as fh:
            fh.write(build_dominance_dag(first.variables).to_dot(first.variables))
    result = run_experiment(cfg, jobs=args.jobs, progress=_progress_printer(args.progress))
    if args.out:
        _write_records(args.out, result.records)
    rows = _summary_rows(result.rows, rules)
    fields = ["category", "gap"] + [r.value for r in rules] + ["n_used", "n_excluded"]
    _emit(args, _render_summary(result.rows, rules), rows, fields)
    return EXIT_OK


def config_manifest(cfg: ExperimentConfig) -> dict:
    return {
        "categories": [c.label for c in cfg.categories],
        "n_vars": cfg.n_vars,
        "gaps": {c.label: list(cfg.gaps[c]) for c in cfg.categories},
        "n_instances": cfg.n_instances,
        "seed": cfg.seed,
        "rules": [r.value for r in cfg.rules],
        "params": asdict(cfg.params),
    }


def desk_config(seed: int, instances: int | None = None) -> ExperimentConfig:
    gaps = {c: tuple(g // 2 for g in REFERENCE_GAPS[c]) for c in Category}
    return ExperimentConfig(list(Category), n_vars=30, gaps=gaps, n_instances=instances or 100, seed=seed)


def full_config(seed: int, instances: int | None = None) -> ExperimentConfig:
    return ExperimentConfig(list(Category), n_vars=60, gaps=dict(REFERENCE_GAPS), n_instances=instances or 3000, seed=seed)


def cmd_table9(args):
    make = desk_config if args.scale == "desk" else full_config
    cfg = make(args.seed, args.instances)
    args.manifest.parameters.update(config_manifest(cfg))
    args.manifest.parameters["scale"] = args.scale
    result = run_experiment(cfg, jobs=args.jobs, progress=_progress_printer(args.progress or args.scale == "full"))
    if args.out:
        _write_records(args.out, result.records)
    rows = _summary_rows(result.rows, cfg.rules)
    fields = ["category", "gap"] + [r.value for r in cfg.rules] + ["n_used", "n_excluded"]
    _emit(args, _render_summary(result.rows, cfg.rules), rows, fields)
    return EXIT_OK


def subset_count_check(n: int, trials: int, seed: int, method: str = "brute") -> dict:
    """Empirical mean of dominance-free subset counts against the exact expectation."""
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = []
    for _ in range(trials):
        pairs = continuous_pairs(n, rng)
        if method == "brute":
            counts.append(count_nondominated_subsets(pairs))
        else:
            counts.append(len(enumerate_frontiers(pairs)))
    arr = np.asarray(counts, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.inf
    expected = expected_nondominated_count(n)
    z = (mean - expected) / se if se > 0 else 0.0
    return {"n": n, "trials": trials, "mean": mean, "std_error": se, "expected": expected, "z": z,
            "passed": abs(z) <= 3.0}


def cmd_count_subsets(args):
    res = subset_count_check(args.n, args.trials, args.seed, "brute" if args.n <= 20 and not args.frontiers else "frontier")
    text = (
        f"n={res['n']} trials={res['trials']}\n"
        f"empirical mean {res['mean']:.4f} (s.e. {res['std_error']:.4f})\n"
        f"expected       {res['expected']:.4f}\n"
        f"z              {res['z']:+.3f}"
    )
    _emit(args, text, [res], list(res))
    return EXIT_OK


def _verify_mvb(gap_max):
    report = verify_mvb_counterexample(gap_max, raise_on_failure=False)
    bad = report.first_failure()
    detail = (
        f"closed form == DP for G <= {gap_max}; (2,4) strictly better at {len(report.strict_gaps)} gaps"
        if bad is None
        else f"failing gap {bad.gap}: dp={bad.dp} closed_form={bad.closed_form}"
    )
    return {"check": "mvb", "passed": report.passed, "detail": detail}


def _verify_prop3():
    report = verify_prop3_counterexample(raise_on_failure=False)
    via = ", ".join(f"{v}: {_size_str(s)}" for v, s in report.via.items())
    return {"check": "prop3", "passed": report.passed, "detail": f"optimum {_size_str(report.optimal)}; forced roots {via}"}


def _verify_subset_count(n, trials, seed):
    res = subset_count_check(n, trials, seed)
    detail = f"n={n}: mean {res['mean']:.3f} vs expected {res['expected']:.3f} (z={res['z']:+.2f})"
    return {"check": "eq13", "passed": res["passed"], "detail": detail}


def cmd_verify(args):
    quick = args.quick
    gap_max = 100 if quick else args.gap_max
    checks = []
    if args.what in ("mvb", "all"):
        checks.append(_verify_mvb(gap_max))
    if args.what in ("prop3", "all"):
        checks.append(_verify_prop3())
    if args.what == "all":
        checks.append(_verify_subset_count(8 if quick else 10, 300 if quick else 2000, args.seed))
    text = "\n".join(f"{c['check']:<6} {'pass' if c['passed'] else 'FAIL'}  {c['detail']}" for c in checks)
    _emit(args, text, checks, ["check", "passed", "detail"])
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_VERIFY


# -- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--manifest", dest="manifest_path", metavar="FILE", help="write the run manifest as JSON")

    p = _Parser(prog="branchsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("phi", parents=[common], help="ratio of a variable")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--tol", type=float, default=1e-12)
    s.set_defaults(func=cmd_phi)

    s = sub.add_parser("classify", parents=[common], help="solvability by radicals")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("svb", parents=[common], help="single-variable tree size")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--gap", type=int, required=True)
    s.add_argument("--unbounded", action="store_true", help="disable the 128-bit guard")
    s.set_defaults(func=cmd_svb)

    s = sub.add_parser("mvb", parents=[common], help="multiple-variable tree size")
    s.add_argument("--instance", required=True)
    s.add_argument("--gap", type=int, help="override the instance gap")
    s.add_argument("--unbounded", action="store_true", help="disable the 128-bit guard")
    s.set_defaults(func=cmd_mvb)

    s = sub.add_parser("gvb", parents=[common], help="optimal general-variable tree size")
    s.add_argument("--instance", required=True)
    s.add_argument("--force-root", type=int)
    s.set_defaults(func=cmd_gvb)

    s = sub.add_parser("score", parents=[common], help="per-candidate scores and the selection")
    s.add_argument("--rule", choices=[k.value for k in RuleKind], required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--gap", type=int)
    s.add_argument("--height-mode", choices=("min", "max"), default="min")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("simulate", parents=[common], help="simulate random instances under rules")
    s.add_argument("--category", required=True)
    s.add_argument("--n", type=int, default=60)
    s.add_argument("--gap", type=int, nargs="+", required=True)
    s.add_argument("--instances", type=int, default=100)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--rules", default="product,ratio,svts")
    s.add_argument("--height-mode", choices=("min", "max"), default="min")
    s.add_argument("--out", help="per-instance CSV")
    s.add_argument("--emit-dag", metavar="FILE", help="DOT of the first instance's reduced dominance DAG")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--progress", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("count-subsets", parents=[common], help="dominance-free subset counts vs expectation")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--frontiers", action="store_true", help="count via frontier enumeration")
    s.set_defaults(func=cmd_count_subsets)

    s = sub.add_parser("verify", parents=[common], help="run verification checks")
    s.add_argument("what", choices=("mvb", "prop3", "all"))
    s.add_argument("--gap-max", type=int, default=1000)
    s.add_argument("--quick", action="store_true")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("table9", parents=[common], help="rule comparison on random instances")
    s.add_argument("--scale", choices=("desk", "full"), default="desk")
    s.add_argument("--instances", type=int, help="override the instance count")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", help="per-instance CSV")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--progress", action="store_true")
    s.set_defaults(func=cmd_table9)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = default_seed()
    if args.command == "verify" and args.gap_max < 8 and not args.quick:
        print("branchsim: error: --gap-max must be >= 8", file=sys.stderr)
        return EXIT_USAGE
    args.manifest = RunManifest(["branchsim", *argv], getattr(args, "seed", None))
    args.manifest.parameters.update(
        {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "manifest_path")}
    )
    try:
        code = args.func(args)
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        code = EXIT_VERIFY
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    except (BranchSimError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    args.manifest.wall_clock_s = time.time() - args.manifest.started
    if args.manifest_path:
        with open(args.manifest_path, "w") as fh:
            json.dump(asdict(args.manifest), fh, indent=2, default=str)
    return code


if __name__ == "__main__":
    sys.exit(main())

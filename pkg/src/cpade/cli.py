"""Command-line entry point: ``cpade run|list-problems|parse|compare``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from itertools import product

from .benchmarks import FUNCTIONS
from .campaign import CampaignError, load_campaign, read_runs, render_tally, resolve_output, run_campaign
from .stats import compare_means, summarize, tally, wilcoxon_ranksum
from .variants import VariantError, parse_variant


def _cmd_run(args) -> int:
    try:
        config = load_campaign(args.config)
    except CampaignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = resolve_output(args.out, config)
    return run_campaign(config, out_dir=out, jobs=args.jobs, resume=args.resume)


def _cmd_list(args) -> int:
    for name, (_, half, description) in FUNCTIONS.items():
        print(f"{name:<4} {description:<24} [-{half:g}, {half:g}]^n")
    return 0


def _cmd_parse(args) -> int:
    try:
        spec = parse_variant(args.variant)
    except VariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(spec.describe(), indent=2))
    return 0


def _cmd_compare(args) -> int:
    try:
        rows_a = read_runs(args.csv_a)
        rows_b = read_runs(args.csv_b)
    except (OSError, CampaignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    def group(rows):
        out = {}
        for row in rows:
            out.setdefault(row["algorithm"], {}).setdefault((row["problem"], row["dim"]), []).append(row["best_error"])
        return out

    ga, gb = group(rows_a), group(rows_b)
    records, table = [], []
    for alg_a, alg_b in product(ga, gb):
        if alg_a == alg_b:
            continue
        shared = [key for key in ga[alg_a] if key in gb[alg_b]]
        for dim in sorted({d for _, d in shared}):
            outcomes = []
            for name, d in shared:
                if d != dim:
                    continue
                ea, eb = ga[alg_a][(name, d)], gb[alg_b][(name, d)]
                if args.mode == "means":
                    outcome, p = compare_means(summarize(ea)[0], summarize(eb)[0]), ""
                else:
                    cell = wilcoxon_ranksum(ea, eb, args.alpha)
                    outcome, p = cell.outcome, format(cell.p_value, ".6g")
                outcomes.append(outcome)
                records.append([dim, name, alg_a, alg_b, outcome, p])
            table.append((dim, alg_a, alg_b) + tally(outcomes))
    if not records:
        print("error: the two files share no (problem, dim) with different algorithms", file=sys.stderr)
        return 1
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["dim", "problem", "algorithm_a", "algorithm_b", "outcome", "p_value"])
    writer.writerows(records)
    print()
    print(render_tally(table), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpade", description="CPA-DE experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a campaign file")
    run.add_argument("config")
    run.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    run.add_argument("--resume", action="store_true", help="skip runs already in the output")
    run.add_argument("--out", default=None, help="output directory")
    run.set_defaults(func=_cmd_run)

    lst = sub.add_parser("list-problems", help="list benchmark functions")
    lst.set_defaults(func=_cmd_list)

    parse = sub.add_parser("parse", help="echo the configuration a variant string resolves to")
    parse.add_argument("variant")
    parse.set_defaults(func=_cmd_parse)

    cmp_ = sub.add_parser("compare", help="rank-sum table between two runs CSVs")
    cmp_.add_argument("csv_a")
    cmp_.add_argument("csv_b")
    cmp_.add_argument("--alpha", type=float, default=0.05)
    cmp_.add_argument("--mode", choices=["wilcoxon", "means"], default="wilcoxon")
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

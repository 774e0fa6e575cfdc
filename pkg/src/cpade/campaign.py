"""Campaign execution: seeded repetitions over problems and algorithms, CSV outputs.

A campaign file is YAML::

    problems:                 # list of {name, dimension} or "name:dim" strings
      - {name: f1, dimension: 10}
      - f5:10
    # or a cross product
    # problems: {functions: [f1, f4, f5, f6], dimensions: [10, 50]}
    algorithms:
      - CPA_8_0.2_50_200-DE_R^60
      - DE_R^60 F=0.5 CR=0.9
    runs: 25
    budget: soco              # soco (5000 n), cec (10000 n) or an integer
    master_seed: 1
    shift_seed: 0             # optional, seeds the problem shift vectors
    output: results           # optional
    comparisons: all          # all pairs, or the label of a reference algorithm
"""

from __future__ import annotations

import csv
import io
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from .benchmarks import FUNCTIONS, make_problem
from .core import EvalBudget, derive_seed, make_rng, stable_key
from .stats import summarize, tally, wilcoxon_ranksum
from .variants import parse_variant

__all__ = ["CampaignConfig", "load_campaign", "read_runs", "run_campaign", "write_comparisons"]

RUNS_HEADER = "# cpade-runs v1"
RUN_COLUMNS = ["problem", "dim", "algorithm", "run", "seed", "best_error", "evals", "generations", "wall_time"]
OUTPUT_ENV = "CPADE_OUTPUT_DIR"
BUDGET_FACTORS = {"soco": 5000, "cec": 10000}


class CampaignError(Exception):
    pass


@dataclass
class CampaignConfig:
    problems: list
    algorithms: list
    runs: int = 25
    budget: Union[str, int] = "soco"
    master_seed: int = 0
    shift_seed: int = 0
    output: Optional[str] = None
    comparisons: str = "all"
    specs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.runs < 1:
            raise CampaignError("runs must be at least 1")
        if not self.problems or not self.algorithms:
            raise CampaignError("a campaign needs problems and algorithms")
        for name, dim in self.problems:
            if name not in FUNCTIONS:
                raise CampaignError(f"unknown problem {name!r}")
            if dim < 2:
                raise CampaignError(f"dimension of {name} must be at least 2")
        for label in self.algorithms:
            try:
                self.specs[label] = parse_variant(label)
            except ValueError as exc:
                raise CampaignError(str(exc)) from None
        if self.comparisons != "all" and self.comparisons not in self.specs:
            raise CampaignError(f"reference algorithm {self.comparisons!r} is not in the campaign")
        self.max_evals(2)

    def max_evals(self, dimension: int) -> int:
        if isinstance(self.budget, int):
            if self.budget < 1:
                raise CampaignError("budget must be positive")
            return self.budget
        if self.budget not in BUDGET_FACTORS:
            raise CampaignError(f"budget must be soco, cec or an integer, got {self.budget!r}")
        return BUDGET_FACTORS[self.budget] * dimension

    def pairs(self) -> list:
        if self.comparisons == "all":
            return list(combinations(self.algorithms, 2))
        return [(self.comparisons, other) for other in self.algorithms if other != self.comparisons]


def _parse_problems(raw) -> list:
    if isinstance(raw, dict):
        return [(f, int(d)) for d in raw["dimensions"] for f in raw["functions"]]
    problems = []
    for item in raw:
        if isinstance(item, str):
            name, _, dim = item.partition(":")
            problems.append((name.strip(), int(dim)))
        else:
            problems.append((item["name"], int(item["dimension"])))
    return problems


def load_campaign(path) -> CampaignConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise CampaignError(f"cannot read campaign {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise CampaignError("campaign file must be a mapping")
    unknown = set(raw) - {"problems", "algorithms", "runs", "budget", "master_seed", "shift_seed", "output", "comparisons"}
    if unknown:
        raise CampaignError(f"unknown campaign keys: {', '.join(sorted(unknown))}")
    try:
        problems = _parse_problems(raw.get("problems", []))
    except (KeyError, ValueError, TypeError) as exc:
        raise CampaignError(f"bad problems section: {exc}") from None
    return CampaignConfig(
        problems=problems,
        algorithms=[str(a) for a in raw.get("algorithms", [])],
        runs=int(raw.get("runs", 25)),
        budget=raw.get("budget", "soco"),
        master_seed=int(raw.get("master_seed", 0)),
        shift_seed=int(raw.get("shift_seed", 0)),
        output=raw.get("output"),
        comparisons=str(raw.get("comparisons", "all")),
    )


def run_seed(master_seed: int, problem: str, dim: int, algorithm: str, run: int) -> int:
    return derive_seed(master_seed, stable_key(problem), dim, stable_key(algorithm), run)


def execute_run(task: tuple) -> dict:
    """One independent run; a module-level function so worker processes can pickle it."""
    problem_name, dim, label, run, seed, shift_seed, max_evals = task
    problem = make_problem(problem_name, dim, shift_seed)
    spec = parse_variant(label)
    start = time.perf_counter()
    record = spec.run(problem, EvalBudget(max_evals), make_rng(seed), seed=seed)
    return {
        "problem": problem_name,
        "dim": dim,
        "algorithm": label,
        "run": run,
        "seed": seed,
        "best_error": record.best_error,
        "evals": record.evals_used,
        "generations": record.generations,
        "wall_time": time.perf_counter() - start,
    }


def _format_row(row: dict) -> list:
    return [
        row["problem"], row["dim"], row["algorithm"], row["run"], row["seed"],
        format(float(row["best_error"]), ".17g"), row["evals"], row["generations"],
        format(float(row["wall_time"]), ".3f"),
    ]


def read_runs(path) -> list:
    """Rows of a runs CSV with numeric fields converted."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != RUNS_HEADER:
            raise CampaignError(f"{path} is not a {RUNS_HEADER!r} file")
        rows = []
        for row in csv.DictReader(fh):
            row["dim"] = int(row["dim"])
            row["run"] = int(row["run"])
            row["seed"] = int(row["seed"])
            row["best_error"] = float(row["best_error"])
            row["evals"] = int(row["evals"])
            row["generations"] = int(row["generations"])
            row["wall_time"] = float(row["wall_time"])
            rows.append(row)
    return rows


def _write_runs(path: Path, rows: list) -> None:
    buf = io.StringIO()
    buf.write(RUNS_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_COLUMNS)
    for row in rows:
        writer.writerow(_format_row(row))
    path.write_text(buf.getvalue())


def _errors_by_key(rows: list) -> dict:
    grouped: dict = {}
    for row in rows:
        grouped.setdefault((row["problem"], row["dim"], row["algorithm"]), []).append(row["best_error"])
    return grouped


def write_comparisons(rows: list, pairs: list, problems: list, out_dir: Path, alpha: float = 0.05) -> list:
    """Per-problem Wilcoxon cells and per-dimension +/-/= tallies; returns the cells."""
    grouped = _errors_by_key(rows)
    cells = []
    for a, b in pairs:
        for name, dim in problems:
            ea, eb = grouped.get((name, dim, a)), grouped.get((name, dim, b))
            if not ea or not eb or len(ea) < 2 or len(eb) < 2:
                continue
            cells.append((dim, name, a, b, wilcoxon_ranksum(ea, eb, alpha)))

    with open(out_dir / "comparisons.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dim", "problem", "algorithm_a", "algorithm_b", "outcome", "p_value", "median_a", "median_b"])
        for dim, name, a, b, cell in cells:
            writer.writerow([dim, name, a, b, cell.outcome, format(cell.p_value, ".17g"),
                             format(cell.medians[0], ".17g"), format(cell.medians[1], ".17g")])

    dims = sorted({dim for _, dim in problems})
    table = []
    for dim in dims:
        for a, b in pairs:
            outcomes = [c.outcome for d, _, x, y, c in cells if d == dim and x == a and y == b]
            if outcomes:
                table.append((dim, a, b) + tally(outcomes))
    with open(out_dir / "tally.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dim", "algorithm_a", "algorithm_b", "wins", "losses", "draws"])
        writer.writerows(table)
    (out_dir / "tally.txt").write_text(render_tally(table))
    return cells


def render_tally(table: list) -> str:
    """Aligned text: one block per dimension, algorithm_a's wins/losses/draws against each rival."""
    if not table:
        return "no comparisons\n"
    width = max(len(row[2]) for row in table)
    lines = []
    for dim in sorted({row[0] for row in table}):
        for ref in dict.fromkeys(row[1] for row in table if row[0] == dim):
            lines.append(f"dim {dim}  reference: {ref}")
            lines.append(f"  {'algorithm':<{width}}  {'+':>3} {'-':>3} {'=':>3}")
            for d, a, b, wins, losses, draws in table:
                if d == dim and a == ref:
                    lines.append(f"  {b:<{width}}  {wins:>3} {losses:>3} {draws:>3}")
            lines.append("")
    return "\n".join(lines)


def _write_summary(rows: list, config: CampaignConfig, out_dir: Path) -> None:
    grouped = _errors_by_key(rows)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["problem", "dim", "algorithm", "runs", "mean_error", "std_error", "median_error"])
        for name, dim in config.problems:
            for label in config.algorithms:
                errors = grouped.get((name, dim, label))
                if not errors:
                    continue
                mean, std = summarize(errors)
                median = float(np.median(errors))
                writer.writerow([name, dim, label, len(errors), format(mean, ".17g"), format(std, ".17g"),
                                 format(median, ".17g")])


def resolve_output(cli_out: Optional[str], config: CampaignConfig) -> Path:
    """``--out`` beats the campaign's ``output``, which beats ``$CPADE_OUTPUT_DIR``, then ./results."""
    return Path(cli_out or config.output or os.environ.get(OUTPUT_ENV) or "results")


def run_campaign(config: CampaignConfig, out_dir=None, jobs: Optional[int] = None, resume: bool = False,
                 log=sys.stderr) -> int:
    """Run every (problem, algorithm, run) and write the result files; 0 on success."""
    out_dir = Path(out_dir) if out_dir is not None else resolve_output(None, config)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out_dir} is not writable: {exc}", file=log)
        return 2

    runs_path = out_dir / "runs.csv"
    done: dict = {}
    if resume and runs_path.exists():
        for row in read_runs(runs_path):
            done[(row["problem"], row["dim"], row["algorithm"], row["run"])] = row

    order = {}
    tasks = []
    for pi, (name, dim) in enumerate(config.problems):
        max_evals = config.max_evals(dim)
        for ai, label in enumerate(config.algorithms):
            for run in range(config.runs):
                key = (name, dim, label, run)
                order[key] = (pi, ai, run)
                if key in done:
                    continue
                seed = run_seed(config.master_seed, name, dim, label, run)
                tasks.append((name, dim, label, run, seed, config.shift_seed, max_evals))
    rows = [row for key, row in done.items() if key in order]
    if tasks:
        print(f"{len(tasks)} runs to execute ({len(rows)} already done)", file=log)

    # single writer: the parent appends each finished row
    if not runs_path.exists() or not resume:
        _write_runs(runs_path, rows)
    failures = 0
    with open(runs_path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")

        def accept(row):
            rows.append(row)
            writer.writerow(_format_row(row))
            fh.flush()

        if jobs is None:
            jobs = os.cpu_count() or 1
        if jobs <= 1:
            for task in tasks:
                try:
                    accept(execute_run(task))
                except Exception as exc:  # noqa: BLE001 - reported and counted
                    failures += 1
                    print(f"run {task[:4]} failed: {exc}", file=log)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(execute_run, task): task for task in tasks}
                for fut in as_completed(futures):
                    try:
                        accept(fut.result())
                    except Exception as exc:  # noqa: BLE001
                        failures += 1
                        print(f"run {futures[fut][:4]} failed: {exc}", file=log)

    rows.sort(key=lambda r: order[(r["problem"], r["dim"], r["algorithm"], r["run"])])
    _write_runs(runs_path, rows)
    _write_summary(rows, config, out_dir)
    write_comparisons(rows, config.pairs(), config.problems, out_dir)
    if failures:
        print(f"{failures} run(s) failed", file=log)
        return 1
    return 0

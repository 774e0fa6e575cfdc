"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary.  Criteria 1, 2 and 9 run full 25-run campaigns and take
a few minutes on a single core.
"""

import math

import numpy as np
import pytest
from scipy.stats import chi2_contingency, chisquare, kstest

from cpade.benchmarks import make_problem
from cpade.campaign import execute_run, load_campaign, run_campaign, run_seed
from cpade.clustering import choose_k, kmeans, silhouette_score
from cpade.core import EvalBudget, Population, make_rng
from cpade.cpa import CpaConfig, sample_directions, sample_distance
from cpade.de import (
    Crossover,
    Mutation,
    MutationKind,
    PBestArchive,
    crossover_length,
    de_generation,
    exponential_lengths,
    mutate,
)
from cpade.shade import ShadeState, shade_update_memory
from cpade.stats import ranksum_pvalue, wilcoxon_ranksum

from .test_clustering import blobs, same_partition
from .test_stats import exact_pvalue

RUNS = 25
MASTER_SEED = 2024


def campaign_errors(label, name, dim, max_evals, runs=RUNS):
    errors = []
    for run in range(runs):
        seed = run_seed(MASTER_SEED, name, dim, label, run)
        errors.append(execute_run((name, dim, label, run, seed, 0, max_evals))["best_error"])
    return np.array(errors)


@pytest.mark.slow
def test_1_soco_50d_reproduction(acceptance):
    bands = {"f1": 1e-10, "f5": 1e-10, "f6": 1e-10, "f4": 1.0}
    means, ok = {}, True
    for name, limit in bands.items():
        means[name] = campaign_errors("CPA_8_0.2_50_200-DE_R^60", name, 50, 5000 * 50).mean()
        ok &= bool(means[name] <= limit)
    detail = ", ".join(f"{n} mean {m:.3g} (<= {bands[n]:g})" for n, m in means.items())
    acceptance(1, ok, f"CPA-DE_R^60, 50-D, 250k evals, 25 runs: {detail}")
    assert ok


@pytest.mark.slow
def test_2_ordering_against_plain_de(acceptance):
    cells = {}
    for name in ["f1", "f2", "f3", "f4", "f5", "f6"]:
        cpa = campaign_errors("CPA_8_0.2_50_200-DE_R^60", name, 10, 5000 * 10)
        de = campaign_errors("DE_R^60 F=0.5 CR=0.9", name, 10, 5000 * 10)
        cells[name] = wilcoxon_ranksum(cpa, de).outcome
    wins = sum(o == "+" for o in cells.values())
    no_losses = all(cells[n] != "-" for n in ("f1", "f5", "f6"))
    ok = wins >= 3 and no_losses
    acceptance(2, ok, f"CPA-DE_R^60 vs DE_R^60 at 10-D: {cells} -> {wins} wins (>= 3), "
                      f"losses on f1/f5/f6: {'none' if no_losses else 'some'}")
    assert ok


def test_3_evaporation_law(acceptance):
    rng = make_rng(31)
    R = 0.2
    p_ks = kstest(sample_distance(R, 1.0, rng, size=100_000) / R, "uniform").pvalue
    med2 = np.median(sample_distance(R, 2.0, rng, size=1_000_000))
    med05 = np.median(sample_distance(R, 0.5, rng, size=1_000_000))
    ok = p_ks > 0.01 and abs(med2 - 0.25 * R) <= 0.02 * 0.25 * R and abs(med05 - R / math.sqrt(2)) <= 0.02 * R / math.sqrt(2)
    acceptance(3, ok, f"alpha=1 KS p={p_ks:.3f} (> 0.01); alpha=2 median {med2 / R:.4f}R (0.25R +-2%); "
                      f"alpha=0.5 median {med05 / R:.4f}R ({1 / math.sqrt(2):.4f}R +-2%)")
    assert ok


def test_4_direction_sampling(acceptance):
    u = sample_directions(100_000, 2, make_rng(41))
    worst = float(np.max(np.abs(np.linalg.norm(u, axis=1) - 1.0)))
    counts = np.histogram(np.arctan2(u[:, 1], u[:, 0]), bins=36, range=(-np.pi, np.pi))[0]
    p = chisquare(counts).pvalue
    ok = p > 0.01 and worst <= 1e-12
    acceptance(4, ok, f"36-bin angle chi-square p={p:.3f} (> 0.01); max | |u| - 1 | = {worst:.2e} (<= 1e-12)")
    assert ok


def test_5_kmeans_suite(acceptance):
    rng = make_rng(51)
    monotone = True
    sil_bounded = True
    for _ in range(1000):
        n = int(rng.integers(5, 80))
        k = int(rng.integers(2, min(n, 10) + 1))
        data = rng.random((n, int(rng.integers(1, 4))))
        model = kmeans(data, k, rng)
        monotone &= bool(np.all(np.diff(model.history) <= 1e-12 * max(model.history[0], 1.0)))
        s = silhouette_score(data, model.assignments)
        sil_bounded &= -1.0 <= s <= 1.0
    data, truth = blobs(make_rng(52))
    recovered = same_partition(kmeans(data, 2, make_rng(53)).assignments, truth)
    k = choose_k(data, 2, 6, make_rng(54))
    ok = monotone and sil_bounded and recovered and k == 2
    acceptance(5, ok, f"WCSS non-increasing on 1000 datasets: {monotone}; blob recovery: {recovered}; "
                      f"silhouette in [-1,1]: {sil_bounded}; choose_k on blobs [2,6] -> {k}")
    assert ok


def test_6_wilcoxon_oracle(acceptance):
    rng = make_rng(61)
    worst = 0.0
    for _ in range(200):
        a = rng.random(5)
        b = rng.random(5) + rng.uniform(-0.5, 1.5)
        worst = max(worst, abs(ranksum_pvalue(a, b)[0] - exact_pvalue(a, b)))
    flip = {"+": "-", "-": "+", "=": "="}
    anti = scale = True
    for _ in range(1000):
        n1, n2 = rng.integers(2, 26, 2)
        a = rng.lognormal(0, 2, n1)
        b = rng.lognormal(rng.uniform(-2, 2), 2, n2)
        cell = wilcoxon_ranksum(a, b)
        anti &= wilcoxon_ranksum(b, a).outcome == flip[cell.outcome]
        c = float(rng.uniform(1e-3, 1e3))
        scale &= wilcoxon_ranksum(a * c, b * c).outcome == cell.outcome
    ok = worst <= 0.02 and anti and scale
    acceptance(6, ok, f"max |p_normal - p_exact| over 200 pairs of size 5 = {worst:.4f} (<= 0.02); "
                      f"antisymmetry {anti}; scale invariance {scale} on 1000 pairs")
    assert ok


def test_7_cpa_invariants(acceptance):
    from .test_cpa import instrumented_run

    failures = []
    cycles = 0
    for seed, (name, cfg) in enumerate([("f4", CpaConfig()), ("f6", CpaConfig(k_range=(2, 6))),
                                        ("f3", CpaConfig(AS=20, RP=90, k=4, population_size=30))]):
        problem = make_problem(name, 10, shift_seed=seed)
        record, ctrl, proposals, before, budget = instrumented_run(cfg, problem, 5000 * 10, seed)
        cycles += len(ctrl.cycles)
        N = cfg.population_size
        if any(a > cfg.AS for _, _, a, _ in ctrl.log):
            failures.append("|A| > AS")
        for c in ctrl.cycles:
            if c.allocation.sum() != cfg.RP:
                failures.append("sum s_k != RP")
            if c.sizes.sum() != cfg.AS:
                failures.append("clustered with |A| != AS")
            if np.any(np.linalg.norm(c.offsets, axis=1) > cfg.R * (1 + 1e-12)):
                failures.append("candidate farther than R")
        for (_, stage, a, pending) in ctrl.log:
            if stage == "deploy" and a != 0:
                failures.append("A refilled while NP pending")
        # A only grows after NP has been drained
        for (a0, np0), (stage, _, _) in zip(before, proposals):
            if np0 > 0 and stage != "deploy":
                failures.append("random stage with NP pending")
        # every evaluation belongs to a population-sized generation (generation 0 is the initial population)
        if record.evals_used != (record.generations + 1) * N or budget.used != record.evals_used:
            failures.append("evaluations != generations x N")
    ok = not failures and cycles > 0
    acceptance(7, ok, f"3 instrumented runs, {cycles} clustering cycles; violations: {sorted(set(failures)) or 'none'}")
    assert ok


def test_8_de_operators(acceptance):
    X = np.array([[0.0], [1.0], [2.0], [5.0], [8.0], [3.0]])
    pop = Population(X, np.array([4.0, 3.0, 1.0, 9.0, 7.0, 6.0]))
    traces = [
        (Mutation.BEST1, 0, (3, 4), None, 0.5),
        (Mutation.BEST2, 0, (1, 3, 4, 5), None, 2.5),
        (Mutation.RAND1, 0, (1, 2, 3), None, -0.5),
        (Mutation.RAND2, 0, (1, 2, 3, 4, 5), None, 2.0),
        (Mutation.CURRENT_TO_BEST1, 4, (1, 3), None, 3.0),
        (Mutation.CURRENT_TO_PBEST1, 4, (0, 1), 5, 5.0),
    ]
    hand = all(mutate(MutationKind(v), pop, i, 0.5, make_rng(0), indices=r, pbest_index=pb)[0] == want
               for v, i, r, pb, want in traces)

    CR, d, n = 0.5, 20, 100_000
    rng = make_rng(81)
    loop = np.bincount([crossover_length(CR, d, rng) for _ in range(n)], minlength=d + 2)
    vec = np.bincount(exponential_lengths(np.full(n, CR), d, make_rng(82)), minlength=d + 2)
    # pool bins with small counts into one tail bin
    cut = 10
    table = np.array([np.append(loop[1:cut], loop[cut:].sum()), np.append(vec[1:cut], vec[cut:].sum())])
    p = chi2_contingency(table).pvalue

    problem = make_problem("f5", 8, shift_seed=8)
    rng = make_rng(83)
    budget = EvalBudget(10 * 1001)
    state = Population.initialize(problem.space, 10, problem, budget, rng)
    archive = PBestArchive(10, 8)
    kinds = [MutationKind(v) for v in Mutation] + [MutationKind(Mutation.CURRENT_TO_PBEST1, archive=True)]
    elitist = True
    for g in range(1000):
        kind = kinds[g % len(kinds)]
        new, _ = de_generation(state, rng.uniform(1e-12, 1, 10), rng.uniform(1e-12, 1, 10), kind,
                               Crossover(("bin", "exp")[g % 2]), problem.space, problem, budget, rng,
                               archive=archive if kind.archive else None)
        elitist &= bool(np.all(new.values <= state.values))
        state = new
    ok = hand and p > 0.01 and elitist
    acceptance(8, ok, f"six hand-traced mutations: {hand}; exponential L loop vs vectorised chi-square p={p:.3f} "
                      f"(> 0.01); per-slot elitism over 1000 generations: {elitist}")
    assert ok


@pytest.mark.slow
def test_9_shade_sanity(acceptance):
    means = {name: campaign_errors("SHADE_C^100", name, 10, 10000 * 10).mean() for name in ("f1", "f5", "f6")}
    state = ShadeState(4)
    shade_update_memory(state, [0.2, 0.8], [0.3, 0.7], [1.0, 1.0])
    lehmer = abs(state.memory_F[0] - 0.68) < 1e-15
    shade_update_memory(state, [0.4], [0.6], [5.0])
    single = abs(state.memory_F[1] - 0.4) < 1e-15 and abs(state.memory_CR[1] - 0.6) < 1e-15
    ok = all(m <= 1e-8 for m in means.values()) and lehmer and single
    detail = ", ".join(f"{n} mean {m:.3g}" for n, m in means.items())
    acceptance(9, ok, f"SHADE_C^100, 10-D, CEC budget 100k, 25 runs: {detail} (<= 1e-8); "
                      f"Lehmer mean unit checks: {lehmer and single}")
    assert ok


def test_10_reproducibility(acceptance, tmp_path):
    cfg_path = tmp_path / "c.yaml"
    cfg_path.write_text(
        "problems: {functions: [f1, f4, f9], dimensions: [5]}\n"
        "algorithms: [CPA_4_0.05_20_40-DE_R^20, 'SHADE_C^20', 'DE_R^20 F=0.5 CR=0.9']\n"
        "runs: 4\nbudget: 3000\nmaster_seed: 99\n"
    )
    cfg = load_campaign(cfg_path)
    assert run_campaign(cfg, tmp_path / "first", jobs=1) == 0
    assert run_campaign(cfg, tmp_path / "second", jobs=2) == 0

    def strip(path):
        return [line.rsplit(",", 1)[0] for line in path.read_text().splitlines()]

    same_runs = strip(tmp_path / "first" / "runs.csv") == strip(tmp_path / "second" / "runs.csv")
    others = all((tmp_path / "first" / f).read_bytes() == (tmp_path / "second" / f).read_bytes()
                 for f in ("summary.csv", "comparisons.csv", "tally.csv", "tally.txt"))
    ok = same_runs and others
    acceptance(10, ok, f"rerun (serial vs 2 workers) runs.csv identical without wall_time: {same_runs}; "
                       f"summary/comparison/tally files byte-identical: {others}")
    assert ok

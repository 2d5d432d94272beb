"""Synthetic vaccine-trial generator with known ground-truth effect modifiers.

Infection risk under placebo rises with membership in a triangle and falls
with own and neighbors' average income; age plays no causal role, so the two
age-based hypotheses act as negative controls. Under vaccination the risk is
a flat 10%. The default risk index uses additive terms whose weights were
calibrated so the three true modifiers separate cleanly at trial sizes in the
low thousands (triangle and neighbor income strongest, own income clearly
weaker but detectable); a nested variant of the index is kept for
sensitivity checks.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from scipy.special import expit

from .dag import CausalDag
from .errors import InputError, PositivityError
from .estimation import EstimatorConfig
from .graph import CovariateTable, SocialNetwork, write_covariates, write_edge_list
from .heterogeneity import (NeighborSummary, PatternHypothesis,
                            ProjectionConfig, TestReport, UnitCovariate, run_test)
from .patterns import builtin_pattern, check_pattern_all
from .summaries import SummarySpec, summarize_all

FORMULAS = ("additive", "nested")

# additive risk-index weights (see module docstring)
RISK_INTERCEPT = 103.0
RISK_INCOME = 0.75
RISK_NEIGHBOR_INCOME = 2.0
RISK_TRIANGLE = 40.0

VACCINATED_RISK = 0.1


@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int = 3
    sigma: float = 1.0
    seed: int = 0
    store_ground_truth: bool = True
    formula: str = "additive"

    def __post_init__(self):
        if not self.n > self.m >= 1:
            raise InputError(f"need n > m >= 1, got n={self.n}, m={self.m}")
        if self.sigma < 0:
            raise InputError("sigma must be nonnegative")
        if self.formula not in FORMULAS:
            raise InputError(f"unknown formula {self.formula!r} (have {FORMULAS})")


@dataclass
class GroundTruth:
    """Per-unit placebo infection probability, triangle membership, and the
    risk reduction from vaccination (p - 0.1 on the probability scale)."""

    p: np.ndarray
    triangle: np.ndarray
    true_effect: np.ndarray


@dataclass
class SimDataset:
    network: SocialNetwork
    ground_truth: Optional[GroundTruth] = None


def ba_graph(n: int, m: int, seed) -> SocialNetwork:
    """Preferential-attachment graph: a clique on the first m+1 units, then
    each new unit attaches m distinct edges with probability proportional to
    current degree. Always connected; deterministic by seed."""
    if not n > m >= 1:
        raise InputError(f"need n > m >= 1, got n={n}, m={m}")
    rng = np.random.default_rng(seed if isinstance(seed, np.random.SeedSequence)
                                else np.random.SeedSequence(seed))
    edges = []
    repeated = []  # one entry per edge endpoint; sampling it is degree-weighted
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            edges.append((i, j))
        repeated.extend([i] * m)
    for v in range(m + 1, n):
        targets = set()
        while len(targets) < m:
            targets.add(int(repeated[rng.integers(0, len(repeated))]))
        for t in sorted(targets):
            edges.append((t, v))
            repeated.append(t)
            repeated.append(v)
    return SocialNetwork([str(i) for i in range(n)], edges)


def _risk_index(income, avg_nbr_income, triangle, eps, formula):
    if formula == "additive":
        return (RISK_INTERCEPT - RISK_INCOME * income
                - RISK_NEIGHBOR_INCOME * avg_nbr_income
                + RISK_TRIANGLE * triangle + eps)
    # nested variant: the inner parenthesis distributes a factor of 4 over
    # the neighbor, triangle and noise terms
    return 200.0 - income - 4.0 * (avg_nbr_income + 4.0 * triangle + eps)


def simulate_trial(cfg: SimConfig) -> SimDataset:
    """Generate one synthetic trial; identical config gives identical bytes."""
    graph_seed = np.random.SeedSequence(cfg.seed, spawn_key=(0,))
    cov_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    out_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2,)))

    skeleton = ba_graph(cfg.n, cfg.m, graph_seed)
    n = cfg.n
    age = cov_rng.uniform(21.0, 99.0, n)
    income = cov_rng.uniform(20.0, 60.0, n) + cov_rng.normal(age / 50.0, 5.0)
    vaccine = (cov_rng.random(n) < 0.5).astype(np.int64)
    eps = cov_rng.normal(0.0, cfg.sigma, n)

    triangle = check_pattern_all(skeleton, builtin_pattern("clique", 3))
    income_table = CovariateTable([("income", "numeric")], {"income": income})
    with_income = SocialNetwork(skeleton.labels, skeleton.edges,
                                covariates=income_table)
    avg_nbr_income = summarize_all(with_income, SummarySpec("income", "mean")).values

    # float64 expit saturates at extreme indices; keep p inside the open
    # unit interval
    p = np.clip(expit(_risk_index(income, avg_nbr_income, triangle, eps,
                                  cfg.formula)), 1e-12, 1.0 - 1e-12)
    infect0 = (out_rng.random(n) < p).astype(np.int64)
    infect1 = (out_rng.random(n) < VACCINATED_RISK).astype(np.int64)
    infect = np.where(vaccine == 1, infect1, infect0)

    table = CovariateTable(
        [("age", "numeric"), ("income", "numeric"),
         ("vaccine", "binary"), ("infect", "binary")],
        {"age": age, "income": income, "vaccine": vaccine, "infect": infect},
        binary_labels={"vaccine": ("0", "1"), "infect": ("0", "1")},
    )
    net = SocialNetwork(skeleton.labels, skeleton.edges, covariates=table)
    truth = None
    if cfg.store_ground_truth:
        truth = GroundTruth(p=p, triangle=triangle,
                            true_effect=p - VACCINATED_RISK)
    return SimDataset(network=net, ground_truth=truth)


def trial_dag() -> CausalDag:
    """Causal structure of the simulated trial (treatment is randomized, so
    the backdoor set is empty; hypotheses screen clean)."""
    roles = {
        "age": "covariate",
        "income": "covariate",
        "avg_nbr_income": "neighbor_summary",
        "in_triangle": "pattern_indicator",
        "vaccine": "treatment",
        "infect": "outcome",
    }
    edges = [
        ("age", "income"),
        ("income", "infect"),
        ("avg_nbr_income", "infect"),
        ("in_triangle", "infect"),
        ("vaccine", "infect"),
    ]
    return CausalDag(
        roles, edges, "vaccine", "infect",
        summary_bindings={"avg_nbr_income": SummarySpec("income", "mean")},
        pattern_bindings={"in_triangle": builtin_pattern("clique", 3)},
    )


def trial_hypotheses() -> list:
    """The five standard hypotheses: three true modifiers, two age controls."""
    return [
        UnitCovariate("income", label="income"),
        UnitCovariate("age", label="age"),
        NeighborSummary(SummarySpec("income", "mean"), label="nbr_avg_income"),
        NeighborSummary(SummarySpec("age", "mean"), label="nbr_avg_age"),
        PatternHypothesis(builtin_pattern("clique", 3), label="clique3"),
    ]


def trial_estimator_config(seed: int, min_n: int = 4) -> EstimatorConfig:
    return EstimatorConfig(seed=seed, min_n=min_n)


def run_trial_test(dataset: SimDataset, seed: int, i0: float = 0.0,
                   estimator_config: EstimatorConfig | None = None,
                   projection_config: ProjectionConfig | None = None) -> TestReport:
    """Run the modifier test on a simulated dataset with the standard
    hypothesis set."""
    est = estimator_config or trial_estimator_config(seed)
    return run_test(dataset.network, trial_dag(), trial_hypotheses(), i0=i0,
                    estimator_config=est, projection_config=projection_config)


# -- experiment sweeps -------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    param: float  # unit count or noise variance
    rep: int
    hypothesis: str
    delta_sq: float
    iota_sq: float
    seed: int


SWEEP_HEADER = ("n_or_variance", "rep", "hypothesis", "delta_sq", "iota_sq", "seed")

_KIND_UNITS = 0
_KIND_NOISE = 1


def derive_seed(root_seed: int, *parts) -> int:
    """Deterministic per-replicate seed: stable across runs and platforms."""
    ss = np.random.SeedSequence((int(root_seed),) + tuple(int(p) for p in parts))
    return int(ss.generate_state(1)[0])


def _rows_for(report: TestReport, param, rep, seed) -> Iterator[SweepRow]:
    for r in report.results:
        if r.dropped or r.error:
            continue
        yield SweepRow(param=param, rep=rep, hypothesis=r.label,
                       delta_sq=r.delta_sq, iota_sq=r.iota_sq, seed=seed)


def sweep_units(base: SimConfig, sizes, reps: int, i0: float = 0.0) -> Iterator[SweepRow]:
    """Replicated tests across unit counts. Replicates that cannot be
    estimated (for example a single-arm draw at tiny n) are skipped, so
    partial results always survive."""
    if not sizes or reps < 1:
        raise InputError("need at least one size and one replicate")
    for size in sizes:
        for rep in range(reps):
            seed = derive_seed(base.seed, _KIND_UNITS, size, rep)
            cfg = replace(base, n=int(size), seed=seed)
            try:
                report = run_trial_test(simulate_trial(cfg), seed=seed, i0=i0)
            except (InputError, PositivityError):
                continue
            yield from _rows_for(report, float(size), rep, seed)


def sweep_noise(base: SimConfig, variances, reps: int, i0: float = 0.0) -> Iterator[SweepRow]:
    """Replicated tests across outcome-noise variances at fixed n."""
    if not list(variances) or reps < 1:
        raise InputError("need at least one variance and one replicate")
    for var in variances:
        if var < 0:
            raise InputError("variance must be nonnegative")
        for rep in range(reps):
            seed = derive_seed(base.seed, _KIND_NOISE, round(var * 1000), rep)
            cfg = replace(base, sigma=float(var) ** 0.5, seed=seed)
            try:
                report = run_trial_test(simulate_trial(cfg), seed=seed, i0=i0)
            except (InputError, PositivityError):
                continue
            yield from _rows_for(report, float(var), rep, seed)


def write_sweep_rows(rows, path) -> int:
    """Stream sweep rows to a long-format CSV, flushing per row so an
    interrupted run still leaves a valid prefix. Returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        fh.flush()
        for row in rows:
            writer.writerow([f"{row.param:g}", row.rep, row.hypothesis,
                             f"{row.delta_sq:.6g}", f"{row.iota_sq:.6g}", row.seed])
            fh.flush()
            count += 1
    return count


# -- dataset files -----------------------------------------------------------


def write_dataset(ds: SimDataset, outdir, ground_truth: bool | None = None) -> list:
    """Write edges.csv + covariates.csv (+ ground_truth.csv) in the same
    formats the test command ingests. Returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / "edges.csv", outdir / "covariates.csv"]
    write_edge_list(ds.network, paths[0])
    write_covariates(ds.network, paths[1])
    want_truth = ds.ground_truth is not None if ground_truth is None else ground_truth
    if want_truth:
        if ds.ground_truth is None:
            raise InputError("dataset carries no ground truth to write")
        gt_path = outdir / "ground_truth.csv"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "p_infect_placebo", "in_triangle", "true_effect"])
        gt = ds.ground_truth
        for i in range(ds.network.n):
            writer.writerow([ds.network.labels[i], repr(float(gt.p[i])),
                             int(gt.triangle[i]), repr(float(gt.true_effect[i]))])
        gt_path.write_text(buf.getvalue(), encoding="utf-8")
        paths.append(gt_path)
    return paths

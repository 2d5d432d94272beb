"""Heterogeneity criterion: project the CDE posterior onto each hypothesized
modifier, standardize the squared deviation of the conditional effect from
the overall effect, and reject when the normalized percentage exceeds the
threshold.

The projection is an exact group-mean regressor: ten or fewer distinct
modifier values get one group each, anything else is cut into ten
equal-frequency bins. Each group's variance combines the bootstrap-draw
variance of its fitted mean (scaled to the bagged mean) with the residual
sampling variance of that mean, floored both absolutely and relative to the
overall CDE variance; the relative floor is what pins unrelated covariates
to exactly zero once the sample is large enough to support the comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .dag import CausalDag, screen_modifiers
from .errors import InputError, NetmodError
from .estimation import (CdePosterior, EstimatorConfig, UnitTable,
                         build_unit_table, estimate_ade, estimate_cde)
from .graph import SocialNetwork
from .patterns import NetworkPattern, check_pattern_all
from .summaries import SummarySpec, summarize_all


# -- hypotheses ------------------------------------------------------------


@dataclass(frozen=True)
class UnitCovariate:
    name: str
    label: str = ""
    dag_var: Optional[str] = None


@dataclass(frozen=True)
class NeighborSummary:
    spec: SummarySpec
    label: str = ""
    dag_var: Optional[str] = None


@dataclass(frozen=True)
class PatternHypothesis:
    pattern: NetworkPattern
    label: str = ""
    dag_var: Optional[str] = None


Hypothesis = Union[UnitCovariate, NeighborSummary, PatternHypothesis]


def hypothesis_label(hyp: Hypothesis) -> str:
    if hyp.label:
        return hyp.label
    if isinstance(hyp, UnitCovariate):
        return hyp.name
    if isinstance(hyp, NeighborSummary):
        return hyp.spec.default_label()
    return hyp.pattern.label


def hypothesis_from_spec(spec: dict) -> Hypothesis:
    """Build a hypothesis from one hypothesis-file entry."""
    from .patterns import pattern_from_spec

    label = spec.get("label", "")
    dag_var = spec.get("dag_var")
    if "unit_covariate" in spec:
        return UnitCovariate(name=str(spec["unit_covariate"]), label=label,
                             dag_var=dag_var)
    if "neighbor_summary" in spec:
        s = spec["neighbor_summary"]
        try:
            summary = SummarySpec(covariate=str(s["covariate"]), kind=str(s["kind"]),
                                  value=s.get("value"),
                                  include_self=bool(s.get("include_self", False)))
        except KeyError as exc:
            raise InputError(f"neighbor_summary entry missing field {exc}") from None
        return NeighborSummary(spec=summary, label=label, dag_var=dag_var)
    if "pattern" in spec:
        return PatternHypothesis(pattern=pattern_from_spec(spec["pattern"]),
                                 label=label, dag_var=dag_var)
    raise InputError(
        "hypothesis entry needs one of: unit_covariate, neighbor_summary, pattern"
    )


def load_hypotheses(path):
    """Read the hypothesis file: {"i0": float, "hypotheses": [entries...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, list):
        data = {"hypotheses": data}
    hyps = [hypothesis_from_spec(h) for h in data.get("hypotheses", [])]
    return hyps, float(data.get("i0", 0.0))


def gen_hyp_vector(net: SocialNetwork, tab, hyp: Hypothesis) -> np.ndarray:
    """Per-unit values of a hypothesized modifier.

    Unit covariates copy their column, neighbor summaries aggregate over each
    unit's neighbors, patterns become 0/1 match indicators. When a unit table
    already carries the column (by label), it is reused.
    """
    label = hypothesis_label(hyp)
    if tab is not None and isinstance(tab, UnitTable):
        idx = tab.hypothesis_columns.get(label)
        if idx is not None:
            return tab.features[:, idx]
    if isinstance(hyp, UnitCovariate):
        cov = net.covariates
        if cov is None or hyp.name not in cov:
            raise InputError(f"unknown covariate {hyp.name!r} for hypothesis")
        kind = cov.kind(hyp.name)
        if kind == "categorical":
            levels = sorted(set(str(v) for v in cov.column(hyp.name)))
            lookup = {v: i for i, v in enumerate(levels)}
            return np.array([lookup[str(v)] for v in cov.column(hyp.name)],
                            dtype=float)
        return np.asarray(cov.column(hyp.name), dtype=float)
    if isinstance(hyp, NeighborSummary):
        return summarize_all(net, hyp.spec).values
    return check_pattern_all(net, hyp.pattern).astype(float)


# -- projection -------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionConfig:
    bins: int = 10
    max_exact_groups: int = 10
    variance_floor: float = 1e-6  # absolute
    relative_floor: float = 0.04  # fraction of overall CDE variance
    # share of single-refit draw variance included in a group's variance;
    # None selects 1.0 (conservative) from 256 units up and 0.1 below, the
    # same regime split the estimator's leaf-size schedule uses
    draw_variance_weight: Optional[float] = None

    def __post_init__(self):
        if self.bins < 2:
            raise InputError("need at least 2 bins")
        if self.variance_floor <= 0:
            raise InputError("variance floor must be positive")


@dataclass
class ProjectionModel:
    """Group-mean regressor h -> (mean CDE, variance of that mean)."""

    kind: str  # "groups" (exact values) or "bins" (quantile edges)
    group_values: np.ndarray  # exact values, or bin edges for "bins"
    means: np.ndarray
    variances: np.ndarray
    ade: float
    constant_input: bool = False
    group_sizes: np.ndarray = field(default_factory=lambda: np.empty(0))

    def _group_index(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if self.kind == "groups":
            idx = np.searchsorted(self.group_values, h)
            idx = np.clip(idx, 0, len(self.group_values) - 1)
            if not np.allclose(self.group_values[idx], h, equal_nan=True):
                bad = h[~np.isclose(self.group_values[idx], h)][:3]
                raise InputError(f"values {bad} were not seen during projection")
            return idx
        edges = self.group_values
        return np.clip(np.searchsorted(edges, h, side="right") - 1,
                       0, len(self.means) - 1)

    def mean_at(self, h) -> np.ndarray:
        return self.means[self._group_index(np.atleast_1d(h))]

    def variance_at(self, h) -> np.ndarray:
        return self.variances[self._group_index(np.atleast_1d(h))]


def project(post: CdePosterior, hvec: np.ndarray,
            config: ProjectionConfig | None = None) -> ProjectionModel:
    """Fit the group-mean projection of the CDE posterior onto a modifier."""
    config = config or ProjectionConfig()
    hvec = np.asarray(hvec, dtype=float)
    if len(hvec) != post.n:
        raise InputError(f"modifier vector length {len(hvec)} != n {post.n}")
    if post.n < 2:
        raise InputError("projection needs at least 2 units")

    ade = estimate_ade(post)
    overall_var = float(post.point.var(ddof=1))
    gamma = config.draw_variance_weight
    if gamma is None:
        gamma = 1.0 if post.n >= 256 else 0.1
    uniq = np.unique(hvec)
    constant = len(uniq) == 1

    if len(uniq) <= config.max_exact_groups:
        kind = "groups"
        group_values = uniq
        member_lists = [np.nonzero(hvec == v)[0] for v in uniq]
    else:
        kind = "bins"
        edges = np.unique(np.quantile(hvec, np.linspace(0.0, 1.0, config.bins + 1)))
        gidx = np.clip(np.searchsorted(edges, hvec, side="right") - 1,
                       0, len(edges) - 2)
        present = [g for g in range(len(edges) - 1) if np.any(gidx == g)]
        # collapse edge array to the populated bins so indices stay aligned
        group_values = np.append(edges[present], edges[-1])
        member_lists = [np.nonzero(gidx == g)[0] for g in present]
        gidx2 = np.clip(np.searchsorted(group_values, hvec, side="right") - 1,
                        0, len(member_lists) - 1)
        member_lists = [np.nonzero(gidx2 == g)[0] for g in range(len(member_lists))]

    floor = max(config.variance_floor, config.relative_floor * overall_var)
    means = np.empty(len(member_lists))
    variances = np.empty(len(member_lists))
    sizes = np.empty(len(member_lists), dtype=int)
    n_draws = post.draws.shape[1]
    for g, members in enumerate(member_lists):
        w = len(members)
        sizes[g] = w
        means[g] = post.point[members].mean()
        # uncertainty of the bagged group mean (between-draw variance over
        # the draw count) plus a conservative share of the single-refit
        # variance (covers model instability the bag average hides), plus
        # the sampling variance of the mean itself
        boot = float(post.draws[members].mean(axis=0).var(ddof=1)) \
            if n_draws > 1 else 0.0
        resid = float(post.point[members].var(ddof=1)) if w > 1 else 0.0
        scale = 1.0 / n_draws + gamma
        variances[g] = max(boot * scale + resid / w, floor)
    return ProjectionModel(kind=kind, group_values=group_values, means=means,
                           variances=variances, ade=ade,
                           constant_input=constant, group_sizes=sizes)


def delta_sq(post: CdePosterior, g: ProjectionModel, hvec: np.ndarray) -> float:
    """Mean over units of the variance-standardized squared deviation of the
    projected conditional effect from the average effect."""
    hvec = np.asarray(hvec, dtype=float)
    ade = estimate_ade(post)
    num = (g.mean_at(hvec) - ade) ** 2
    return float(np.mean(num / g.variance_at(hvec)))


def iota_sq(d2: float) -> float:
    """Normalized heterogeneity percentage in [0, 100)."""
    if d2 < 0:
        raise InputError("delta-squared cannot be negative")
    if d2 <= 1.0:
        return 0.0
    return 100.0 * (d2 - 1.0) / d2


# -- end-to-end test ---------------------------------------------------------


@dataclass
class HypothesisResult:
    label: str
    kind: str
    delta_sq: Optional[float] = None
    iota_sq: Optional[float] = None
    decision: Optional[str] = None  # "reject_null" | "fail_to_reject"
    dropped: bool = False
    drop_reason: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "kind": self.kind,
            "delta_sq": self.delta_sq,
            "iota_sq": self.iota_sq,
            "decision": self.decision,
            "dropped": self.dropped,
            "drop_reason": self.drop_reason,
            "error": self.error,
        }


@dataclass
class TestReport:
    results: list
    ade: float
    n: int
    i0: float
    seed: int
    estimator: dict
    projection: dict

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ade": self.ade,
            "i0": self.i0,
            "seed": self.seed,
            "estimator": self.estimator,
            "projection": self.projection,
            "hypotheses": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        """Result table: one row per hypothesis, paper-style formatting."""
        rows = [("Hypothesis", "delta^2", "iota^2", "Decision")]
        for r in self.results:
            if r.dropped:
                rows.append((r.label, "-", "-", f"dropped ({r.drop_reason})"))
            elif r.error:
                rows.append((r.label, "-", "-", f"error ({r.error})"))
            else:
                rows.append((r.label, f"{r.delta_sq:.4f}", f"{r.iota_sq:.2f}",
                             "reject_null" if r.decision == "reject_null"
                             else "fail_to_reject"))
        widths = [max(len(row[c]) for row in rows) for c in range(4)]
        lines = []
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[c])
                                   for c, cell in enumerate(row)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * widths[c] for c in range(4)))
        lines.append("")
        lines.append(f"ADE = {self.ade:.4f}   n = {self.n}   I0 = {self.i0:g}   "
                     f"seed = {self.seed}")
        return "\n".join(lines) + "\n"

    def result(self, label: str) -> HypothesisResult:
        for r in self.results:
            if r.label == label:
                return r
        raise KeyError(label)


def _kind_name(hyp: Hypothesis) -> str:
    if isinstance(hyp, UnitCovariate):
        return "unit_covariate"
    if isinstance(hyp, NeighborSummary):
        return "neighbor_summary"
    return "pattern"


def run_test(net: SocialNetwork, dag: CausalDag, hypotheses, i0: float = 0.0,
             treatment: Optional[str] = None, outcome: Optional[str] = None,
             estimator_config: EstimatorConfig | None = None,
             projection_config: ProjectionConfig | None = None) -> TestReport:
    """Screen hypotheses, estimate per-unit effects once, then test each
    hypothesis independently (one failure does not abort the others).

    Rejects the null (no effect modification) for a hypothesis exactly when
    its normalized heterogeneity strictly exceeds ``i0``.
    """
    est_cfg = estimator_config or EstimatorConfig()
    proj_cfg = projection_config or ProjectionConfig()
    treatment = treatment or dag.treatment
    outcome = outcome or dag.outcome

    screened = screen_modifiers(dag, hypotheses)

    # materialize each hypothesis vector in isolation so one malformed
    # hypothesis cannot abort the rest of the run
    vectors, vector_errors = {}, {}
    usable = []
    for hyp in screened.kept:
        label = hypothesis_label(hyp)
        try:
            vectors[label] = gen_hyp_vector(net, None, hyp)
            usable.append(hyp)
        except NetmodError as exc:
            vector_errors[label] = str(exc)

    tab = build_unit_table(net, dag, usable, treatment, outcome,
                           include_neighbor_treatment=est_cfg.adjust_neighbor_treatment,
                           precomputed=vectors)
    post = estimate_cde(tab, est_cfg)
    ade = estimate_ade(post)

    results = []
    by_reason = {hypothesis_label(h): reason for h, reason in screened.dropped}
    for hyp in hypotheses:
        label = hypothesis_label(hyp)
        if label in by_reason:
            results.append(HypothesisResult(label=label, kind=_kind_name(hyp),
                                            dropped=True,
                                            drop_reason=by_reason[label]))
            continue
        if label in vector_errors:
            results.append(HypothesisResult(label=label, kind=_kind_name(hyp),
                                            error=vector_errors[label]))
            continue
        try:
            hvec = gen_hyp_vector(net, tab, hyp)
            g = project(post, hvec, proj_cfg)
            d2 = delta_sq(post, g, hvec)
            i2 = iota_sq(d2)
            decision = "reject_null" if i2 > i0 else "fail_to_reject"
            results.append(HypothesisResult(label=label, kind=_kind_name(hyp),
                                            delta_sq=d2, iota_sq=i2,
                                            decision=decision))
        except NetmodError as exc:
            results.append(HypothesisResult(label=label, kind=_kind_name(hyp),
                                            error=str(exc)))
    return TestReport(
        results=results, ade=ade, n=net.n, i0=i0, seed=est_cfg.seed,
        estimator={
            "estimator": est_cfg.estimator, "n_draws": est_cfg.n_draws,
            "max_depth": est_cfg.max_depth, "min_leaf": est_cfg.min_leaf,
            "estimand": est_cfg.estimand, "p_min": est_cfg.p_min,
            "min_n": est_cfg.min_n,
            "adjust_neighbor_treatment": est_cfg.adjust_neighbor_treatment,
        },
        projection={
            "bins": proj_cfg.bins, "max_exact_groups": proj_cfg.max_exact_groups,
            "variance_floor": proj_cfg.variance_floor,
            "relative_floor": proj_cfg.relative_floor,
            "draw_variance_weight": proj_cfg.draw_variance_weight,
        },
    )

"""Scalar summaries of a unit's neighbors' covariate values.

The neighbor multiset excludes the unit itself by default (``include_self``
restores the reflexive-tie reading). Isolated units get a neutral value of 0
and are flagged so downstream analyses can drop them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .graph import SocialNetwork

SUMMARY_KINDS = ("mean", "fraction_equal", "count", "sum", "max", "min")

NEUTRAL_VALUE = 0.0


@dataclass(frozen=True)
class SummarySpec:
    covariate: str
    kind: str
    value: Optional[object] = None  # required for fraction_equal
    include_self: bool = False

    def __post_init__(self):
        if self.kind not in SUMMARY_KINDS:
            raise InputError(f"unknown summary kind {self.kind!r}")
        if self.kind == "fraction_equal" and self.value is None:
            raise InputError("fraction_equal needs a comparison value")

    def default_label(self) -> str:
        if self.kind == "fraction_equal":
            return f"nbr_frac[{self.covariate}={self.value}]"
        return f"nbr_{self.kind}[{self.covariate}]"


@dataclass
class SummaryResult:
    """Per-unit summary values plus a flag marking empty neighbor sets."""

    values: np.ndarray
    isolated: np.ndarray

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)


def _check_spec(net: SocialNetwork, spec: SummarySpec):
    tab = net.covariates
    if tab is None:
        raise InputError("network has no covariate table")
    kind = tab.kind(spec.covariate)
    if spec.kind == "fraction_equal" and kind == "numeric":
        raise InputError(
            f"fraction_equal needs a binary/categorical column, {spec.covariate!r} is numeric"
        )
    if spec.kind in ("mean", "sum", "max", "min") and kind == "categorical":
        raise InputError(
            f"{spec.kind} needs a numeric/binary column, {spec.covariate!r} is categorical"
        )
    return tab, kind


def _match_target(tab, name, kind, value):
    if kind == "binary":
        lo, hi = tab.binary_labels.get(name, ("0", "1"))
        s = str(value)
        if s == str(hi) or s.lower() in ("1", "yes", "true"):
            return 1
        if s == str(lo) or s.lower() in ("0", "no", "false"):
            return 0
        raise InputError(f"value {value!r} not a level of binary column {name!r}")
    return str(value)


def _aggregate(values: np.ndarray, spec: SummarySpec, target) -> float:
    if spec.kind == "count":
        return float(len(values))
    if len(values) == 0:
        return NEUTRAL_VALUE
    if spec.kind == "fraction_equal":
        if values.dtype == object:
            hits = np.fromiter((str(v) == target for v in values), dtype=bool,
                               count=len(values))
        else:
            hits = values == target
        return float(np.mean(hits))
    arr = np.asarray(values, dtype=float)
    if spec.kind == "mean":
        return float(arr.mean())
    if spec.kind == "sum":
        return float(arr.sum())
    if spec.kind == "max":
        return float(arr.max())
    return float(arr.min())


def summarize_unit(net: SocialNetwork, spec: SummarySpec, i: int) -> float:
    """Apply the aggregate over neighbors' covariate values for one unit."""
    net._check_unit(i)
    tab, kind = _check_spec(net, spec)
    target = _match_target(tab, spec.covariate, kind, spec.value) \
        if spec.kind == "fraction_equal" else None
    col = tab.column(spec.covariate)
    idx = list(net.adjacency(i))
    if spec.include_self:
        idx = sorted(idx + [int(i)])
    return _aggregate(col[idx] if idx else col[:0], spec, target)


def summarize_all(net: SocialNetwork, spec: SummarySpec) -> SummaryResult:
    """Vectorized :func:`summarize_unit`, positionally indexed by unit id."""
    tab, kind = _check_spec(net, spec)
    target = _match_target(tab, spec.covariate, kind, spec.value) \
        if spec.kind == "fraction_equal" else None
    col = tab.column(spec.covariate)
    values = np.empty(net.n, dtype=float)
    isolated = np.zeros(net.n, dtype=bool)
    for i in range(net.n):
        idx = list(net.adjacency(i))
        if spec.include_self:
            idx = sorted(idx + [i])
        if not idx:
            isolated[i] = True
            values[i] = NEUTRAL_VALUE if spec.kind != "count" else 0.0
        else:
            values[i] = _aggregate(col[idx], spec, target)
    return SummaryResult(values=values, isolated=isolated)

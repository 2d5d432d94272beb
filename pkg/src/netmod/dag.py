"""Template causal DAG over variable roles, d-separation and screening.

One DAG describes the causal structure shared by every unit (unit
homogeneity); neighbor influence enters through ``neighbor_summary``
variables and local structure through ``pattern_indicator`` variables rather
than per-neighbor replication.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import InputError
from .patterns import NetworkPattern, parse_builtin
from .summaries import SummarySpec

ROLES = ("treatment", "outcome", "covariate", "neighbor_summary",
         "pattern_indicator", "network")

MINIMAL_SEARCH_LIMIT = 16


class CausalDag:
    """Acyclic directed graph over named variables with designated
    treatment and outcome nodes."""

    def __init__(self, variables, edges, treatment, outcome,
                 summary_bindings=None, pattern_bindings=None):
        self.roles = dict(variables)  # name -> role
        for name, role in self.roles.items():
            if role not in ROLES:
                raise InputError(f"variable {name!r} has unknown role {role!r}")
        self.parents = {v: set() for v in self.roles}
        self.children = {v: set() for v in self.roles}
        for a, b in edges:
            if a not in self.roles or b not in self.roles:
                missing = a if a not in self.roles else b
                raise InputError(f"edge ({a} -> {b}) references unknown variable {missing!r}")
            if a == b:
                raise InputError(f"self-edge on {a!r}")
            self.parents[b].add(a)
            self.children[a].add(b)
        if treatment not in self.roles:
            raise InputError(f"treatment variable {treatment!r} not declared")
        if outcome not in self.roles:
            raise InputError(f"outcome variable {outcome!r} not declared")
        self.treatment = treatment
        self.outcome = outcome
        # bindings tell build_unit_table how to materialize derived variables
        self.summary_bindings = dict(summary_bindings or {})  # name -> SummarySpec
        self.pattern_bindings = dict(pattern_bindings or {})  # name -> NetworkPattern
        self._check_acyclic()
        if outcome in self.ancestors({treatment}) | {treatment}:
            raise InputError(
                f"outcome {outcome!r} may not cause treatment {treatment!r}")

    def _check_acyclic(self):
        state = {v: 0 for v in self.roles}  # 0 new, 1 active, 2 done

        def visit(v, trail):
            state[v] = 1
            for c in sorted(self.children[v]):
                if state[c] == 1:
                    cycle = trail[trail.index(c):] if c in trail else [v, c]
                    raise InputError(f"causal graph has a cycle through {cycle + [c]}")
                if state[c] == 0:
                    visit(c, trail + [c])
            state[v] = 2

        for v in sorted(self.roles):
            if state[v] == 0:
                visit(v, [v])

    def variables(self):
        return sorted(self.roles)

    def _check_var(self, v):
        if v not in self.roles:
            raise InputError(f"unknown variable {v!r}")

    def ancestors(self, nodes: Iterable) -> set:
        out, stack = set(), list(nodes)
        while stack:
            for p in self.parents[stack.pop()]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def descendants(self, node) -> set:
        out, stack = set(), [node]
        while stack:
            for c in self.children[stack.pop()]:
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    def without_treatment_outedges(self) -> "CausalDag":
        edges = [(a, b) for a in self.roles for b in self.children[a]
                 if a != self.treatment]
        return CausalDag(self.roles, edges, self.treatment, self.outcome,
                         self.summary_bindings, self.pattern_bindings)


def d_separated(dag: CausalDag, a: str, b: str, cond: Iterable = ()) -> bool:
    """Standard d-separation via reachability over active trails.

    Chains and forks are blocked by conditioning on the middle node; a
    collider is unblocked when it or one of its descendants is conditioned on.
    """
    cond = set(cond)
    dag._check_var(a)
    dag._check_var(b)
    for c in cond:
        dag._check_var(c)
    if a == b:
        raise InputError("d-separation query needs two distinct variables")
    if a in cond or b in cond:
        return True
    cond_anc = dag.ancestors(cond) | cond

    # states: (node, direction); 'down' = traversing away from parents,
    # 'up' = arriving at node from one of its children
    seen = set()
    stack = [(a, "up")]
    while stack:
        node, direction = stack.pop()
        if (node, direction) in seen:
            continue
        seen.add((node, direction))
        if node == b and node not in cond:
            return False
        if direction == "up":
            if node not in cond:
                for p in dag.parents[node]:
                    stack.append((p, "up"))
                for c in dag.children[node]:
                    stack.append((c, "down"))
        else:
            if node not in cond:
                for c in dag.children[node]:
                    stack.append((c, "down"))
            if node in cond_anc:  # collider open iff a conditioned descendant exists
                for p in dag.parents[node]:
                    stack.append((p, "up"))
    return True


def is_valid_adjustment(dag: CausalDag, zset: Iterable) -> bool:
    """Backdoor criterion: no descendants of treatment, and Z blocks every
    path into the treatment (checked on the treatment-outedge-deleted graph)."""
    zset = set(zset)
    if zset & ({dag.treatment, dag.outcome} | dag.descendants(dag.treatment)):
        return False
    stripped = dag.without_treatment_outedges()
    return d_separated(stripped, dag.treatment, dag.outcome, zset)


def backdoor_set(dag: CausalDag, policy: str = "parents") -> set:
    """Adjustment set blocking all backdoor paths from treatment to outcome.

    ``parents``: parents of the treatment (always valid when every variable
    is observed). ``minimal``: smallest valid set by exhaustive search,
    available for DAGs with at most 16 variables; ties break lexicographically.
    """
    if policy == "parents":
        zset = {p for p in dag.parents[dag.treatment] if dag.roles[p] != "network"}
        return zset
    if policy != "minimal":
        raise InputError(f"unknown backdoor policy {policy!r}")
    if len(dag.roles) > MINIMAL_SEARCH_LIMIT:
        raise InputError(
            f"minimal backdoor search supports <= {MINIMAL_SEARCH_LIMIT} variables"
        )
    banned = {dag.treatment, dag.outcome} | dag.descendants(dag.treatment)
    eligible = sorted(v for v in dag.roles
                      if v not in banned and dag.roles[v] != "network")
    for size in range(len(eligible) + 1):
        for combo in itertools.combinations(eligible, size):
            if is_valid_adjustment(dag, combo):
                return set(combo)
    raise InputError("no valid backdoor adjustment set exists")  # pragma: no cover


DROP_DESCENDANT_OF_TREATMENT = "descendant_of_treatment"
DROP_DESCENDANT_OF_OUTCOME = "descendant_of_outcome"
DROP_OPENS_BIASING_PATH = "opens_biasing_path"
DROP_IS_TREATMENT_OR_OUTCOME = "is_treatment_or_outcome"


@dataclass
class ScreenResult:
    kept: list
    dropped: list  # (hypothesis, reason-code) pairs


def screen_modifiers(dag: CausalDag, hypotheses, resolve=None) -> ScreenResult:
    """Drop hypotheses whose conditioning would bias the effect estimate.

    A hypothesis variable is dropped when it is a descendant of the treatment
    or the outcome, or when conditioning on it alongside the adjustment set
    opens a treatment-outcome path that the adjustment set alone blocks
    (collider/M-type opening). Hypotheses without a DAG counterpart are kept:
    the network process is exogenous, so unwired pattern variables and the
    like are treated as pre-treatment.

    ``resolve`` maps a hypothesis to its DAG variable name (or None); the
    default uses ``hyp.dag_var`` / ``hyp.name`` attributes when present.
    """
    if resolve is None:
        resolve = _default_resolve
    if len(dag.roles) <= MINIMAL_SEARCH_LIMIT:
        # the parents-of-treatment set blocks every backdoor path at its first
        # node, which would make the opening check vacuous; screening needs
        # the minimal set
        base = backdoor_set(dag, policy="minimal")
    else:
        base = backdoor_set(dag, policy="parents")
    stripped = dag.without_treatment_outedges()
    base_blocks = d_separated(stripped, dag.treatment, dag.outcome, base)

    kept, dropped = [], []
    for hyp in hypotheses:
        var = resolve(dag, hyp)
        if var is None:
            kept.append(hyp)
            continue
        if var in (dag.treatment, dag.outcome):
            dropped.append((hyp, DROP_IS_TREATMENT_OR_OUTCOME))
            continue
        if var in dag.descendants(dag.outcome):
            dropped.append((hyp, DROP_DESCENDANT_OF_OUTCOME))
            continue
        if var in dag.descendants(dag.treatment):
            dropped.append((hyp, DROP_DESCENDANT_OF_TREATMENT))
            continue
        if var in base:
            kept.append(hyp)
            continue
        if base_blocks and not d_separated(stripped, dag.treatment, dag.outcome,
                                           base | {var}):
            dropped.append((hyp, DROP_OPENS_BIASING_PATH))
            continue
        kept.append(hyp)
    return ScreenResult(kept=kept, dropped=dropped)


def _default_resolve(dag: CausalDag, hyp) -> Optional[str]:
    explicit = getattr(hyp, "dag_var", None)
    if explicit is not None:
        dag._check_var(explicit)
        return explicit
    name = getattr(hyp, "name", None)
    if name is not None:
        return name if name in dag.roles else None
    spec = getattr(hyp, "spec", None)
    if isinstance(spec, SummarySpec):
        for var, bound in dag.summary_bindings.items():
            if bound == spec:
                return var
        return None
    pattern = getattr(hyp, "pattern", None)
    if isinstance(pattern, NetworkPattern):
        for var, bound in dag.pattern_bindings.items():
            if bound.label and bound.label == pattern.label:
                return var
            if (bound.nodes, bound.edges, bound.distinguished) == (
                    pattern.nodes, pattern.edges, pattern.distinguished):
                return var
        return None
    return None


# -- text format -----------------------------------------------------------

_SUMMARY_RE = re.compile(
    r"^(?P<name>\w+)\s*=\s*(?P<kind>\w+)\(\s*(?P<cov>\w+)\s*(?:,\s*(?P<val>[^)]+?)\s*)?\)$"
)


def parse_dag_text(text: str, source: str = "<dag>") -> CausalDag:
    """Parse the DAG file format.

    One ``parent -> child`` edge per line; role annotations like
    ``treatment: vaccine``, ``outcome: infect``,
    ``neighbor_summary: avg_nbr_income = mean(income)`` and
    ``pattern_indicator: in_triangle = clique3``; ``#`` starts a comment.
    Bare variables named only in edges default to role ``covariate``.
    """
    roles, edges = {}, []
    summary_bindings, pattern_bindings = {}, {}
    treatment = outcome = None

    def declare(name, role, lineno):
        if roles.get(name, role) != role and roles[name] != "covariate":
            raise InputError(f"{source}:{lineno}: {name!r} declared as both "
                             f"{roles[name]!r} and {role!r}")
        roles[name] = role

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            parts = [p.strip() for p in line.split("->")]
            if len(parts) != 2 or not all(parts):
                raise InputError(f"{source}:{lineno}: bad edge line {raw.strip()!r}")
            for p in parts:
                roles.setdefault(p, "covariate")
            edges.append((parts[0], parts[1]))
            continue
        if ":" not in line:
            raise InputError(f"{source}:{lineno}: expected 'parent -> child' or "
                             f"'role: name', got {raw.strip()!r}")
        role, rest = [p.strip() for p in line.split(":", 1)]
        if role not in ROLES:
            raise InputError(f"{source}:{lineno}: unknown role {role!r}")
        if role in ("treatment", "outcome", "covariate", "network"):
            declare(rest, role, lineno)
            if role == "treatment":
                if treatment is not None:
                    raise InputError(f"{source}:{lineno}: treatment declared twice")
                treatment = rest
            if role == "outcome":
                if outcome is not None:
                    raise InputError(f"{source}:{lineno}: outcome declared twice")
                outcome = rest
            continue
        m = _SUMMARY_RE.match(rest)
        if role == "neighbor_summary":
            if not m:
                raise InputError(
                    f"{source}:{lineno}: expected 'name = kind(covariate[, value])'"
                )
            declare(m["name"], role, lineno)
            summary_bindings[m["name"]] = SummarySpec(
                covariate=m["cov"], kind=m["kind"], value=m["val"])
            continue
        # pattern_indicator: name = clique3
        if "=" not in rest:
            raise InputError(f"{source}:{lineno}: expected 'name = builtin_pattern'")
        name, builtin = [p.strip() for p in rest.split("=", 1)]
        declare(name, role, lineno)
        pattern_bindings[name] = parse_builtin(builtin)

    if treatment is None or outcome is None:
        raise InputError(f"{source}: treatment and outcome must both be declared")
    return CausalDag(roles, edges, treatment, outcome,
                     summary_bindings, pattern_bindings)


def load_dag(path) -> CausalDag:
    return parse_dag_text(Path(path).read_text(encoding="utf-8"), source=str(path))

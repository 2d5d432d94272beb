"""Network patterns with a distinguished node and subgraph matching.

A pattern matches a unit when some injective, adjacency-preserving map sends
the pattern into the unit's ego network with the distinguished node landing on
the unit itself. Matching uses backtracking with degree pruning; the anchored
variant seeds the distinguished node at the unit of interest, which keeps the
true/false answer identical to enumerate-then-filter while skipping the
irrelevant part of the search space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import InputError
from .graph import CovariateTable, EgoNetwork, SocialNetwork, ego_subgraph

MAX_PATTERN_NODES = 8


@dataclass(frozen=True)
class NetworkPattern:
    """Small connected graph with one distinguished node.

    ``constraints`` optionally maps a pattern node to required covariate
    values (equality on binary/categorical columns only).
    """

    nodes: tuple
    edges: frozenset  # pairs of node names
    distinguished: str
    constraints: Mapping = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        nodes = tuple(str(x) for x in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise InputError("pattern has duplicate node names")
        if not nodes:
            raise InputError("pattern must have at least one node")
        if len(nodes) > MAX_PATTERN_NODES:
            raise InputError(
                f"pattern has {len(nodes)} nodes; max supported is {MAX_PATTERN_NODES}"
            )
        edges = set()
        for e in self.edges:
            a, b = e
            if a == b:
                raise InputError("pattern self-loops are not allowed")
            if a not in nodes or b not in nodes:
                raise InputError(f"pattern edge {e} references unknown node")
            edges.add((a, b) if a <= b else (b, a))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))
        if self.distinguished not in nodes:
            raise InputError(f"distinguished node {self.distinguished!r} not in pattern")
        for node in self.constraints:
            if node not in nodes:
                raise InputError(f"constraint on unknown pattern node {node!r}")
        if not self._connected():
            raise InputError("pattern must be connected")
        if not self.label:
            object.__setattr__(self, "label", f"pattern[{len(nodes)}n{len(edges)}e]")

    def _connected(self) -> bool:
        adj = self.adjacency()
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(self.nodes)

    def adjacency(self) -> dict:
        adj = {u: set() for u in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def degree(self, u: str) -> int:
        return len(self.adjacency()[u])


def builtin_pattern(kind: str, k: int) -> NetworkPattern:
    """Construct a clique(k) or star(k) pattern.

    Cliques are symmetric, so any node may serve as the distinguished one;
    for stars the hub is distinguished.
    """
    if kind == "clique":
        if k < 1:
            raise InputError("clique size must be >= 1")
        names = tuple(f"v{i}" for i in range(k))
        edges = {(names[i], names[j]) for i in range(k) for j in range(i + 1, k)}
        return NetworkPattern(names, frozenset(edges), names[0], label=f"clique{k}")
    if kind == "star":
        if k < 2:
            raise InputError("star size must be >= 2")
        hub = "hub"
        leaves = tuple(f"leaf{i}" for i in range(k - 1))
        edges = {(hub, leaf) for leaf in leaves}
        return NetworkPattern((hub,) + leaves, frozenset(edges), hub, label=f"star{k}")
    raise InputError(f"unknown builtin pattern kind {kind!r}")


def parse_builtin(name: str) -> NetworkPattern:
    """Parse names like ``clique3`` or ``star5``."""
    name = name.strip().lower()
    for kind in ("clique", "star"):
        if name.startswith(kind) and name[len(kind):].isdigit():
            return builtin_pattern(kind, int(name[len(kind):]))
    raise InputError(f"unknown builtin pattern {name!r} (expected e.g. clique3, star5)")


def pattern_from_spec(spec) -> NetworkPattern:
    """Build a pattern from a hypothesis-file entry.

    Either ``{"builtin": "clique3"}`` / a bare string, or explicit
    ``{"nodes": [...], "edges": [[a,b],...], "distinguished": ...,
    "constraints": {node: {covariate: value}}}``.
    """
    if isinstance(spec, str):
        return parse_builtin(spec)
    if "builtin" in spec:
        pat = parse_builtin(spec["builtin"])
        if spec.get("label"):
            return NetworkPattern(pat.nodes, pat.edges, pat.distinguished,
                                  label=spec["label"])
        return pat
    try:
        nodes = tuple(str(x) for x in spec["nodes"])
        edges = frozenset((str(a), str(b)) for a, b in spec["edges"])
        distinguished = str(spec["distinguished"])
    except KeyError as exc:
        raise InputError(f"pattern spec missing field {exc}") from None
    return NetworkPattern(nodes, edges, distinguished,
                          constraints=spec.get("constraints", {}),
                          label=spec.get("label", ""))


def _constraint_ok(pattern, u, unit, covariates):
    required = pattern.constraints.get(u)
    if not required:
        return True
    if covariates is None:
        raise InputError("pattern has covariate constraints but no covariate table given")
    for name, want in required.items():
        kind = covariates.kind(name)
        if kind == "numeric":
            raise InputError(
                f"pattern constraint on numeric column {name!r} is not supported"
            )
        have = covariates.column(name)[unit]
        if kind == "binary":
            lo, hi = covariates.binary_labels.get(name, ("0", "1"))
            want_bit = 1 if str(want) == str(hi) else 0 if str(want) == str(lo) else want
            if int(have) != int(want_bit):
                return False
        else:
            if str(have) != str(want):
                return False
    return True


def _match_order(pattern: NetworkPattern):
    """Distinguished node first, then BFS so each node touches a placed one."""
    adj = pattern.adjacency()
    order = [pattern.distinguished]
    seen = {pattern.distinguished}
    idx = 0
    while idx < len(order):
        for nb in sorted(adj[order[idx]]):
            if nb not in seen:
                seen.add(nb)
                order.append(nb)
        idx += 1
    return order, adj


def _enumerate(ego: EgoNetwork, pattern: NetworkPattern, covariates,
               anchor, induced) -> Iterator[dict]:
    if len(pattern.nodes) > len(ego.members):
        return
    order, padj = _match_order(pattern)
    eadj = ego.adjacency()
    members = sorted(ego.members)
    edeg = {m: len(eadj[m]) for m in members}
    pdeg = {u: len(padj[u]) for u in pattern.nodes}
    mapping: dict = {}
    used: set = set()

    def candidates(u):
        placed = [v for v in padj[u] if v in mapping]
        if placed:
            pool = set(eadj[mapping[placed[0]]])
            for v in placed[1:]:
                pool &= eadj[mapping[v]]
            return sorted(pool)
        return [anchor] if anchor is not None else members

    def feasible(u, cand):
        if cand in used:
            return False
        if edeg[cand] < pdeg[u]:
            return False
        if not _constraint_ok(pattern, u, cand, covariates):
            return False
        for v in padj[u]:
            if v in mapping and mapping[v] not in eadj[cand]:
                return False
        if induced:
            for v, img in mapping.items():
                if v not in padj[u] and img in eadj[cand]:
                    return False
        return True

    def extend(depth) -> Iterator[dict]:
        if depth == len(order):
            yield dict(mapping)
            return
        u = order[depth]
        for cand in candidates(u):
            if feasible(u, cand):
                mapping[u] = cand
                used.add(cand)
                yield from extend(depth + 1)
                del mapping[u]
                used.discard(cand)

    yield from extend(0)


def enumerate_isomorphisms(ego: EgoNetwork, pattern: NetworkPattern, *,
                           covariates: CovariateTable | None = None,
                           induced: bool = False) -> Iterator[dict]:
    """Yield every injective adjacency-preserving map of the pattern into
    the ego network (subgraph semantics: extra edges among images allowed
    unless ``induced``). Order is deterministic."""
    yield from _enumerate(ego, pattern, covariates, anchor=None, induced=induced)


def check_pattern(net: SocialNetwork, pattern: NetworkPattern, i: int, *,
                  induced: bool = False) -> bool:
    """True iff some isomorphism maps the distinguished node onto unit ``i``."""
    net._check_unit(i)
    ego = ego_subgraph(net, i)
    for _ in _enumerate(ego, pattern, net.covariates, anchor=int(i), induced=induced):
        return True
    return False


def check_pattern_all(net: SocialNetwork, pattern: NetworkPattern, *,
                      induced: bool = False) -> np.ndarray:
    """0/1 indicator vector of :func:`check_pattern` over all units."""
    out = np.zeros(net.n, dtype=np.int64)
    for i in range(net.n):
        if check_pattern(net, pattern, i, induced=induced):
            out[i] = 1
    return out

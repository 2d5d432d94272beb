"""Immutable social-network data model: units, symmetric ties, covariates.

Unit ids are dense integers assigned at ingestion in file order; the original
string labels are kept alongside. The stored edge set contains no self-loops,
but every unit's neighborhood includes the unit itself (ties are reflexive by
convention), so ``neighbors(net, i)`` always contains ``i``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

KINDS = ("binary", "categorical", "numeric")

_TRUE_SET = {"1", "yes", "true", "y", "t"}
_FALSE_SET = {"0", "no", "false", "n", "f"}


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate`."""

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


class CovariateTable:
    """Per-unit covariate records sharing one schema.

    Columns are typed: ``binary`` columns are stored as 0/1 integers (with the
    original labels remembered for display), ``numeric`` as floats and
    ``categorical`` as strings.
    """

    def __init__(self, schema, columns, binary_labels=None):
        self.schema = list(schema)  # list of (name, kind)
        self.columns = dict(columns)  # name -> np.ndarray
        self.binary_labels = dict(binary_labels or {})  # name -> (label0, label1)
        names = [name for name, _ in self.schema]
        if sorted(names) != sorted(self.columns):
            raise InputError("schema and columns disagree on column names")
        lengths = {len(col) for col in self.columns.values()}
        if len(lengths) > 1:
            raise InputError(f"ragged covariate columns: lengths {sorted(lengths)}")
        self.n = lengths.pop() if lengths else 0

    def kind(self, name: str) -> str:
        for col, kind in self.schema:
            if col == name:
                return kind
        raise InputError(f"unknown covariate column {name!r}")

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise InputError(f"unknown covariate column {name!r}")
        return self.columns[name]

    def names(self):
        return [name for name, _ in self.schema]

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class EgoNetwork:
    """Sub-network induced by a unit and its direct neighbors."""

    center: int
    members: frozenset
    edges: frozenset  # (lo, hi) pairs, lo < hi

    def adjacency(self) -> dict:
        adj = {m: set() for m in self.members}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def degree(self, i: int) -> int:
        return sum(1 for a, b in self.edges if i in (a, b))


class SocialNetwork:
    """Undirected simple graph over dense unit ids plus a covariate table.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, labels: Sequence[str], edges: Iterable, covariates: CovariateTable | None = None):
        self.labels = tuple(str(x) for x in labels)
        self.n = len(self.labels)
        if len(set(self.labels)) != self.n:
            dupes = sorted({x for x in self.labels if self.labels.count(x) > 1})
            raise InputError(f"duplicate unit ids: {dupes[:5]}")
        adj = [set() for _ in range(self.n)]
        edge_set = set()
        for a, b in edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise InputError(f"edge ({a},{b}) references unknown unit id")
            if a == b:
                continue  # self-loops implicit, never stored
            lo, hi = (a, b) if a < b else (b, a)
            if (lo, hi) not in edge_set:
                edge_set.add((lo, hi))
                adj[a].add(b)
                adj[b].add(a)
        self._adj = tuple(tuple(sorted(s)) for s in adj)
        self._edges = frozenset(edge_set)
        self.covariates = covariates
        if covariates is not None and covariates.n != self.n:
            raise InputError(
                f"covariate table has {covariates.n} rows but network has {self.n} units"
            )

    # -- basic queries ---------------------------------------------------

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return True  # reflexive tie convention
        lo, hi = (i, j) if i < j else (j, i)
        return (lo, hi) in self._edges

    def adjacency(self, i: int) -> tuple:
        """Sorted proper neighbors of ``i`` (excludes ``i``)."""
        self._check_unit(i)
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency(i))

    @property
    def edges(self) -> frozenset:
        return self._edges

    def unit_id(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InputError(f"unknown unit label {label!r}") from None

    def _check_unit(self, i: int) -> None:
        if not isinstance(i, (int, np.integer)) or not (0 <= i < self.n):
            raise InputError(f"unknown unit id {i!r} (have 0..{self.n - 1})")


def neighbors(net: SocialNetwork, i: int) -> set:
    """Neighborhood of ``i`` including ``i`` itself."""
    net._check_unit(i)
    return set(net._adj[i]) | {int(i)}


def ego_subgraph(net: SocialNetwork, i: int) -> EgoNetwork:
    """Sub-network induced by ``neighbors(net, i)``."""
    members = neighbors(net, i)
    edges = set()
    for a in members:
        for b in net._adj[a]:
            if b in members and a < b:
                edges.add((a, b))
    return EgoNetwork(center=int(i), members=frozenset(members), edges=frozenset(edges))


def validate(net: SocialNetwork) -> list:
    """Check all data-model invariants; violations are data, not exceptions."""
    out = []
    for i in range(net.n):
        for j in net._adj[i]:
            if i not in net._adj[j]:
                out.append(Violation("asymmetric_edge", f"({i},{j})",
                                     f"edge {i}->{j} has no mirror {j}->{i}"))
            if not (0 <= j < net.n):
                out.append(Violation("unknown_unit", f"({i},{j})",
                                     f"edge endpoint {j} is not a unit"))
    for a, b in net._edges:
        if a == b:
            out.append(Violation("self_loop", f"({a},{b})", "stored self-loop"))
    tab = net.covariates
    if tab is not None:
        if tab.n != net.n:
            out.append(Violation("row_count", "covariates",
                                 f"{tab.n} rows for {net.n} units"))
        for name, kind in tab.schema:
            col = tab.columns[name]
            if kind == "binary":
                bad = [v for v in np.unique(col) if v not in (0, 1)]
                if bad:
                    out.append(Violation("non_binary", name,
                                         f"binary column has values {bad[:5]}"))
            if kind == "numeric":
                arr = np.asarray(col, dtype=float)
                if np.isnan(arr).any():
                    rows = np.nonzero(np.isnan(arr))[0][:5].tolist()
                    out.append(Violation("missing_value", name,
                                         f"NaN at rows {rows}"))
            if kind == "categorical":
                empties = [idx for idx, v in enumerate(col) if str(v) == ""][:5]
                if empties:
                    out.append(Violation("missing_value", name,
                                         f"empty value at rows {empties}"))
    return out


# -- ingestion -----------------------------------------------------------


def _split_line(line: str):
    if "," in line:
        return [p.strip() for p in line.split(",")]
    return line.split()


_EDGE_HEADERS = {("src", "dst"), ("source", "target"), ("from", "to")}


def read_edge_file(path, known_labels=None):
    """Read one edge-list file into a list of (label, label) pairs.

    One ``src,dst`` pair per line; ``#`` comments and an optional header row
    are skipped; whitespace-separated pairs are accepted too.
    """
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = _split_line(line)
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'src,dst', got {raw.strip()!r}")
            if lineno == 1 and (parts[0].lower(), parts[1].lower()) in _EDGE_HEADERS:
                continue
            pairs.append((parts[0], parts[1]))
    return pairs


def load_network(edge_paths, covariate_path=None, schema_path=None) -> SocialNetwork:
    """Build a network from edge file(s) plus an optional covariate file.

    Multiple edge files are unioned into one homogeneous edge set. When a
    covariate file is given it defines the unit universe (ids in file order)
    and every edge endpoint must appear in it; otherwise units are taken from
    the edge files in order of first appearance.
    """
    if isinstance(edge_paths, (str, Path)):
        edge_paths = [edge_paths]
    all_pairs = []
    for p in edge_paths:
        all_pairs.extend(read_edge_file(p))

    if covariate_path is not None:
        labels, table = read_covariate_file(covariate_path, schema_path=schema_path)
    else:
        labels, table = [], None
        seen = set()
        for a, b in all_pairs:
            for x in (a, b):
                if x not in seen:
                    seen.add(x)
                    labels.append(x)

    index = {lab: i for i, lab in enumerate(labels)}
    edges = []
    for a, b in all_pairs:
        if a not in index or b not in index:
            missing = a if a not in index else b
            raise InputError(f"edge endpoint {missing!r} not present in covariate file")
        edges.append((index[a], index[b]))
    return SocialNetwork(labels, edges, covariates=table)


def _infer_kind(values):
    stripped = [str(v).strip() for v in values]
    lowered = {s.lower() for s in stripped}
    if lowered <= (_TRUE_SET | _FALSE_SET):
        return "binary"
    try:
        floats = [float(s) for s in stripped]
    except ValueError:
        floats = None
    if floats is not None:
        if set(floats) <= {0.0, 1.0}:
            return "binary"
        return "numeric"
    # two arbitrary strings stay categorical; only recognizable boolean
    # vocabularies infer as binary (a schema sidecar can override)
    return "categorical"


def _encode_binary(values, name):
    stripped = [str(v).strip() for v in values]
    lowered = [s.lower() for s in stripped]
    if set(lowered) <= (_TRUE_SET | _FALSE_SET):
        out = np.array([1 if s in _TRUE_SET else 0 for s in lowered], dtype=np.int64)
        ones = [stripped[i] for i, v in enumerate(out) if v == 1]
        zeros = [stripped[i] for i, v in enumerate(out) if v == 0]
        labels = (zeros[0] if zeros else "0", ones[0] if ones else "1")
        return out, labels
    distinct = sorted(set(stripped))
    if len(distinct) == 1:
        # constant column: map the single value to 0
        return np.zeros(len(stripped), dtype=np.int64), (distinct[0], "")
    if len(distinct) != 2:
        raise InputError(f"column {name!r} declared binary but has values {distinct[:5]}")
    lo, hi = distinct
    return np.array([0 if s == lo else 1 for s in stripped], dtype=np.int64), (lo, hi)


def read_covariate_file(path, schema_path=None):
    """Read a delimited covariate file (header row, first column = unit id).

    Column kinds are inferred (binary / numeric / categorical) unless a JSON
    schema sidecar maps column names to kinds explicitly.
    """
    declared = {}
    if schema_path is not None:
        with open(schema_path, "r", encoding="utf-8") as fh:
            declared = json.load(fh)
        bad = {k: v for k, v in declared.items() if v not in KINDS}
        if bad:
            raise InputError(f"schema sidecar has unknown kinds: {bad}")

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty covariate file") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            if any(not c.strip() for c in row):
                col = header[[i for i, c in enumerate(row) if not c.strip()][0]]
                raise InputError(f"{path}:{lineno}: missing value in column {col!r}")
            rows.append([c.strip() for c in row])

    labels = [r[0] for r in rows]
    schema, columns, binary_labels = [], {}, {}
    for ci, name in enumerate(header[1:], start=1):
        values = [r[ci] for r in rows]
        kind = declared.get(name) or _infer_kind(values)
        if kind == "binary":
            col, labs = _encode_binary(values, name)
            binary_labels[name] = labs
        elif kind == "numeric":
            try:
                col = np.array([float(v) for v in values], dtype=float)
            except ValueError as exc:
                raise InputError(f"column {name!r} declared numeric: {exc}") from None
        else:
            col = np.array(values, dtype=object)
        schema.append((name, kind))
        columns[name] = col
    return labels, CovariateTable(schema, columns, binary_labels)


# -- canonical serialization ----------------------------------------------


def write_edge_list(net: SocialNetwork, path) -> None:
    """Canonical edge-list: header plus label-sorted ``src,dst`` pairs (the
    ordering is independent of internal unit ids, so reloading and rewriting
    is byte-stable)."""
    pairs = sorted(tuple(sorted((net.labels[a], net.labels[b])))
                   for a, b in net._edges)
    lines = ["src,dst"] + [f"{a},{b}" for a, b in pairs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _format_number(x: float) -> str:
    if math.isfinite(x) and float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def write_covariates(net: SocialNetwork, path) -> None:
    """Canonical covariate file: units in id order, typed formatting."""
    tab = net.covariates
    if tab is None:
        raise InputError("network has no covariate table to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id"] + tab.names())
    for i in range(net.n):
        row = [net.labels[i]]
        for name, kind in tab.schema:
            v = tab.columns[name][i]
            if kind == "numeric":
                row.append(_format_number(float(v)))
            elif kind == "binary":
                row.append(str(int(v)))
            else:
                row.append(str(v))
        writer.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")

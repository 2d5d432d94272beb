"""Shared fixtures: the ten-unit toy study and small random-graph helpers."""

from importlib import resources

import numpy as np
import pytest

from netmod import CovariateTable, SocialNetwork, load_network

TOY_DIR = resources.files("netmod") / "data" / "toy"

# toy ties among unit labels "1".."10": two triangles plus two separate pairs
TOY_EDGE_LABELS = [("1", "2"), ("1", "3"), ("2", "3"),
                   ("4", "5"), ("4", "6"), ("5", "6"),
                   ("7", "8"), ("9", "10")]

TOY_TE = [0.0, 0.5, 0.0, 1.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0]


@pytest.fixture(scope="session")
def toy_paths():
    return {
        "edges": str(TOY_DIR / "edges.csv"),
        "covariates": str(TOY_DIR / "covariates.csv"),
        "schema": str(TOY_DIR / "schema.json"),
        "dag": str(TOY_DIR / "dag.txt"),
        "hypotheses": str(TOY_DIR / "hypotheses.json"),
        "config": str(TOY_DIR / "config.json"),
    }


@pytest.fixture(scope="session")
def toy_net(toy_paths):
    return load_network([toy_paths["edges"]],
                        covariate_path=toy_paths["covariates"],
                        schema_path=toy_paths["schema"])


def unit(net: SocialNetwork, label) -> int:
    return net.unit_id(str(label))


def random_network(rng: np.random.Generator, n: int, p: float) -> SocialNetwork:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    return SocialNetwork([str(i) for i in range(n)], edges)


def bare_network(n: int, edges=()) -> SocialNetwork:
    return SocialNetwork([str(i) for i in range(n)], edges)


def with_columns(n, edges, **columns) -> SocialNetwork:
    """Network with numeric/binary columns inferred from the arrays given."""
    schema, cols = [], {}
    for name, values in columns.items():
        arr = np.asarray(values)
        if arr.dtype == object or arr.dtype.kind in "US":
            schema.append((name, "categorical"))
            cols[name] = np.asarray([str(v) for v in values], dtype=object)
        elif set(np.unique(arr)) <= {0, 1}:
            schema.append((name, "binary"))
            cols[name] = arr.astype(np.int64)
        else:
            schema.append((name, "numeric"))
            cols[name] = arr.astype(float)
    return SocialNetwork([str(i) for i in range(n)], edges,
                         covariates=CovariateTable(schema, cols))

"""Network data model: neighborhoods, ego graphs, validation, file round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netmod import (InputError, SocialNetwork, ego_subgraph, load_network,
                    neighbors, validate, write_covariates, write_edge_list)
from netmod.graph import read_covariate_file, read_edge_file

from conftest import bare_network, random_network, unit


class TestNeighbors:
    def test_toy_unit4_includes_self_and_triangle_mates(self, toy_net):
        got = neighbors(toy_net, unit(toy_net, 4))
        assert got == {unit(toy_net, 4), unit(toy_net, 5), unit(toy_net, 6)}

    def test_isolated_unit_is_its_own_neighborhood(self):
        net = bare_network(1)
        assert neighbors(net, 0) == {0}

    def test_toy_unit8_pair(self, toy_net):
        assert neighbors(toy_net, unit(toy_net, 8)) == {unit(toy_net, 8),
                                                        unit(toy_net, 7)}

    def test_self_membership_for_all_units(self, toy_net):
        for i in range(toy_net.n):
            assert i in neighbors(toy_net, i)

    def test_unknown_unit_rejected(self, toy_net):
        with pytest.raises(InputError):
            neighbors(toy_net, 99)


class TestEgoSubgraph:
    def test_toy_unit4_triangle(self, toy_net):
        ego = ego_subgraph(toy_net, unit(toy_net, 4))
        ids = {unit(toy_net, x) for x in (4, 5, 6)}
        assert ego.center == unit(toy_net, 4)
        assert ego.members == frozenset(ids)
        assert len(ego.edges) == 3

    def test_isolated_unit_single_node(self):
        ego = ego_subgraph(bare_network(3), 1)
        assert ego.members == frozenset({1})
        assert ego.edges == frozenset()

    def test_toy_unit8_single_edge(self, toy_net):
        ego = ego_subgraph(toy_net, unit(toy_net, 8))
        pair = tuple(sorted((unit(toy_net, 7), unit(toy_net, 8))))
        assert ego.edges == frozenset({pair})

    def test_matches_bruteforce_on_random_graphs(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(2, 50))
            net = random_network(rng, n, float(rng.choice([0.1, 0.3, 0.6])))
            for i in range(n):
                ego = ego_subgraph(net, i)
                members = neighbors(net, i)
                expect = {(a, b) for a in members for b in members
                          if a < b and net.has_edge(a, b)}
                assert ego.members == frozenset(members)
                assert ego.edges == frozenset(expect)


class TestValidate:
    def test_toy_data_clean(self, toy_net):
        assert validate(toy_net) == []

    def test_asymmetric_edge_flagged(self, toy_net):
        net = SocialNetwork(toy_net.labels, toy_net.edges,
                            covariates=toy_net.covariates)
        # corrupt the adjacency directly to simulate a broken loader
        adj = [list(a) for a in net._adj]
        adj[0].append(5)
        net._adj = tuple(tuple(sorted(a)) for a in adj)
        codes = [v.code for v in validate(net)]
        assert "asymmetric_edge" in codes

    def test_nonbinary_treatment_flagged(self, toy_net):
        tab = toy_net.covariates
        cols = dict(tab.columns)
        cols["shg"] = cols["shg"].copy()
        cols["shg"][0] = 2
        bad = SocialNetwork(
            toy_net.labels, toy_net.edges,
            covariates=type(tab)(tab.schema, cols, tab.binary_labels))
        found = [v for v in validate(bad) if v.code == "non_binary"]
        assert found and found[0].subject == "shg"


class TestIngestion:
    def test_header_skipped_and_duplicates_collapsed(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("src,dst\na,b\nb,a\na,b\nb,c\n")
        net = load_network([p])
        assert net.n == 3
        assert len(net.edges) == 2

    def test_ids_dense_in_file_order(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("x,y\nz,x\n")
        net = load_network([p])
        assert net.labels == ("x", "y", "z")

    def test_multiple_edge_files_unioned(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        p1.write_text("1,2\n")
        p2.write_text("2,3\n1,2\n")
        net = load_network([p1, p2])
        assert len(net.edges) == 2

    def test_edge_endpoint_missing_from_covariates(self, tmp_path):
        e = tmp_path / "e.csv"
        e.write_text("1,2\n2,9\n")
        c = tmp_path / "c.csv"
        c.write_text("id,x\n1,0.5\n2,0.25\n")
        with pytest.raises(InputError, match="9"):
            load_network([e], covariate_path=c)

    def test_missing_value_rejected_with_location(self, tmp_path):
        c = tmp_path / "c.csv"
        c.write_text("id,x\n1,\n")
        with pytest.raises(InputError, match="x"):
            read_covariate_file(c)

    def test_kind_inference(self, tmp_path):
        c = tmp_path / "c.csv"
        c.write_text("id,a,b,c\n1,0,2.5,Yes\n2,1,3.5,No\n")
        _, tab = read_covariate_file(c)
        assert tab.kind("a") == "binary"
        assert tab.kind("b") == "numeric"
        assert tab.kind("c") == "binary"
        assert tab.binary_labels["c"] == ("No", "Yes")

    def test_malformed_edge_line_reports_lineno(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("1,2\n1,2,3\n")
        with pytest.raises(InputError, match=":2"):
            read_edge_file(p)


class TestSerialization:
    def test_round_trip_is_byte_stable(self, toy_net, tmp_path):
        e1, c1 = tmp_path / "e1.csv", tmp_path / "c1.csv"
        write_edge_list(toy_net, e1)
        write_covariates(toy_net, c1)
        again = load_network([e1], covariate_path=c1)
        e2, c2 = tmp_path / "e2.csv", tmp_path / "c2.csv"
        write_edge_list(again, e2)
        write_covariates(again, c2)
        assert e1.read_bytes() == e2.read_bytes()
        assert c1.read_bytes() == c2.read_bytes()

    def test_random_networks_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        for k in range(10):
            net = random_network(rng, int(rng.integers(2, 30)), 0.3)
            p1 = tmp_path / f"r{k}a.csv"
            p2 = tmp_path / f"r{k}b.csv"
            write_edge_list(net, p1)
            write_edge_list(load_network([p1]), p2)
            assert p1.read_bytes() == p2.read_bytes()


@given(st.lists(st.tuples(st.integers(0, 14), st.integers(0, 14)), max_size=40))
@settings(max_examples=60, deadline=None)
def test_symmetry_and_self_membership(pairs):
    net = SocialNetwork([str(i) for i in range(15)], pairs)
    for i in range(15):
        nb = neighbors(net, i)
        assert i in nb
        for j in nb - {i}:
            assert i in neighbors(net, j)

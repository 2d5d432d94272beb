"""Neighbor covariate summaries: worked values, invariants, edge handling."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netmod import InputError, SummarySpec, summarize_all, summarize_unit

from conftest import unit, with_columns


class TestSummarizeUnit:
    def test_toy_unit4_all_farm_labour_neighbors(self, toy_net):
        spec = SummarySpec("occupation", "fraction_equal", value="Farm Labour")
        assert summarize_unit(toy_net, spec, unit(toy_net, 4)) == 1.0

    def test_count_equals_degree_excluding_self(self):
        net = with_columns(4, [(0, 1), (0, 2), (0, 3)],
                           age_like=[1.0, 2.0, 3.0, 4.0])
        assert summarize_unit(net, SummarySpec("age_like", "count"), 0) == 3.0
        assert summarize_unit(net, SummarySpec("age_like", "count"), 1) == 1.0

    def test_mean_excludes_self_by_default(self):
        net = with_columns(3, [(0, 1), (0, 2)], x=[10.0, 2.0, 4.0])
        assert summarize_unit(net, SummarySpec("x", "mean"), 0) == 3.0
        assert summarize_unit(net, SummarySpec("x", "mean", include_self=True), 0) == pytest.approx(16 / 3)

    def test_isolated_unit_neutral_value(self):
        net = with_columns(2, [], x=[5.0, 7.0])
        assert summarize_unit(net, SummarySpec("x", "mean"), 0) == 0.0

    def test_min_max_sum(self):
        net = with_columns(3, [(0, 1), (0, 2)], x=[9.0, 2.0, 4.0])
        assert summarize_unit(net, SummarySpec("x", "max"), 0) == 4.0
        assert summarize_unit(net, SummarySpec("x", "min"), 0) == 2.0
        assert summarize_unit(net, SummarySpec("x", "sum"), 0) == 6.0

    def test_kind_compatibility_enforced(self, toy_net):
        with pytest.raises(InputError):
            summarize_unit(toy_net, SummarySpec("te", "fraction_equal", value=1), 0)
        with pytest.raises(InputError):
            summarize_unit(toy_net, SummarySpec("occupation", "mean"), 0)

    def test_unknown_covariate(self, toy_net):
        with pytest.raises(InputError):
            summarize_unit(toy_net, SummarySpec("nope", "mean"), 0)


class TestSummarizeAll:
    def test_two_unit_swap(self):
        net = with_columns(2, [(0, 1)], b=[1, 0])
        got = summarize_all(net, SummarySpec("b", "fraction_equal", value=1))
        assert got.values.tolist() == [0.0, 1.0]

    def test_toy_election_card_vector(self, toy_net):
        got = summarize_all(toy_net, SummarySpec("election_card",
                                                 "fraction_equal", value="Yes"))
        assert got.values.tolist() == [0.5, 1.0, 0.5, 0.5, 0.0, 0.5,
                                       1.0, 1.0, 0.0, 0.0]

    def test_empty_edge_network_flagged_zeros(self):
        net = with_columns(4, [], x=[1.0, 2.0, 3.0, 4.0])
        got = summarize_all(net, SummarySpec("x", "mean"))
        assert got.values.tolist() == [0.0, 0.0, 0.0, 0.0]
        assert got.isolated.all()

    def test_matches_summarize_unit(self, toy_net):
        spec = SummarySpec("te", "mean")
        vec = summarize_all(toy_net, spec)
        for i in range(toy_net.n):
            assert vec.values[i] == summarize_unit(toy_net, spec, i)


@given(st.permutations(list(range(8))))
@settings(max_examples=40, deadline=None)
def test_permutation_equivariance(perm):
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (5, 6)]
    values = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]
    net = with_columns(8, edges, x=values)
    spec = SummarySpec("x", "mean")
    base = summarize_all(net, spec).values

    inv = {old: new for new, old in enumerate(perm)}
    p_edges = [(inv[a], inv[b]) for a, b in edges]
    p_values = [0.0] * 8
    for old in range(8):
        p_values[inv[old]] = values[old]
    p_net = with_columns(8, p_edges, x=p_values)
    permuted = summarize_all(p_net, spec).values
    for old in range(8):
        assert permuted[inv[old]] == pytest.approx(base[old])


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=10))
@settings(max_examples=60, deadline=None)
def test_mean_in_convex_hull_and_fraction_in_unit_interval(values):
    n = len(values) + 1
    edges = [(0, j) for j in range(1, n)]
    net = with_columns(n, edges, x=[0.0] + values,
                       b=[0] + [int(v > 0) for v in values])
    mean = summarize_unit(net, SummarySpec("x", "mean"), 0)
    assert min(values) - 1e-9 <= mean <= max(values) + 1e-9
    frac = summarize_unit(net, SummarySpec("b", "fraction_equal", value=1), 0)
    assert 0.0 <= frac <= 1.0

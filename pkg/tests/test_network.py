import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levynet import (
    RateFunction,
    RoutingMatrix,
    StructuralError,
    build_network,
    structural_sets,
    validate_assumptions,
)
from levynet.network import diff_sign_at_infinity

from conftest import random_tree_routing, random_rates, random_spec, tandem_spec


def test_figure1_phat_and_sets(figure1_spec):
    spec = figure1_spec
    assert np.allclose(spec.phat, [1, 0.5, 1 / 6, 1 / 6, 0.5, 1 / 6], rtol=0, atol=0)
    expected_fronts = {
        1: {1},
        2: {2, 5},
        3: {3, 4, 5, 6},
        4: {4, 5, 6},
        5: {5, 6},
        6: {6},
    }
    expected_children = {1: {2, 5}, 2: {3, 4, 6}, 3: set(), 4: set(), 5: set(), 6: set()}
    for j in range(1, 7):
        fronts, children = structural_sets(spec, j)
        assert fronts == expected_fronts[j]
        assert children == expected_children[j]
    assert spec.parent == {2: 1, 3: 2, 4: 2, 5: 1, 6: 2}


def test_single_node(single_node_spec):
    spec = single_node_spec
    assert spec.phat.tolist() == [1.0]
    assert structural_sets(spec, 1) == (frozenset({1}), frozenset())


def test_three_node_tandem_sets():
    spec = tandem_spec([RateFunction.monomial(c, 0.0) for c in (3.0, 2.0, 1.0)])
    for j in range(1, 4):
        fronts, children = structural_sets(spec, j)
        assert fronts == {j}
        assert children == ({j + 1} if j < 3 else set())


def test_structural_sets_range(single_node_spec):
    with pytest.raises(IndexError):
        structural_sets(single_node_spec, 2)


def test_two_parent_column_rejected():
    p = np.zeros((3, 3))
    p[0, 1] = 0.5
    p[0, 2] = 0.25
    p[1, 2] = 0.25
    with pytest.raises(StructuralError, match="column 3 has 2"):
        RoutingMatrix(3, p)


def test_orphan_column_rejected():
    p = np.zeros((3, 3))
    p[0, 1] = 1.0
    with pytest.raises(StructuralError, match="column 3"):
        RoutingMatrix(3, p)


def test_lower_triangular_mass_rejected():
    p = np.zeros((2, 2))
    p[1, 0] = 0.5
    with pytest.raises(StructuralError):
        RoutingMatrix(2, p)


def test_row_sum_above_one_rejected():
    with pytest.raises(StructuralError, match="row 1"):
        RoutingMatrix.from_edges(3, [(1, 2, 0.7), (1, 3, 0.7)])


def test_rate_count_mismatch():
    routing = RoutingMatrix.from_edges(2, [(1, 2, 1.0)])
    with pytest.raises(StructuralError, match="rate"):
        build_network(routing, [RateFunction.monomial(1.0, 0.0)])


def test_build_is_deterministic():
    rng = np.random.default_rng(0)
    routing = random_tree_routing(rng, 7)
    phat = np.ones(7)
    rates = random_rates(np.random.default_rng(1), phat)
    a = build_network(routing, rates)
    b = build_network(routing, rates)
    assert np.array_equal(a.phat, b.phat)
    assert a.fronts == b.fronts and a.children == b.children


def test_phat_solves_linear_system():
    rng = np.random.default_rng(5)
    for _ in range(25):
        spec = random_spec(rng, int(rng.integers(2, 10)))
        n = spec.n
        lhs = (np.eye(n) - spec.routing.p.T) @ spec.phat
        e1 = np.zeros(n)
        e1[0] = 1.0
        assert np.allclose(lhs, e1, atol=1e-13)


def test_validate_figure1_passes_at_probe_two(figure1_spec):
    report = validate_assumptions(figure1_spec, u_probe=2.0)
    assert report.passed
    names = [c.assumption for c in report.checks]
    assert names == ["routing-shape", "rate-ordering[u-probe]", "rate-ordering[u-large]", "ratio-limits"]
    # the consecutive pair (3, 4) ties exactly at u = 2 and may cross below it
    assert "equality" in report.checks[1].detail
    assert "cross" in report.checks[2].detail


def test_validate_rate_inversion_fails_everywhere():
    spec = tandem_spec([RateFunction.monomial(1.0, 1.0), RateFunction.monomial(2.0, 1.0)])
    for probe in (0.5, 1.0, 7.0):
        report = validate_assumptions(spec, u_probe=probe)
        assert not report.passed
        by_name = {c.assumption: c.passed for c in report.checks}
        assert not by_name["rate-ordering[u-probe]"]
        assert not by_name["rate-ordering[u-large]"]


def test_validate_superlinear_later_rate_fails_ratio_limits():
    spec = tandem_spec([RateFunction.monomial(1.0, 1.0), RateFunction.monomial(1.0, 2.0)])
    report = validate_assumptions(spec, u_probe=2.0)
    by_name = {c.assumption: c.passed for c in report.checks}
    assert not by_name["ratio-limits"]
    assert not report.passed


def test_validate_rejects_bad_probe(single_node_spec):
    with pytest.raises(ValueError):
        validate_assumptions(single_node_spec, u_probe=0.0)


def test_rate_function_merges_and_rejects():
    f = RateFunction(((1.0, 2.0), (3.0, 1.0), (2.0, 2.0)))
    assert f.terms == ((3.0, 2.0), (3.0, 1.0))
    assert f(2.0) == 3.0 * 4.0 + 3.0 * 2.0
    with pytest.raises(ValueError):
        RateFunction(((-1.0, 1.0),))
    with pytest.raises(ValueError):
        f(0.0)


def test_ratio_limit_and_diff_sign():
    a = RateFunction.monomial(2.0, 2.0)
    b = RateFunction.monomial(4.0, 2.0)
    c = RateFunction.monomial(9.0, 1.0)
    assert a.ratio_limit(b) == 0.5
    assert c.ratio_limit(a) == 0.0
    assert math.isinf(a.ratio_limit(c))
    assert diff_sign_at_infinity(a, c) == 1
    assert diff_sign_at_infinity(c, a) == -1
    assert diff_sign_at_infinity(a, RateFunction.monomial(2.0, 2.0)) == 0


@st.composite
def tree_instances(draw):
    n = draw(st.integers(min_value=1, max_value=9))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return n, seed


@given(tree_instances())
def test_set_relations_hold(instance):
    n, seed = instance
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, n)
    full = set(range(1, n + 1))
    for j in full:
        downstream = set().union(*(spec.children[l] for l in range(j, n + 1)))
        assert spec.fronts[j] & downstream == set()
        assert spec.fronts[j] | downstream == set(range(j, n + 1))
        if j < n:
            assert spec.fronts[j + 1] == (spec.fronts[j] | spec.children[j]) - {j}
    for j in full:
        for k in full:
            if j != k:
                assert spec.children[j] & spec.children[k] == set()
            lo = spec.parent[k] + 1 if k > 1 else 1
            assert (k in spec.fronts[j]) == (lo <= j <= k)

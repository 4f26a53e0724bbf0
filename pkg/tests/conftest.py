"""Shared fixtures and random-instance generators.

Random networks are built so the structural and ordering assumptions hold by
construction for every u >= 1: parents precede children, per-parent routing
fractions sum below one, rate/phat ratios are generated strictly decreasing
in the node index, and leading exponents are non-increasing with equal
exponents exactly within each class.
"""

from collections import defaultdict

import numpy as np
import pytest

from levynet import (
    Brownian,
    CenteredGamma,
    CompoundPoisson,
    ExponentialJob,
    RateFunction,
    RoutingMatrix,
    StableSum,
    TailPair,
    build_network,
    partition_rates,
)


def random_tree_routing(rng: np.random.Generator, n: int) -> RoutingMatrix:
    if n == 1:
        return RoutingMatrix(1, np.zeros((1, 1)))
    parents = {j: int(rng.integers(1, j)) for j in range(2, n + 1)}
    kids = defaultdict(list)
    for j, p in parents.items():
        kids[p].append(j)
    edges = []
    for p, js in kids.items():
        raw = rng.uniform(0.2, 1.0, len(js))
        total = raw.sum() / rng.uniform(0.5, 1.0)
        edges.extend((p, j, w / total) for j, w in zip(js, raw))
    return RoutingMatrix.from_edges(n, edges)


def random_rates(rng: np.random.Generator, phat: np.ndarray, max_classes: int = 3):
    """Single-monomial rates with valid ordering for all u >= 1."""
    n = len(phat)
    m = int(rng.integers(1, min(n, max_classes) + 1))
    cuts = sorted(rng.choice(np.arange(1, n), size=m - 1, replace=False)) if m > 1 else []
    bounds = [0, *cuts, n]
    exps = np.empty(n)
    e = rng.uniform(0.5, 2.5)
    for k in range(m):
        exps[bounds[k] : bounds[k + 1]] = e
        e -= rng.uniform(0.7, 1.5)
    t = np.empty(n)
    t[0] = rng.uniform(2.0, 4.0)
    for j in range(1, n):
        t[j] = t[j - 1] * rng.uniform(0.4, 0.9)
    return [RateFunction.monomial(t[j] * phat[j], exps[j]) for j in range(n)]


def random_spec(rng: np.random.Generator, n: int, max_classes: int = 3):
    routing = random_tree_routing(rng, n)
    phat = np.empty(n)
    phat[0] = 1.0
    for j in range(2, n + 1):
        parent = int(np.nonzero(routing.p[:, j - 1] > 0.0)[0][0]) + 1
        phat[j - 1] = routing.fraction(parent, j) * phat[parent - 1]
    return build_network(routing, random_rates(rng, phat, max_classes))


def random_tail(rng: np.random.Generator, regime: str = "heavy") -> TailPair:
    return TailPair(rng.uniform(1.15, 2.0), rng.uniform(0.2, 2.0), regime)


def random_model(rng: np.random.Generator):
    pick = rng.integers(0, 4)
    if pick == 0:
        return Brownian(rng.uniform(0.5, 2.0))
    if pick == 1:
        return CompoundPoisson(rng.uniform(0.5, 2.0), ExponentialJob(rng.uniform(0.5, 2.0)))
    if pick == 2:
        return CenteredGamma(rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0))
    return StableSum(((rng.uniform(1.2, 1.9), rng.uniform(0.3, 1.5)),))


@pytest.fixture(scope="session")
def figure1_spec():
    routing = RoutingMatrix.from_edges(
        6,
        [(1, 2, 0.5), (1, 5, 0.5), (2, 3, 1 / 3), (2, 4, 1 / 3), (2, 6, 1 / 3)],
    )
    rates = [
        RateFunction.monomial(c, e)
        for c, e in [(10, 2), (4, 2), (1, 2), (2, 1), (4, 1), (1, 1)]
    ]
    return build_network(routing, rates)


@pytest.fixture(scope="session")
def figure1_partition(figure1_spec):
    return partition_rates(figure1_spec)


@pytest.fixture(scope="session")
def single_node_spec():
    return build_network(RoutingMatrix(1, np.zeros((1, 1))), [RateFunction.monomial(2.0, 0.0)])


def tandem_spec(rates):
    """Chain network from a list of RateFunction (full routing, no leaks)."""
    n = len(rates)
    if n == 1:
        return build_network(RoutingMatrix(1, np.zeros((1, 1))), rates)
    routing = RoutingMatrix.from_edges(n, [(j, j + 1, 1.0) for j in range(1, n)])
    return build_network(routing, rates)

"""Rate classes: nodes grouped by the growth order of their output rates.

Two nodes share a class exactly when their rate ratio tends to a finite
positive constant; under the monomial representation that means equal leading
exponents.  Each class gets a reference rate (the fastest member's rate
function, so every member fraction lies in (0, 1]) and per-node fractions,
the limits r_i / reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import StructuralError
from .network import NetworkSpec, RateFunction


@dataclass(frozen=True)
class RateClassPartition:
    """Ordered interval classes with anchors, fractions and reference rates.

    classes[k-1] is the tuple of 1-based node ids of class k; anchors[k-1] is
    its smallest node id.  fractions[i-1] is the exact ratio limit of node i's
    rate against its class reference; class_of[i-1] is the 1-based class index
    of node i.
    """

    classes: tuple[tuple[int, ...], ...]
    anchors: tuple[int, ...]
    fractions: np.ndarray
    reference_rates: tuple[RateFunction, ...]
    class_of: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.classes)

    def class_index(self, i: int) -> int:
        return self.class_of[i - 1]

    def members(self, k: int) -> tuple[int, ...]:
        return self.classes[k - 1]

    def with_rescaled_reference(self, k: int, factor: float) -> "RateClassPartition":
        """Replace reference k by factor * reference; member fractions divide by factor."""
        if factor <= 0.0:
            raise ValueError("rescaling factor must be positive")
        refs = list(self.reference_rates)
        refs[k - 1] = refs[k - 1].scaled(factor)
        fracs = self.fractions.copy()
        for i in self.classes[k - 1]:
            fracs[i - 1] /= factor
        fracs.setflags(write=False)
        return replace(self, reference_rates=tuple(refs), fractions=fracs)


def partition_rates(spec: NetworkSpec) -> RateClassPartition:
    """Group nodes into interval classes of equal rate growth order.

    Requires finite ratio limits for all later-vs-earlier node pairs, i.e.
    non-increasing leading exponents along the node order; anything else is a
    structural error (the class intervals would not be well defined).
    """
    n = spec.n
    exps = [r.leading[1] for r in spec.rates]
    coeffs = [r.leading[0] for r in spec.rates]
    for i in range(1, n):
        if exps[i] > exps[i - 1] + 1e-12:
            raise StructuralError(
                f"rate of node {i+1} grows faster than rate of node {i}; "
                "ratio limits must be finite for later nodes"
            )

    classes: list[tuple[int, ...]] = []
    start = 0
    for i in range(1, n + 1):
        if i == n or not math.isclose(exps[i], exps[start], rel_tol=1e-12, abs_tol=1e-12):
            classes.append(tuple(range(start + 1, i + 1)))
            start = i

    anchors = tuple(c[0] for c in classes)
    class_of = [0] * n
    fractions = np.empty(n)
    references: list[RateFunction] = []
    for k, members in enumerate(classes, start=1):
        fastest = max(members, key=lambda i: coeffs[i - 1])
        references.append(spec.rates[fastest - 1])
        ref_coeff = coeffs[fastest - 1]
        for i in members:
            class_of[i - 1] = k
            fractions[i - 1] = coeffs[i - 1] / ref_coeff
    fractions.setflags(write=False)

    return RateClassPartition(tuple(classes), anchors, fractions, tuple(references), tuple(class_of))


def starred_sets(
    spec: NetworkSpec, partition: RateClassPartition, j: int
) -> tuple[frozenset[int], frozenset[int]]:
    """Within-class restrictions of fronts[j] and children[j]."""
    if not 1 <= j <= spec.n:
        raise IndexError(f"node index {j} outside 1..{spec.n}")
    own = frozenset(partition.members(partition.class_index(j)))
    return spec.fronts[j] & own, spec.children[j] & own

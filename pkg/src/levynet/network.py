"""Tree-network structure: routing matrix, rate schedule, derived quantities.

Node indices are 1-based throughout the public API, and node numbering must
already be topological: every node's parent has a smaller index.  The builder
rejects inputs that are not in this form instead of re-ordering them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StructuralError

_TOL = 1e-12


def _merge_terms(terms) -> tuple[tuple[float, float], ...]:
    """Combine coefficients of equal exponents, drop zeros, sort exponent-descending."""
    by_exp: dict[float, float] = {}
    for c, e in terms:
        by_exp[float(e)] = by_exp.get(float(e), 0.0) + float(c)
    merged = [(c, e) for e, c in by_exp.items() if c != 0.0]
    merged.sort(key=lambda t: -t[1])
    return tuple((c, e) for c, e in merged)


@dataclass(frozen=True)
class RateFunction:
    """Output rate as a finite positive-monomial sum c1*u**e1 + ... + ck*u**ek.

    All coefficients must be positive, so the function is positive for every
    u > 0.  The monomial representation makes every large-u ratio limit an
    exact coefficient/exponent comparison rather than a numerical guess.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("rate function needs at least one monomial term")
        for c, e in self.terms:
            if not (c > 0.0 and math.isfinite(c) and math.isfinite(e)):
                raise ValueError(f"monomial coefficient must be positive and finite, got {c}*u**{e}")
        object.__setattr__(self, "terms", _merge_terms(self.terms))

    @classmethod
    def monomial(cls, c: float, e: float) -> "RateFunction":
        return cls(((c, e),))

    def __call__(self, u: float) -> float:
        if u <= 0.0:
            raise ValueError(f"rate functions are defined for u > 0, got u={u}")
        return sum(c * u**e for c, e in self.terms)

    @property
    def leading(self) -> tuple[float, float]:
        """(coefficient, exponent) of the dominating monomial as u -> infinity."""
        return self.terms[0]

    def scaled(self, factor: float) -> "RateFunction":
        if factor <= 0.0:
            raise ValueError("scale factor must be positive")
        return RateFunction(tuple((c * factor, e) for c, e in self.terms))

    def ratio_limit(self, other: "RateFunction") -> float:
        """Exact limit of self(u)/other(u) as u -> infinity (0, finite, or inf)."""
        cs, es = self.leading
        co, eo = other.leading
        if es < eo:
            return 0.0
        if es > eo:
            return math.inf
        return cs / co


def diff_sign_at_infinity(f: RateFunction, g: RateFunction) -> int:
    """Sign of f(u) - g(u) for all large u (+1, -1, or 0 when identical)."""
    merged: dict[float, float] = {}
    scale = 0.0
    for c, e in f.terms:
        merged[e] = merged.get(e, 0.0) + c
        scale = max(scale, abs(c))
    for c, e in g.terms:
        merged[e] = merged.get(e, 0.0) - c
        scale = max(scale, abs(c))
    for e in sorted(merged, reverse=True):
        net = merged[e]
        if abs(net) > _TOL * scale:
            return 1 if net > 0 else -1
    return 0


def _has_sign_change(f: RateFunction, g: RateFunction) -> bool:
    """True when f - g has mixed-sign net coefficients, i.e. a crossing at
    some intermediate u cannot be ruled out by the monomial representation."""
    merged: dict[float, float] = {}
    scale = max(abs(c) for c, _ in f.terms + g.terms)
    for c, e in f.terms:
        merged[e] = merged.get(e, 0.0) + c
    for c, e in g.terms:
        merged[e] = merged.get(e, 0.0) - c
    signs = {1 if v > 0 else -1 for v in merged.values() if abs(v) > _TOL * scale}
    return len(signs) > 1


@dataclass(frozen=True)
class RoutingMatrix:
    """Strictly upper-triangular routing fractions with one parent per column.

    p[i, j] (0-based storage) is the fraction of node i+1's output feeding
    node j+1.  Row sums may be below one: the leaked mass exits the network.
    """

    n: int
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if self.n < 1:
            raise StructuralError(f"node count must be >= 1, got {self.n}")
        if p.shape != (self.n, self.n):
            raise StructuralError(f"routing matrix must be {self.n}x{self.n}, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise StructuralError("routing matrix has non-finite entries")
        if np.any(p < -_TOL) or np.any(p > 1.0 + _TOL):
            bad = np.argwhere((p < -_TOL) | (p > 1.0 + _TOL))[0]
            raise StructuralError(
                f"routing fraction p[{bad[0]+1},{bad[1]+1}] = {p[bad[0], bad[1]]} outside [0, 1]"
            )
        lower = np.tril(p, k=0)
        if np.any(lower != 0.0):
            bad = np.argwhere(lower != 0.0)[0]
            raise StructuralError(
                f"routing mass p[{bad[0]+1},{bad[1]+1}] on or below the diagonal; "
                "nodes must be numbered so every parent precedes its children"
            )
        if np.any(p[:, 0] > 0.0):
            raise StructuralError("column 1 must have no positive entry (node 1 is the root)")
        for j in range(1, self.n):
            parents = np.nonzero(p[:, j] > 0.0)[0]
            if len(parents) != 1:
                raise StructuralError(
                    f"column {j+1} has {len(parents)} positive entries; exactly one parent required"
                )
        rowsums = p.sum(axis=1)
        if np.any(rowsums > 1.0 + 1e-9):
            bad = int(np.argmax(rowsums))
            raise StructuralError(f"row {bad+1} routing fractions sum to {rowsums[bad]} > 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_edges(cls, n: int, edges) -> "RoutingMatrix":
        """edges: iterable of (parent, child, fraction) with 1-based node ids."""
        p = np.zeros((n, n))
        for i, j, frac in edges:
            if not (1 <= i <= n and 1 <= j <= n):
                raise StructuralError(f"edge ({i} -> {j}) references a node outside 1..{n}")
            if p[i - 1, j - 1] != 0.0:
                raise StructuralError(f"duplicate edge ({i} -> {j})")
            p[i - 1, j - 1] = frac
        return cls(n, p)

    def fraction(self, i: int, j: int) -> float:
        """Routing fraction from node i to node j (1-based)."""
        return float(self.p[i - 1, j - 1])


@dataclass(frozen=True)
class NetworkSpec:
    """A validated tree network together with its derived structure.

    phat[j-1] is the cumulative routing fraction from the root into node j
    (first column of (I - P^T)^-1).  fronts[j] collects the nodes with index
    >= j whose parent, if any, has index < j; children[j] are the direct
    offspring of j.  Immutable after construction and safe to share.
    """

    routing: RoutingMatrix
    rates: tuple[RateFunction, ...]
    phat: np.ndarray
    parent: dict[int, int]
    fronts: dict[int, frozenset[int]]
    children: dict[int, frozenset[int]]

    @property
    def n(self) -> int:
        return self.routing.n

    def rate(self, j: int, u: float) -> float:
        return self.rates[j - 1](u)

    def rate_vector(self, u: float) -> np.ndarray:
        return np.array([r(u) for r in self.rates])


@dataclass(frozen=True)
class AssumptionCheck:
    assumption: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[AssumptionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"assumption": c.assumption, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }

    def pretty(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"[{'pass' if c.passed else 'FAIL'}] {c.assumption}: {c.detail}")
        lines.append(f"verdict: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def build_network(routing: RoutingMatrix, rates) -> NetworkSpec:
    """Assemble the derived structure for a validated routing matrix.

    Pure function of its inputs; raises StructuralError when the rate list
    does not match the node count.  Routing-shape violations already raise
    inside RoutingMatrix.
    """
    rates = tuple(rates)
    n = routing.n
    if len(rates) != n:
        raise StructuralError(f"expected {n} rate functions, got {len(rates)}")

    parent: dict[int, int] = {}
    for j in range(2, n + 1):
        parent[j] = int(np.nonzero(routing.p[:, j - 1] > 0.0)[0][0]) + 1

    phat = np.empty(n)
    phat[0] = 1.0
    for j in range(2, n + 1):
        jp = parent[j]
        phat[j - 1] = routing.fraction(jp, j) * phat[jp - 1]
    phat.setflags(write=False)

    fronts: dict[int, frozenset[int]] = {}
    children: dict[int, frozenset[int]] = {}
    for j in range(1, n + 1):
        fronts[j] = frozenset({j} | {i for i in range(j + 1, n + 1) if parent[i] < j})
        children[j] = frozenset(i for i in range(1, n + 1) if routing.fraction(j, i) > 0.0)

    return NetworkSpec(routing, rates, phat, parent, fronts, children)


def structural_sets(spec: NetworkSpec, j: int) -> tuple[frozenset[int], frozenset[int]]:
    """(fronts[j], children[j]) for a 1-based node index."""
    if not 1 <= j <= spec.n:
        raise IndexError(f"node index {j} outside 1..{spec.n}")
    return spec.fronts[j], spec.children[j]


def validate_assumptions(spec: NetworkSpec, u_probe: float = 2.0) -> ValidationReport:
    """Check the routing-shape, rate-ordering and ratio-limit requirements.

    The rate ordering r_j/phat_j > r_{j+1}/phat_{j+1} is required at every
    u > 0 but is only decidable here (a) numerically at u_probe, where ties
    within floating tolerance are accepted, and (b) exactly for all large u
    by monomial comparison.  Potential crossings at intermediate u are
    reported in the detail text, not as failures.  Ratio limits r_i/r_j for
    i > j must exist and be finite; failures are reported, never raised.
    """
    if u_probe <= 0.0:
        raise ValueError("u_probe must be positive")
    n = spec.n
    checks: list[AssumptionCheck] = []

    checks.append(
        AssumptionCheck(
            "routing-shape",
            True,
            "strictly upper triangular, one parent per non-root column, row sums <= 1",
        )
    )

    ratios = spec.rate_vector(u_probe) / spec.phat
    viol = [
        (j, ratios[j - 1], ratios[j])
        for j in range(1, n)
        if ratios[j - 1] < ratios[j] * (1.0 - 1e-12)
    ]
    ties = [j for j in range(1, n) if math.isclose(ratios[j - 1], ratios[j], rel_tol=1e-12)]
    if viol:
        j, a, b = viol[0]
        detail = f"r_{j}/phat_{j} = {a:.6g} < r_{j+1}/phat_{j+1} = {b:.6g} at u = {u_probe:g}"
    else:
        detail = f"rate/phat ratios non-increasing at u = {u_probe:g}"
        if ties:
            detail += f" (equality at consecutive pair{'s' if len(ties) > 1 else ''} {ties})"
    checks.append(AssumptionCheck("rate-ordering[u-probe]", not viol, detail))

    scaled = [r.scaled(1.0 / ph) for r, ph in zip(spec.rates, spec.phat)]
    bad_pairs = [j for j in range(1, n) if diff_sign_at_infinity(scaled[j - 1], scaled[j]) <= 0]
    crossings = [j for j in range(1, n) if _has_sign_change(scaled[j - 1], scaled[j])]
    if bad_pairs:
        j = bad_pairs[0]
        detail = f"r_{j}/phat_{j} does not dominate r_{j+1}/phat_{j+1} for large u"
    else:
        detail = "strict ordering of rate/phat ratios holds for all large u"
        if crossings:
            detail += (
                f"; warning: pair{'s' if len(crossings) > 1 else ''} {crossings} may cross "
                "at intermediate u (mixed-sign monomial difference)"
            )
    checks.append(AssumptionCheck("rate-ordering[u-large]", not bad_pairs, detail))

    infinite = []
    max_ratio = 0.0
    for j in range(1, n + 1):
        for i in range(j + 1, n + 1):
            lim = spec.rates[i - 1].ratio_limit(spec.rates[j - 1])
            if math.isinf(lim):
                infinite.append((i, j))
            else:
                max_ratio = max(max_ratio, lim)
    if infinite:
        i, j = infinite[0]
        detail = f"limit of r_{i}/r_{j} is infinite; later nodes must not dominate earlier ones"
    else:
        detail = f"all ratio limits r_i/r_j (i > j) exist and are finite (max {max_ratio:.6g})"
    checks.append(AssumptionCheck("ratio-limits", not infinite, detail))

    return ValidationReport(tuple(checks))

"""Exact joint transform of the stationary workload at fixed service rates.

The value at frequencies omega >= 0 is a prefactor r_n * w_n / psi_n(w_n)
times, for every node j < n, a ratio of two expressions of the shape

    (Phi_j(x) - y) / (x - psi_j(y)),

with x the drift-gap aggregate kappa_{j+1} and y one of two front-weighted
frequency sums.  Because psi_j is strictly increasing, numerator and
denominator of that shape always share their sign and vanish together, so
each factor is evaluated through the difference quotient of psi_j between
Phi_j(x) and y; the point x = psi_j(y) is removable with value 1/psi_j'(y).
Frequencies with zero entries are therefore handled by continuous extension
instead of special cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularFactorError
from .network import NetworkSpec
from .models import LevyModel
from .roots import invert_increasing

KAPPA_FORMS = ("sum-over-s", "max-ancestor")
_SINGULAR_RTOL = 1e-9


def as_omega(omega, n: int) -> np.ndarray:
    """Validate a frequency vector: length n, finite, componentwise >= 0."""
    w = np.asarray(omega, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"frequency vector must have length {n}, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("frequency vector has non-finite entries")
    if np.any(w < 0.0):
        raise ValueError("frequency vector must be componentwise nonnegative")
    return w


def psi(spec: NetworkSpec, model: LevyModel, j: int, s: float, u: float) -> float:
    """Drifted-input exponent of node j: r_j(u) * s + phi(phat_j * s)."""
    if s < 0.0:
        raise ValueError("psi is defined for s >= 0")
    return spec.rate(j, u) * s + float(model.laplace_exponent(spec.phat[j - 1] * s))


def psi_deriv(spec: NetworkSpec, model: LevyModel, j: int, s: float, u: float) -> float:
    ph = spec.phat[j - 1]
    return spec.rate(j, u) + ph * float(model.laplace_exponent_deriv(ph * s))


def phi_inverse(
    spec: NetworkSpec, model: LevyModel, j: int, x: float, u: float, tol: float = 1e-12
) -> float:
    """Inverse of psi_j at x >= 0 by bracketed bisection with Newton polish."""
    r = spec.rate(j, u)
    return invert_increasing(
        lambda s: psi(spec, model, j, s, u),
        x,
        deriv=lambda s: psi_deriv(spec, model, j, s, u),
        hi_hint=x / r,
        tol=tol,
    )


def delta(spec: NetworkSpec, omega: np.ndarray, j: int) -> float:
    """Front-weighted frequency sum over fronts[j], normalized by phat_j."""
    ph = spec.phat
    return sum(ph[l - 1] * omega[l - 1] for l in spec.fronts[j]) / ph[j - 1]


def delta_hat(spec: NetworkSpec, omega: np.ndarray, j: int) -> float:
    """Like delta but over fronts[j+1]; defined for j < n."""
    ph = spec.phat
    return sum(ph[l - 1] * omega[l - 1] for l in spec.fronts[j + 1]) / ph[j - 1]


def kappa(spec: NetworkSpec, omega, j: int, u: float, form: str = "sum-over-s") -> float:
    """Drift-gap aggregate attached to the factor of node j (1 <= j <= n-1).

    Both forms are algebraic rearrangements of the same quantity; under the
    rate ordering every term is nonnegative, so they agree to relative
    rounding error and the result is >= 0.
    """
    n = spec.n
    if not 1 <= j <= n - 1:
        raise IndexError(f"kappa index {j} outside 1..{n-1}")
    if form not in KAPPA_FORMS:
        raise ValueError(f"unknown kappa form {form!r}; expected one of {KAPPA_FORMS}")
    w = as_omega(omega, n)
    ph = spec.phat
    ratios = spec.rate_vector(u) / ph

    if form == "sum-over-s":
        total = 0.0
        for l in range(j + 1, n + 1):
            front_sum = sum(ph[i - 1] * w[i - 1] for i in spec.fronts[l])
            total += (ratios[l - 2] - ratios[l - 1]) * front_sum
        return total

    total = 0.0
    for i in range(j + 1, n + 1):
        anc = max(j, spec.parent[i])
        total += (ratios[anc - 1] - ratios[i - 1]) * ph[i - 1] * w[i - 1]
    return total


@dataclass(frozen=True)
class FactorBreakdown:
    """Raw constituents of one transform factor (node j < n)."""

    j: int
    kappa: float
    delta: float
    delta_hat: float
    phi_at_kappa: float
    phi_minus_delta: float
    phi_minus_delta_hat: float
    kappa_minus_psi_delta_hat: float
    kappa_minus_psi_delta: float
    value: float


@dataclass(frozen=True)
class LstEvaluation:
    """Value and per-factor breakdown of one exact-transform evaluation."""

    value: float
    prefactor: float
    factors: tuple[FactorBreakdown, ...]
    root_calls: int
    max_root_residual: float


def _diffq_inv(s: float, y: float, psi_s: float, psi_y: float, dpsi_mid, j: int) -> float:
    """(s - y) / (psi(s) - psi(y)) with the removable point s = y handled.

    dpsi_mid is called with the midpoint only when both gap and
    exponent gap are below the singular tolerance; a denominator near zero
    without a matching small numerator is reported as a singular factor.
    """
    num = s - y
    den = psi_s - psi_y
    den_scale = max(abs(psi_s), abs(psi_y), 1.0)
    num_scale = max(abs(s), abs(y), 1.0)
    if abs(den) > _SINGULAR_RTOL * max(abs(num), abs(den), 1.0) and abs(den) > 1e-300:
        return num / den
    if abs(num) <= 1e-6 * num_scale or abs(den) <= _SINGULAR_RTOL * den_scale:
        d = dpsi_mid(0.5 * (s + y))
        if d > 0.0:
            return 1.0 / d
    raise SingularFactorError(
        f"factor {j}: denominator {den:.3e} vanishes while numerator {num:.3e} does not",
        factor_index=j,
    )


def joint_lst_exact(
    spec: NetworkSpec, model: LevyModel, omega, u: float, tol: float = 1e-12
) -> LstEvaluation:
    """Exact stationary-workload transform E[exp(-<omega, Q>)] at parameter u.

    Preconditions: omega >= 0 and the network assumptions hold at u (the rate
    ordering in particular; it keeps every kappa nonnegative).  Zero entries
    of omega are handled by continuous extension; a genuinely degenerate
    factor raises SingularFactorError carrying the factor index, and the
    caller may jitter omega.
    """
    n = spec.n
    w = as_omega(omega, n)
    if u <= 0.0:
        raise ValueError("u must be positive")

    r_n = spec.rate(n, u)
    w_n = float(w[n - 1])
    if w_n == 0.0:
        prefactor = 1.0  # centering makes psi_n'(0) = r_n, so w/psi(w) -> 1/r_n
    else:
        prefactor = r_n * w_n / psi(spec, model, n, w_n, u)

    factors: list[FactorBreakdown] = []
    value = prefactor
    root_calls = 0
    max_residual = 0.0
    for j in range(1, n):
        kap = kappa(spec, w, j, u)
        d_j = delta(spec, w, j)
        dh_j = delta_hat(spec, w, j)
        psi_d = psi(spec, model, j, d_j, u)
        psi_dh = psi(spec, model, j, dh_j, u)
        s_j = phi_inverse(spec, model, j, kap, u, tol=tol)
        root_calls += 1
        max_residual = max(max_residual, abs(psi(spec, model, j, s_j, u) - kap))

        dpsi = lambda s, j=j: psi_deriv(spec, model, j, s, u)
        factor_value = _diffq_inv(s_j, d_j, kap, psi_d, dpsi, j) / _diffq_inv(
            s_j, dh_j, kap, psi_dh, dpsi, j
        )
        factors.append(
            FactorBreakdown(
                j=j,
                kappa=kap,
                delta=d_j,
                delta_hat=dh_j,
                phi_at_kappa=s_j,
                phi_minus_delta=s_j - d_j,
                phi_minus_delta_hat=s_j - dh_j,
                kappa_minus_psi_delta_hat=kap - psi_dh,
                kappa_minus_psi_delta=kap - psi_d,
                value=factor_value,
            )
        )
        value *= factor_value

    if not np.isfinite(value) or value <= 0.0 or value > 1.0 + 1e-9:
        raise SingularFactorError(
            f"assembled transform value {value} outside (0, 1]", factor_index=0
        )
    return LstEvaluation(min(value, 1.0), prefactor, tuple(factors), root_calls, max_residual)

"""Exact fractional-calculus rules for power functions of t.

Time dependence in the solver is always a sum of powers t^(i + j*alpha)
with non-negative integer i, j (the exponent lattice generated from the
initial data by fractional integration and term products).  On such
powers the Riemann-Liouville integral and the Caputo derivative act in
closed form through ratios of gamma functions:

    I^a [t^m] = Gamma(m+1)/Gamma(m+1+a) * t^(m+a)
    D^a [t^m] = Gamma(m+1)/Gamma(m+1-a) * t^(m-a)

with the Caputo convention that integer powers m <= ceil(a)-1 are
annihilated (the derivative of order ceil(a) is taken first, so
low-order polynomials vanish).  This module also provides the iteration
kernel -(t-tau)^(a-1)/Gamma(a), which reduces to -1 at a=1 and to
tau - t at a=2, and the truncated series sum_k z^k / Gamma(1+k*a) used
as the exact linear-limit reference.

All functions here are pure and stateless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import scipy.special

__all__ = [
    "GammaPoleError",
    "LatticeError",
    "LatticeExponent",
    "PowerTerm",
    "gamma",
    "rl_integral_power",
    "caputo_power",
    "lagrange_multiplier",
    "mittag_leffler",
    "MittagLefflerSum",
]

#: tolerance used to recognise integers in floating exponents/orders
_INTEGER_EPS = 1e-9


class GammaPoleError(ValueError):
    """gamma() evaluated at zero or a negative integer."""


class LatticeError(ValueError):
    """An operation would leave the exponent lattice {i + j*alpha}."""


def gamma(z: float) -> float:
    """Gamma function with explicit pole detection.

    Relative accuracy is that of the underlying cephes implementation
    (better than 1e-13 on (0, 171)); the reflection formula handles
    negative non-integer arguments.  Arguments beyond the double range
    raise OverflowError instead of returning inf.
    """
    z = float(z)
    if z <= 0.0 and abs(z - round(z)) <= _INTEGER_EPS:
        raise GammaPoleError(f"gamma pole at z={z}")
    value = float(scipy.special.gamma(z))
    if not math.isfinite(value):
        raise OverflowError(f"gamma({z}) exceeds the floating range")
    return value


@dataclass(frozen=True)
class LatticeExponent:
    """Exponent mu = i + j*alpha of a power of t.

    ``i`` counts whole units, ``j`` counts multiples of the fractional
    order; both are non-negative, with (0, 0) denoting a t-constant.
    The numeric value depends on the run's fixed alpha, so ordering and
    merging of terms happen per run.
    """

    i: int
    j: int

    def __post_init__(self):
        if not (isinstance(self.i, int) and isinstance(self.j, int)):
            raise TypeError("lattice indices must be integers")
        if self.i < 0 or self.j < 0:
            raise ValueError(f"lattice indices must be non-negative, got ({self.i}, {self.j})")

    def value(self, alpha: float) -> float:
        return self.i + self.j * alpha

    def __add__(self, other: "LatticeExponent") -> "LatticeExponent":
        return LatticeExponent(self.i + other.i, self.j + other.j)


@dataclass(frozen=True)
class PowerTerm:
    """Coefficient and exponent of a single power of t."""

    coeff: float
    exponent: LatticeExponent


def rl_integral_power(mu: LatticeExponent, alpha: float) -> PowerTerm:
    """Fractional integral of order alpha of t^mu.

    Returns Gamma(mu+1)/Gamma(mu+1+alpha) * t^(mu+alpha); on the lattice
    the integration step increments j.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    v = mu.value(alpha)
    coeff = gamma(v + 1.0) / gamma(v + 1.0 + alpha)
    return PowerTerm(coeff, LatticeExponent(mu.i, mu.j + 1))


def caputo_power(mu: LatticeExponent, alpha: float) -> Optional[PowerTerm]:
    """Caputo derivative of order alpha of t^mu, or None when annihilated.

    Integer exponents mu <= ceil(alpha)-1 vanish because the Caputo
    derivative differentiates ceil(alpha) times before integrating.
    Surviving terms map to Gamma(mu+1)/Gamma(mu+1-alpha) * t^(mu-alpha);
    the result stays on the lattice by decrementing j (or, for integer
    alpha, by shifting i), otherwise :class:`LatticeError` is raised.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    v = mu.value(alpha)
    n_highest_annihilated = math.ceil(alpha - _INTEGER_EPS) - 1
    if abs(v - round(v)) <= _INTEGER_EPS and round(v) <= n_highest_annihilated:
        return None
    coeff = gamma(v + 1.0) / gamma(v + 1.0 - alpha)
    if mu.j >= 1:
        return PowerTerm(coeff, LatticeExponent(mu.i, mu.j - 1))
    if abs(alpha - round(alpha)) <= _INTEGER_EPS and mu.i - round(alpha) >= 0:
        return PowerTerm(coeff, LatticeExponent(mu.i - int(round(alpha)), 0))
    raise LatticeError(
        f"Caputo derivative of t^({mu.i}+{mu.j}*alpha) with alpha={alpha} "
        "leaves the exponent lattice"
    )


def lagrange_multiplier(alpha: float, t: float, tau: float) -> float:
    """Iteration kernel -(t-tau)^(alpha-1)/Gamma(alpha).

    The real branch is used for non-integer alpha.  At alpha=1 the value
    is exactly -1 and at alpha=2 exactly tau-t, recovering the two
    classical kernels.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not (0.0 <= tau < t):
        raise ValueError(f"require 0 <= tau < t, got tau={tau}, t={t}")
    return -((t - tau) ** (alpha - 1.0)) / gamma(alpha)


class MittagLefflerSum(NamedTuple):
    value: float
    last_term: float  # magnitude of the final summand (truncation indicator)


def mittag_leffler(alpha: float, z: float, nterms: int) -> MittagLefflerSum:
    """Truncated series sum_{k=0}^{nterms-1} z^k / Gamma(1 + k*alpha).

    Terms are accumulated through log-gamma so large k does not overflow
    in the denominator; a summand beyond the floating range raises
    OverflowError.  The magnitude of the last term is returned as a
    truncation residual indicator.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not isinstance(nterms, int) or nterms < 1:
        raise ValueError("nterms must be a positive integer")
    total = 0.0
    term = 1.0
    for k in range(nterms):
        if k > 0:
            if z == 0.0:
                term = 0.0
            else:
                log_term = k * math.log(abs(z)) - float(
                    scipy.special.gammaln(1.0 + k * alpha)
                )
                if log_term > 709.0:
                    raise OverflowError(
                        f"series term {k} exceeds the floating range (|z|={abs(z)})"
                    )
                if k * math.log(abs(z)) < 708.0 and 1.0 + k * alpha < 171.0:
                    # direct ratio keeps terms bit-identical with a plain
                    # z**k / k! Taylor evaluation at alpha=1
                    magnitude = abs(z) ** k / gamma(1.0 + k * alpha)
                else:
                    magnitude = math.exp(log_term)
                term = -magnitude if (z < 0.0 and k % 2 == 1) else magnitude
        total += term
    return MittagLefflerSum(total, abs(term))

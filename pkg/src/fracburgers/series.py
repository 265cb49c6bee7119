"""Successive-correction iteration for the time-fractional Burgers equation.

The problem solved symbolically here is

    D_t^alpha u = u_xx + A * u^p * u_x,   u = u(x, t),

with the time derivative of order 0 < alpha <= 2 taken in the Caputo
sense, initial value u(x, 0) = g(x) and, for 1 < alpha <= 2, initial
rate u_t(x, 0) = h(x).  Every iterate is a :class:`FracPoly`: a finite
sum of terms c(x) * t^(i + j*alpha) whose x-coefficients are symbolic
expressions.  The update subtracts the fractionally integrated residual,

    u_{n+1} = u_n - kappa * I^alpha[ D^alpha u_n - (u_n)_xx - A u_n^p (u_n)_x ],

with kappa = 1 on the diffusion branch (0 < alpha <= 1) and
kappa = alpha - 1 on the wave branch (1 < alpha <= 2); both follow from
choosing the stationarity kernel -(t-tau)^(alpha-1)/Gamma(alpha) in the
correction functional.  The class is closed under all the operators
involved, so iterates are exact up to floating-point gamma ratios; no
terms are ever dropped silently (exceeding the term cap raises).

FracPoly and BurgersProblem are immutable; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional

import numpy as np

from . import fractional
from .expressions import (
    Expr,
    Float,
    Mul,
    Rational,
    Simplifier,
    differentiate,
    evaluate,
    evaluate_many,
)
from .fractional import LatticeExponent
from .parsing import parse

__all__ = [
    "TermCapError",
    "IterationError",
    "BurgersProblem",
    "FracPoly",
    "TERM_CAP",
    "caputo_t",
    "rl_integral_t",
    "spatial_derivative",
    "multiply",
    "power",
    "residual",
    "vim_step",
    "vim_solve",
    "evaluate_series",
    "evaluate_grid",
]

#: hard limit on the number of stored terms; exceeding it is an error,
#: never a silent truncation
TERM_CAP = 10_000

#: decimal places used to detect exponents that coincide numerically
#: (e.g. (2,0) and (0,1) at alpha=2)
_VALUE_DECIMALS = 12


class TermCapError(RuntimeError):
    """A polynomial grew beyond the configured term cap."""


class IterationError(RuntimeError):
    """A correction step failed; ``iterate`` is the failing index and the
    original error is chained as the cause."""

    def __init__(self, message, iterate):
        super().__init__(message)
        self.iterate = iterate


@dataclass(frozen=True)
class BurgersProblem:
    """Problem definition: order, nonlinearity, and initial data.

    ``g`` and ``h`` may be given as expression source strings or trees.
    ``h`` is required exactly when 1 < alpha <= 2 (the wave-type branch
    needs the initial rate) and must be absent otherwise.
    """

    alpha: float
    A: float
    p: int
    g: Expr
    h: Optional[Expr] = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "A", float(self.A))
        if isinstance(self.g, str):
            object.__setattr__(self, "g", parse(self.g))
        if isinstance(self.h, str):
            object.__setattr__(self, "h", parse(self.h))
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not isinstance(self.p, int) or self.p < 1:
            raise ValueError(
                "the symbolic engine requires a positive integer power p "
                f"(got {self.p!r}); non-integer p is outside its term algebra"
            )
        if self.m == 2 and self.h is None:
            raise ValueError("initial rate h is required for 1 < alpha <= 2")
        if self.m == 1 and self.h is not None:
            raise ValueError("initial rate h only applies to 1 < alpha <= 2")

    @property
    def m(self) -> int:
        """Regime index: 1 on (0, 1], 2 on (1, 2]."""
        return 1 if self.alpha <= 1.0 else 2


def _is_zero_coeff(e: Expr) -> bool:
    if isinstance(e, Rational):
        return e.value == 0
    if isinstance(e, Float):
        return e.value == 0.0
    return False


class FracPoly:
    """Finite sum of terms c(x) * t^(i + j*alpha) with symbolic c.

    Terms are keyed by their lattice exponent.  Construction simplifies
    every coefficient, drops exact zeros, merges exponents that coincide
    numerically for the run's alpha, and enforces the term cap.  The
    value at t=0 is always the coefficient at exponent (0, 0); all other
    exponents are strictly positive.
    """

    __slots__ = ("alpha", "_terms")

    def __init__(self, alpha: float, terms=None, *, _canonical: bool = False):
        self.alpha = float(alpha)
        raw = dict(terms or {})
        if _canonical:
            self._terms = raw
        else:
            self._terms = self._normalize(raw)
        if len(self._terms) > TERM_CAP:
            raise TermCapError(
                f"{len(self._terms)} terms exceed the cap of {TERM_CAP}"
            )

    def _normalize(self, raw):
        by_value = {}
        for exponent, coeff in raw.items():
            if not isinstance(exponent, LatticeExponent):
                exponent = LatticeExponent(*exponent)
            key = round(exponent.value(self.alpha), _VALUE_DECIMALS)
            if key in by_value:
                rep, acc = by_value[key]
                # keep the representative with the larger j: the Caputo
                # step can always decrement j, while integer-only keys
                # may fall off the lattice for fractional alpha
                if (exponent.j, -exponent.i) > (rep.j, -rep.i):
                    rep = exponent
                by_value[key] = (rep, acc + coeff)
            else:
                by_value[key] = (exponent, coeff)
        # one context per construction: coefficients of neighbouring
        # exponents share subtrees, so decomposition work is reused
        simplifier = Simplifier()
        out = {}
        for exponent, coeff in by_value.values():
            reduced = simplifier.simplify(coeff)
            if not _is_zero_coeff(reduced):
                out[exponent] = reduced
        return out

    @classmethod
    def zero(cls, alpha: float) -> "FracPoly":
        return cls(alpha, {}, _canonical=True)

    @classmethod
    def from_initial(cls, problem: BurgersProblem) -> "FracPoly":
        """u_0: the initial value, plus t * h on the wave branch so both
        initial conditions are encoded."""
        terms = {LatticeExponent(0, 0): problem.g}
        if problem.m == 2:
            terms[LatticeExponent(1, 0)] = problem.h
        return cls(problem.alpha, terms)

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def sorted_terms(self):
        return sorted(
            self._terms.items(), key=lambda kv: (kv[0].value(self.alpha), kv[0].i)
        )

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, FracPoly):
            return NotImplemented
        return self.alpha == other.alpha and self._terms == other._terms

    def __repr__(self):
        inner = " + ".join(
            f"({coeff}) * t^({exp.i}+{exp.j}a)" for exp, coeff in self.sorted_terms()
        )
        return f"<FracPoly alpha={self.alpha} {inner or '0'}>"

    def _require_same_alpha(self, other: "FracPoly"):
        if self.alpha != other.alpha:
            raise ValueError(
                f"mixed fractional orders: {self.alpha} vs {other.alpha}"
            )

    def __add__(self, other: "FracPoly") -> "FracPoly":
        self._require_same_alpha(other)
        merged = dict(self._terms)
        for exponent, coeff in other._terms.items():
            if exponent in merged:
                merged[exponent] = merged[exponent] + coeff
            else:
                merged[exponent] = coeff
        return FracPoly(self.alpha, merged)

    def __sub__(self, other: "FracPoly") -> "FracPoly":
        return self + other.scale(Rational(-1))

    def __mul__(self, other: "FracPoly") -> "FracPoly":
        self._require_same_alpha(other)
        out = {}
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                key = ea + eb
                product = Mul(ca, cb)
                if key in out:
                    out[key] = out[key] + product
                else:
                    out[key] = product
        return FracPoly(self.alpha, out)

    def scale(self, factor) -> "FracPoly":
        """Multiply every coefficient by a number or expression."""
        if not isinstance(factor, Expr):
            factor = Float(factor) if isinstance(factor, float) else Rational(factor)
        return FracPoly(
            self.alpha,
            {e: Mul(factor, c) for e, c in self._terms.items()},
        )


def caputo_t(u: FracPoly) -> FracPoly:
    """Termwise Caputo derivative of order u.alpha in t.

    Integer exponents at or below ceil(alpha)-1 are annihilated; every
    surviving term has j >= 1 (or an integer alpha), so the result stays
    on the lattice.
    """
    out = {}
    for exponent, coeff in u.terms.items():
        term = fractional.caputo_power(exponent, u.alpha)
        if term is None:
            continue
        scaled = Mul(Float(term.coeff), coeff)
        if term.exponent in out:
            out[term.exponent] = out[term.exponent] + scaled
        else:
            out[term.exponent] = scaled
    return FracPoly(u.alpha, out)


def rl_integral_t(u: FracPoly) -> FracPoly:
    """Termwise Riemann-Liouville integral of order u.alpha in t."""
    out = {}
    for exponent, coeff in u.terms.items():
        term = fractional.rl_integral_power(exponent, u.alpha)
        out[term.exponent] = Mul(Float(term.coeff), coeff)
    return FracPoly(u.alpha, out)


def spatial_derivative(u: FracPoly, order: int = 1) -> FracPoly:
    """Coefficient-wise d^order/dx^order; exponents are untouched.

    differentiate() returns simplified coefficients and the exponent set
    is unchanged, so the result is assembled canonically (zero
    derivatives dropped, nothing re-simplified)."""
    out = {}
    for exponent, coeff in u.terms.items():
        reduced = differentiate(coeff, order)
        if not _is_zero_coeff(reduced):
            out[exponent] = reduced
    return FracPoly(u.alpha, out, _canonical=True)


def multiply(a: FracPoly, b: FracPoly) -> FracPoly:
    """Distributive product; exponents add on the lattice."""
    return a * b


def power(u: FracPoly, p: int) -> FracPoly:
    if not isinstance(p, int) or p < 1:
        raise ValueError("p must be a positive integer")
    result = u
    for _ in range(p - 1):
        result = result * u
    return result


def residual(u: FracPoly, problem: BurgersProblem) -> FracPoly:
    """D^alpha u - u_xx - A * u^p * u_x, the quantity driven to zero."""
    u_x = spatial_derivative(u, 1)
    nonlinear = multiply(power(u, problem.p), u_x)
    return (
        caputo_t(u)
        - spatial_derivative(u_x, 1)
        - nonlinear.scale(Float(problem.A))
    )


def vim_step(u: FracPoly, problem: BurgersProblem) -> FracPoly:
    """One correction: subtract the fractionally integrated residual
    (scaled by alpha-1 on the wave branch)."""
    correction = rl_integral_t(residual(u, problem))
    if problem.m == 2:
        correction = correction.scale(Float(problem.alpha - 1.0))
    return u - correction


def vim_solve(problem: BurgersProblem, n_iter: int):
    """Return the iterates [u_0, ..., u_{n_iter}].

    u_0 encodes the initial data; each subsequent iterate applies
    :func:`vim_step`.  Failures report the iterate index.
    """
    if not isinstance(n_iter, int) or n_iter < 0:
        raise ValueError("n_iter must be a non-negative integer")
    iterates = [FracPoly.from_initial(problem)]
    for k in range(n_iter):
        try:
            iterates.append(vim_step(iterates[-1], problem))
        except Exception as exc:
            raise IterationError(f"iterate {k + 1}: {exc}", k + 1) from exc
    return iterates


def evaluate_series(u: FracPoly, x: float, t: float) -> float:
    """Value of the truncated series at one point; positive exponents
    contribute nothing at t = 0."""
    if t < 0:
        raise ValueError("t must be non-negative")
    total = 0.0
    for exponent, coeff in u.terms.items():
        value = exponent.value(u.alpha)
        if t == 0.0 and value > 0.0:
            continue
        total += evaluate(coeff, x) * (t ** value)
    return total


def evaluate_grid(u: FracPoly, xs, ts) -> np.ndarray:
    """Vectorised evaluation; returns values[i, j] = u(xs[i], ts[j])."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise ValueError("t must be non-negative")
    out = np.zeros((xs.size, ts.size))
    for exponent, coeff in u.terms.items():
        cx = evaluate_many(coeff, xs)
        tv = ts ** exponent.value(u.alpha)
        out += np.outer(cx, tv)
    return out

"""Symbolic expressions in a single spatial variable x.

The AST is deliberately small: exact rational constants, floating
constants, the named constants pi and e, the variable x, a fixed set of
unary functions, and the binary operators +, -, *, /, ^.  Rational
constants are stored exactly as ``fractions.Fraction``; pi and e stay
symbolic until numeric evaluation so that repeated algebra does not
accumulate rounding error in them.

Expressions are immutable; every operation returns a new tree.  All
functions in this module are pure, which makes concurrent read-only use
safe.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

__all__ = [
    "Expr",
    "Rational",
    "Float",
    "Const",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Func",
    "X",
    "FUNCTION_NAMES",
    "ExpressionError",
    "EvaluationError",
    "DifferentiationError",
    "SampleDomainError",
    "differentiate",
    "simplify",
    "Simplifier",
    "evaluate",
    "evaluate_many",
    "equivalent",
    "to_string",
    "is_constant",
    "number",
]

DEFAULT_SAMPLE_SEED = 1729
DEFAULT_SAMPLE_DOMAIN = (-3.0, 3.0)


class ExpressionError(Exception):
    """Base class for errors raised by the expression engine."""


class EvaluationError(ExpressionError):
    """Numeric evaluation hit a domain problem (ln of a non-positive
    value, division by zero, a negative base under a fractional power,
    or overflow).  ``expression`` is the offending subtree."""

    def __init__(self, message, expression):
        super().__init__(f"{message}: {to_string(expression)}")
        self.expression = expression


class DifferentiationError(ExpressionError):
    """The tree contains a form the differentiator does not support
    (a power with x in both base and exponent)."""


class SampleDomainError(ExpressionError):
    """No usable sample points were found when probing two expressions
    for numerical equivalence."""


# ---------------------------------------------------------------------------
# AST nodes


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, other):
        return Pow(self, _coerce(other))

    def __neg__(self):
        return Neg(self)

    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))

    def _key(self):
        raise NotImplementedError

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"<{type(self).__name__} {to_string(self)}>"


class Rational(Expr):
    """Exact rational constant (reduced, positive denominator)."""

    __slots__ = ("value",)

    def __init__(self, numerator, denominator=None):
        if denominator is None:
            self.value = (
                numerator if type(numerator) is Fraction else Fraction(numerator)
            )
        else:
            self.value = Fraction(numerator, denominator)

    def _key(self):
        return self.value


class Float(Expr):
    """Floating constant, kept verbatim until evaluation."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)

    def _key(self):
        return self.value


class Const(Expr):
    """Named transcendental constant, one of ``pi`` or ``e``."""

    __slots__ = ("name",)
    _VALUES = {"pi": math.pi, "e": math.e}

    def __init__(self, name):
        if name not in self._VALUES:
            raise ValueError(f"unknown named constant {name!r}")
        self.name = name

    def _key(self):
        return self.name


class Var(Expr):
    """The spatial variable x (the only free symbol)."""

    __slots__ = ()

    def _key(self):
        return "x"


#: Shared instance of the variable; expressions may freely reuse it.
X = Var()


class Neg(Expr):
    __slots__ = ("operand",)

    def __init__(self, operand):
        self.operand = _coerce(operand)

    def _key(self):
        return self.operand


class _Binary(Expr):
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left = _coerce(left)
        self.right = _coerce(right)

    def _key(self):
        return (self.left, self.right)


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class Pow(_Binary):
    __slots__ = ()


def _d_tan(u):
    return Add(Rational(1), Pow(Func("tan", u), Rational(2)))


def _d_tanh(u):
    return Sub(Rational(1), Pow(Func("tanh", u), Rational(2)))


#: name -> (numeric implementation, derivative of the outer function)
_FUNCTIONS = {
    "sin": (math.sin, lambda u: Func("cos", u)),
    "cos": (math.cos, lambda u: Neg(Func("sin", u))),
    "tan": (math.tan, _d_tan),
    "exp": (math.exp, lambda u: Func("exp", u)),
    "ln": (math.log, lambda u: Div(Rational(1), u)),
    "sinh": (math.sinh, lambda u: Func("cosh", u)),
    "cosh": (math.cosh, lambda u: Func("sinh", u)),
    "tanh": (math.tanh, _d_tanh),
}

FUNCTION_NAMES = tuple(sorted(_FUNCTIONS))

_NUMPY_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "ln": np.log,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
}

# exact values of f(0) used for constant folding; ln is absent on purpose
_FUNCTION_AT_ZERO = {
    "sin": Fraction(0),
    "cos": Fraction(1),
    "tan": Fraction(0),
    "exp": Fraction(1),
    "sinh": Fraction(0),
    "cosh": Fraction(1),
    "tanh": Fraction(0),
}


class Func(Expr):
    """Application of one of the supported unary functions."""

    __slots__ = ("name", "operand")

    def __init__(self, name, operand):
        if name not in _FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self.name = name
        self.operand = _coerce(operand)

    def _key(self):
        return (self.name, self.operand)


def _coerce(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Rational(value)
    if isinstance(value, float):
        return Float(value)
    raise TypeError(f"cannot use {value!r} as an expression")


def number(value):
    """Wrap a Python number as an expression node (Fraction/int exact)."""
    return _coerce(value)


def is_constant(e: Expr) -> bool:
    """True when the tree contains no occurrence of the variable."""
    if isinstance(e, Var):
        return False
    if isinstance(e, (Rational, Float, Const)):
        return True
    if isinstance(e, Neg):
        return is_constant(e.operand)
    if isinstance(e, Func):
        return is_constant(e.operand)
    return is_constant(e.left) and is_constant(e.right)


# ---------------------------------------------------------------------------
# Printing

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 2
_PREC_POW = 3
_PREC_ATOM = 9


def _print(e: Expr):
    """Return (text, precedence)."""
    if isinstance(e, Rational):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator), (_PREC_ATOM if v >= 0 else _PREC_NEG)
        return f"{v.numerator}/{v.denominator}", _PREC_MUL
    if isinstance(e, Float):
        return repr(e.value), (_PREC_ATOM if e.value >= 0 else _PREC_NEG)
    if isinstance(e, Const):
        return e.name, _PREC_ATOM
    if isinstance(e, Var):
        return "x", _PREC_ATOM
    if isinstance(e, Func):
        inner, _ = _print(e.operand)
        return f"{e.name}({inner})", _PREC_ATOM
    if isinstance(e, Neg):
        # '-' binds to a single grammar base, so anything non-atomic must
        # be parenthesised or the reparse would attach '^'/'*' to the
        # negated base instead of the whole operand
        text = _child(e.operand, _PREC_ATOM)
        return f"-{text}", _PREC_NEG
    if isinstance(e, Add):
        lt = _child(e.left, _PREC_ADD)
        right, rtext = _strip_negative(e.right)
        if right is not None:
            return f"{lt} - {_child(right, _PREC_ADD + 1)}", _PREC_ADD
        return f"{lt} + {_child(e.right, _PREC_ADD)}", _PREC_ADD
    if isinstance(e, Sub):
        return f"{_child(e.left, _PREC_ADD)} - {_child(e.right, _PREC_ADD + 1)}", _PREC_ADD
    if isinstance(e, Mul):
        return f"{_child(e.left, _PREC_MUL)}*{_child(e.right, _PREC_MUL + 1)}", _PREC_MUL
    if isinstance(e, Div):
        return f"{_child(e.left, _PREC_MUL)}/{_child(e.right, _PREC_MUL + 1)}", _PREC_MUL
    if isinstance(e, Pow):
        # '^' is right-associative, so the left child needs parentheses
        # even at equal precedence
        return f"{_child(e.left, _PREC_POW + 1)}^{_child(e.right, _PREC_POW)}", _PREC_POW
    raise TypeError(f"unprintable node {e!r}")


def _strip_negative(e: Expr):
    """If e prints with a leading minus, return its positive form."""
    if isinstance(e, Neg):
        return e.operand, None
    if isinstance(e, Rational) and e.value < 0:
        return Rational(-e.value), None
    if isinstance(e, Float) and e.value < 0:
        return Float(-e.value), None
    if isinstance(e, Mul):
        stripped, _ = _strip_negative(e.left)
        if stripped is not None:
            return Mul(stripped, e.right), None
    return None, None


def _child(e: Expr, minimum: int) -> str:
    text, prec = _print(e)
    if prec < minimum:
        return f"({text})"
    return text


def to_string(e: Expr) -> str:
    """Render the tree in the same grammar :func:`fracburgers.parsing.parse`
    accepts; the round trip preserves the evaluated value."""
    text, _ = _print(e)
    return text


# ---------------------------------------------------------------------------
# Numeric evaluation


def evaluate(e: Expr, x: float) -> float:
    """Evaluate at a single point; raises :class:`EvaluationError` with the
    offending subexpression on domain problems."""
    return _eval_scalar(e, float(x))


def _eval_scalar(e: Expr, x: float) -> float:
    if isinstance(e, Rational):
        return float(e.value)
    if isinstance(e, Float):
        return e.value
    if isinstance(e, Const):
        return Const._VALUES[e.name]
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval_scalar(e.operand, x)
    if isinstance(e, Add):
        return _eval_scalar(e.left, x) + _eval_scalar(e.right, x)
    if isinstance(e, Sub):
        return _eval_scalar(e.left, x) - _eval_scalar(e.right, x)
    if isinstance(e, Mul):
        return _eval_scalar(e.left, x) * _eval_scalar(e.right, x)
    if isinstance(e, Div):
        denom = _eval_scalar(e.right, x)
        if denom == 0.0:
            raise EvaluationError("division by zero", e)
        return _eval_scalar(e.left, x) / denom
    if isinstance(e, Pow):
        base = _eval_scalar(e.left, x)
        expo = _eval_scalar(e.right, x)
        try:
            result = base ** expo
        except ZeroDivisionError:
            raise EvaluationError("zero raised to a negative power", e) from None
        except OverflowError:
            raise EvaluationError("overflow in power", e) from None
        except ValueError:
            raise EvaluationError("negative base under fractional power", e) from None
        if isinstance(result, complex):
            raise EvaluationError("negative base under fractional power", e)
        return result
    if isinstance(e, Func):
        arg = _eval_scalar(e.operand, x)
        if e.name == "ln" and arg <= 0.0:
            raise EvaluationError("ln of a non-positive value", e)
        try:
            return _FUNCTIONS[e.name][0](arg)
        except (ValueError, OverflowError) as exc:
            raise EvaluationError(str(exc), e) from None
    raise TypeError(f"cannot evaluate {e!r}")


def evaluate_many(e: Expr, xs) -> np.ndarray:
    """Vectorised evaluation over an array of points.  Falls back to the
    scalar path to pinpoint the bad point when a value comes out
    non-finite."""
    xs = np.asarray(xs, dtype=float)
    with np.errstate(all="ignore"):
        values = _eval_array(e, xs)
    values = np.broadcast_to(np.asarray(values, dtype=float), xs.shape).copy()
    bad = ~np.isfinite(values)
    if bad.any():
        # re-evaluate the first offending point for a precise error
        _eval_scalar(e, float(xs[np.argwhere(bad)[0][0]] if xs.ndim == 1 else xs[bad][0]))
        raise EvaluationError("non-finite value in array evaluation", e)
    return values


def _eval_array(e: Expr, xs: np.ndarray):
    if isinstance(e, Rational):
        return float(e.value)
    if isinstance(e, Float):
        return e.value
    if isinstance(e, Const):
        return Const._VALUES[e.name]
    if isinstance(e, Var):
        return xs
    if isinstance(e, Neg):
        return -_eval_array(e.operand, xs)
    if isinstance(e, Add):
        return _eval_array(e.left, xs) + _eval_array(e.right, xs)
    if isinstance(e, Sub):
        return _eval_array(e.left, xs) - _eval_array(e.right, xs)
    if isinstance(e, Mul):
        return _eval_array(e.left, xs) * _eval_array(e.right, xs)
    if isinstance(e, Div):
        return _eval_array(e.left, xs) / _eval_array(e.right, xs)
    if isinstance(e, Pow):
        return np.power(_eval_array(e.left, xs), _eval_array(e.right, xs))
    if isinstance(e, Func):
        return _NUMPY_FUNCTIONS[e.name](_eval_array(e.operand, xs))
    raise TypeError(f"cannot evaluate {e!r}")


# ---------------------------------------------------------------------------
# Differentiation


def differentiate(e: Expr, order: int = 1) -> Expr:
    """d^order/dx^order of the expression.

    Powers must have a constant exponent (power rule) or a constant base
    (exponential rule); anything else raises
    :class:`DifferentiationError` rather than producing a wrong tree.
    ``order=0`` returns the input unchanged.
    """
    if not isinstance(order, int) or order < 0:
        raise ValueError("order must be a non-negative integer")
    result = e
    for _ in range(order):
        result = simplify(_derivative(result))
    return result


def _derivative(e: Expr) -> Expr:
    if isinstance(e, (Rational, Float, Const)):
        return Rational(0)
    if isinstance(e, Var):
        return Rational(1)
    if isinstance(e, Neg):
        return Neg(_derivative(e.operand))
    if isinstance(e, Add):
        return Add(_derivative(e.left), _derivative(e.right))
    if isinstance(e, Sub):
        return Sub(_derivative(e.left), _derivative(e.right))
    if isinstance(e, Mul):
        return Add(
            Mul(_derivative(e.left), e.right),
            Mul(e.left, _derivative(e.right)),
        )
    if isinstance(e, Div):
        numerator = Sub(
            Mul(_derivative(e.left), e.right),
            Mul(e.left, _derivative(e.right)),
        )
        return Div(numerator, Pow(e.right, Rational(2)))
    if isinstance(e, Pow):
        if is_constant(e.right):
            scaled = Mul(e.right, Pow(e.left, Sub(e.right, Rational(1))))
            return Mul(scaled, _derivative(e.left))
        if is_constant(e.left):
            return Mul(Mul(e, Func("ln", e.left)), _derivative(e.right))
        raise DifferentiationError(
            "cannot differentiate a power with the variable in both base "
            f"and exponent: {to_string(e)}"
        )
    if isinstance(e, Func):
        outer = _FUNCTIONS[e.name][1](e.operand)
        return Mul(outer, _derivative(e.operand))
    raise TypeError(f"cannot differentiate {e!r}")


# ---------------------------------------------------------------------------
# Simplification
#
# Expressions are normalised to a sum of monomials: each monomial is a
# rational-or-float coefficient times a product of atomic factors raised
# to rational (or float) exponents.  Atoms are variables, named
# constants, function applications, and sums that cannot be divided
# through (these keep an integer exponent, which is how quotients such
# as exp(x)/(1+exp(x))^2 combine their denominators).  Guarantees:
# constant folding, annihilation/identity for 0 and 1, flattening of
# nested sums/products, and collection of identical subterms.  No
# trigonometric rewriting is attempted: sin(x)^2 + cos(x)^2 stays as is.


def simplify(e: Expr) -> Expr:
    return Simplifier().simplify(e)


def _is_int(value) -> bool:
    if isinstance(value, int):
        return True
    return isinstance(value, Fraction) and value.denominator == 1


def _norm_exp(value):
    """Prefer plain ints for integral exponents (cheap hashing/compare)."""
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value


def _nadd(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return float(a) + float(b)
    return a + b


def _nmul(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return float(a) * float(b)
    return a * b


def _npow_int(a, n: int):
    if isinstance(a, float):
        return a ** n
    if isinstance(a, Fraction):
        return a ** n
    return Fraction(a) ** n


_EXPAND_LIMIT = 6  # largest integer power of a sum that gets expanded
_FRAC_ONE = Fraction(1)
_FRAC_MINUS_ONE = Fraction(-1)


class Simplifier:
    """Reusable canonicalisation context.

    A single instance may simplify many related expressions; subtrees it
    has already decomposed are remembered (by identity), which makes the
    repeated coefficient algebra of polynomial products close to linear
    instead of quadratic.  Results are identical to fresh
    :func:`simplify` calls.
    """

    def __init__(self):
        self.atoms = {}
        self._memo = {}
        self._sum_atom_keys = set()

    def simplify(self, e: Expr) -> Expr:
        return self._rebuild(self._sum(e))

    # -- decomposition ------------------------------------------------

    def _atom(self, e: Expr, exponent=1):
        key = to_string(e)
        self.atoms[key] = e
        if isinstance(e, (Add, Sub)):
            self._sum_atom_keys.add(key)
        return {((key, exponent),): _FRAC_ONE}

    def _sum(self, e: Expr):
        """Decompose into {monomial-key: coefficient}, memoised by node
        identity (the memo also keeps the node alive)."""
        hit = self._memo.get(id(e))
        if hit is not None and hit[0] is e:
            return hit[1]
        terms = self._decompose(e)
        self._memo[id(e)] = (e, terms)
        return terms

    def _decompose(self, e: Expr):
        if isinstance(e, Rational):
            return {(): e.value} if e.value != 0 else {}
        if isinstance(e, Float):
            return {(): e.value} if e.value != 0.0 else {}
        if isinstance(e, (Const, Var)):
            return self._atom(e)
        if isinstance(e, Func):
            return self._func(e)
        if isinstance(e, (Add, Sub, Neg)):
            # iterative spine walk: deep chains must not hit the
            # interpreter recursion limit
            out = {}
            stack = [(e, False)]
            while stack:
                node, negated = stack.pop()
                if isinstance(node, Add):
                    stack.append((node.left, negated))
                    stack.append((node.right, negated))
                elif isinstance(node, Sub):
                    stack.append((node.left, negated))
                    stack.append((node.right, not negated))
                elif isinstance(node, Neg):
                    stack.append((node.operand, not negated))
                else:
                    part = self._sum(node)
                    if negated:
                        part = _scale(part, _FRAC_MINUS_ONE)
                    _merge_into(out, part)
            return out
        if isinstance(e, Mul):
            factors = []
            stack = [e]
            while stack:
                node = stack.pop()
                if isinstance(node, Mul):
                    stack.append(node.left)
                    stack.append(node.right)
                else:
                    factors.append(self._sum(node))
            out = factors[0]
            for f in factors[1:]:
                out = self._product(out, f)
            return out
        if isinstance(e, Div):
            return self._product(self._sum(e.left), self._inverse(e.right))
        if isinstance(e, Pow):
            return self._power(e)
        raise TypeError(f"cannot simplify {e!r}")

    def _func(self, e: Func):
        arg = self.simplify(e.operand)
        if isinstance(arg, Rational) and e.name in _FUNCTION_AT_ZERO:
            if arg.value == 0:
                value = _FUNCTION_AT_ZERO[e.name]
                return {(): value} if value != 0 else {}
        if e.name == "ln" and isinstance(arg, Rational) and arg.value == 1:
            return {}
        return self._atom(Func(e.name, arg))

    def _product(self, left, right):
        if len(left) > len(right):
            left, right = right, left
        if not left:
            return {}
        if len(left) == 1:
            (mono, coeff), = left.items()
            if not mono:  # pure number: plain rescaling
                return _scale(right, coeff)
        out = {}
        for mono_a, ca in left.items():
            for mono_b, cb in right.items():
                key = _combine_monomials(mono_a, mono_b)
                coeff = _nmul(ca, cb)
                if key in out:
                    coeff = _nadd(out[key], coeff)
                if coeff == 0:
                    out.pop(key, None)
                else:
                    out[key] = coeff
        return self._expand_sums(out)

    def _expand_sums(self, terms):
        """Distribute sum-valued atoms that end up carrying a small
        positive integer exponent (monomial inversion and exponent
        arithmetic can create them); the canonical form must not hide an
        expandable factor, or simplification would not be idempotent."""
        if not self._sum_atom_keys:
            return terms
        flagged = [
            mono
            for mono in terms
            if any(
                isinstance(ex, int)
                and 1 <= ex <= _EXPAND_LIMIT
                and key in self._sum_atom_keys
                for key, ex in mono
            )
        ]
        if not flagged:
            return terms
        out = {k: v for k, v in terms.items() if k not in set(flagged)}
        for mono in flagged:
            coeff = terms[mono]
            keep = []
            expand = []
            for key, ex in mono:
                if (
                    isinstance(ex, int)
                    and 1 <= ex <= _EXPAND_LIMIT
                    and key in self._sum_atom_keys
                ):
                    expand.append((key, ex))
                else:
                    keep.append((key, ex))
            piece = {tuple(keep): coeff}
            for key, ex in expand:
                inner = self._sum(self.atoms[key])
                for _ in range(ex):
                    piece = self._product(piece, inner)
            _merge_into(out, piece)
        return out

    def _inverse(self, denominator: Expr):
        return self._rational_power(denominator, Fraction(-1))

    def _power(self, e: Pow):
        expo = self.simplify(e.right)
        if isinstance(expo, Rational):
            return self._rational_power(e.left, expo.value)
        if isinstance(expo, Float):
            base = self.simplify(e.left)
            if isinstance(base, (Rational, Float)):
                b = float(base.value)
                if b > 0 or (b == 0 and expo.value > 0):
                    return {(): b ** expo.value} if b ** expo.value != 0 else {}
            return self._atom(Pow(base, expo))
        # symbolic exponent: parseable, not differentiable; keep as atom
        return self._atom(Pow(self.simplify(e.left), expo))

    def _rational_power(self, base: Expr, q: Fraction):
        if q == 0:
            return {(): _FRAC_ONE}
        # fold (b^m)^q into b^(m*q) for integer q so that quotient-rule
        # denominators land on the same atom as products of inverses;
        # a literal zero base is never folded (1/0 must stay an error)
        if _is_int(q):
            while True:
                if isinstance(base, Neg):
                    inner = self._rational_power(base.operand, q)
                    sign = _FRAC_MINUS_ONE ** int(q)
                    return _scale(inner, sign) if sign != 1 else inner
                if isinstance(base, Pow) and not (
                    isinstance(base.left, Rational) and base.left.value == 0
                ):
                    inner_exp = self.simplify(base.right)
                    if isinstance(inner_exp, Rational):
                        q = q * inner_exp.value
                        base = base.left
                        if q == 0:
                            return {(): _FRAC_ONE}
                        if not _is_int(q):
                            break
                        continue
                break
        if q == 1:
            return self._sum(base)
        terms = self._sum(base)
        if not terms:
            if q > 0:
                return {}
            return self._atom(Pow(Rational(0), Rational(q)))
        if len(terms) == 1:
            (mono, coeff), = terms.items()
            if _is_int(q):
                n = int(q)
                if coeff == 0:
                    return {} if n > 0 else self._atom(Pow(Rational(0), Rational(q)))
                scaled = _combine_powers(mono, Fraction(q))
                return self._expand_sums({scaled: _npow_int(coeff, n)})
            # fractional exponent: only safe to fold for a bare atom or
            # an exact rational root; anything else stays wrapped
            if coeff == 1 and len(mono) == 1 and mono[0][1] == 1:
                key, _ = mono[0]
                return {((key, q),): _FRAC_ONE}
            if isinstance(coeff, Fraction) and coeff > 0 and not mono:
                root = _exact_fraction_root(coeff, q)
                if root is not None:
                    return {(): root}
            return self._sum_power_atom(terms, q)
        if _is_int(q):
            n = int(q)
            if 2 <= n <= _EXPAND_LIMIT:
                out = terms
                for _ in range(n - 1):
                    out = self._product(out, terms)
                return out
            return self._sum_power_atom(terms, q)
        return self._sum_power_atom(terms, q)

    def _sum_power_atom(self, terms, q: Fraction):
        """Wrap a (possibly normalised) sum as an atomic base raised to q."""
        content = Fraction(1)
        if _is_int(q) and all(isinstance(c, Fraction) for c in terms.values()):
            content = _rational_content(terms)
            if content != 1:
                terms = {k: c / content for k, c in terms.items()}
        base = self._rebuild(terms)
        atom = self._atom(base, _norm_exp(q))
        if content != 1:
            factor = _npow_int(content, int(q))
            return _scale(atom, factor)
        return atom

    # -- reconstruction ----------------------------------------------

    def _rebuild(self, terms) -> Expr:
        if not terms:
            return Rational(0)
        ordered = sorted(terms.items(), key=lambda item: _term_sort_key(item[0]))
        built = [self._build_term(mono, coeff) for mono, coeff in ordered]
        return _balanced_sum(built)

    def _build_term(self, mono, coeff) -> Expr:
        factors = []
        for key, exponent in mono:
            base = self.atoms[key]
            if exponent == 1:
                factors.append(base)
            else:
                factors.append(Pow(base, _number_node(exponent)))
        if not factors:
            return _number_node(coeff)
        product = factors[0]
        for f in factors[1:]:
            product = Mul(product, f)
        if coeff == 1:
            return product
        if coeff == -1:
            return Neg(product)
        return Mul(_number_node(coeff), product)


def _balanced_sum(nodes):
    """Combine term nodes into a balanced tree (keeps recursion depth
    logarithmic for every later traversal) while rendering negative
    terms as subtractions."""
    while len(nodes) > 1:
        paired = []
        for i in range(0, len(nodes) - 1, 2):
            left, right = nodes[i], nodes[i + 1]
            stripped, _ = _strip_negative(right)
            if stripped is not None:
                paired.append(Sub(left, stripped))
            else:
                paired.append(Add(left, right))
        if len(nodes) % 2:
            paired.append(nodes[-1])
        nodes = paired
    return nodes[0]


def _number_node(value) -> Expr:
    if isinstance(value, float):
        return Float(value)
    return Rational(value)


def _scale(terms, factor):
    if factor == 0:
        return {}
    return {k: _nmul(c, factor) for k, c in terms.items()}


def _merge_into(acc, extra):
    for key, coeff in extra.items():
        if key in acc:
            total = _nadd(acc[key], coeff)
            if total == 0:
                del acc[key]
            else:
                acc[key] = total
        else:
            acc[key] = coeff
    return acc


def _combine_monomials(a, b):
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for key, exponent in b:
        if key in powers:
            total = _nadd(powers[key], exponent)
            if total == 0:
                del powers[key]
            else:
                powers[key] = _norm_exp(total)
        else:
            powers[key] = exponent
    return tuple(sorted(powers.items()))


def _combine_powers(mono, q: Fraction):
    return tuple(sorted((k, _norm_exp(ex * q)) for k, ex in mono))


def _rational_content(terms) -> Fraction:
    from math import gcd

    numerators = [abs(c.numerator) for c in terms.values()]
    denominators = [c.denominator for c in terms.values()]
    num = 0
    for n in numerators:
        num = gcd(num, n)
    den = 1
    for d in denominators:
        den = den * d // gcd(den, d)
    content = Fraction(num, den)
    leading_key = min(terms, key=_term_sort_key)
    if terms[leading_key] < 0:
        content = -content
    return content if content != 0 else Fraction(1)


def _term_sort_key(mono):
    # constant term first, then lexicographic on factors
    return (len(mono) > 0, mono)


def _exact_fraction_root(value: Fraction, q: Fraction):
    """q-th power of a positive rational when the result is again rational."""
    if q.denominator == 1:
        return value ** q.numerator
    num = _iroot(value.numerator, q.denominator)
    den = _iroot(value.denominator, q.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** q.numerator


def _iroot(n: int, k: int):
    """Integer k-th root of n, or None when n is not a perfect power."""
    if n < 0:
        return None
    r = round(n ** (1.0 / k))
    for candidate in (r - 1, r, r + 1):
        if candidate >= 0 and candidate ** k == n:
            return candidate
    return None


# ---------------------------------------------------------------------------
# Probabilistic equivalence


def equivalent(
    a: Expr,
    b: Expr,
    samples: int = 32,
    tol: float = 1e-9,
    seed: int = DEFAULT_SAMPLE_SEED,
    domain: tuple = DEFAULT_SAMPLE_DOMAIN,
) -> bool:
    """Compare two expressions at deterministic pseudo-random points.

    This is a probabilistic equality check: it returns True when
    ``|a(x) - b(x)| <= tol * (1 + |a(x)|)`` at every usable sample point
    drawn with the fixed seed.  Points where either expression has a
    domain problem are skipped; if fewer than ``samples`` usable points
    exist in ``domain``, :class:`SampleDomainError` is raised.
    """
    if samples < 8:
        raise ValueError("samples must be at least 8")
    rng = np.random.default_rng(seed)
    lo, hi = domain
    found = 0
    for x in rng.uniform(lo, hi, size=64 * samples):
        try:
            va = evaluate(a, float(x))
            vb = evaluate(b, float(x))
        except EvaluationError:
            continue
        if not (math.isfinite(va) and math.isfinite(vb)):
            continue
        found += 1
        if abs(va - vb) > tol * (1.0 + abs(va)):
            return False
        if found >= samples:
            return True
    raise SampleDomainError(
        f"only {found} usable sample points shared by both expressions in {domain}"
    )

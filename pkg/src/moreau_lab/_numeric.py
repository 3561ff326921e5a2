"""Scalar helpers shared by the exact (rational) and floating-point code paths.

Coefficients are either :class:`fractions.Fraction` (exact mode) or ``float``.
Integers and ``"p/q"`` strings are promoted to ``Fraction`` so that integer
division never silently degrades to floating point.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

INF = math.inf
FLOAT_TOL = 1e-9


def as_number(x):
    """Coerce ``x`` to a ``Fraction`` (ints, rationals, strings) or ``float``."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if math.isnan(x):
            raise ValueError("NaN is not an extended real")
        return x
    if isinstance(x, str):
        s = x.strip().lower().replace("−", "-")
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
        return Fraction(s)
    if isinstance(x, Rational):
        return Fraction(int(x.numerator), int(x.denominator))
    y = float(x)
    if math.isnan(y):
        raise ValueError("NaN is not an extended real")
    return y


def as_exact(x):
    """Exact rational value of a finite number; infinities are passed through."""
    x = as_number(x)
    if isinstance(x, float):
        if math.isinf(x):
            return x
        return Fraction(x)
    return x


def is_exact(x) -> bool:
    return isinstance(x, Fraction)


def is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


def one_like(exact: bool):
    return Fraction(1) if exact else 1.0


def half_like(exact: bool):
    return Fraction(1, 2) if exact else 0.5


def affine_at(slope, intercept, x):
    """``slope * x + intercept`` that is safe for infinite ``x``."""
    if is_inf(x):
        if slope == 0:
            return intercept
        return INF if (slope > 0) == (x > 0) else -INF
    return slope * x + intercept


def default_tol(exact: bool, tol=None):
    if tol is not None:
        return tol
    return 0 if exact else FLOAT_TOL


def to_json_number(x):
    """Encode a number for JSON.

    Floats, and fractions whose shortest float repr reads back exactly, become
    JSON numbers; infinities become ``"inf"``/``"-inf"``; other fractions become
    ``"p/q"`` strings so nothing is lost.
    """
    if is_inf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x.numerator)
        f = float(x)
        if Fraction(repr(f)) == x:
            return f
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def from_json_number(x, exact: bool = True):
    """Decode a JSON number. Decimal literals are read as exact decimals."""
    if isinstance(x, str):
        return as_number(x)
    if isinstance(x, float) and exact and math.isfinite(x):
        return Fraction(repr(x))
    return as_number(x)


def fmt(x) -> str:
    """Text form used in CSV output."""
    if is_inf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, Fraction) and x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))

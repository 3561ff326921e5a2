"""Named test functions.

PLQ entries are returned with exact rational coefficients. The two oracle
entries cover behaviour outside the PLQ class: ``x**4`` has a strong
minimizer without being strongly convex, and ``x**2/(x**4 + 1)`` has a unique
minimizer that is not strong (it is not convex).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ._numeric import INF, as_number
from .oracle import OracleConvexFunction
from .plq import PLQFunction

__all__ = [
    "zero",
    "half_square",
    "absolute_value",
    "indicator_interval",
    "indicator_point",
    "truncated_quadratic",
    "huber",
    "hinge",
    "indicator_halfline",
    "quartic",
    "nonconvex_quotient",
    "PLQ_CATALOG",
    "ORACLE_CATALOG",
    "names",
    "get",
]

_HALF = Fraction(1, 2)


def zero() -> PLQFunction:
    return PLQFunction()


def half_square() -> PLQFunction:
    """``x**2 / 2``, its own conjugate."""
    return PLQFunction((), [(_HALF, 0, 0)])


def absolute_value() -> PLQFunction:
    return PLQFunction([0], [(0, -1, 0), (0, 1, 0)])


def indicator_interval(lower=-1, upper=1) -> PLQFunction:
    """Indicator of the closed interval ``[lower, upper]``."""
    return PLQFunction((), [(0, 0, 0)], (as_number(lower), as_number(upper)))


def indicator_point(x=0) -> PLQFunction:
    x = as_number(x)
    return PLQFunction((), [(0, 0, 0)], (x, x))


def truncated_quadratic() -> PLQFunction:
    """``(x+1)**2`` left of -1, ``0`` on ``[-1, 1]``, ``(x-1)**2`` right of 1.

    Coercive but not strongly convex; its minimizers fill ``[-1, 1]``.
    """
    return PLQFunction([-1, 1], [(1, 2, 1), (0, 0, 0), (1, -2, 1)])


def huber(delta=1) -> PLQFunction:
    """Huber loss: ``x**2/2`` on ``[-delta, delta]``, linear outside."""
    t = as_number(delta)
    if t <= 0:
        raise ValueError("delta must be positive")
    return PLQFunction([-t, t], [(0, -t, -t * t / 2), (_HALF, 0, 0), (0, t, -t * t / 2)])


def hinge() -> PLQFunction:
    """``max(0, 1 - x)``."""
    return PLQFunction([1], [(0, -1, 1), (0, 0, 0)])


def indicator_halfline(lower=0) -> PLQFunction:
    """Indicator of ``[lower, inf)``."""
    return PLQFunction((), [(0, 0, 0)], (as_number(lower), INF))


def quartic() -> OracleConvexFunction:
    """``x**4``: strong minimizer at 0, modulus of strong convexity 0."""
    return OracleConvexFunction(lambda x: np.asarray(x, dtype=float) ** 4, 1, 10.0, True,
                                lambda x: 4 * np.asarray(x, dtype=float) ** 3, name="quartic")


def nonconvex_quotient() -> OracleConvexFunction:
    """``x**2 / (x**4 + 1)``: unique minimizer at 0 that is not a strong minimizer."""
    def value(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = x * x / (x ** 4 + 1)
        return np.where(np.isfinite(out), out, 0.0)

    def slope(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = 2 * x * (1 - x ** 4) / (x ** 4 + 1) ** 2
        return np.where(np.isfinite(out), out, 0.0)

    return OracleConvexFunction(value, 1, 10.0, False, slope, name="nonconvex_quotient")


PLQ_CATALOG = {
    "zero": zero,
    "half_square": half_square,
    "abs": absolute_value,
    "indicator_unit_interval": indicator_interval,
    "indicator_origin": indicator_point,
    "truncated_quadratic": truncated_quadratic,
    "huber": huber,
    "hinge": hinge,
    "indicator_halfline": indicator_halfline,
}

ORACLE_CATALOG = {
    "quartic": quartic,
    "nonconvex_quotient": nonconvex_quotient,
}


def names() -> list[str]:
    return list(PLQ_CATALOG) + list(ORACLE_CATALOG)


def get(name: str):
    """Look up a catalog entry by name.

    Accepts an optional ``catalog:`` prefix and the alias namespace
    ``paper.``, so ``paper.half_square`` resolves to ``half_square``.
    """
    key = name.strip()
    for prefix in ("catalog:", "paper."):
        if key.startswith(prefix):
            key = key[len(prefix):]
    if key in PLQ_CATALOG:
        return PLQ_CATALOG[key]()
    if key in ORACLE_CATALOG:
        return ORACLE_CATALOG[key]()
    raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(names())}")

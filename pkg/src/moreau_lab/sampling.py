"""Random exact PLQ functions for property tests."""

from __future__ import annotations

import random
from fractions import Fraction

from ._numeric import INF
from .plq import PLQFunction

__all__ = ["random_plq"]


def _rat(rng: random.Random, lo: int, hi: int, denominator: int) -> Fraction:
    return Fraction(rng.randint(lo * denominator, hi * denominator), denominator)


def random_plq(rng: random.Random, max_pieces: int = 4, *, strongly_convex: bool = False,
               full_domain: bool = False, allow_point: bool = True, denominator: int = 4,
               scale: int = 3) -> PLQFunction:
    """Draw a convex PLQ function with small rational coefficients.

    Convexity holds by construction: curvatures are nonnegative and the
    derivative jumps upward (or stays continuous) at every breakpoint.

    Parameters
    ----------
    rng : random.Random
        Source of randomness; the result is a deterministic function of its state.
    max_pieces : int
        Upper bound on the number of quadratic pieces.
    strongly_convex : bool
        Force every curvature ``a`` to be positive.
    full_domain : bool
        Use the whole line as domain.
    allow_point : bool
        Allow singleton domains (point indicators plus a constant).
    """
    k = rng.randint(1, max_pieces)
    cuts = sorted(set(_rat(rng, -scale, scale, denominator) for _ in range(k - 1)))
    k = len(cuts) + 1

    def curvature():
        if strongly_convex:
            return Fraction(rng.randint(1, 2 * denominator), 2 * denominator)
        return rng.choice([Fraction(0), Fraction(0), Fraction(rng.randint(1, 2 * denominator), 2 * denominator)])

    a0 = curvature()
    pieces = [(a0, _rat(rng, -scale, scale, denominator), _rat(rng, -scale, scale, denominator))]
    for b in cuts:
        pa, pc, pd = pieces[-1]
        left = 2 * pa * b + pc
        jump = rng.choice([Fraction(0), _rat(rng, 0, 2, denominator)])
        a = curvature()
        c = left + jump - 2 * a * b
        d = (pa - a) * b * b + (pc - c) * b + pd
        pieces.append((a, c, d))

    lo, hi = -INF, INF
    if not full_domain:
        kind = rng.choice(["full", "left", "right", "bounded", "point"] if allow_point
                          else ["full", "left", "right", "bounded"])
        ends = sorted(_rat(rng, -scale - 1, scale + 1, denominator) for _ in range(2))
        if kind == "left":
            lo = ends[0]
        elif kind == "right":
            hi = ends[1]
        elif kind == "bounded":
            lo, hi = ends[0], ends[1] + (1 if ends[0] == ends[1] else 0)
        elif kind == "point":
            lo = hi = ends[0]
    return PLQFunction(cuts, pieces, (lo, hi))

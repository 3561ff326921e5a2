"""Strongly convex approximation of a PLQ function to any distance.

Shrinking the proximal map by ``1 - sigma`` gives the prox of a strongly
convex function ``g``; shifting ``g`` so that its envelope agrees with that
of ``f`` at the origin yields ``h``. The envelope difference on ``[-i, i]`` is
at most ``sigma * i * (i + |Prox_f(0)|)``, so a small enough ``sigma`` keeps
the first ``N`` series terms small while the tail is handled by ``N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._numeric import as_exact, to_json_number
from .metric import MetricEstimate, aw_distance, envelope_sup_on_ball, truncation_level
from .moreau import envelope_at, envelope_plq, prox_inverse, prox_plq
from .plq import PLQFunction
from .pwl import MonotonePiecewiseLinearMap

__all__ = [
    "StrongifyPlan",
    "StrongifyVerificationError",
    "MeagreMembership",
    "strongify",
    "sigma_bound",
    "verify_mvt_bound",
    "meagre_family_member",
]


class StrongifyVerificationError(RuntimeError):
    """The certified distance of the constructed approximation is not below ``eps``."""


@dataclass(frozen=True)
class StrongifyPlan:
    """Every intermediate quantity of the approximation ``f -> h``."""

    f: PLQFunction
    eps: Fraction
    N: int
    prox0: Fraction
    sigma_bound: Fraction
    sigma: Fraction
    prox_g: MonotonePiecewiseLinearMap
    g: PLQFunction
    shift: Fraction
    h: PLQFunction
    distance: MetricEstimate

    def to_json(self) -> dict:
        return {
            "eps": to_json_number(self.eps),
            "N": self.N,
            "prox_f_at_0": to_json_number(self.prox0),
            "sigma_bound": to_json_number(self.sigma_bound),
            "sigma": to_json_number(self.sigma),
            "f": self.f.to_json(),
            "prox_g": self.prox_g.to_json(),
            "g": self.g.to_json(),
            "shift": to_json_number(self.shift),
            "h": self.h.to_json(),
            "distance": self.distance.to_json(),
        }


def _eps(eps) -> Fraction:
    if isinstance(eps, float):
        eps = Fraction(repr(eps))
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return eps


def sigma_bound(eps, N: int, prox0) -> Fraction:
    """Supremum of admissible contraction parameters: ``(eps/(2-eps)) / (N (N + |prox0|))``."""
    eps = _eps(eps)
    return (eps / (2 - eps)) / (N * (N + abs(Fraction(prox0))))


def strongify(f: PLQFunction, eps, *, verify_accuracy=None) -> StrongifyPlan:
    """Build a strongly convex ``h`` with certified ``d(h, f) < eps``.

    Parameters
    ----------
    f : PLQFunction
        Input; converted to exact arithmetic first.
    eps : float or Fraction
        Target distance in ``(0, 1)``.
    verify_accuracy : float, optional
        Accuracy of the verifying distance computation; defaults to ``eps/100``.

    Raises
    ------
    StrongifyVerificationError
        If the certified upper bound on ``d(h, f)`` is not below ``eps``.
    """
    eps = _eps(eps)
    f = f.to_exact()
    N = truncation_level(eps)
    P = prox_plq(f)
    prox0 = P(Fraction(0))
    bound = sigma_bound(eps, N, prox0)
    sigma = bound / 2
    Pg = P.scaled(1 - sigma)
    g = prox_inverse(Pg)
    shift = envelope_at(f, Fraction(0)) - envelope_at(g, Fraction(0))
    h = g.shift(shift)
    acc = eps / 100 if verify_accuracy is None else as_exact(verify_accuracy)
    dist = aw_distance(h, f, acc)
    if not dist.upper < eps:
        raise StrongifyVerificationError(
            f"certified distance upper bound {float(dist.upper):.6g} is not below eps={float(eps)}")
    return StrongifyPlan(f, eps, N, prox0, bound, sigma, Pg, g, shift, h, dist)


def verify_mvt_bound(plan: StrongifyPlan, i: int):
    """``(exact sup, analytic bound)`` for ``|e_1 h - e_1 f|`` on ``[-i, i]``.

    The analytic bound is ``sigma * i * (i + |Prox_f(0)|)``.
    """
    if not 1 <= i:
        raise ValueError("ball index must be at least 1")
    exact = envelope_sup_on_ball(envelope_plq(plan.h), envelope_plq(plan.f), i)
    return exact, plan.sigma * i * (i + abs(plan.prox0))


@dataclass(frozen=True)
class MeagreMembership:
    """Whether ``e_1 f - x**2/(2m)`` is convex; ``witness`` is a violating ``(lam, x, y)``."""

    m: int
    member: bool
    witness: tuple | None = None
    curvature: object = None

    def to_json(self) -> dict:
        return {"m": self.m, "member": self.member,
                "witness": None if self.witness is None else [to_json_number(v) for v in self.witness],
                "min_envelope_curvature": None if self.curvature is None else to_json_number(self.curvature)}


def meagre_family_member(f: PLQFunction, m: int) -> MeagreMembership:
    """Test ``e_1 f - x**2/(2m)`` for convexity exactly.

    The envelope is ``C^1``, so the difference is convex iff every envelope
    piece has ``a >= 1/(2m)``. A failing piece yields points ``x < y`` inside
    it where the midpoint inequality is violated.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    env = envelope_plq(f.to_exact())
    target = Fraction(1, 2 * m)
    worst = min(env.segments(), key=lambda s: s[2][0])
    lo, hi, (a, _, _) = worst
    if a >= target:
        return MeagreMembership(int(m), True, None, 2 * a)
    if math.isinf(lo) and math.isinf(hi):
        x, y = Fraction(-1), Fraction(1)
    elif math.isinf(lo):
        x, y = hi - 2, hi
    elif math.isinf(hi):
        x, y = lo, lo + 2
    else:
        x, y = lo, hi
    return MeagreMembership(int(m), False, (Fraction(1, 2), x, y), 2 * a)

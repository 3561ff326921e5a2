"""Black-box convex functions evaluated numerically."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["OracleConvexFunction", "from_plq", "midpoint_convexity_violations"]


@dataclass(frozen=True)
class OracleConvexFunction:
    """A function on ``R**n`` known only through evaluations.

    Parameters
    ----------
    evaluate : callable
        Vectorised evaluation. For ``dimension == 1`` it maps an array of shape
        ``(k,)`` to values of shape ``(k,)``; otherwise ``(k, n) -> (k,)``.
        ``+inf`` is a legal value.
    dimension : int
        Ambient dimension ``n``.
    domain_radius_hint : float
        Radius ``R`` such that a minimizer lies in the closed ball of radius
        ``R`` about the origin.
    convexity_declared : bool
        Whether the function is trusted to be convex. Spot-checked by
        :func:`midpoint_convexity_violations`, never proved.
    derivative : callable, optional
        A subgradient selection (one-dimensional oracles only). When present the
        prox subproblem is solved by bisection on the derivative sign.
    name : str
        Label used in reports.
    """

    evaluate: Callable
    dimension: int = 1
    domain_radius_hint: float = 1.0
    convexity_declared: bool = True
    derivative: Optional[Callable] = None
    name: str = "oracle"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if not self.domain_radius_hint > 0:
            raise ValueError("domain_radius_hint must be positive")

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if self.dimension == 1:
            if arr.ndim == 0:
                return float(self.evaluate(arr.reshape(1))[0])
            return np.asarray(self.evaluate(arr), dtype=float)
        if arr.ndim == 1:
            return float(self.evaluate(arr.reshape(1, -1))[0])
        return np.asarray(self.evaluate(arr), dtype=float)

    def slope(self, x):
        if self.derivative is None:
            raise ValueError(f"{self.name} has no derivative oracle")
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return float(self.derivative(arr.reshape(1))[0])
        return np.asarray(self.derivative(arr), dtype=float)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "domain_radius_hint": self.domain_radius_hint,
            "convexity_declared": self.convexity_declared,
            "has_derivative": self.derivative is not None,
        }


def from_plq(f, radius: float | None = None) -> OracleConvexFunction:
    """View a PLQ function as a one-dimensional oracle (used for mixed-tier distances)."""
    from .plq import minimize

    if radius is None:
        m = minimize(f)
        pts = [abs(float(p)) for p in (m.lo, m.hi) if p is not None and abs(float(p)) != np.inf]
        radius = max([1.0] + pts)

    bps = np.array([float(b) for b in f.breakpoints])
    coef = np.array([[float(v) for v in p] for p in f.pieces])
    lo, hi = float(f.lower), float(f.upper)

    def slope(xs):
        idx = np.searchsorted(bps, xs, side="right")
        out = 2 * coef[idx, 0] * xs + coef[idx, 1]
        out = np.where(xs < lo, -np.inf, out)
        return np.where(xs > hi, np.inf, out)

    return OracleConvexFunction(f.evaluate_array, 1, radius, True, slope, name=repr(f))


def midpoint_convexity_violations(f: OracleConvexFunction, rng: np.random.Generator,
                                  samples: int = 1000, tol: float = 1e-9) -> int:
    """Count sampled triples violating ``f(t x + (1-t) y) <= t f(x) + (1-t) f(y) + tol``."""
    r = f.domain_radius_hint
    shape = (samples,) if f.dimension == 1 else (samples, f.dimension)
    x = rng.uniform(-2 * r, 2 * r, size=shape)
    y = rng.uniform(-2 * r, 2 * r, size=shape)
    t = rng.uniform(0, 1, size=samples)
    tt = t if f.dimension == 1 else t[:, None]
    lhs = f(tt * x + (1 - tt) * y)
    fx, fy = f(x), f(y)
    with np.errstate(invalid="ignore"):
        rhs = t * fx + (1 - t) * fy + tol * (1 + np.abs(np.where(np.isfinite(lhs), lhs, 0)))
    return int(np.sum(lhs > rhs))

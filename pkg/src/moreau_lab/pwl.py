"""Continuous nondecreasing piecewise-linear maps of the real line."""

from __future__ import annotations

import bisect
import json
from fractions import Fraction

import numpy as np

from ._numeric import (
    INF,
    affine_at,
    as_number,
    default_tol,
    from_json_number,
    is_exact,
    is_inf,
    to_json_number,
)

__all__ = ["MonotonePiecewiseLinearMap", "linear_combination"]


class MonotonePiecewiseLinearMap:
    """``w -> s_j w + t_j`` on the ``j``-th interval between breakpoints.

    Slopes must be nonnegative and the segments must meet at the breakpoints.
    Adjacent identical segments are merged, so equal maps compare equal.
    """

    __slots__ = ("breakpoints", "segments", "exact")

    def __init__(self, breakpoints=(), segments=((1, 0),), *, tol=None):
        bps = [as_number(b) for b in breakpoints]
        segs = [tuple(as_number(v) for v in s) for s in segments]
        if len(segs) != len(bps) + 1:
            raise ValueError(f"need {len(bps) + 1} segments for {len(bps)} breakpoints")
        if any(len(s) != 2 for s in segs):
            raise ValueError("segments must be (slope, intercept) pairs")
        if any(is_inf(v) for s in segs for v in s) or any(is_inf(b) for b in bps):
            raise ValueError("map coefficients and breakpoints must be finite")
        if any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        exact = all(is_exact(v) for s in segs for v in s) and all(is_exact(b) for b in bps)
        tol = default_tol(exact, tol)
        for s, _ in segs:
            if s < -tol:
                raise ValueError(f"negative slope {s}: map is not nondecreasing")
        for j, b in enumerate(bps):
            left = segs[j][0] * b + segs[j][1]
            right = segs[j + 1][0] * b + segs[j + 1][1]
            if abs(left - right) > tol * max(1, abs(left)):
                raise ValueError(f"map is discontinuous at {b}: {left} vs {right}")
        keep_b, keep_s = [], [segs[0]]
        for b, s in zip(bps, segs[1:]):
            if s == keep_s[-1]:
                continue
            keep_b.append(b)
            keep_s.append(s)
        object.__setattr__(self, "breakpoints", tuple(keep_b))
        object.__setattr__(self, "segments", tuple(keep_s))
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, name, value):
        raise AttributeError("MonotonePiecewiseLinearMap is immutable")

    @classmethod
    def identity(cls, exact: bool = True):
        one = Fraction(1) if exact else 1.0
        return cls((), ((one, 0 * one),))

    def intervals(self):
        """Yield ``(lo, hi, (slope, intercept))`` over the whole line."""
        edges = (-INF,) + self.breakpoints + (INF,)
        for j, s in enumerate(self.segments):
            yield edges[j], edges[j + 1], s

    def segment_at(self, x, side: str = "right"):
        fn = bisect.bisect_right if side == "right" else bisect.bisect_left
        return self.segments[fn(self.breakpoints, x)]

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            bps = np.array([float(b) for b in self.breakpoints])
            coef = np.array([[float(v) for v in s] for s in self.segments])
            idx = np.searchsorted(bps, x, side="right")
            return coef[idx, 0] * x + coef[idx, 1]
        s, t = self.segment_at(x)
        return affine_at(s, t, x)

    @property
    def slopes(self) -> tuple:
        return tuple(s for s, _ in self.segments)

    @property
    def max_slope(self):
        return max(self.slopes)

    @property
    def min_slope(self):
        return min(self.slopes)

    def is_nonexpansive(self, tol=None) -> bool:
        return self.max_slope <= 1 + default_tol(self.exact, tol)

    def scaled(self, k) -> "MonotonePiecewiseLinearMap":
        """The map ``k * P`` for ``k >= 0``."""
        k = as_number(k)
        if k < 0:
            raise ValueError("scale factor must be nonnegative")
        return MonotonePiecewiseLinearMap(self.breakpoints, [(k * s, k * t) for s, t in self.segments])

    def __eq__(self, other):
        if not isinstance(other, MonotonePiecewiseLinearMap):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.segments == other.segments

    def __hash__(self):
        return hash((self.breakpoints, self.segments))

    def __repr__(self):
        segs = ", ".join(f"({to_json_number(s)}, {to_json_number(t)})" for s, t in self.segments)
        bps = ", ".join(str(to_json_number(b)) for b in self.breakpoints)
        return f"MonotonePiecewiseLinearMap(breakpoints=[{bps}], segments=[{segs}])"

    def to_json(self) -> dict:
        return {
            "breakpoints": [to_json_number(b) for b in self.breakpoints],
            "segments": [[to_json_number(s), to_json_number(t)] for s, t in self.segments],
        }

    @classmethod
    def from_json(cls, data, *, exact: bool = True):
        if isinstance(data, str):
            data = json.loads(data)
        conv = lambda v: from_json_number(v, exact)  # noqa: E731
        return cls([conv(b) for b in data.get("breakpoints", [])],
                   [[conv(v) for v in s] for s in data["segments"]])


def _probe(a, b):
    if is_inf(a) and is_inf(b):
        return Fraction(0)
    if is_inf(a):
        return b - 1
    if is_inf(b):
        return a + 1
    return (a + b) / 2


def linear_combination(maps, weights) -> MonotonePiecewiseLinearMap:
    """``sum_k weights[k] * maps[k]`` with nonnegative weights."""
    maps, weights = list(maps), [as_number(w) for w in weights]
    if len(maps) != len(weights) or not maps:
        raise ValueError("need one weight per map")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    bps = sorted(set(b for m in maps for b in m.breakpoints))
    edges = [-INF] + bps + [INF]
    segs = []
    for lo, hi in zip(edges, edges[1:]):
        x = _probe(lo, hi)
        s = t = 0 * weights[0]
        for w, m in zip(weights, maps):
            ms, mt = m.segment_at(x)
            s, t = s + w * ms, t + w * mt
        segs.append((s, t))
    return MonotonePiecewiseLinearMap(bps, segs)

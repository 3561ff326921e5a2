"""Exact univariate piecewise linear-quadratic convex functions.

A :class:`PLQFunction` is a finite list of quadratic pieces ``a x**2 + c x + d``
glued continuously at breakpoints and restricted to a closed interval
``[l, u]`` (value ``+inf`` outside). The class is closed under everything the
rest of the package needs: conjugation, adding quadratics, proximal mappings,
Moreau envelopes and prox inversion. With :class:`~fractions.Fraction`
coefficients all of these are computed without rounding.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._numeric import (
    INF,
    affine_at,
    as_exact,
    as_number,
    default_tol,
    from_json_number,
    half_like,
    is_exact,
    is_inf,
    to_json_number,
)

__all__ = [
    "PLQFunction",
    "ConvexityReport",
    "NotConvexError",
    "Minimum",
    "evaluate",
    "conjugate",
    "add_quadratic",
    "add",
    "check_convexity",
    "infimum_on",
    "minimize",
    "subgradient_graph",
]


class NotConvexError(ValueError):
    """Raised when a constructed PLQ function fails the convexity invariant."""

    def __init__(self, report: "ConvexityReport"):
        super().__init__(report.message)
        self.report = report


@dataclass(frozen=True)
class ConvexityReport:
    """Outcome of :func:`check_convexity`.

    ``kind`` is ``"piece"`` for a piece with negative curvature and
    ``"breakpoint"`` for a slope that decreases across a breakpoint. The two
    offending slopes are the left and right derivatives at ``x``.
    """

    ok: bool
    kind: str | None = None
    index: int | None = None
    x: object = None
    left_slope: object = None
    right_slope: object = None

    def __bool__(self) -> bool:
        return self.ok

    @property
    def message(self) -> str:
        if self.ok:
            return "convex"
        if self.kind == "piece":
            return (f"piece {self.index} has negative curvature "
                    f"(derivative goes from {self.left_slope} to {self.right_slope})")
        return (f"derivative decreases at breakpoint x={self.x}: "
                f"left {self.left_slope} > right {self.right_slope}")

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "kind": self.kind,
            "index": self.index,
            "x": None if self.x is None else to_json_number(self.x),
            "left_slope": None if self.left_slope is None else to_json_number(self.left_slope),
            "right_slope": None if self.right_slope is None else to_json_number(self.right_slope),
        }


def _qval(p, x):
    a, c, d = p
    return (a * x + c) * x + d


def _slope(p, x):
    """Derivative ``2 a x + c`` of a piece, with limits at infinite ``x``."""
    a, c, _ = p
    return affine_at(2 * a, c, x)


class PLQFunction:
    """Proper lsc piecewise linear-quadratic function on the real line.

    Parameters
    ----------
    breakpoints : sequence of numbers
        Strictly increasing interior breakpoints ``b_1 < ... < b_{K-1}``.
    pieces : sequence of ``(a, c, d)`` triples
        ``K`` pieces; piece ``j`` is used between breakpoints ``j-1`` and ``j``.
    domain : pair
        Closed domain ``[l, u]``; endpoints may be infinite.
    convex : bool
        Verify convexity and raise :class:`NotConvexError` on failure. Pass
        ``False`` to build a candidate for :func:`check_convexity`.
    tol : float, optional
        Tolerance for the continuity and convexity checks. Defaults to 0 for
        exact coefficients and ``1e-9`` otherwise.

    Notes
    -----
    The representation is canonical: breakpoints outside the open domain are
    dropped, adjacent identical pieces are merged and a singleton domain is
    stored as one constant piece. Structural equality is therefore equality of
    functions.
    """

    __slots__ = ("edges", "pieces", "exact")

    def __init__(self, breakpoints=(), pieces=((0, 0, 0),), domain=(-INF, INF), *,
                 convex: bool = True, tol=None):
        bps = [as_number(b) for b in breakpoints]
        pcs = [tuple(as_number(v) for v in p) for p in pieces]
        lo, hi = (as_number(v) for v in domain)
        if len(pcs) != len(bps) + 1:
            raise ValueError(f"need {len(bps) + 1} pieces for {len(bps)} breakpoints, got {len(pcs)}")
        if any(len(p) != 3 for p in pcs):
            raise ValueError("pieces must be (a, c, d) triples")
        if any(is_inf(v) for p in pcs for v in p):
            raise ValueError("piece coefficients must be finite")
        if any(is_inf(b) for b in bps):
            raise ValueError("breakpoints must be finite")
        if any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if lo == INF or hi == -INF or lo > hi:
            raise ValueError(f"empty domain [{lo}, {hi}]")

        full = [-INF] + bps + [INF]
        if lo == hi:
            j = bisect.bisect_left(bps, lo)
            value = _qval(pcs[j], lo)
            zero = Fraction(0) if is_exact(value) else 0.0
            edges, kept = (lo, hi), [(zero, zero, value)]
        else:
            spans = []
            for j, p in enumerate(pcs):
                a, b = max(full[j], lo), min(full[j + 1], hi)
                if a < b:
                    if spans and spans[-1][1] == p:
                        spans[-1][0][1] = b
                    else:
                        spans.append(([a, b], p))
            edges = (spans[0][0][0],) + tuple(s[0][1] for s in spans)
            kept = [s[1] for s in spans]

        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "pieces", tuple(kept))
        values = [v for p in kept for v in p] + [e for e in edges if not is_inf(e)]
        object.__setattr__(self, "exact", all(is_exact(v) for v in values))

        ctol = default_tol(self.exact, tol)
        for j in range(1, len(self.pieces)):
            e = self.edges[j]
            left, right = _qval(self.pieces[j - 1], e), _qval(self.pieces[j], e)
            if abs(left - right) > ctol * max(1, abs(left)):
                raise ValueError(f"pieces disagree at breakpoint {e}: {left} vs {right}")
        if convex:
            report = check_convexity(self, tol=tol)
            if not report:
                raise NotConvexError(report)

    def __setattr__(self, name, value):
        raise AttributeError("PLQFunction is immutable")

    # -- structure ---------------------------------------------------------
    @property
    def breakpoints(self) -> tuple:
        return self.edges[1:-1]

    @property
    def domain(self) -> tuple:
        return (self.edges[0], self.edges[-1])

    @property
    def lower(self):
        return self.edges[0]

    @property
    def upper(self):
        return self.edges[-1]

    @property
    def is_point(self) -> bool:
        return self.edges[0] == self.edges[-1]

    @property
    def full_domain(self) -> bool:
        return self.edges[0] == -INF and self.edges[-1] == INF

    def segments(self):
        """Yield ``(lo, hi, (a, c, d))`` for every piece."""
        for j, p in enumerate(self.pieces):
            yield self.edges[j], self.edges[j + 1], p

    def piece_index(self, x, side: str = "right") -> int:
        """Index of the piece used at ``x`` (``side`` picks at breakpoints)."""
        bps = self.breakpoints
        if side == "left":
            return bisect.bisect_left(bps, x)
        return bisect.bisect_right(bps, x)

    def in_domain(self, x) -> bool:
        return self.edges[0] <= x <= self.edges[-1]

    # -- values ------------------------------------------------------------
    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.evaluate_array(x)
        return evaluate(self, x)

    def evaluate_array(self, xs) -> np.ndarray:
        """Vectorised floating-point evaluation."""
        xs = np.asarray(xs, dtype=float)
        bps = np.array([float(b) for b in self.breakpoints])
        idx = np.searchsorted(bps, xs, side="right")
        coef = np.array([[float(v) for v in p] for p in self.pieces])
        a, c, d = coef[idx, 0], coef[idx, 1], coef[idx, 2]
        with np.errstate(invalid="ignore"):
            out = (a * xs + c) * xs + d
        out = np.where((xs < float(self.lower)) | (xs > float(self.upper)), np.inf, out)
        return out

    def right_slope(self, x):
        """Right derivative at ``x`` (``+inf`` at the right end of the domain)."""
        if not self.in_domain(x):
            raise ValueError(f"{x} is outside the domain")
        if x == self.upper:
            return INF
        return _slope(self.pieces[self.piece_index(x, "right")], x)

    def left_slope(self, x):
        """Left derivative at ``x`` (``-inf`` at the left end of the domain)."""
        if not self.in_domain(x):
            raise ValueError(f"{x} is outside the domain")
        if x == self.lower:
            return -INF
        return _slope(self.pieces[self.piece_index(x, "left")], x)

    # -- transforms --------------------------------------------------------
    def shift(self, constant) -> "PLQFunction":
        """``f + constant``."""
        k = as_number(constant)
        return PLQFunction(self.breakpoints, [(a, c, d + k) for a, c, d in self.pieces],
                           self.domain, convex=False)

    def to_exact(self) -> "PLQFunction":
        """Same function with every coefficient converted to an exact rational."""
        if self.exact:
            return self
        return PLQFunction([as_exact(b) for b in self.breakpoints],
                           [tuple(as_exact(v) for v in p) for p in self.pieces],
                           tuple(as_exact(e) for e in self.domain))

    def to_float(self) -> "PLQFunction":
        return PLQFunction([float(b) for b in self.breakpoints],
                           [tuple(float(v) for v in p) for p in self.pieces],
                           tuple(float(e) for e in self.domain), convex=False)

    # -- comparisons -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, PLQFunction):
            return NotImplemented
        return self.edges == other.edges and self.pieces == other.pieces

    def __hash__(self):
        return hash((self.edges, self.pieces))

    def __repr__(self):
        def r(v):
            return str(to_json_number(v))
        pcs = ", ".join("(" + ", ".join(r(v) for v in p) + ")" for p in self.pieces)
        bps = ", ".join(r(b) for b in self.breakpoints)
        return f"PLQFunction(breakpoints=[{bps}], pieces=[{pcs}], domain=[{r(self.lower)}, {r(self.upper)}])"

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "breakpoints": [to_json_number(b) for b in self.breakpoints],
            "pieces": [[to_json_number(v) for v in p] for p in self.pieces],
            "domain": [to_json_number(self.lower), to_json_number(self.upper)],
        }

    @classmethod
    def from_json(cls, data, *, exact: bool = True) -> "PLQFunction":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            bps = data.get("breakpoints", [])
            pcs = data["pieces"]
            dom = data.get("domain", ["-inf", "inf"])
        except (AttributeError, KeyError, TypeError) as exc:
            raise ValueError(f"malformed PLQ JSON: {exc}") from None
        conv = lambda v: from_json_number(v, exact)  # noqa: E731
        return cls([conv(b) for b in bps], [[conv(v) for v in p] for p in pcs],
                   [conv(e) for e in dom])

    def piece_table(self) -> list[dict]:
        """Rows ``piece_index, interval, a, c, d`` for CSV export."""
        rows = []
        for j, (lo, hi, (a, c, d)) in enumerate(self.segments()):
            rows.append({"piece_index": j, "lower": lo, "upper": hi, "a": a, "c": c, "d": d})
        return rows


def evaluate(f: PLQFunction, x):
    """Value of ``f`` at ``x``; ``+inf`` outside the domain."""
    if isinstance(x, float) and math.isnan(x):
        raise ValueError("cannot evaluate at NaN")
    if not f.in_domain(x) or is_inf(x):
        if is_inf(x) and f.in_domain(x):
            return _limit_at_infinity(f, x)
        return INF
    return _qval(f.pieces[f.piece_index(x)], x)


def _limit_at_infinity(f, x):
    a, c, d = f.pieces[-1] if x > 0 else f.pieces[0]
    if a != 0:
        return INF
    if c == 0:
        return d
    return INF if (c > 0) == (x > 0) else -INF


def check_convexity(f: PLQFunction, tol=None) -> ConvexityReport:
    """Scan pieces and breakpoints left to right for the first convexity failure."""
    tol = default_tol(f.exact, tol)
    for j, (lo, hi, p) in enumerate(f.segments()):
        if j > 0:
            e = f.edges[j]
            sl, sr = _slope(f.pieces[j - 1], e), _slope(p, e)
            if sl - sr > tol:
                return ConvexityReport(False, "breakpoint", j - 1, e, sl, sr)
        if p[0] < -tol and lo < hi:
            return ConvexityReport(False, "piece", j, None, _slope(p, lo), _slope(p, hi))
    return ConvexityReport(True)


def add_quadratic(f: PLQFunction, sigma, *, check: bool = True) -> PLQFunction:
    """``f + (sigma/2) x**2``.

    Negative ``sigma`` tests strong convexity: if ``f - (s/2) x**2`` is not
    convex a :class:`NotConvexError` carrying the violation report is raised
    (unless ``check`` is false, in which case the candidate is returned).
    """
    s = as_number(sigma)
    half = half_like(f.exact and is_exact(s))
    pcs = [(a + half * s, c, d) for a, c, d in f.pieces]
    if f.is_point:
        return PLQFunction((), f.pieces, f.domain)
    return PLQFunction(f.breakpoints, pcs, f.domain, convex=check)


def add(f: PLQFunction, g: PLQFunction) -> PLQFunction:
    """Pointwise sum ``f + g`` (domain is the intersection)."""
    lo, hi = max(f.lower, g.lower), min(f.upper, g.upper)
    if lo > hi:
        raise ValueError("sum has empty domain")
    if lo == hi:
        return PLQFunction((), ((0, 0, evaluate(f, lo) + evaluate(g, lo)),), (lo, hi))
    bps = sorted(set(b for b in f.breakpoints + g.breakpoints if lo < b < hi))
    cuts = [lo] + bps + [hi]
    pcs = []
    for a_, b_ in zip(cuts, cuts[1:]):
        x = _interior_point(a_, b_)
        p, q = f.pieces[f.piece_index(x)], g.pieces[g.piece_index(x)]
        pcs.append((p[0] + q[0], p[1] + q[1], p[2] + q[2]))
    return PLQFunction(bps, pcs, (lo, hi))


def _interior_point(a, b):
    """Some point strictly inside ``(a, b)``, which may have infinite ends."""
    if is_inf(a) and is_inf(b):
        return Fraction(0)
    if is_inf(a):
        return b - 1
    if is_inf(b):
        return a + 1
    return (a + b) / 2


def subgradient_graph(f: PLQFunction) -> list[tuple]:
    """Graph of the subdifferential as a monotone chain of segments.

    Elements, ordered left to right, are ``("piece", x0, x1, (a, c, d))`` where
    ``v = 2 a x + c`` for ``x`` in ``[x0, x1]``, and ``("vertical", x, v0, v1)``
    where the whole interval ``[v0, v1]`` is the subdifferential at ``x``
    (breakpoint kinks and finite domain ends).
    """
    if f.is_point:
        return [("vertical", f.lower, -INF, INF)]
    out = []
    tol = default_tol(f.exact)
    if not is_inf(f.lower):
        out.append(("vertical", f.lower, -INF, _slope(f.pieces[0], f.lower)))
    for j, (lo, hi, p) in enumerate(f.segments()):
        if j > 0:
            sl, sr = _slope(f.pieces[j - 1], lo), _slope(p, lo)
            # in float mode a jump below tolerance is rounding, not a kink
            if sr - sl > tol * max(1, abs(sl)):
                out.append(("vertical", lo, sl, sr))
        out.append(("piece", lo, hi, p))
    if not is_inf(f.upper):
        out.append(("vertical", f.upper, _slope(f.pieces[-1], f.upper), INF))
    return out


def conjugate(f: PLQFunction) -> PLQFunction:
    """Legendre-Fenchel conjugate, built by inverting the subdifferential graph.

    A quadratic piece with ``a > 0`` becomes the quadratic
    ``(v - c)**2 / (4a) - d``; a linear piece collapses to a kink; a kink or a
    finite domain end ``x`` becomes the linear piece ``v x - f(x)``.
    """
    return _conjugate_cached(f, f.exact)


@lru_cache(maxsize=2048)
def _conjugate_cached(f: PLQFunction, _exact: bool) -> PLQFunction:
    graph = subgradient_graph(f)
    exact = f.exact
    spans = []  # (v0, v1, piece)
    for el in graph:
        if el[0] == "piece":
            _, x0, x1, (a, c, d) = el
            if a == 0:
                continue
            v0, v1 = _slope((a, c, d), x0), _slope((a, c, d), x1)
            spans.append((v0, v1, (1 / (4 * a), -c / (2 * a), c * c / (4 * a) - d)))
        else:
            _, x, v0, v1 = el
            spans.append((v0, v1, (0 * x, x, -evaluate(f, x))))
    first, last = graph[0], graph[-1]
    vmin = _graph_end(first, start=True)
    vmax = _graph_end(last, start=False)
    if not spans:
        # f affine on the whole line: f* is a shifted point indicator
        _, _, _, (a, c, d) = first
        return PLQFunction((), ((0, 0, -d),), (c, c))
    bps = [s[1] for s in spans[:-1]]
    pcs = [s[2] for s in spans]
    g = PLQFunction(bps, pcs, (vmin, vmax), convex=False)
    if exact and not g.exact:
        raise AssertionError("exactness lost in conjugate")
    return _revalidate(g)


def _graph_end(el, start: bool):
    if el[0] == "vertical":
        return el[2] if start else el[3]
    _, x0, x1, p = el
    return _slope(p, x0 if start else x1)


def _revalidate(g: PLQFunction) -> PLQFunction:
    report = check_convexity(g)
    if not report:
        raise NotConvexError(report)
    return g


@dataclass(frozen=True)
class Minimum:
    """Minimum value and the (closed, possibly unbounded) interval of minimizers.

    ``value`` is ``-inf`` with ``lo = hi = None`` when ``f`` is unbounded below.
    """

    value: object
    lo: object = None
    hi: object = None

    @property
    def attained(self) -> bool:
        return self.lo is not None

    @property
    def unique(self) -> bool:
        return self.attained and self.lo == self.hi

    def points(self) -> tuple:
        """Two distinct minimizers when the argmin is not a singleton."""
        lo, hi = self.lo, self.hi
        if is_inf(lo) and is_inf(hi):
            return (Fraction(0), Fraction(1))
        if is_inf(lo):
            return (hi - 1, hi)
        if is_inf(hi):
            return (lo, lo + 1)
        return (lo, hi)


def minimize(f: PLQFunction, tol=None) -> Minimum:
    """Minimum and argmin interval, read off where ``0`` enters the subdifferential."""
    hits = []
    for el in subgradient_graph(f):
        if el[0] == "vertical":
            _, x, v0, v1 = el
            if v0 <= 0 <= v1:
                hits.append((x, x))
        else:
            _, x0, x1, (a, c, _) = el
            if a > 0:
                x = -c / (2 * a)
                if x0 <= x <= x1:
                    hits.append((x, x))
            elif c == 0:
                hits.append((x0, x1))
    if not hits:
        return Minimum(-INF)
    lo = min(h[0] for h in hits)
    hi = max(h[1] for h in hits)
    if not f.exact and hi - lo <= default_tol(False, tol) * max(1, abs(lo)):
        hi = lo
    anchor = lo if not is_inf(lo) else (hi if not is_inf(hi) else Fraction(0))
    return Minimum(evaluate(f, anchor), lo, hi)


def infimum_on(f: PLQFunction, lo, hi):
    """Infimum of ``f`` over the closed interval ``[lo, hi]`` (ends may be infinite).

    Returns ``(value, argmin)``; ``argmin`` is ``None`` when the infimum is not
    attained (``-inf``) or the interval misses the domain (``+inf``).
    """
    lo, hi = max(lo, f.lower), min(hi, f.upper)
    if lo > hi:
        return INF, None
    best, arg = INF, None

    def consider(v, x):
        nonlocal best, arg
        if v < best:
            best, arg = v, x

    for a_, b_, p in f.segments():
        s, t = max(a_, lo), min(b_, hi)
        if s > t:
            continue
        a, c, d = p
        for x in (s, t):
            if not is_inf(x):
                consider(_qval(p, x), x)
        if a > 0:
            x = -c / (2 * a)
            if s <= x <= t:
                consider(_qval(p, x), x)
        elif a == 0:
            if is_inf(t) and c < 0 or is_inf(s) and c > 0:
                return -INF, None
            if is_inf(s) and is_inf(t):
                consider(d, Fraction(0))
        else:
            if is_inf(s) or is_inf(t):
                return -INF, None
    return best, arg

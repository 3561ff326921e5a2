"""Envelope-based distance between convex functions.

The distance is the weighted series

    d(f, g) = sum_i 2**-i * s_i / (1 + s_i),   s_i = sup_{|x| <= i} |e_1 f(x) - e_1 g(x)|,

truncated at level ``N`` with the tail bounded explicitly. For PLQ inputs each
``s_i`` is computed exactly from the piecewise-quadratic difference of the two
envelopes; oracle inputs go through a certified grid search.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import INF, as_number, is_inf, to_json_number
from .moreau import ProxBudgetExhausted, envelope_plq, prox_oracle_batch, prox_plq
from .oracle import OracleConvexFunction
from .plq import PLQFunction, conjugate

__all__ = [
    "BallSupNorm",
    "MetricEstimate",
    "truncation_level",
    "ball_sup_norm",
    "ball_sup_norm_oracle",
    "envelope_sup_on_ball",
    "aw_distance",
    "envelope_distance",
    "conjugation_isometry_residual",
    "is_envelope",
]


@dataclass(frozen=True)
class BallSupNorm:
    """``sup_{|x| <= i} |e_1 f - e_1 g|`` with certified bounds.

    Exact sup norms have ``lower == sup == upper`` and ``error == 0``.
    """

    i: int
    sup: object
    lower: object
    upper: object
    exact: bool
    error: float = 0.0
    grid_points: int = 0

    def to_json(self) -> dict:
        out = {"i": self.i, "sup": to_json_number(self.sup), "exact": self.exact}
        if not self.exact:
            out.update(lower=to_json_number(self.lower), upper=to_json_number(self.upper),
                       error=self.error, grid_points=self.grid_points)
        return out


@dataclass(frozen=True)
class MetricEstimate:
    """Truncated series value with certified enclosure ``lower <= d <= upper``.

    ``value`` is the partial sum of the first ``N`` terms evaluated at the
    point estimates of the sup norms.
    """

    value: object
    lower: object
    upper: object
    N: int
    terms: tuple
    accuracy: float
    exact_terms: bool = True
    params: dict = field(default_factory=dict)

    @property
    def error(self):
        return self.upper - self.lower

    def to_json(self) -> dict:
        out = {
            "value": float(self.value),
            "lower": float(self.lower),
            "upper": float(self.upper),
            "N": self.N,
            "accuracy": self.accuracy,
            "terms": [t.to_json() for t in self.terms],
        }
        for k in ("value", "lower", "upper"):
            v = getattr(self, k)
            if isinstance(v, Fraction):
                out[k + "_exact"] = f"{v.numerator}/{v.denominator}"
        if self.params:
            out["params"] = dict(self.params)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MetricEstimate":
        terms = []
        for t in data["terms"]:
            s = as_number(t["sup"])
            if t["exact"]:
                terms.append(BallSupNorm(t["i"], s, s, s, True))
            else:
                terms.append(BallSupNorm(t["i"], s, as_number(t["lower"]), as_number(t["upper"]),
                                         False, t["error"], t["grid_points"]))
        def num(k):
            return as_number(data.get(k + "_exact", data[k]))

        return cls(num("value"), num("lower"), num("upper"),
                   data["N"], tuple(terms), data["accuracy"], all(t.exact for t in terms),
                   dict(data.get("params", {})))


def _exact_accuracy(accuracy) -> Fraction:
    if isinstance(accuracy, float):
        return Fraction(repr(accuracy))
    return Fraction(accuracy)


def truncation_level(accuracy) -> int:
    """Smallest ``N >= 1`` with ``2**-(N-1) <= accuracy / 2``.

    Every term of the series is strictly below ``2**-i``, so the tail past
    ``N`` is strictly below ``2**-N <= accuracy / 4``.
    """
    acc = _exact_accuracy(accuracy)
    if not acc > 0:
        raise ValueError("accuracy must be positive")
    n = 1
    while Fraction(2 ** (n - 1)) * acc < 2:
        n += 1
    return n


# -- exact path ----------------------------------------------------------------

def _difference(F: PLQFunction, G: PLQFunction) -> list:
    """``F - G`` for full-domain PLQ functions as ``[(lo, hi, (A, C, E)), ...]``."""
    bps = sorted(set(F.breakpoints) | set(G.breakpoints))
    edges = [-INF] + bps + [INF]
    out = []
    for lo, hi in zip(edges, edges[1:]):
        if is_inf(lo) and is_inf(hi):
            x = 0
        elif is_inf(lo):
            x = hi - 1
        elif is_inf(hi):
            x = lo + 1
        else:
            x = (lo + hi) / 2
        p, q = F.pieces[F.piece_index(x)], G.pieces[G.piece_index(x)]
        out.append((lo, hi, (p[0] - q[0], p[1] - q[1], p[2] - q[2])))
    return out


def _abs_sup_on(diff, lo, hi):
    """Exact ``sup |D|`` over ``[lo, hi]`` (finite ends)."""
    best = 0
    for a_, b_, (A, C, E) in diff:
        s, t = max(a_, lo), min(b_, hi)
        if s > t:
            continue
        cands = [s, t]
        if A != 0:
            v = -C / (2 * A)
            if s < v < t:
                cands.append(v)
        for x in cands:
            best = max(best, abs((A * x + C) * x + E))
    return best


def _global_sup(diff):
    """``sup |D|`` over the whole line, or ``inf`` when unbounded."""
    for k in (0, -1):
        A, C, _ = diff[k][2]
        if A != 0 or C != 0:
            return INF
    finite = [b for a_, b_, _ in diff for b in (a_, b_) if not is_inf(b)]
    if not finite:
        return abs(diff[0][2][2])
    return _abs_sup_on(diff, min(finite), max(finite))


def envelope_sup_on_ball(F: PLQFunction, G: PLQFunction, i) -> object:
    """Exact ``sup_{|x| <= i} |F(x) - G(x)|`` for full-domain PLQ ``F`` and ``G``."""
    return _abs_sup_on(_difference(F, G), -i, i)


def ball_sup_norm(f: PLQFunction, g: PLQFunction, i: int) -> BallSupNorm:
    """Exact sup of ``|e_1 f - e_1 g|`` over ``[-i, i]``."""
    if i < 1:
        raise ValueError("ball index must be at least 1")
    s = envelope_sup_on_ball(envelope_plq(f), envelope_plq(g), i)
    return BallSupNorm(int(i), s, s, s, True)


def _series_exact(F: PLQFunction, G: PLQFunction, accuracy, params=None) -> MetricEstimate:
    N = truncation_level(accuracy)
    diff = _difference(F, G)
    exact = F.exact and G.exact
    one = Fraction(1) if exact else 1.0
    total = 0 * one
    terms = []
    for i in range(1, N + 1):
        s = _abs_sup_on(diff, -i, i)
        terms.append(BallSupNorm(i, s, s, s, True))
        total += (one / 2 ** i) * (s / (one + s))
    T = _global_sup(diff)
    tau = one if is_inf(T) else T / (one + T)
    upper = total + tau * (one / 2 ** N)
    if not exact:
        # floating-point partial sum: widen by a few ulps per term
        upper += 4 * N * np.finfo(float).eps
    return MetricEstimate(total, total, upper, N, tuple(terms), float(accuracy), True, params or {})


def is_envelope(F: PLQFunction, tol=None) -> bool:
    """Whether ``F`` is the envelope of some proper lsc convex function.

    For PLQ this means full domain, no kinks, and curvature ``2a`` in ``[0, 1]``
    on every piece (so both ``F`` and ``x**2/2 - F`` are convex).
    """
    from ._numeric import default_tol

    t = default_tol(F.exact, tol)
    if not F.full_domain:
        return False
    if any(2 * a < -t or 2 * a > 1 + t for a, _, _ in F.pieces):
        return False
    for j, b in enumerate(F.breakpoints):
        (a0, c0, _), (a1, c1, _) = F.pieces[j], F.pieces[j + 1]
        if abs((2 * a0 * b + c0) - (2 * a1 * b + c1)) > t * max(1, abs(b)):
            return False
    return True


def envelope_distance(F: PLQFunction, G: PLQFunction, accuracy=1e-6) -> MetricEstimate:
    """The same series applied to two given envelopes."""
    for name, E in (("first", F), ("second", G)):
        if not is_envelope(E):
            raise ValueError(f"{name} argument is not a Moreau envelope "
                             "(needs full domain, continuous derivative and curvature in [0, 1])")
    return _series_exact(F, G, accuracy)


# -- grid path -----------------------------------------------------------------

_EPS = np.finfo(float).eps
_MAX_GRID = 2_000_000


class _Sampler:
    """Envelope values with error bars, plus ``|Prox(0)|`` bound."""

    def __init__(self, f, prox_tol):
        self.f = f
        if isinstance(f, PLQFunction):
            self.env = envelope_plq(f)
            p0 = prox_plq(f)(Fraction(0) if f.exact else 0.0)
            self.prox0 = abs(float(p0))
        else:
            if not isinstance(f, OracleConvexFunction):
                raise TypeError(f"expected PLQFunction or OracleConvexFunction, got {type(f).__name__}")
            if not f.convexity_declared:
                raise ValueError(f"{f.name} is not declared convex; its envelope is not certified")
            self.prox_tol = prox_tol
            out = prox_oracle_batch(f, [0.0], tol=prox_tol)
            self.prox0 = abs(float(out["y"][0])) + float(out["residual"][0])

    def values(self, xs):
        if isinstance(self.f, PLQFunction):
            v = self.env.evaluate_array(xs)
            err = 4 * _EPS * np.maximum(np.abs(v), 1) * (1 + np.abs(xs))
            return v, v - err, v + err
        out = prox_oracle_batch(self.f, xs, tol=self.prox_tol)
        return out["value"], out["lower"], out["upper"]


def _grid_sup(sf, sg, i, target):
    """Certified sup of the envelope difference on ``[-i, i]``.

    Between neighbouring grid points ``|D|`` exceeds the larger endpoint value
    by at most ``min(L delta / 2, delta**2 / 8)``: ``D`` is Lipschitz with
    constant ``L = 2 (2 i + |P_f(0)| + |P_g(0)|)`` and ``D' = P_g - P_f`` is
    1-Lipschitz because both proximal maps are nondecreasing and nonexpansive.
    """
    L = 2 * (2 * i + sf.prox0 + sg.prox0)
    budget = target / 2
    delta = max(2 * budget / L, math.sqrt(8 * budget))
    n = int(math.ceil(2 * i / delta)) + 1
    if n > _MAX_GRID:
        raise ProxBudgetExhausted(f"ball {i} needs {n} grid points for accuracy {target:.3e}",
                                  None, target)
    xs = np.linspace(-i, i, n)
    delta = 2 * i / (n - 1)
    grid_err = min(L * delta / 2, delta * delta / 8)
    fv, flo, fhi = sf.values(xs)
    gv, glo, ghi = sg.values(xs)
    d = fv - gv
    d_hi = np.maximum(np.abs(fhi - glo), np.abs(flo - ghi))
    d_lo = np.where((flo - ghi > 0) | (fhi - glo < 0), np.minimum(np.abs(flo - ghi), np.abs(fhi - glo)), 0.0)
    lower = float(np.max(d_lo))
    upper = float(np.max(d_hi)) + grid_err
    sup = min(max(float(np.max(np.abs(d))), lower), upper)
    return BallSupNorm(int(i), sup, lower, upper, False, upper - lower, n)


def ball_sup_norm_oracle(f, g, i: int, accuracy: float = 1e-6, prox_tol: float = 1e-10) -> BallSupNorm:
    """Grid sup of ``|e_1 f - e_1 g|`` on ``[-i, i]`` with ``upper - lower`` near ``accuracy``.

    Either argument may be an oracle or a PLQ function.
    """
    if i < 1:
        raise ValueError("ball index must be at least 1")
    if not accuracy > 0:
        raise ValueError("accuracy must be positive")
    return _grid_sup(_Sampler(f, prox_tol), _Sampler(g, prox_tol), i, accuracy)


def _threads() -> int:
    raw = os.environ.get("MOREAU_LAB_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"MOREAU_LAB_THREADS must be an integer, got {raw!r}") from None


def _series_grid(f, g, accuracy, prox_tol, params) -> MetricEstimate:
    N = truncation_level(accuracy)
    sf, sg = _Sampler(f, prox_tol), _Sampler(g, prox_tol)
    # term i may contribute 2**-i * err_i; keep the total below accuracy / 2
    targets = [accuracy * 2 ** i / (2 * N) for i in range(1, N + 1)]

    def term(i):
        return _grid_sup(sf, sg, i, targets[i - 1])

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(term, range(1, N + 1)))
    else:
        terms = [term(i) for i in range(1, N + 1)]
    # sup norms are nondecreasing in i; use that to tighten the bounds
    lo_run = 0.0
    tight = []
    for t in terms:
        lo_run = max(lo_run, t.lower)
        tight.append(t if t.lower >= lo_run else BallSupNorm(t.i, max(t.sup, lo_run), lo_run, t.upper,
                                                             False, t.upper - lo_run, t.grid_points))
    terms = tight
    w = [2.0 ** -t.i for t in terms]
    value = sum(wi * t.sup / (1 + t.sup) for wi, t in zip(w, terms))
    lower = sum(wi * t.lower / (1 + t.lower) for wi, t in zip(w, terms))
    upper = sum(wi * t.upper / (1 + t.upper) for wi, t in zip(w, terms)) + 2.0 ** -N
    slack = 4 * N * _EPS
    return MetricEstimate(value, max(0.0, lower - slack), min(1.0, upper + slack), N, tuple(terms),
                          float(accuracy), False, params)


def aw_distance(f, g, accuracy: float = 1e-6, *, prox_tol: float = 1e-10) -> MetricEstimate:
    """Distance between two convex functions with a certified enclosure.

    Parameters
    ----------
    f, g : PLQFunction or OracleConvexFunction
        PLQ pairs use exact sup norms; anything involving an oracle uses the
        certified grid path.
    accuracy : float
        Target width of ``[lower, upper]``.
    prox_tol : float
        Residual tolerance for oracle prox solves (grid path only).

    Raises
    ------
    ProxBudgetExhausted
        An oracle prox solve could not reach ``prox_tol``.
    """
    if not accuracy > 0:
        raise ValueError("accuracy must be positive")
    if isinstance(f, PLQFunction) and isinstance(g, PLQFunction):
        return _series_exact(envelope_plq(f), envelope_plq(g), accuracy)
    return _series_grid(f, g, accuracy, prox_tol, {})


def conjugation_isometry_residual(f: PLQFunction, g: PLQFunction, accuracy: float = 1e-6):
    """``|d(f, g) - d(f*, g*)|`` between the two truncated estimates.

    The underlying identity is exact, so the residual is bounded by the sum of
    the two certified enclosure widths.
    """
    a = aw_distance(f, g, accuracy)
    b = aw_distance(conjugate(f), conjugate(g), accuracy)
    return abs(a.value - b.value)


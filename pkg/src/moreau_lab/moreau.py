"""Proximal mappings and Moreau envelopes with parameter 1.

For PLQ functions everything is closed form. The proximal mapping is read off
the subdifferential graph: ``Prox = (Id + df)^{-1}`` turns a quadratic piece
into a segment of slope ``1/(1 + 2a)`` and a kink into a flat segment. The
inverse direction (:func:`prox_inverse`) rebuilds a function from a prescribed
prox, which is how proximal averages and the strongly convex approximations of
:mod:`moreau_lab.strongify` are realised.

Oracle functions are handled by a certified one-dimensional bracket search on
the 1-strongly convex subproblem ``f(y) + (y - x)**2 / 2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
import numpy as np

from ._numeric import INF, affine_at, as_number, half_like, is_inf, one_like
from .oracle import OracleConvexFunction
from .plq import PLQFunction, evaluate, subgradient_graph
from .pwl import MonotonePiecewiseLinearMap, linear_combination

__all__ = [
    "ProxSolveReport",
    "ProxBudgetExhausted",
    "prox_plq",
    "envelope_plq",
    "envelope_at",
    "envelope_gradient",
    "moreau_decomposition_residual",
    "proximal_average",
    "prox_inverse",
    "prox_oracle",
    "prox_oracle_batch",
]


def _prox_segments(f: PLQFunction):
    """Pair each subdifferential element with its prox segment in ``w = x + v``."""
    out = []
    one = one_like(f.exact)
    for el in subgradient_graph(f):
        if el[0] == "piece":
            _, x0, x1, (a, c, d) = el
            m = one + 2 * a
            w0, w1 = affine_at(m, c, x0), affine_at(m, c, x1)
            out.append((w0, w1, (one / m, -c / m), el))
        else:
            _, x, v0, v1 = el
            out.append((x + v0, x + v1, (0 * one, x), el))
    if not f.exact:
        out = [s for s in out if s[0] < s[1]] or out[:1]
    return out


def prox_plq(f: PLQFunction) -> MonotonePiecewiseLinearMap:
    """Exact proximal mapping of ``f`` as a nondecreasing nonexpansive map."""
    # exact and float functions can compare equal, so the mode is part of the key
    return _prox_cached(f, f.exact)


@lru_cache(maxsize=2048)
def _prox_cached(f: PLQFunction, _exact: bool) -> MonotonePiecewiseLinearMap:
    segs = _prox_segments(f)
    return MonotonePiecewiseLinearMap([s[1] for s in segs[:-1]], [s[2] for s in segs])


def envelope_plq(f: PLQFunction) -> PLQFunction:
    """Exact Moreau envelope ``e_1 f`` as a full-domain PLQ function.

    On a prox segment coming from the piece ``a x**2 + c x + d`` the envelope is
    ``(a w**2 + c w - c**2/2) / (1 + 2a) + d``; on a flat segment at ``x`` it is
    ``f(x) + (w - x)**2 / 2``.
    """
    return _envelope_cached(f, f.exact)


@lru_cache(maxsize=2048)
def _envelope_cached(f: PLQFunction, _exact: bool) -> PLQFunction:
    half = half_like(f.exact)
    one = one_like(f.exact)
    segs = _prox_segments(f)
    pieces = []
    for _, _, _, el in segs:
        if el[0] == "piece":
            a, c, d = el[3]
            m = one + 2 * a
            pieces.append((a / m, c / m, d - half * c * c / m))
        else:
            x = el[1]
            pieces.append((half, -x, half * x * x + evaluate(f, x)))
    return PLQFunction([s[1] for s in segs[:-1]], pieces)


def envelope_at(f: PLQFunction, x):
    """``e_1 f(x) = f(Prox(x)) + (Prox(x) - x)**2 / 2`` at a single point."""
    p = prox_plq(f)(x)
    return evaluate(f, p) + half_like(f.exact) * (p - x) ** 2


def envelope_gradient(f: PLQFunction, x):
    """``(Id - Prox_f)(x)``, the derivative of the envelope."""
    return x - prox_plq(f)(as_number(x))


def moreau_decomposition_residual(f: PLQFunction, x, conj: PLQFunction | None = None):
    """``e_1 f(x) + e_1 f*(x) - x**2/2``; zero for every proper lsc convex ``f``."""
    from .plq import conjugate

    x = as_number(x)
    conj = conjugate(f) if conj is None else conj
    return (evaluate(envelope_plq(f), x) + evaluate(envelope_plq(conj), x)
            - half_like(f.exact) * x * x)


def prox_inverse(P: MonotonePiecewiseLinearMap, tol=None) -> PLQFunction:
    """Rebuild ``g`` with ``prox_plq(g) == P``.

    The subdifferential of ``g`` is ``P^{-1} - Id``: a segment of slope
    ``s > 0`` gives the piece ``((1/s - 1)/2) x**2 - (t/s) x`` and a flat segment
    gives a kink (or a domain end when it reaches infinity). The additive
    constant is fixed by ``g(P(0)) = 0``.
    """
    if not P.is_nonexpansive(tol):
        raise ValueError(f"slope {P.max_slope} > 1: not the proximal mapping of a convex function")
    one = one_like(P.exact)
    half = half_like(P.exact)
    lower, upper = -INF, INF
    pieces = []  # (x0, x1, a, c)
    for w0, w1, (s, t) in P.intervals():
        if s == 0:
            if is_inf(w0):
                lower = t
            if is_inf(w1):
                upper = t
            continue
        x0, x1 = affine_at(s, t, w0), affine_at(s, t, w1)
        pieces.append((x0, x1, half * (one / s - one), -t / s))
    if not pieces:
        t = P.segments[0][1]
        return PLQFunction((), ((0, 0, 0 * t),), (t, t))
    coeffs = []
    d = 0 * one
    for k, (x0, _, a, c) in enumerate(pieces):
        if k:
            pa, pc, pd = coeffs[-1]
            d = (pa - a) * x0 * x0 + (pc - c) * x0 + pd
        coeffs.append((a, c, d))
    g = PLQFunction([p[1] for p in pieces[:-1]], coeffs, (lower, upper))
    return g.shift(-evaluate(g, P(0 * one)))


def proximal_average(f1: PLQFunction, f2: PLQFunction, lam) -> PLQFunction:
    """Function ``p`` with ``Prox_p = lam Prox_f1 + (1-lam) Prox_f2``.

    The constant is chosen so that ``e_1 p = lam e_1 f1 + (1-lam) e_1 f2``.
    """
    lam = as_number(lam)
    if not 0 <= lam <= 1:
        raise ValueError("lam must lie in [0, 1]")
    P = linear_combination([prox_plq(f1), prox_plq(f2)], [lam, 1 - lam])
    g = prox_inverse(P)
    zero = 0 * lam
    target = lam * envelope_at(f1, zero) + (1 - lam) * envelope_at(f2, zero)
    return g.shift(target - envelope_at(g, zero))


# -- oracle tier -------------------------------------------------------------

class ProxBudgetExhausted(RuntimeError):
    """The bracket did not shrink below the tolerance within the iteration budget."""

    def __init__(self, message, best, residual):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class ProxSolveReport:
    """Certified solution of ``min_y f(y) + (y - x)**2 / 2``.

    ``residual`` bounds ``|y - Prox_f(x)|``; the envelope value lies in
    ``[envelope_lower, envelope_upper]`` and ``envelope_value`` is the
    objective at ``y`` (so it equals the upper bound).
    """

    x: float
    y: float
    envelope_value: float
    envelope_lower: float
    envelope_upper: float
    iterations: int
    residual: float
    tol: float

    def to_json(self) -> dict:
        return {k: (v if np.isfinite(v) else ("inf" if v > 0 else "-inf"))
                if isinstance(v, float) else v for k, v in asdict(self).items()}


_EPS = np.finfo(float).eps


def _objective(f, y, x):
    return f(y) + 0.5 * (y - x) ** 2


def prox_oracle_batch(f: OracleConvexFunction, xs, tol: float = 1e-10, max_iter: int = 400):
    """Vectorised certified prox for a one-dimensional oracle.

    Returns a dict of arrays ``y``, ``residual``, ``value``, ``lower``,
    ``upper`` and the iteration count. With a derivative oracle the bracket
    is bisected on the sign of ``f'(y) + y - x``; otherwise golden-section
    search is used. The bracket always contains the exact solution, so half
    its width bounds the distance to it.
    """
    if f.dimension != 1:
        raise ValueError("prox_oracle supports one-dimensional oracles only")
    if not tol > 0:
        raise ValueError("tol must be positive")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if not np.all(np.isfinite(xs)):
        raise ValueError("query points must be finite")
    R = float(f.domain_radius_hint)
    lo = np.minimum(xs, -R)
    hi = np.maximum(xs, R)
    # half the tolerance leaves room to fall back on a bracket end below
    if f.derivative is not None:
        lo, hi, it = _bisect(f, xs, lo, hi, tol / 2, max_iter)
    else:
        lo, hi, it = _golden(f, xs, lo, hi, tol / 2, max_iter)
    y = 0.5 * (lo + hi)
    residual = 0.5 * (hi - lo)
    value = _objective(f, y, xs)
    # a bracket straddling a domain end can have its midpoint outside the domain
    for end in (lo, hi, _simplest_in(lo, hi)):
        v_end = _objective(f, end, xs)
        swap = ~np.isfinite(value) & np.isfinite(v_end)
        y = np.where(swap, end, y)
        value = np.where(swap, v_end, value)
        residual = np.where(swap, hi - lo, residual)
    if f.derivative is not None:
        g = f.slope(y) + y - xs
        with np.errstate(invalid="ignore"):
            lower = value - np.abs(g) * residual
        lower = np.where(residual == 0, value, lower)
        lower = np.where(np.isfinite(value), lower, -np.inf)
    else:
        lower = _secant_lower(f, xs, lo, y, hi, value)
    slack = 8 * _EPS * np.maximum(np.abs(np.where(np.isfinite(value), value, 0)), 1)
    lower = lower - slack
    # 1-strong convexity: (y - y*)**2 / 2 <= value - min
    with np.errstate(invalid="ignore"):
        gap_radius = np.sqrt(2 * np.maximum(value - lower, 0))
    residual = np.minimum(residual, np.nan_to_num(gap_radius, nan=np.inf))
    bad = residual > tol
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ProxBudgetExhausted(
            f"prox bracket at x={xs[k]} still has half-width {residual[k]:.3e} > {tol:.3e} "
            f"after {it} iterations", float(y[k]), float(residual[k]))
    return {"y": y, "residual": residual, "value": value, "lower": lower,
            "upper": value, "iterations": it}


def _simplest_in(lo, hi):
    """Coarsest dyadic number in each ``[lo, hi]``; lands on isolated domain points like 0 or 1."""
    out = np.where((lo <= 0) & (hi >= 0), 0.0, np.nan)
    q = 2.0 ** 60
    while q > 0 and np.any(np.isnan(out)):
        cand = np.ceil(lo / q) * q
        out = np.where(np.isnan(out) & (cand <= hi), cand, out)
        q /= 2
    return np.where(np.isnan(out), 0.5 * (lo + hi), out)


def _expand(f, xs, lo, hi, decreasing_at, increasing_at):
    width = np.maximum(hi - lo, 1.0)
    for _ in range(200):
        move = decreasing_at(lo)  # minimizer might be left of lo
        if not np.any(move):
            break
        lo = np.where(move, lo - width, lo)
        width = np.where(move, 2 * width, width)
    width = np.maximum(hi - lo, 1.0)
    for _ in range(200):
        move = increasing_at(hi)
        if not np.any(move):
            break
        hi = np.where(move, hi + width, hi)
        width = np.where(move, 2 * width, width)
    return lo, hi


def _bisect(f, xs, lo, hi, tol, max_iter):
    def grad(y):
        return f.slope(y) + y - xs

    lo, hi = _expand(f, xs, lo, hi, lambda y: grad(y) > 0, lambda y: grad(y) < 0)
    frozen = np.zeros(xs.shape, dtype=bool)
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        active = (0.5 * (hi - lo) > tol) & ~frozen & (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        d = f.slope(mid)
        g = d + mid - xs
        # inside rounding noise the sign of g says nothing; stop refining there
        with np.errstate(invalid="ignore"):
            noise = 8 * _EPS * (np.abs(d) + np.abs(mid) + np.abs(xs))
        unsure = np.isfinite(g) & (np.abs(g) <= noise)
        frozen |= active & unsure
        move = active & ~unsure
        lo = np.where(move & (g < 0), mid, lo)
        hi = np.where(move & (g > 0), mid, hi)
        # 1-strong monotonicity: any subgradient g at mid puts the solution within |g| of mid
        reach = np.abs(g) + noise
        with np.errstate(invalid="ignore"):
            lo = np.where(active & np.isfinite(reach), np.maximum(lo, mid - reach), lo)
            hi = np.where(active & np.isfinite(reach), np.minimum(hi, mid + reach), hi)
        it += 1
    return lo, hi, it


_INVPHI = (np.sqrt(5.0) - 1) / 2


def _golden(f, xs, lo, hi, tol, max_iter):
    def phi(y):
        return _objective(f, y, xs)

    lo, hi = _expand(f, xs, lo, hi,
                     lambda y: phi(y - np.maximum(1.0, np.abs(y))) < phi(y),
                     lambda y: phi(y + np.maximum(1.0, np.abs(y))) < phi(y))
    lo = lo - np.maximum(1.0, np.abs(lo)) * (phi(lo - np.maximum(1.0, np.abs(lo))) < phi(lo))
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = phi(c), phi(d)
    it = 0
    while it < max_iter:
        # a comparison inside rounding noise says nothing about the minimizer
        noise = 64 * _EPS * np.maximum(np.abs(fc), np.abs(fd))
        live = (0.5 * (hi - lo) > tol) & (np.abs(fc - fd) > noise)
        if not np.any(live):
            break
        left = fc < fd  # minimizer in [lo, d]
        nlo = np.where(left, lo, c)
        nhi = np.where(left, d, hi)
        nc = np.where(left, nhi - _INVPHI * (nhi - nlo), d)
        nd = np.where(left, c, nlo + _INVPHI * (nhi - nlo))
        fnew = phi(np.where(left, nc, nd))
        nfc, nfd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        lo, hi = np.where(live, nlo, lo), np.where(live, nhi, hi)
        c, d = np.where(live, nc, c), np.where(live, nd, d)
        fc, fd = np.where(live, nfc, fc), np.where(live, nfd, fd)
        it += 1
    return lo, hi, it


def _secant_lower(f, xs, a, c, b, fc):
    """Lower bound on a convex function's minimum over ``[a, b]`` from three values."""
    fa, fb = _objective(f, a, xs), _objective(f, b, xs)
    with np.errstate(invalid="ignore", divide="ignore"):
        s_cb = (fb - fc) / (b - c)
        s_ac = (fc - fa) / (c - a)
        l1 = fc + s_cb * (a - c)
        l2 = fc + s_ac * (b - c)
    lower = np.minimum(fc, np.minimum(np.nan_to_num(l1, nan=-np.inf), np.nan_to_num(l2, nan=-np.inf)))
    return np.where(b == a, fc, lower)


def prox_oracle(f: OracleConvexFunction, x, tol: float = 1e-10, max_iter: int = 400) -> ProxSolveReport:
    """Certified prox of an oracle at one point; see :func:`prox_oracle_batch`."""
    if not f.convexity_declared:
        raise ValueError(f"{f.name} is not declared convex; the prox subproblem is not certified")
    out = prox_oracle_batch(f, [float(x)], tol, max_iter)
    return ProxSolveReport(float(x), float(out["y"][0]), float(out["value"][0]),
                           float(out["lower"][0]), float(out["upper"][0]),
                           int(out["iterations"]), float(out["residual"][0]), float(tol))

"""Certificates for strong convexity, coercivity and strong minimizers.

PLQ inputs get exact answers. Oracle inputs are handled by scans and every
verdict from that path carries ``scan_scale=True``: it holds on the sampled
grid, nothing more.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ._numeric import INF, as_number, is_inf, one_like, to_json_number
from .metric import envelope_sup_on_ball
from .moreau import envelope_plq, prox_oracle_batch, prox_plq
from .oracle import OracleConvexFunction
from .plq import PLQFunction, conjugate, evaluate, infimum_on, minimize

__all__ = [
    "StrongConvexityReport",
    "CoercivityReport",
    "MinimizerCertificate",
    "StrongMinimizerVerdict",
    "OpennessRadius",
    "EpiProbeReport",
    "strong_convexity_report",
    "coercivity_test",
    "annulus_gap",
    "unrestricted_gap",
    "strong_minimizer_certificate",
    "em_openness_radius",
    "epi_convergence_probe",
    "relate_modulus_envelope",
    "strong_convexity_modulus",
]

DEFAULT_DEPTH = 8
SCAN_POINTS = 100_001
SCAN_GAP_TOL = 1e-9


def _num(x):
    return None if x is None else to_json_number(x)


# -- strong convexity ----------------------------------------------------------

@dataclass(frozen=True)
class StrongConvexityReport:
    """Modulus of strong convexity and prox contraction factor.

    ``modulus`` is ``None`` for a point indicator (tag ``"point_indicator"``),
    whose prox is constant (``k == 0``). For PLQ inputs ``k == 1/(1+modulus)``.
    """

    modulus: object
    k: object
    tag: str
    witness: dict | None = None
    scan_scale: bool = False

    @property
    def strongly_convex(self) -> bool:
        return self.tag in ("strongly_convex", "point_indicator")

    def to_json(self) -> dict:
        return {"modulus": _num(self.modulus), "k": _num(self.k), "tag": self.tag,
                "strongly_convex": self.strongly_convex, "witness": self.witness,
                "scan_scale": self.scan_scale}


def strong_convexity_modulus(f: PLQFunction):
    """Largest ``s`` with ``f - s x**2/2`` convex; ``None`` for a point domain."""
    if f.is_point:
        return None
    return min(2 * a for a, _, _ in f.pieces)


def strong_convexity_report(f) -> StrongConvexityReport:
    """Exact modulus for PLQ input, sampled upper bound for oracles."""
    if isinstance(f, OracleConvexFunction):
        return _oracle_strong_convexity(f)
    if f.is_point:
        zero = 0 * one_like(f.exact)
        return StrongConvexityReport(None, zero, "point_indicator",
                                     {"point": to_json_number(f.lower)})
    sigma = strong_convexity_modulus(f)
    k = prox_plq(f).max_slope
    if sigma > 0:
        return StrongConvexityReport(sigma, k, "strongly_convex")
    j = next(j for j, p in enumerate(f.pieces) if p[0] == 0)
    lo, hi, p = list(f.segments())[j]
    witness = {"piece_index": j, "interval": [to_json_number(lo), to_json_number(hi)],
               "piece": [to_json_number(v) for v in p]}
    return StrongConvexityReport(sigma, k, "not_strongly_convex", witness)


def _oracle_strong_convexity(f: OracleConvexFunction) -> StrongConvexityReport:
    """Upper bound on the modulus from midpoint defects ``8 (f(x)/2 + f(y)/2 - f(mid)) / |x-y|**2``.

    Any strongly convex function has defect at least its modulus at every
    scale, so a defect that vanishes at small scales refutes strong convexity
    on the sampled set.
    """
    if f.dimension != 1:
        raise ValueError("oracle strong convexity scan supports one-dimensional oracles only")
    R = f.domain_radius_hint
    centers = np.linspace(-R, R, 401)
    best = (math.inf, None, None)
    eps = np.finfo(float).eps
    for h in np.geomspace(1.0, 1e-5, 21):
        x, y = centers - h, centers + h
        fx, fy, fm = f(x), f(y), f(centers)
        with np.errstate(invalid="ignore"):
            defect = 8 * (0.5 * fx + 0.5 * fy - fm) / (2 * h) ** 2
            # rounding in the three values can only hide curvature up to this much
            noise = 32 * eps * np.maximum(np.maximum(np.abs(fx), np.abs(fy)), np.abs(fm)) / (2 * h) ** 2
            defect = defect + noise
        defect = np.where(np.isfinite(defect), defect, np.inf)
        j = int(np.argmin(defect))
        if defect[j] < best[0]:
            best = (float(defect[j]), float(centers[j]), float(h))
    bound, c, h = best
    sigma = max(bound, 0.0)
    strongly = sigma > 1e-6
    k = None
    if f.convexity_declared:
        xs = np.linspace(-1.0, 1.0, 2001)
        ys = prox_oracle_batch(f, xs, tol=1e-12)["y"]
        k = float(np.max(np.diff(ys) / np.diff(xs)))
    witness = None if strongly else {"center": c, "half_width": h, "defect": bound}
    return StrongConvexityReport(sigma if strongly else 0.0, k,
                                 "strongly_convex" if strongly else "not_strongly_convex",
                                 witness, scan_scale=True)


def relate_modulus_envelope(f: PLQFunction):
    """Moduli ``(sigma_f, sigma_env)`` of ``f`` and its envelope.

    ``sigma_env == sigma_f / (1 + sigma_f)``; a point indicator gives
    ``(None, 1)``.
    """
    env = envelope_plq(f)
    return strong_convexity_modulus(f), strong_convexity_modulus(env)


# -- coercivity -----------------------------------------------------------------

@dataclass(frozen=True)
class CoercivityReport:
    """``f(x)/|x| -> inf`` decided twice: by the conjugate's domain and by end growth."""

    coercive: bool
    conjugate_domain: tuple
    end_behaviour: tuple

    def to_json(self) -> dict:
        return {"coercive": self.coercive,
                "conjugate_domain": [to_json_number(v) for v in self.conjugate_domain],
                "end_behaviour": list(self.end_behaviour)}


def coercivity_test(f: PLQFunction) -> CoercivityReport:
    dom = conjugate(f).domain
    by_conjugate = is_inf(dom[0]) and is_inf(dom[1])

    def end(edge, piece):
        if not is_inf(edge):
            return "bounded"
        return "quadratic" if piece[0] > 0 else "linear"

    ends = (end(f.lower, f.pieces[0]), end(f.upper, f.pieces[-1]))
    by_growth = "linear" not in ends
    if by_conjugate != by_growth:
        raise AssertionError(f"coercivity routes disagree for {f!r}")
    return CoercivityReport(by_conjugate, dom, ends)


# -- minimizer certificates -------------------------------------------------------

@dataclass(frozen=True)
class MinimizerCertificate:
    """Annulus gap ``inf_{1/m <= |x - z| <= m} phi(x) - phi(z)``.

    ``which`` is ``"U"`` when ``phi = f`` and ``"E"`` when ``phi`` is the envelope.
    Membership is claimed iff the gap is positive.
    """

    z: object
    m: int
    gap: object
    which: str
    scan_scale: bool = False

    @property
    def member(self) -> bool:
        return self.gap > 0

    def to_json(self) -> dict:
        return {"z": to_json_number(self.z), "m": self.m, "gap": to_json_number(self.gap),
                "which": self.which, "member": self.member, "scan_scale": self.scan_scale}


def _phi(f: PLQFunction, which: str) -> PLQFunction:
    if which == "E":
        return envelope_plq(f)
    if which == "U":
        return f
    raise ValueError(f"which must be 'U' or 'E', got {which!r}")


def annulus_gap(f: PLQFunction, z, m: int, which: str = "E") -> MinimizerCertificate:
    """Exact gap over the compact annulus ``[z-m, z-1/m] U [z+1/m, z+m]``."""
    z = as_number(z)
    if m < 1:
        raise ValueError("m must be a positive integer")
    phi = _phi(f, which)
    if which == "U" and not f.in_domain(z):
        raise ValueError(f"z={z} lies outside dom f; U certificates need f(z) finite")
    r = Fraction(1, m) if f.exact else 1.0 / m
    inner = min(infimum_on(phi, z - m, z - r)[0], infimum_on(phi, z + r, z + m)[0])
    return MinimizerCertificate(z, int(m), inner - evaluate(phi, z), which)


def unrestricted_gap(f: PLQFunction, z, m: int, which: str = "E"):
    """Exact ``inf_{|x - z| >= 1/m} phi(x) - phi(z)`` using the pieces' end behaviour."""
    z = as_number(z)
    phi = _phi(f, which)
    r = Fraction(1, m) if f.exact else 1.0 / m
    inner = min(infimum_on(phi, -INF, z - r)[0], infimum_on(phi, z + r, INF)[0])
    return inner - evaluate(phi, z)


@dataclass(frozen=True)
class StrongMinimizerVerdict:
    """Outcome of :func:`strong_minimizer_certificate`.

    ``status`` is ``"strong_minimizer"`` (with certificate stacks),
    ``"refuted"`` (two distinct minimizers), ``"no_minimizer"`` or, on the
    scan path, ``"certificate_failed"`` (unique scan minimizer but some gap
    is not positive).
    """

    status: str
    z: object
    depth: int
    e_certificates: tuple = ()
    u_certificates: tuple = ()
    minimizers: tuple = ()
    scan_scale: bool = False
    failed_m: tuple = ()
    notes: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == "strong_minimizer"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "z": _num(self.z),
            "M": self.depth,
            "e_certificates": [c.to_json() for c in self.e_certificates],
            "u_certificates": [c.to_json() for c in self.u_certificates],
            "minimizers": [to_json_number(x) for x in self.minimizers],
            "failed_m": list(self.failed_m),
            "scan_scale": self.scan_scale,
            **({"notes": self.notes} if self.notes else {}),
        }


def strong_minimizer_certificate(f, M: int = DEFAULT_DEPTH) -> StrongMinimizerVerdict:
    """Certify (or refute) a strong minimizer with annulus gaps for ``m = 1..M``."""
    if M < 1:
        raise ValueError("certificate depth M must be at least 1")
    if isinstance(f, OracleConvexFunction):
        return _oracle_minimizer_scan(f, M)
    mn = minimize(f)
    if not mn.attained:
        return StrongMinimizerVerdict("no_minimizer", None, M)
    if not mn.unique:
        return StrongMinimizerVerdict("refuted", None, M, minimizers=mn.points())
    z = mn.lo
    es = tuple(annulus_gap(f, z, m, "E") for m in range(1, M + 1))
    us = tuple(annulus_gap(f, z, m, "U") for m in range(1, M + 1))
    failed = tuple(c.m for c in es + us if not c.member)
    if failed:
        raise AssertionError(f"unique minimizer {z} without positive annulus gap at m={failed}")
    return StrongMinimizerVerdict("strong_minimizer", z, M, es, us)


def _refine_golden(phi, a, b, iters=80):
    inv = (math.sqrt(5) - 1) / 2
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = phi(d)
    return 0.5 * (a + b)


def _oracle_minimizer_scan(f: OracleConvexFunction, M: int) -> StrongMinimizerVerdict:
    if f.dimension != 1:
        raise ValueError("minimizer scans support one-dimensional oracles only")
    R = f.domain_radius_hint
    xs = np.linspace(-R, R, SCAN_POINTS)
    vals = f(xs)
    order = np.argsort(vals, kind="stable")
    j = int(order[0])
    ties = np.flatnonzero(vals == vals[j])
    unique = len(ties) == 1 and abs(int(order[1]) - j) == 1
    notes = {"grid_points": SCAN_POINTS, "radius": R, "z_heuristic": True}
    if not np.isfinite(vals[j]):
        return StrongMinimizerVerdict("no_minimizer", None, M, scan_scale=True, notes=notes)
    if not unique:
        return StrongMinimizerVerdict("refuted", None, M, minimizers=(float(xs[ties[0]]), float(xs[ties[-1]])),
                                      scan_scale=True, notes=notes)
    step = xs[1] - xs[0]
    z = _refine_golden(lambda t: float(f(t)), xs[j] - step, xs[j] + step)
    fz = float(f(z))
    if fz > vals[j]:
        z, fz = float(xs[j]), float(vals[j])
    # tails matter only without convexity; with it the compact annulus suffices
    tail = None if f.convexity_declared else np.geomspace(1e-3, 1e6, 2001)

    def gap(phi_vals, phi_z, m, tail_vals):
        g = float(np.min(phi_vals)) - phi_z
        if tail_vals is not None:
            g = min(g, float(np.min(tail_vals)) - phi_z)
        return g

    us, es = [], []
    for m in range(1, M + 1):
        ring = np.concatenate([np.linspace(z - m, z - 1 / m, 4001), np.linspace(z + 1 / m, z + m, 4001)])
        tv = None
        if tail is not None:
            far = tail[tail >= 1 / m]
            tv = f(np.concatenate([z - far, z + far]))
        g = gap(f(ring), fz, m, tv)
        us.append(MinimizerCertificate(z, m, g if abs(g) > SCAN_GAP_TOL else 0.0, "U", True))
        if f.convexity_declared:
            env = prox_oracle_batch(f, np.concatenate([[z], ring]), tol=1e-10)
            lo, hi = env["lower"], env["upper"]
            ge = float(np.min(lo[1:])) - float(hi[0])
            es.append(MinimizerCertificate(z, m, ge if ge > SCAN_GAP_TOL else 0.0, "E", True))
    failed = tuple(sorted(set(c.m for c in us + es if not c.member)))
    status = "certificate_failed" if failed else "strong_minimizer"
    return StrongMinimizerVerdict(status, z, M, tuple(es), tuple(us), scan_scale=True,
                                  failed_m=failed, notes=notes)


# -- openness radius ---------------------------------------------------------------

@dataclass(frozen=True)
class OpennessRadius:
    """Radius ``epsilon`` such that every ``g`` with ``d(f, g) < epsilon`` keeps a positive gap.

    ``j`` is the smallest ball index with ``[z - m, z + m]`` inside ``[-j, j]``.
    """

    z: object
    m: int
    j: int
    gap: object
    epsilon: object
    safety: object

    def to_json(self) -> dict:
        return {"z": to_json_number(self.z), "m": self.m, "j": self.j,
                "gap": to_json_number(self.gap), "epsilon": to_json_number(self.epsilon),
                "safety": to_json_number(self.safety)}


def em_openness_radius(f: PLQFunction, cert: MinimizerCertificate,
                       safety=Fraction(99, 100)) -> OpennessRadius:
    """Distance radius around ``f`` on which the envelope annulus gap at ``z`` survives.

    With ``G`` the gap, ``epsilon = safety * G / (2**j (2 + G))``; then
    ``d(f, g) < epsilon`` forces ``sup_{|x| <= j} |e_1 f - e_1 g| < G / 2``.
    """
    if cert.which != "E":
        raise ValueError("openness radius needs an envelope (E) certificate")
    G = cert.gap
    if not G > 0:
        raise ValueError(f"gap must be positive, got {G}")
    if is_inf(G):
        raise ValueError("infinite gap: envelope gaps are always finite")
    safety = as_number(safety)
    if not 0 < safety < 1:
        raise ValueError("safety factor must lie in (0, 1)")
    j = max(1, math.ceil(abs(cert.z) + cert.m))
    eps = safety * G / (2 ** j * (2 + G))
    return OpennessRadius(cert.z, cert.m, j, G, eps, safety)


# -- epi-convergence probe -----------------------------------------------------------

@dataclass(frozen=True)
class EpiProbeReport:
    """Sup deviations ``sup_{|x| <= i} |e_1 f_k - e_1 f|`` for each ball ``i`` and index ``k``.

    ``threshold`` is the first index from which every later deviation on every
    ball is at most ``tol``; the verdict is ``"converges"`` when one exists.
    """

    description: str
    ks: tuple
    balls: tuple
    deviations: dict
    tol: float
    threshold: int | None
    verdict: str

    def to_json(self) -> dict:
        return {"description": self.description, "ks": list(self.ks), "balls": list(self.balls),
                "deviations": {str(i): [to_json_number(v) for v in d] for i, d in self.deviations.items()},
                "tol": self.tol, "threshold": self.threshold, "verdict": self.verdict}


def epi_convergence_probe(sequence: Callable[[int], PLQFunction] | Sequence[PLQFunction],
                          target: PLQFunction, balls: Sequence[int], tol: float,
                          ks: Sequence[int] | None = None,
                          description: str = "") -> EpiProbeReport:
    """Exact envelope deviations of ``f_k`` from ``target`` on the balls ``[-i, i]``.

    ``sequence`` is either a list (indexed from 1) or a callable ``k -> f_k``
    evaluated at ``ks``.
    """
    if callable(sequence):
        if ks is None:
            raise ValueError("ks is required when sequence is a callable")
        ks = tuple(int(k) for k in ks)
        members = [sequence(k) for k in ks]
    else:
        members = list(sequence)
        ks = tuple(range(1, len(members) + 1)) if ks is None else tuple(ks)
    if not members:
        raise ValueError("empty sequence")
    env_t = envelope_plq(target)
    envs = [envelope_plq(g) for g in members]
    devs = {int(i): [envelope_sup_on_ball(e, env_t, i) for e in envs] for i in balls}
    threshold = None
    for pos in range(len(ks) - 1, -1, -1):
        if all(d[pos] <= tol for d in devs.values()):
            threshold = ks[pos]
        else:
            break
    verdict = "converges" if threshold is not None else "not_converged"
    return EpiProbeReport(description, ks, tuple(int(i) for i in balls), devs, tol, threshold, verdict)

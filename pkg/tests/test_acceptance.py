"""End-to-end acceptance checks, one test per numbered criterion.

Each test registers itself with the ``criterion`` fixture so the terminal
summary prints one PASS/FAIL line per criterion.
"""

import math
import random
import time
from fractions import Fraction as F

import numpy as np

from conftest import random_instances
from moreau_lab import catalog
from moreau_lab.analysis import (
    annulus_gap,
    coercivity_test,
    em_openness_radius,
    epi_convergence_probe,
    relate_modulus_envelope,
    strong_convexity_report,
    strong_minimizer_certificate,
    unrestricted_gap,
)
from moreau_lab.metric import aw_distance, envelope_sup_on_ball
from moreau_lab.moreau import envelope_plq, moreau_decomposition_residual, prox_plq, proximal_average
from moreau_lab.plq import PLQFunction, add, add_quadratic, conjugate, evaluate, minimize
from moreau_lab.sampling import random_plq
from moreau_lab.strongify import strongify, verify_mvt_bound

PLQ_CATALOG = [catalog.get(n) for n in sorted(catalog.PLQ_CATALOG)]


def test_moreau_decomposition(criterion):
    criterion(1, "e1f + e1f* = x^2/2 within 1e-10 on 401 points, 109 functions, < 5 s")
    start = time.perf_counter()
    fs = PLQ_CATALOG + random_instances(101, 100)
    xs = [F(k, 10) for k in range(-200, 201)]
    assert len(fs) == 109 and len(xs) == 401
    worst = 0
    for f in fs:
        conj = conjugate(f)
        for x in xs:
            worst = max(worst, abs(moreau_decomposition_residual(f, x, conj)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-10
    assert elapsed < 5.0, f"took {elapsed:.2f} s"


def test_envelope_gradient_identity(criterion):
    criterion(2, "finite differences of e1f match x - Prox(x) within 1e-6; prox slopes in [0, 1]")
    h = 1e-5
    for f in PLQ_CATALOG + random_instances(102, 100):
        env, P = envelope_plq(f), prox_plq(f)
        assert all(0 <= s <= 1 for s in P.slopes)
        kinks = [float(b) for b in env.breakpoints]
        ef = env.to_float()
        for x in np.linspace(-10, 10, 201) + 1 / 7:
            if any(abs(x - b) <= 2 * h for b in kinks):
                continue
            fd = (ef(x + h) - ef(x - h)) / (2 * h)
            exact = x - float(P(F(x)))
            assert abs(fd - exact) <= 1e-6, (f, x)


def test_min_preservation(criterion):
    criterion(3, "min f == min e1f exactly")
    for f in PLQ_CATALOG + random_instances(103, 300):
        assert minimize(f).value == minimize(envelope_plq(f)).value


def test_metric_axioms(criterion):
    criterion(4, "symmetry, triangle inequality, d(f,f) = 0, range [0, 1] on 200 triples at 1e-8")
    r = random.Random(104)
    for _ in range(200):
        f, g, h = (random_plq(r) for _ in range(3))
        fg, gf = aw_distance(f, g, 1e-8), aw_distance(g, f, 1e-8)
        fh, hg = aw_distance(f, h, 1e-8), aw_distance(h, g, 1e-8)
        assert fg.value == gf.value and fg.lower == gf.lower and fg.upper == gf.upper
        slack = fg.error + fh.error + hg.error
        assert fg.value <= fh.value + hg.value + slack
        assert aw_distance(f, f, 1e-8).value == 0
        for d in (fg, fh, hg):
            assert 0 <= d.lower <= d.value <= d.upper <= 1
            assert d.upper - d.lower <= 1e-8


def test_conjugation_isometry(criterion):
    criterion(5, "|d(f,g) - d(f*,g*)| within twice the certified error on 100 pairs")
    r = random.Random(105)
    for _ in range(100):
        f, g = random_plq(r), random_plq(r)
        a = aw_distance(f, g, 1e-6)
        b = aw_distance(conjugate(f), conjugate(g), 1e-6)
        assert abs(a.value - b.value) <= 2 * max(a.error, b.error)


def test_strongify_catalog(criterion):
    criterion(6, "strongify over catalog x {0.5, 0.1, 0.01}: distance, modulus, shift, bound chain, < 10 s")
    start = time.perf_counter()
    for f in PLQ_CATALOG:
        for eps in (F(1, 2), F(1, 10), F(1, 100)):
            plan = strongify(f, eps)
            assert plan.distance.upper < eps
            rep = strong_convexity_report(plan.h)
            assert rep.tag == "point_indicator" or rep.modulus > 0
            assert evaluate(envelope_plq(plan.h), 0) == evaluate(envelope_plq(plan.f), 0)
            for i in range(1, plan.N + 1):
                exact, bound = verify_mvt_bound(plan, i)
                assert exact <= bound
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f} s"


def test_prox_characterization(criterion):
    criterion(7, "modulus > 0 iff max prox slope < 1, and k = 1/(1 + modulus), on 200 instances")
    for f in random_instances(107, 200):
        rep = strong_convexity_report(f)
        if rep.tag == "point_indicator":
            assert rep.k == 0
            continue
        assert (rep.modulus > 0) == (rep.k < 1)
        if rep.modulus > 0:
            assert abs(rep.k - 1 / (1 + rep.modulus)) <= 1e-10


def test_strong_minimizer_certificates(criterion):
    criterion(8, "full U/E stacks for strongly convex PLQ, refutation for the truncated quadratic, envelope moduli")
    for f in random_instances(108, 100, strongly_convex=True):
        v = strong_minimizer_certificate(f, 8)
        assert v.status == "strong_minimizer"
        certs = v.e_certificates + v.u_certificates
        assert sorted(c.m for c in v.e_certificates) == list(range(1, 9))
        assert sorted(c.m for c in v.u_certificates) == list(range(1, 9))
        assert all(c.member and c.z == v.z for c in certs)
        if not f.is_point:
            s, se = relate_modulus_envelope(f)
            assert abs(se - s / (1 + s)) <= 1e-10
    v = strong_minimizer_certificate(catalog.truncated_quadratic(), 8)
    assert v.status == "refuted" and len(set(v.minimizers)) == 2
    assert relate_modulus_envelope(catalog.truncated_quadratic()) == (0, 0)


def _perturb(f, kind, size, rng):
    """A family of perturbations of ``f`` that vanish as ``size -> 0``."""
    if kind == "shift":
        return f.shift(size)
    if kind == "tilt":
        return add(f, PLQFunction((), [(0, size, 0)]))
    if kind == "curvature":
        return add_quadratic(f, abs(size))
    other = rng["other"]
    if kind == "add":
        s = abs(size)
        scaled = PLQFunction(other.breakpoints, [(s * a, s * c, s * d) for a, c, d in other.pieces])
        return add(f, scaled)
    return proximal_average(f, other, 1 - abs(size))


def test_em_openness(criterion):
    criterion(9, "perturbations within the openness radius keep a positive E_m gap (50 triples x 20)")
    r = random.Random(109)
    triples = []
    while len(triples) < 50:
        f = random_plq(r, strongly_convex=r.random() < 0.5)
        mn = minimize(f)
        if not (mn.attained and mn.unique):
            continue
        m = r.randint(1, 4)
        cert = annulus_gap(f, mn.lo, m, "E")
        if cert.member:
            triples.append((f, cert))
    kinds = ("shift", "tilt", "curvature", "add", "average")
    for f, cert in triples:
        rad = em_openness_radius(f, cert)
        for n in range(20):
            kind = kinds[n % len(kinds)]
            state = {"other": random_plq(r, full_domain=True)}
            size = F(r.choice([-1, 1])) * F(r.randint(1, 8), 8)
            for _ in range(80):
                g = _perturb(f, kind, size, state)
                if aw_distance(f, g, rad.epsilon / 16).upper < rad.epsilon:
                    break
                size /= 2
            else:
                raise AssertionError("could not build a perturbation inside the radius")
            assert annulus_gap(g, cert.z, cert.m, "E").gap > 0, (f, kind, size)


def _brute_unrestricted(f, z, m, which):
    """Infimum of phi over |x - z| >= 1/m: exact grid plus closed-form tails."""
    phi = envelope_plq(f) if which == "E" else f
    r = F(1, m)
    R = 20
    grid = {z - r, z + r} | {F(k, 4) for k in range(-4 * R, 4 * R + 1)}
    grid |= {b for b in phi.breakpoints} | {e for e in phi.domain if not math.isinf(e)}
    vals = [evaluate(phi, x) for x in grid if abs(x - z) >= r]
    best = min(vals) if vals else math.inf
    lo, hi = phi.domain
    for side, edge in ((1, hi), (-1, lo)):
        if not math.isinf(edge):
            continue
        a, c, d = phi.pieces[-1] if side == 1 else phi.pieces[0]
        start = max(R, side * z + r)  # tail in the reflected variable t = side * x
        # q(t) = a t^2 + side c t + d for t >= start
        cc = side * c
        if a > 0:
            t = max(start, -cc / (2 * a))
            best = min(best, a * t * t + cc * t + d)
        elif cc < 0:
            best = -math.inf
        else:
            best = min(best, cc * start + d)
    return best - evaluate(phi, z)


def test_annulus_equivalence(criterion):
    criterion(10, "unrestricted infimum gap > 0 iff compact annulus gap > 0 on 200 instances")
    checked = 0
    for f in random_instances(110, 200):
        mn = minimize(f)
        if not mn.attained:
            # no minimizer: test at a domain point instead
            z = next(p for p in (F(0), *f.breakpoints, *f.domain) if not math.isinf(p) and evaluate(f, p) < math.inf)
        else:
            z = mn.lo if not math.isinf(mn.lo) else mn.hi
        for m in (1, 2, 5):
            for which in "UE":
                compact = annulus_gap(f, z, m, which).gap
                brute = _brute_unrestricted(f, z, m, which)
                assert (brute > 0) == (compact > 0), (f, z, m, which)
                assert (unrestricted_gap(f, z, m, which) > 0) == (compact > 0)
                checked += 1
    assert checked == 1200


def test_epi_convergence_probe(criterion):
    criterion(11, "f + 1/k deviates by exactly 1/k; shrinking indicators converge by k = 1000 at tol 1e-3")
    q = catalog.half_square()
    rep = epi_convergence_probe(lambda k: q.shift(F(1, k)), q, [1, 2, 5], 1e-3, ks=range(1, 1001))
    for i in (1, 2, 5):
        assert rep.deviations[i] == [F(1, k) for k in range(1, 1001)]
    assert rep.verdict == "converges"
    def shrinking(center, c):
        target = PLQFunction((), [(0, 0, c)], (center, center))
        return target, lambda k: PLQFunction((), [(0, 0, c)], (center - F(1, k), center + F(1, k)))

    target, fam = shrinking(F(0), F(3, 2))
    rep = epi_convergence_probe(fam, target, [1], 1e-3, ks=range(1, 1001))
    # on [-1, 1] the deviation is 1/k - 1/(2k^2), first below 1e-3 at k = 1000
    assert rep.deviations[1][999] == F(1, 1000) - F(1, 2 * 1000 ** 2)
    assert rep.verdict == "converges" and rep.threshold == 1000
    # off-centre and on larger balls the deviation still shrinks like (j + |center|)/k
    target, fam = shrinking(F(1, 3), F(-2))
    for j in (1, 2, 3):
        for k in (1, 10, 100):
            dev = envelope_sup_on_ball(envelope_plq(fam(k)), envelope_plq(target), j)
            assert 0 < dev <= (j + F(1, 3)) / k


def test_counterexamples(criterion):
    criterion(12, "truncated quadratic, x^4 and x^2/(x^4+1) behave as stated")
    tq = catalog.truncated_quadratic()
    assert coercivity_test(tq).coercive
    assert not strong_convexity_report(tq).strongly_convex
    v = strong_minimizer_certificate(catalog.quartic(), 4)
    assert v.status == "strong_minimizer" and v.scan_scale and abs(v.z) <= 1e-6
    assert not strong_convexity_report(catalog.quartic()).strongly_convex
    v = strong_minimizer_certificate(catalog.nonconvex_quotient(), 8)
    # a unique scan minimizer at 0 whose certificates break down
    assert v.status == "certificate_failed" and abs(v.z) <= 1e-6 and v.scan_scale
    assert 8 in v.failed_m

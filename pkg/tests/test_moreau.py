import json
import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _refs import CUBIC_ROOT, brute_envelope
from conftest import random_instances
from moreau_lab import catalog
from moreau_lab.moreau import (
    ProxBudgetExhausted,
    envelope_at,
    envelope_gradient,
    envelope_plq,
    moreau_decomposition_residual,
    prox_inverse,
    prox_oracle,
    prox_oracle_batch,
    prox_plq,
    proximal_average,
)
from moreau_lab.oracle import OracleConvexFunction, from_plq, midpoint_convexity_violations
from moreau_lab.plq import PLQFunction, evaluate, minimize
from moreau_lab.pwl import MonotonePiecewiseLinearMap as Map, linear_combination
from moreau_lab.sampling import random_plq


def test_prox_examples():
    assert prox_plq(catalog.half_square()) == Map((), [(F(1, 2), 0)])
    soft = prox_plq(catalog.absolute_value())
    assert soft == Map([-1, 1], [(1, 1), (0, 0), (1, -1)])
    assert [soft(F(x)) for x in (-3, -1, 0, F(1, 2), 2)] == [-2, 0, 0, 0, 1]
    assert prox_plq(catalog.indicator_point()) == Map((), [(0, 0)])


def test_envelope_examples():
    assert envelope_plq(catalog.half_square()) == PLQFunction((), [(F(1, 4), 0, 0)])
    huber = envelope_plq(catalog.absolute_value())
    assert huber == catalog.huber(1)
    assert envelope_plq(catalog.indicator_point()) == catalog.half_square()


def test_envelope_gradient_examples():
    assert envelope_gradient(catalog.half_square(), 2) == 1
    assert envelope_gradient(catalog.indicator_point(), F(7, 3)) == F(7, 3)
    assert envelope_gradient(catalog.absolute_value(), F(1, 2)) == F(1, 2)


def test_decomposition_examples():
    for x in (-3, 0, F(5, 7)):
        assert moreau_decomposition_residual(catalog.half_square(), x) == 0
    assert moreau_decomposition_residual(catalog.absolute_value(), 3) == 0
    assert moreau_decomposition_residual(catalog.indicator_point(), 1) == 0


def test_envelope_against_brute_force(catalog_plq):
    env, P = envelope_plq(catalog_plq), prox_plq(catalog_plq)
    for x in (-4.5, -1.0, -0.3, 0.0, 0.8, 2.2, 5.0):
        ref_val, ref_arg = brute_envelope(catalog_plq, x)
        assert float(evaluate(env, F(x))) == pytest.approx(ref_val, abs=1e-7)
        assert float(P(F(x))) == pytest.approx(ref_arg, abs=1e-4)


def test_envelope_identity_and_below_f():
    for f in random_instances(3, 100):
        env, P = envelope_plq(f), prox_plq(f)
        assert env.full_domain
        for x in [F(k, 4) for k in range(-40, 41)]:
            p = P(x)
            assert evaluate(env, x) == evaluate(f, p) + (p - x) ** 2 / 2
            assert evaluate(env, x) <= evaluate(f, x)
            assert envelope_at(f, x) == evaluate(env, x)


def test_prox_slopes_in_unit_interval():
    for f in random_instances(4, 200):
        P = prox_plq(f)
        assert all(0 <= s <= 1 for s in P.slopes)


def test_min_preserved():
    for f in random_instances(5, 200):
        m, me = minimize(f), minimize(envelope_plq(f))
        assert m.value == me.value


def test_gradient_matches_finite_differences(catalog_plq):
    env = envelope_plq(catalog_plq).to_float()
    h = 1e-5
    for x in np.linspace(-4.13, 4.07, 61):
        fd = (env(x + h) - env(x - h)) / (2 * h)
        assert fd == pytest.approx(float(envelope_gradient(catalog_plq, F(x))), abs=1e-6)


def test_prox_inverse_examples():
    assert prox_inverse(Map.identity()) == catalog.zero()
    assert prox_inverse(Map((), [(F(1, 2), 0)])) == catalog.half_square()
    assert prox_inverse(Map((), [(0, 0)])) == catalog.indicator_point()
    with pytest.raises(ValueError, match="slope"):
        prox_inverse(Map((), [(2, 0)]))


def test_prox_inverse_round_trips():
    for f in random_instances(6, 200):
        P = prox_plq(f)
        g = prox_inverse(P)
        assert prox_plq(g) == P
        assert evaluate(g, P(F(0))) == 0
        # g - f is constant on the domain
        shift = evaluate(f, P(F(0)))
        assert g.shift(shift) == f


def test_proximal_average_examples():
    q, pt = catalog.half_square(), catalog.indicator_point()
    p = proximal_average(q, pt, F(1, 2))
    env = envelope_plq(p)
    for x in [F(k, 3) for k in range(-9, 10)]:
        assert evaluate(env, x) == F(1, 2) * x * x / 4 + F(1, 2) * x * x / 2
    tq = catalog.truncated_quadratic()
    assert proximal_average(tq, q, 1) == tq
    # the strongly convex approximation: (1 - s) Prox_f = (1 - s) Prox_f + s Prox_{indicator of 0}
    s = F(1, 10)
    g = proximal_average(tq, pt, 1 - s)
    assert prox_plq(g) == prox_plq(tq).scaled(1 - s)


def test_proximal_average_envelope_identity_random():
    fs = random_instances(7, 80)
    for f1, f2, lam in zip(fs[::2], fs[1::2], [F(k, 7) for k in range(40)]):
        lam = lam - int(lam)
        p = proximal_average(f1, f2, lam)
        e, e1, e2 = envelope_plq(p), envelope_plq(f1), envelope_plq(f2)
        for x in [F(k, 2) for k in range(-20, 21)]:
            assert evaluate(e, x) == lam * evaluate(e1, x) + (1 - lam) * evaluate(e2, x)
    with pytest.raises(ValueError):
        proximal_average(fs[0], fs[1], F(3, 2))


def test_float_mode_decomposition():
    for f in random_instances(8, 30):
        g = f.to_float()
        for x in np.linspace(-20, 20, 41):
            assert abs(moreau_decomposition_residual(g, float(x))) <= 1e-10


def test_pwl_map_basics():
    P = Map([0, 1], [(0, 0), (1, 0), (0, 1)])
    assert P(F(-5)) == 0 and P(F(1, 2)) == F(1, 2) and P(F(9)) == 1
    assert P.max_slope == 1 and P.min_slope == 0
    assert Map.from_json(json.loads(json.dumps(P.to_json()))) == P
    with pytest.raises(ValueError):
        Map([0], [(1, 0), (1, 1)])
    with pytest.raises(ValueError):
        Map((), [(-1, 0)])
    assert linear_combination([P, Map.identity()], [F(1, 2), F(1, 2)])(F(2)) == F(3, 2)
    np.testing.assert_allclose(P(np.array([-1.0, 0.5, 3.0])), [0.0, 0.5, 1.0])


# -- oracle tier ---------------------------------------------------------------

def test_prox_oracle_examples():
    quartic = catalog.quartic()
    assert prox_oracle(quartic, 0.0, 1e-12).y == 0.0
    rep = prox_oracle(quartic, 1.0, 1e-8)
    assert abs(rep.y - CUBIC_ROOT) <= rep.residual <= 1e-8
    assert rep.envelope_lower <= 0.1875 <= rep.envelope_upper
    zero = from_plq(catalog.zero())
    for x in (-3.5, 0.25, 11.0):
        r = prox_oracle(zero, x, 1e-10)
        assert abs(r.y - x) <= r.residual <= 1e-10


def test_prox_oracle_derivative_free():
    quartic = OracleConvexFunction(lambda x: x ** 4, domain_radius_hint=10.0)
    rep = prox_oracle(quartic, 1.0, 1e-6)
    assert abs(rep.y - CUBIC_ROOT) <= rep.residual <= 1e-6
    rep = prox_oracle(quartic, -7.0, 1e-6)
    assert rep.envelope_lower <= rep.envelope_value


def test_prox_oracle_matches_plq(catalog_plq):
    orc = from_plq(catalog_plq)
    xs = np.linspace(-5, 5, 41)
    out = prox_oracle_batch(orc, xs, tol=1e-10)
    P = prox_plq(catalog_plq)
    env = envelope_plq(catalog_plq)
    for x, y, r, lo, hi in zip(xs, out["y"], out["residual"], out["lower"], out["upper"]):
        assert abs(y - float(P(F(x)))) <= r + 1e-15
        v = float(evaluate(env, F(x)))
        assert lo - 1e-12 <= v <= hi + 1e-12


def test_prox_oracle_far_from_hint():
    # minimizer well outside the radius hint: bracket must expand
    shifted = OracleConvexFunction(lambda x: (x - 50.0) ** 2, domain_radius_hint=1.0,
                                   derivative=lambda x: 2 * (x - 50.0))
    rep = prox_oracle(shifted, 0.0, 1e-9)
    assert rep.y == pytest.approx(100 / 3, abs=1e-8)


def test_prox_oracle_budget_and_validation():
    with pytest.raises(ProxBudgetExhausted) as exc:
        prox_oracle(catalog.quartic(), 2.0, 1e-300)
    assert exc.value.residual > 0 and exc.value.best is not None
    with pytest.raises(ValueError):
        prox_oracle(catalog.nonconvex_quotient(), 1.0, 1e-8)
    with pytest.raises(ValueError):
        prox_oracle(catalog.quartic(), 1.0, 0.0)
    with pytest.raises(ValueError):
        prox_oracle(catalog.quartic(), math.inf, 1e-8)


def test_prox_report_json():
    rep = prox_oracle(catalog.quartic(), 1.0, 1e-8)
    data = json.loads(json.dumps(rep.to_json()))
    assert data["x"] == 1.0 and data["residual"] <= data["tol"]


def test_midpoint_spot_check():
    g = np.random.default_rng(0)
    assert midpoint_convexity_violations(catalog.quartic(), g) == 0
    assert midpoint_convexity_violations(catalog.nonconvex_quotient(), g) > 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**9), st.fractions(-20, 20, max_denominator=50))
def test_decomposition_property(seed, x):
    f = random_plq(random.Random(seed))
    assert moreau_decomposition_residual(f, x) == 0

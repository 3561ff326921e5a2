import json
import random
from fractions import Fraction as F

import numpy as np
import pytest

from _refs import HALF_SQUARE_VS_ORIGIN_50, QUARTIC_ENVELOPE_SUP_BALL1
from conftest import random_instances
from moreau_lab import catalog
from moreau_lab.metric import (
    MetricEstimate,
    aw_distance,
    ball_sup_norm,
    ball_sup_norm_oracle,
    conjugation_isometry_residual,
    envelope_distance,
    is_envelope,
    truncation_level,
)
from moreau_lab.moreau import envelope_plq
from moreau_lab.oracle import OracleConvexFunction, from_plq
from moreau_lab.plq import PLQFunction


def test_truncation_level():
    assert truncation_level(F(1, 2)) == 3
    assert truncation_level(1e-6) == 22
    for acc in (0.3, 1e-3, 1e-8):
        N = truncation_level(acc)
        assert 2.0 ** -(N - 1) <= acc / 2 < 2.0 ** -(N - 2)
    with pytest.raises(ValueError):
        truncation_level(0)


def test_ball_sup_norm_examples():
    q, pt = catalog.half_square(), catalog.indicator_point()
    for i in (1, 2, 7):
        assert ball_sup_norm(q, q, i).sup == 0
        assert ball_sup_norm(q, pt, i).sup == F(i * i, 4)
        assert ball_sup_norm(catalog.huber(), catalog.huber().shift(F(-3, 7)), i).sup == F(3, 7)


def test_ball_sup_norm_nondecreasing():
    fs = random_instances(11, 40)
    for f, g in zip(fs[::2], fs[1::2]):
        sups = [ball_sup_norm(f, g, i).sup for i in range(1, 9)]
        assert sups == sorted(sups)


def test_ball_sup_norm_against_grid():
    fs = random_instances(12, 20)
    for f, g in zip(fs[::2], fs[1::2]):
        ef, eg = envelope_plq(f).to_float(), envelope_plq(g).to_float()
        for i in (1, 3):
            xs = np.linspace(-i, i, 20001)
            grid = float(np.max(np.abs(ef(xs) - eg(xs))))
            exact = float(ball_sup_norm(f, g, i).sup)
            assert grid <= exact + 1e-9
            assert exact - grid <= 1e-3 * max(1.0, exact)


def test_distance_half_square_vs_origin():
    d = aw_distance(catalog.half_square(), catalog.indicator_point(), 1e-6)
    assert d.lower <= HALF_SQUARE_VS_ORIGIN_50 <= d.upper
    assert d.upper - d.lower <= 1e-6
    assert d.N == 22 and all(t.exact for t in d.terms)


def test_distance_identity_and_range(catalog_plq):
    d = aw_distance(catalog_plq, catalog_plq, 1e-6)
    assert d.value == 0 and d.lower == 0
    other = catalog.get("hinge")
    e = aw_distance(catalog_plq, other, 1e-6)
    assert 0 <= e.lower <= e.value <= e.upper <= 1


def test_constant_shift_distance():
    f = catalog.truncated_quadratic()
    d = aw_distance(f, f.shift(1), F(1, 1000))
    N = d.N
    assert d.value == F(1, 2) * (1 - F(1, 2 ** N))
    assert d.lower <= F(1, 2) <= d.upper


def test_monotone_in_truncation():
    f, g = catalog.absolute_value(), catalog.indicator_halfline()
    ests = [aw_distance(f, g, acc) for acc in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert [e.N for e in ests] == sorted(e.N for e in ests)
    for a, b in zip(ests, ests[1:]):
        assert a.lower <= b.lower and b.upper <= a.upper


def test_conjugation_isometry_examples():
    q = catalog.half_square()
    assert conjugation_isometry_residual(q, q) == 0
    assert conjugation_isometry_residual(catalog.absolute_value(), q) <= 2e-6
    assert conjugation_isometry_residual(catalog.indicator_point(), catalog.zero()) == 0


def test_envelope_distance_matches_aw():
    fs = random_instances(13, 20)
    for f, g in zip(fs[::2], fs[1::2]):
        ef, eg = envelope_plq(f), envelope_plq(g)
        assert is_envelope(ef) and is_envelope(eg)
        a, b = aw_distance(f, g, 1e-6), envelope_distance(ef, eg, 1e-6)
        assert a.value == b.value
    e = envelope_plq(catalog.huber())
    assert envelope_distance(e, e).value == 0
    assert envelope_distance(e, e.shift(2)).value == aw_distance(catalog.huber(), catalog.huber().shift(2)).value


def test_envelope_distance_rejects_non_envelopes():
    assert not is_envelope(catalog.absolute_value())  # kink at 0
    assert not is_envelope(PLQFunction((), [(1, 0, 0)]))  # slope 2 > 1
    assert not is_envelope(catalog.indicator_interval())
    with pytest.raises(ValueError):
        envelope_distance(catalog.absolute_value(), envelope_plq(catalog.zero()))


def test_metric_estimate_json_round_trip():
    d = aw_distance(catalog.half_square(), catalog.indicator_point(), 1e-4)
    data = json.loads(json.dumps(d.to_json()))
    assert {"value", "lower", "upper", "N", "terms"} <= set(data)
    assert data["terms"][0] == {"i": 1, "sup": 0.25, "exact": True}
    back = MetricEstimate.from_json(data)
    assert (back.value, back.lower, back.upper, back.N) == (d.value, d.lower, d.upper, d.N)


def test_oracle_ball_sup_quartic_vs_zero():
    b = ball_sup_norm_oracle(catalog.quartic(), from_plq(catalog.zero()), 1, accuracy=1e-6)
    assert b.lower <= QUARTIC_ENVELOPE_SUP_BALL1 <= b.upper
    assert b.upper - b.lower <= 2e-6 and not b.exact


def test_oracle_sup_examples():
    quartic = catalog.quartic()
    b = ball_sup_norm_oracle(quartic, quartic, 2, accuracy=1e-6)
    assert b.sup == 0 and b.upper <= 1e-6
    shifted = OracleConvexFunction(lambda x: x ** 4 + 1.0, domain_radius_hint=10.0,
                                   derivative=lambda x: 4 * x ** 3)
    b = ball_sup_norm_oracle(quartic, shifted, 3, accuracy=1e-6)
    assert b.lower <= 1.0 <= b.upper and b.upper - b.lower <= 2e-6


def test_oracle_matches_exact_path():
    f, g = catalog.huber(), catalog.truncated_quadratic()
    exact = aw_distance(f, g, 1e-4)
    grid = aw_distance(from_plq(f), from_plq(g), 1e-4)
    assert grid.lower <= float(exact.upper) and float(exact.lower) <= grid.upper
    assert grid.upper - grid.lower <= 1e-4


def test_cauchy_probe_constant_shifts():
    f = catalog.hinge()
    prev = None
    for k in (1, 10, 100, 1000):
        d = aw_distance(f.shift(F(1, k)), f, 1e-9)
        if prev is not None:
            assert d.upper < prev
        prev = d.upper
        assert envelope_plq(f.shift(F(1, k))).shift(F(-1, k)) == envelope_plq(f)
    assert prev < 1e-3


def test_threads_env_does_not_change_results(monkeypatch):
    f, g = catalog.quartic(), from_plq(catalog.half_square())
    monkeypatch.setenv("MOREAU_LAB_THREADS", "1")
    a = aw_distance(f, g, 1e-3)
    monkeypatch.setenv("MOREAU_LAB_THREADS", "4")
    b = aw_distance(f, g, 1e-3)
    assert (a.value, a.lower, a.upper) == (b.value, b.lower, b.upper)


def test_symmetry_random():
    r = random.Random(14)
    fs = random_instances(14, 30)
    for _ in range(20):
        f, g = r.sample(fs, 2)
        assert aw_distance(f, g, 1e-6).value == aw_distance(g, f, 1e-6).value

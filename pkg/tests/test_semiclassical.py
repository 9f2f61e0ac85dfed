import logging

import numpy as np
import pytest

from fockdecay.potentials import TrapParams, turning_points
from fockdecay.semiclassical import (
    action,
    barrier_action_integral,
    bounce_period_integral,
    period,
    rates,
    transmission,
)


@pytest.fixture(scope="module")
def trap8():
    return TrapParams.from_capacity(8)


@pytest.fixture(scope="module")
def sharp_trap():
    # nearly rectangular walls: closed-form surrogates apply to ~0.5%
    return TrapParams.from_capacity(8, sigma=1e-4, sigma1=1e-4)


class TestAction:
    def test_square_barrier_closed_form(self, sharp_trap):
        e = -sharp_trap.v0 / 2
        _, x1, x2 = turning_points(e, sharp_trap)
        s = action(e, sharp_trap)
        expected = (x2 - x1) * np.sqrt(-2 * e)   # barrier top sits at ~0
        assert s == pytest.approx(expected, rel=5e-3)

    def test_vanishes_toward_barrier_top(self, trap8):
        # interval and integrand both shrink as E approaches the barrier top
        s_low = action(-trap8.v0 * 0.5, trap8)
        s_high = action(-trap8.v0 * 0.02, trap8)
        assert s_high < 0.25 * s_low

    def test_self_convergence(self, trap8):
        e = -trap8.v0 * 0.99 + np.pi**2 / 2
        coarse = action(e, trap8, nodes=100)
        fine = action(e, trap8, nodes=200)
        assert abs(fine - coarse) < 1e-6 * abs(fine)

    def test_generic_integral_square_exact(self):
        # sharp-edged barrier of height vb on [0, w]
        vb, w, e = 10.0, 0.5, 4.0
        s = barrier_action_integral(
            lambda x: np.where((np.asarray(x) >= 0) & (np.asarray(x) <= w), vb, 0.0),
            e, 0.0, w, nodes=400,
        )
        assert s == pytest.approx(w * np.sqrt(2 * (vb - e)), rel=1e-3)


class TestTransmission:
    def test_zero_action(self):
        assert transmission(0.0) == pytest.approx(0.64, abs=1e-14)

    def test_unit_action(self):
        expected = np.exp(-2) / (1 + np.exp(-2) / 4) ** 2
        assert transmission(1.0) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.12662, abs=5e-6)

    def test_thick_barrier_limit(self):
        for s in (5.0, 10.0, 20.0):
            t = transmission(s)
            assert abs(t - np.exp(-2 * s)) < np.exp(-4 * s)

    def test_monotone_decreasing(self):
        s = np.linspace(0, 6, 61)
        t = np.array([transmission(v) for v in s])
        assert np.all(np.diff(t) < 0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            transmission(-0.1)


class TestPeriod:
    def test_flat_bottom_flight_time(self, sharp_trap):
        # kinetic energy K above the floor: round trip 2 w / sqrt(2K)
        k = 30.0
        e = -sharp_trap.v0 + k
        x0, x1, _ = turning_points(e, sharp_trap)
        tau = period(e, sharp_trap)
        assert tau == pytest.approx(2 * (x1 - x0) / np.sqrt(2 * k), rel=5e-3)

    def test_harmonic_surrogate_isochronous(self):
        omega = 3.0
        v = lambda x: 0.5 * omega**2 * np.asarray(x) ** 2
        for e in (0.5, 2.0, 8.0):
            turn = np.sqrt(2 * e) / omega
            tau = bounce_period_integral(v, e, -turn, turn, nodes=200)
            assert tau == pytest.approx(2 * np.pi / omega, rel=1e-10)

    def test_below_bottom_errors(self, trap8):
        with pytest.raises(ValueError):
            period(-2 * trap8.v0, trap8)

    def test_self_convergence(self, trap8):
        e = -trap8.v0 / 3
        coarse = period(e, trap8, nodes=100)
        fine = period(e, trap8, nodes=200)
        assert abs(fine - coarse) < 1e-6 * fine


class TestRates:
    def test_single_level_total(self, trap8):
        e1 = -trap8.v0 + np.pi**2 / 2
        pred = rates([e1], trap8)
        assert pred.gamma_total == pytest.approx(2 * pred.per_level[0].gamma, rel=1e-12)

    def test_additivity(self, trap8):
        es = [-trap8.v0 + n**2 * np.pi**2 / 2 for n in (1, 2, 3)]
        p3 = rates(es, trap8)
        p2 = rates(es[:2], trap8)
        extra = p3.gamma_total - p2.gamma_total
        assert extra == pytest.approx(2 * p3.per_level[2].gamma, rel=1e-12)

    def test_gamma_increases_with_level(self, trap8):
        es = [-trap8.v0 + n**2 * np.pi**2 / 2 for n in range(1, 9)]
        pred = rates(es, trap8)
        gammas = [lv.gamma for lv in pred.per_level]
        assert np.all(np.diff(gammas) > 0)

    def test_transmission_bounds(self, trap8):
        es = [-trap8.v0 + n**2 * np.pi**2 / 2 for n in range(1, 9)]
        for lv in rates(es, trap8).per_level:
            assert 0.0 < lv.transmission <= 0.64

    def test_level_above_barrier_excluded_with_warning(self, trap8, caplog):
        es = [-trap8.v0 + np.pi**2 / 2, -1e-3]
        with caplog.at_level(logging.WARNING):
            pred = rates(es, trap8)
        assert pred.per_level[1].error is not None
        assert np.isnan(pred.per_level[1].gamma)
        assert pred.gamma_total == pytest.approx(2 * pred.per_level[0].gamma)
        assert any("excluded" in rec.message for rec in caplog.records)

    def test_low_confidence_flag(self, trap8):
        # an energy close to the barrier top has action < 1
        e_high = -trap8.v0 * 0.004
        pred = rates([e_high], trap8)
        assert pred.per_level[0].action < 1.0
        assert pred.per_level[0].low_confidence

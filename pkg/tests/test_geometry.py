import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from escrate.errors import DepthCapExceeded, NotInRepeller
from escrate.geometry import (ExprBranch, LinearBranch, MarkovIntervalMap,
                              ball_to_cylinders, cantor_map, cylinder_interval,
                              cylinder_intervals, doubling_map, encode_point,
                              expansion_report, log_derivative_potential,
                              log_deriv_potential, quadratic_toy_map)
from escrate.symbolic import SymbolicPoint


@pytest.fixture(scope="module")
def cantor():
    return cantor_map()


@pytest.fixture(scope="module")
def toy():
    return quadratic_toy_map()


def toy_left_inverse(y):
    return (3.3 - np.sqrt(3.3 ** 2 - 8 * y)) / 4


class TestMaps:
    def test_cantor_transitions(self, cantor):
        np.testing.assert_array_equal(cantor.subshift.transition, np.ones((2, 2)))
        assert cantor.exact

    def test_toy_is_full_two_shift(self, toy):
        np.testing.assert_array_equal(toy.subshift.transition, np.ones((2, 2)))
        assert not toy.exact

    def test_non_markov_rejected(self):
        with pytest.raises(ValueError):
            MarkovIntervalMap([LinearBranch(("0", "1/3"), "3", "0"),
                               LinearBranch(("1/2", "1"), "3/2", "-1/2"),
                               LinearBranch(("2/3", "3/4"), "2", "0")])

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            MarkovIntervalMap([LinearBranch(("0", "1/2"), "2", "0"),
                               LinearBranch(("1/3", "1"), "3/2", "-1/2")])

    def test_zero_slope_rejected(self):
        with pytest.raises(ValueError):
            LinearBranch(("0", "1"), "0", "0")

    def test_branch_of(self, cantor):
        assert cantor.branch_of(Fraction(1, 4)) == 0
        assert cantor.branch_of(Fraction(5, 6)) == 1
        with pytest.raises(NotInRepeller):
            cantor.branch_of(Fraction(1, 2))

    @pytest.mark.parametrize("factory", [cantor_map, doubling_map, quadratic_toy_map])
    def test_json_round_trip(self, factory):
        m = factory()
        m2 = MarkovIntervalMap.from_json(m.to_json())
        assert m2.to_json() == m.to_json()
        np.testing.assert_array_equal(m2.subshift.transition, m.subshift.transition)

    def test_expr_inverse(self, toy):
        br = toy.branches[0]
        y = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(br.inverse(y), toy_left_inverse(y), atol=1e-14)

    def test_callable_branch_needs_derivative(self):
        with pytest.raises(ValueError):
            ExprBranch((0.0, 0.5), lambda x: 2 * x)


class TestCylinders:
    @pytest.mark.parametrize("word,expected", [((0,), (0, 1 / 3)), ((0, 1), (2 / 9, 1 / 3))])
    def test_cantor(self, cantor, word, expected):
        np.testing.assert_allclose([float(v) for v in cylinder_interval(cantor, word)],
                                   expected, atol=1e-14)

    def test_doubling(self):
        a, b = cylinder_interval(doubling_map(), (1, 0, 1))
        assert (float(a), float(b)) == pytest.approx((5 / 8, 3 / 4), abs=1e-14)

    def test_toy_closed_form(self, toy):
        a, b = cylinder_interval(toy, (0, 1))
        assert float(a) == pytest.approx(toy_left_inverse(0.6), abs=1e-14)
        assert float(b) == pytest.approx(toy_left_inverse(1.0), abs=1e-14)

    def test_intervals_ordered_and_nested(self, toy):
        words, left, right = cylinder_intervals(toy, 6)
        assert np.all(np.diff(left) > 0) and np.all(right > left)
        _, l5, r5 = cylinder_intervals(toy, 5)
        parent = np.repeat(np.arange(len(l5)), 2)
        assert np.all(left >= l5[parent] - 1e-15) and np.all(right <= r5[parent] + 1e-15)

    def test_inadmissible(self, cantor):
        m = MarkovIntervalMap([LinearBranch(("0", "1/2"), "2", "0"),
                               LinearBranch(("1/2", "1"), "1", "-1/2")])
        with pytest.raises(ValueError):
            cylinder_interval(m, (1, 1))

    def test_geometric_shrinking(self, toy):
        w = tuple(int(c) for c in "0110100110010110011010011")
        lengths = [float(np.subtract(*cylinder_interval(toy, w[:n])[::-1]))
                   for n in range(1, 25)]
        slope = np.polyfit(np.arange(1, 25), np.log(lengths), 1)[0]
        assert slope < -math.log(1.5)
        assert all(b < a for a, b in zip(lengths, lengths[1:]))


class TestEncode:
    def test_cantor_quarter(self, cantor):
        z = encode_point(cantor, Fraction(1, 4), 20)
        assert z.period == (0, 1) and z.preperiod == ()

    def test_cantor_middle_gap(self, cantor):
        with pytest.raises(NotInRepeller):
            encode_point(cantor, Fraction(1, 2), 10)

    def test_doubling_third(self):
        z = encode_point(doubling_map(), Fraction(1, 3), 10)
        assert z.period == (0, 1)

    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(st.lists(st.integers(0, 1), min_size=30, max_size=30))
    def test_float_point_recovers_itinerary(self, word):
        toy = quadratic_toy_map()
        a, b = cylinder_interval(toy, tuple(word))
        z = encode_point(toy, 0.5 * (float(a) + float(b)), 24)
        assert z.digits(24) == tuple(word[:24])

    @settings(max_examples=60, deadline=None, derandomize=True)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=12),
           st.lists(st.integers(0, 1), min_size=1, max_size=4))
    def test_round_trip(self, pre, per):
        m = cantor_map()
        z = SymbolicPoint(tuple(pre), tuple(per))
        # exact point of the repeller with that itinerary
        n = len(pre) + len(per)
        x = _point_of(m, z)
        w = encode_point(m, x, 64)
        assert w.digits(n + 20) == z.digits(n + 20)


def _point_of(m, z):
    """Exact point with a given eventually periodic itinerary (Cantor map)."""
    def digit(k):
        return Fraction(2 * k, 3)
    pre, per = z.preperiod, z.period
    p = len(per)
    tail = sum(digit(d) * Fraction(1, 3 ** i) for i, d in enumerate(per)) * Fraction(3 ** p, 3 ** p - 1)
    x = tail
    for d in reversed(pre):
        x = digit(d) + x / 3
    return x / 1


class TestBall:
    def test_sandwich(self, cantor):
        z, eps = Fraction(1, 4), 0.05
        b = ball_to_cylinders(cantor, z, eps, 0.5)
        assert b.mu_inner <= b.mu_outer and 0 <= b.eta <= 0.5 + 1e-12
        for w in b.inner:
            a, c = (float(v) for v in cylinder_interval(cantor, w))
            assert a >= 0.25 - eps and c <= 0.25 + eps
        words, left, _ = cylinder_intervals(cantor, 12)
        pts = left[np.abs(left - 0.25) < eps]
        covered = [cylinder_interval(cantor, w) for w in b.outer]
        for x in pts:
            assert any(float(a) <= x <= float(c) for a, c in covered)
        assert set(b.inner) <= set(b.outer)

    def test_smaller_eta_goes_deeper(self, cantor):
        d1 = ball_to_cylinders(cantor, Fraction(1, 4), 0.05, 0.5).depth
        d2 = ball_to_cylinders(cantor, Fraction(1, 4), 0.05, 0.05).depth
        assert d2 > d1

    def test_eta_zero(self, cantor):
        with pytest.raises(DepthCapExceeded):
            ball_to_cylinders(cantor, Fraction(1, 4), 0.05, 0.0)

    def test_center_outside(self, cantor):
        with pytest.raises(NotInRepeller):
            ball_to_cylinders(cantor, Fraction(1, 2), 0.05, 0.5)

    def test_json(self, cantor):
        d = ball_to_cylinders(cantor, Fraction(1, 4), 0.05, 0.5).to_json(cantor.subshift)
        assert all(isinstance(w, str) for w in d["outer"])


class TestLogDerivative:
    def test_cantor_constant(self, cantor):
        phi = log_derivative_potential(cantor, 3)
        np.testing.assert_allclose(phi.table, math.log(3), atol=1e-15)
        assert phi.oscillation == 0.0

    def test_scaled(self, cantor):
        phi = log_deriv_potential(cantor, 0.5)
        np.testing.assert_allclose(phi.table, -0.5 * math.log(3), atol=1e-15)

    def test_toy_values_and_oscillation(self, toy):
        phi = log_derivative_potential(toy, 1)
        assert phi.table[0] == pytest.approx(math.log(3.3))
        assert phi.table[1] == pytest.approx(math.log(2.5))
        o4 = log_derivative_potential(toy, 4).oscillation
        o8 = log_derivative_potential(toy, 8).oscillation
        assert 0 < o8 < o4

    def test_expansion(self, cantor, toy):
        assert expansion_report(cantor)["n0"] == 1
        rep = expansion_report(toy)
        assert rep["n0"] == 1 and rep["min_derivative"] == pytest.approx(1.7)

    def test_not_expanding(self):
        m = MarkovIntervalMap([LinearBranch(("0", "1"), "1", "0")])
        assert expansion_report(m)["n0"] is None

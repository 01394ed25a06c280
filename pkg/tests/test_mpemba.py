import math

import numpy as np
import pytest

from metropolis_mpemba.markov import AdjacencyGraph, boltzmann, build_metropolis
from metropolis_mpemba.mpemba import (
    A2Curve,
    GapCheck,
    GridSpec,
    a2_complete_closed_form,
    a2_inner,
    a2_scan,
    analyze,
    classify,
    detect_strong,
    detect_weak,
    gap_check,
    log_shifted_partition,
    orient_mode,
    tangential_zeros,
)
from metropolis_mpemba.numeric import numeric_spectrum
from metropolis_mpemba.spectral import closed_form_spectrum

from conftest import random_instances

BLOCKED = AdjacencyGraph.from_blocked_edges(3, [(2, 3)])


def blocked_a2_formula(beta, bb=0.5, e2=0.5, e3=2.0):
    z = 1 + np.exp(-beta * e2) + np.exp(-beta * e3)
    return (np.exp(-(beta - bb) * e3) - np.exp(-(beta - bb) * e2)) / z


def synthetic(values, grid, beta_b):
    return A2Curve(np.array(grid, float), np.array(values, float), beta_b, {"c": 1.0})


class TestGrid:
    def test_default_contains_bath(self):
        g = GridSpec.default(0.5).build(0.5)
        assert g[0] == 0.01 and g[-1] == 25.0
        assert 0.5 in g and g.size == 401
        assert np.all(np.diff(g) > 0)

    @pytest.mark.parametrize("lo, hi, pts", [(2, 1, 10), (1, 1, 10), (0, 1, 10), (1, 2, 1)])
    def test_invalid(self, lo, hi, pts):
        with pytest.raises(ValueError):
            GridSpec(lo, hi, pts)

    def test_linear_from_zero(self):
        g = GridSpec(0.0, 1.0, 11, "linear").build(0.25)
        assert g[0] == 0.0 and 0.25 in g

    def test_exterior_bath(self):
        curve = a2_scan([0.0, 1.0], 0.5, grid=GridSpec(1.0, 2.0, 20))
        assert curve.bath_exterior
        assert curve.value_at_bath() is None


class TestA2Inner:
    def test_zero_at_bath(self):
        for e, bb in random_instances(100, seed=31):
            v2 = closed_form_spectrum(e, bb).vector(2)
            assert abs(a2_inner(e, bb, bb, v2)) <= 1e-12

    def test_blocked_formula(self, fig1):
        e, bb = fig1
        betas = np.linspace(0, 10, 101)
        np.testing.assert_allclose(
            a2_inner(e, bb, betas, np.array([0.0, -1.0, 1.0])), blocked_a2_formula(betas), atol=1e-15
        )

    def test_scalar_input(self, fig1):
        e, bb = fig1
        assert isinstance(a2_inner(e, bb, 1.0, np.array([0.0, -1.0, 1.0])), float)

    def test_matches_complete_closed_form_up_to_constant(self):
        for e, bb in random_instances(200, seed=37):
            betas = GridSpec.default(bb).build(bb)
            v2 = closed_form_spectrum(e, bb).vector(2)
            inner = a2_inner(e, bb, betas, v2)
            closed = a2_complete_closed_form(e, bb, betas)
            k = np.argmax(np.abs(closed))
            c = inner[k] / closed[k]
            assert np.max(np.abs(inner - c * closed)) <= 1e-9
            zb = np.sum(np.exp(-bb * e))
            assert c == pytest.approx(1 / zb, rel=1e-9)


class TestClosedForm:
    def test_zero_at_bath(self):
        assert a2_complete_closed_form([0.0, 1.0, 3.0], 0.7, 0.7) == 0.0

    def test_low_temperature_limit(self):
        # exp(beta E_min) Z(beta) -> 1, so a2 -> 1 - (1 + e^{-1}) = -e^{-1}.
        assert a2_complete_closed_form([0.0, 1.0], 1.0, 50.0) == pytest.approx(-math.exp(-1), abs=1e-15)

    def test_shifted_partition(self):
        e = np.array([2.0, 0.5, 0.5, 3.0])
        beta = 1.3
        direct = math.log(math.exp(beta * 0.5) * np.sum(np.exp(-beta * e)))
        assert log_shifted_partition(e, beta) == pytest.approx(direct, rel=1e-14)


class TestGap:
    def test_degenerate_not_ok(self):
        g = gap_check(closed_form_spectrum([1.0] * 4, 1.0))
        assert not g.ok and g.lambda2 == g.lambda3 == -4

    def test_fig1_complete_ok(self, fig1):
        e, bb = fig1
        dec = closed_form_spectrum(e, bb)
        g = gap_check(dec)
        assert g.ok
        assert g.lambda2 == dec.value(2) and g.lambda3 == dec.value(3)
        assert g.ratio == pytest.approx(abs(dec.value(2) / dec.value(3)))

    def test_two_level_vacuous(self):
        g = gap_check(closed_form_spectrum([0.0, 1.0], 1.0))
        assert g.ok and g.lambda3 == -math.inf


class TestOrientation:
    def test_blocked_mode(self, fig1):
        e, bb = fig1
        dec = numeric_spectrum(build_metropolis(e, bb, BLOCKED), boltzmann(e, bb))
        np.testing.assert_allclose(orient_mode(-dec.vector(2), e), [0, -1, 1], atol=1e-14)
        np.testing.assert_allclose(orient_mode(dec.vector(2), e), [0, -1, 1], atol=1e-14)

    def test_agrees_with_closed_form_orientation(self):
        for e, bb in random_instances(100, seed=41):
            v = closed_form_spectrum(e, bb).vector(2)
            np.testing.assert_allclose(orient_mode(v, e), v / np.max(np.abs(v)), atol=1e-15)


class TestScan:
    def test_complete_single_sign_change(self):
        for e, bb in random_instances(50, seed=43):
            curve = a2_scan(e, bb)
            v = curve.values
            g = curve.beta_grid
            assert curve.source == "closed-form"
            assert np.all(v[g < bb] > 0) and np.all(v[g > bb] <= 0)
            assert curve.value_at_bath() == 0.0

    def test_complete_scan_equals_inner_product(self):
        for e, bb in random_instances(50, seed=47):
            curve = a2_scan(e, bb)
            v2 = curve.decomposition.vector(2)
            inner = a2_inner(e, bb, curve.beta_grid, v2)
            scale = np.max(np.abs(curve.values))
            assert np.max(np.abs(inner - curve.values)) <= 1e-12 * scale

    def test_blocked_curve(self, fig1):
        e, bb = fig1
        curve = a2_scan(e, bb, BLOCKED)
        assert curve.source == "numeric"
        np.testing.assert_allclose(curve.values, blocked_a2_formula(curve.beta_grid), atol=1e-14)
        assert abs(curve.value_at_bath()) <= 1e-10
        cold = curve.beta_grid > bb
        k = np.argmin(curve.values)
        assert cold[k] and 0 < k < curve.values.size - 1
        assert abs(curve.values[-1]) < 1e-4

    def test_two_level_monotone(self):
        curve = a2_scan([0.0, 1.0], 1.0)
        d = np.diff(curve.values)
        assert np.all(d <= 0)
        # Strict until exp(-beta) drops below double resolution near beta = 37.
        assert np.all(d[curve.beta_grid[1:] < 30] < 0)
        assert curve.value_at_bath() == 0.0


class TestDetectStrong:
    def test_complete_none(self):
        for e, bb in random_instances(50, seed=53):
            assert detect_strong(a2_scan(e, bb)) == []

    def test_synthetic_two_roots(self):
        curve = synthetic([1, 0.5, -0.2, 0.3], [1, 2, 3, 4], 10.0)
        roots = detect_strong(curve)
        assert len(roots) == 2
        assert 2 < roots[0] < 3 and 3 < roots[1] < 4
        assert roots[0] == pytest.approx(2 + 0.5 / 0.7, rel=1e-9)
        assert roots[1] == pytest.approx(3 + 0.2 / 0.5, rel=1e-9)

    def test_bath_bracket_excluded(self):
        curve = synthetic([1, 0.5, -0.2, -0.3], [1, 2, 3, 4], 2.5)
        assert detect_strong(curve) == []

    def test_bisection_with_evaluator(self):
        f = lambda b: np.cos(np.asarray(b))
        g = np.linspace(0.1, 3.0, 30)
        curve = A2Curve(g, f(g), 10.0, {"c": 1.0}, evaluate=f)
        (root,) = detect_strong(curve)
        assert root == pytest.approx(math.pi / 2, rel=1e-10)

    def test_blocked_cold_side_none(self, fig1):
        e, bb = fig1
        assert detect_strong(a2_scan(e, bb, BLOCKED)) == []

    def test_tangential(self):
        g = np.linspace(1, 9, 9)
        v = np.array([1.0, 0.5, 0.1, 1e-12, 0.1, 0.5, 1.0, 2.0, 3.0])
        curve = synthetic(v, g, 20.0)
        assert detect_strong(curve) == []
        assert tangential_zeros(curve) == [4.0]


class TestDetectWeak:
    def test_complete_none(self):
        for e, bb in random_instances(50, seed=59):
            assert detect_weak(a2_scan(e, bb)) == []

    def test_linear_none(self):
        g = np.linspace(0.1, 5, 50)
        assert detect_weak(synthetic(1 - g, g, 1.0)) == []

    def test_blocked_extremum(self, fig1):
        e, bb = fig1
        (interval,) = detect_weak(a2_scan(e, bb, BLOCKED))
        lo, hi = interval
        assert bb < lo < 1.683685 < hi

    def test_noise_suppressed(self):
        g = np.linspace(2, 3, 20)
        v = -1e-13 * (-1.0) ** np.arange(20)
        assert detect_weak(synthetic(v, g, 1.0)) == []


class TestClassify:
    gap = GapCheck(-1.0, -2.0, 0.5, True)

    def test_none(self):
        r = classify([], [], self.gap, 1.0)
        assert r.classification == "none" and r.warnings == ()

    def test_strong_direct(self):
        r = classify([0.3], [], self.gap, 1.0)
        assert r.classification == "strong" and r.strong_sides == ("direct",)

    def test_strong_and_weak(self):
        r = classify([2.0], [(0.2, 0.4)], self.gap, 1.0)
        assert r.classification == "strong-and-weak"
        assert r.strong_sides == ("inverse",) and r.weak_sides == ("direct",)

    def test_blocked_weak_inverse(self, fig1):
        e, bb = fig1
        r = analyze(a2_scan(e, bb, BLOCKED))
        assert r.classification == "weak"
        assert r.weak_sides == ("inverse",)
        assert r.strong_roots == ()

    def test_fully_degenerate(self):
        curve = a2_scan([0.4] * 4, 1.2)
        assert np.max(np.abs(curve.values)) <= 1e-12
        r = analyze(curve)
        assert r.classification == "none"
        assert not r.gap.ok and r.warnings

import math

import numpy as np
import pytest

from oscpop import (
    Constant,
    ExponentOverflowError,
    LogisticParams,
    PoleError,
    SinusoidOffset,
    SolverConfig,
    TwoPhase,
    integrate_logistic,
    integrating_factor,
    logistic_constant,
    quadrature_solution,
    reciprocal_solution,
    two_phase_step,
    two_phase_trajectory,
    two_phase_value,
)

TIGHT = SolverConfig(abs_tol=1e-13, rel_tol=1e-11)


class TestLogisticParams:
    def test_accepts_zero_initial_population(self):
        p = LogisticParams(1.0, 0.0)
        assert p.p0 == 0.0 and p.t0 == 0.0

    @pytest.mark.parametrize(
        "r,p0,t0",
        [(0.0, 1.0, 0.0), (-1.0, 1.0, 0.0), (1.0, -0.1, 0.0), (1.0, 1.0, math.inf)],
    )
    def test_rejects_bad_parameters(self, r, p0, t0):
        with pytest.raises(ValueError):
            LogisticParams(r, p0, t0)


class TestLogisticConstant:
    def test_known_value(self):
        # r=1, m=1, p0=1/2 at t=ln 3: algebra gives exactly 3/4
        p = logistic_constant(LogisticParams(1.0, 0.5, 0.0), 1.0, math.log(3.0))
        assert p == pytest.approx(0.75, abs=1e-14)

    def test_initial_condition_recovered(self):
        params = LogisticParams(0.8, 1.3, 2.0)
        assert logistic_constant(params, 2.0, 2.0) == pytest.approx(1.3, abs=0.0)

    def test_fixed_points_stay_fixed(self):
        for m in (0.5, 1.0, 7.3):
            params = LogisticParams(1.2, m, 0.0)
            for t in (0.1, 1.0, 50.0):
                assert logistic_constant(params, m, t) == pytest.approx(m, rel=1e-15)
        zero = LogisticParams(1.2, 0.0, 0.0)
        assert logistic_constant(zero, 3.0, 10.0) == 0.0

    def test_monotone_approach_to_capacity(self):
        # float saturation reaches the capacity exactly in the far tail,
        # so monotonicity is weak and the bound inclusive
        below = LogisticParams(1.0, 0.2, 0.0)
        above = LogisticParams(1.0, 5.0, 0.0)
        ts = np.linspace(0.1, 10.0, 40)
        from_below = [logistic_constant(below, 2.0, float(t)) for t in ts]
        from_above = [logistic_constant(above, 2.0, float(t)) for t in ts]
        assert all(a <= b for a, b in zip(from_below, from_below[1:]))
        assert all(p <= 2.0 for p in from_below)
        assert all(a >= b for a, b in zip(from_above, from_above[1:]))
        assert all(p >= 2.0 for p in from_above)
        assert from_below[-1] == pytest.approx(2.0, rel=1e-7)
        assert from_above[-1] == pytest.approx(2.0, rel=1e-7)

    def test_matches_textbook_form_in_safe_range(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            r = float(rng.uniform(0.2, 2.0))
            m = float(rng.uniform(0.2, 4.0))
            p0 = float(rng.uniform(0.05, 5.0))
            t = float(rng.uniform(0.0, 3.0))
            naive = m * p0 / (p0 + (m - p0) * math.exp(-r * m * t))
            stable = logistic_constant(LogisticParams(r, p0, 0.0), m, t)
            assert stable == pytest.approx(naive, rel=1e-12)

    def test_extreme_exponent_no_overflow(self):
        # growth exponent r*m*t = 800 would overflow exp(+x) forms
        p = logistic_constant(LogisticParams(1.0, 0.5, 0.0), 2.0, 400.0)
        assert p == pytest.approx(2.0, rel=1e-15)
        p = logistic_constant(LogisticParams(1.0, 5.0, 0.0), 2.0, 400.0)
        assert p == pytest.approx(2.0, rel=1e-15)

    def test_zero_capacity_limit(self):
        # m = 0 collapses to algebraic decay p0 / (1 + r p0 (t - t0))
        params = LogisticParams(2.0, 3.0, 0.0)
        assert logistic_constant(params, 0.0, 0.5) == pytest.approx(0.75, abs=1e-15)
        assert logistic_constant(params, 0.0, 0.0) == 3.0

    def test_negative_capacity_decay(self):
        p = logistic_constant(LogisticParams(1.0, 0.5, 0.0), -1.0, 5.0)
        assert 0.0 < p < 0.01

    def test_pole_detected(self):
        # m=-1, p0=2, r=1: denominator vanishes at t = -ln(3/2)
        params = LogisticParams(1.0, 2.0, 0.0)
        with pytest.raises(PoleError):
            logistic_constant(params, -1.0, -math.log(1.5))

    def test_pole_sides_blow_up_with_opposite_signs(self):
        params = LogisticParams(1.0, 2.0, 0.0)
        t_pole = -math.log(1.5)
        after = logistic_constant(params, -1.0, t_pole + 1e-4)
        before = logistic_constant(params, -1.0, t_pole - 1e-4)
        assert after > 1e3 and before < -1e3

    def test_zero_capacity_pole_backward(self):
        # p0=2, r=1, m=0: 1 + r p0 (t-t0) vanishes at t = -1/2
        params = LogisticParams(1.0, 2.0, 0.0)
        with pytest.raises(PoleError):
            logistic_constant(params, 0.0, -0.5)


class TestTwoPhaseClosedForm:
    def test_one_cycle_frozen_values(self):
        # r=1, p0=1/2, phases of length ln 3 at m1=1 then m2=2:
        # mid-cycle 3/4, end of cycle 27/16, both exact fractions
        cap = TwoPhase(1.0, 2.0, 2.0 * math.log(3.0))
        p_half, p_full = two_phase_step(LogisticParams(1.0, 0.5, 0.0), cap)
        assert p_half == pytest.approx(0.75, abs=1e-14)
        assert p_full == pytest.approx(1.6875, abs=1e-14)

    def test_trajectory_matches_single_point_eval(self):
        cap = TwoPhase(1.0, 3.0, 2.0)
        params = LogisticParams(1.2, 0.8, 0.0)
        traj = two_phase_trajectory(params, cap, 6.0, 0.25)
        for t, p in zip(traj.times, traj.populations):
            assert p == pytest.approx(two_phase_value(params, cap, float(t)), rel=1e-13)

    def test_trajectory_continuous_across_switches(self):
        cap = TwoPhase(0.5, 2.5, 1.0)
        params = LogisticParams(2.0, 1.1, 0.0)
        eps = 1e-9
        for t_switch in (0.5, 1.0, 1.5, 2.0):
            left = two_phase_value(params, cap, t_switch - eps)
            right = two_phase_value(params, cap, t_switch + eps)
            assert left == pytest.approx(right, rel=1e-6)

    def test_trajectory_agrees_with_integrator(self):
        cap = TwoPhase(1.0, 3.0, 2.0)
        params = LogisticParams(1.2, 0.8, 0.0)
        exact = two_phase_value(params, cap, 6.0)
        numeric = integrate_logistic(params, cap, 6.0, TIGHT).final
        assert numeric == pytest.approx(exact, rel=1e-9)

    def test_initial_time_inside_a_phase(self):
        # t0 in mid-phase: chaining must anchor on the schedule, not on t0
        cap = TwoPhase(1.0, 3.0, 2.0)
        params = LogisticParams(1.0, 0.9, 0.3)
        exact = two_phase_value(params, cap, 4.7)
        numeric = integrate_logistic(params, cap, 4.7, TIGHT).final
        assert numeric == pytest.approx(exact, rel=1e-9)

    def test_trajectory_sampling_grid(self):
        cap = TwoPhase(1.0, 2.0, 1.0)
        traj = two_phase_trajectory(LogisticParams(1.0, 0.5, 0.0), cap, 2.0, 0.4)
        assert np.allclose(traj.times, [0.0, 0.4, 0.8, 1.2, 1.6, 2.0])

    def test_rejects_bad_sampling(self):
        cap = TwoPhase(1.0, 2.0, 1.0)
        with pytest.raises(ValueError):
            two_phase_trajectory(LogisticParams(1.0, 0.5, 0.0), cap, 2.0, 0.0)
        with pytest.raises(ValueError):
            two_phase_trajectory(LogisticParams(1.0, 0.5, 1.0), cap, 0.5, 0.1)


class TestIntegratingFactor:
    def test_constant_capacity(self):
        cap = Constant(2.0)
        assert integrating_factor(1.5, cap, 0.0, 3.0) == pytest.approx(
            math.exp(9.0), rel=1e-14
        )

    def test_sinusoid_closed_form(self):
        # M = sin t: weight is exp(r (1 - cos t))
        cap = SinusoidOffset(0.0, 1.0, 2.0 * math.pi)
        r = 0.7
        for t in (0.3, 1.0, math.pi, 5.0):
            expected = math.exp(r * (1.0 - math.cos(t)))
            assert integrating_factor(r, cap, 0.0, t) == pytest.approx(expected, rel=1e-12)

    def test_backward_reference_is_reciprocal(self):
        cap = SinusoidOffset(1.0, 0.4, 2.0)
        fwd = integrating_factor(1.0, cap, 0.0, 1.3)
        bwd = integrating_factor(1.0, cap, 1.3, 0.0)
        assert fwd * bwd == pytest.approx(1.0, rel=1e-13)

    def test_overflow_guard(self):
        with pytest.raises(ExponentOverflowError):
            integrating_factor(1.0, Constant(100.0), 0.0, 10.0)
        # custom bound
        with pytest.raises(ExponentOverflowError):
            integrating_factor(1.0, Constant(2.0), 0.0, 3.0, max_exponent=5.0)


class TestQuadratureSolution:
    def test_constant_capacity_reduces_to_closed_form(self):
        params = LogisticParams(1.0, 0.5, 0.0)
        cap = Constant(1.0)
        for t in np.linspace(0.0, 6.0, 25):
            exact = logistic_constant(params, 1.0, float(t))
            quad = quadrature_solution(params, cap, float(t), TIGHT)
            assert quad == pytest.approx(exact, rel=1e-9)

    def test_two_phase_matches_chained_closed_form(self):
        # independent route: one quadrature vs a chain of exact pieces
        cap = TwoPhase(1.0, 3.0, 2.0)
        params = LogisticParams(0.9, 0.6, 0.0)
        for t in (0.7, 1.0, 1.9, 2.5, 4.0):
            exact = two_phase_value(params, cap, t)
            quad = quadrature_solution(params, cap, t, TIGHT)
            assert quad == pytest.approx(exact, rel=1e-8)

    def test_sinusoid_matches_integrator(self):
        cap = SinusoidOffset(2.0, 0.5, 3.0)
        params = LogisticParams(1.0, 1.0, 0.0)
        numeric = integrate_logistic(params, cap, 4.0, TIGHT).final
        quad = quadrature_solution(params, cap, 4.0, TIGHT)
        assert quad == pytest.approx(numeric, rel=1e-8)

    def test_zero_initial_population_stays_zero(self):
        params = LogisticParams(1.0, 0.0, 0.0)
        assert quadrature_solution(params, Constant(2.0), 3.0) == 0.0

    def test_initial_time_recovers_p0(self):
        params = LogisticParams(1.0, 0.7, 1.5)
        assert quadrature_solution(params, Constant(2.0), 1.5) == pytest.approx(0.7)

    def test_rejects_backward_time(self):
        params = LogisticParams(1.0, 0.7, 0.0)
        with pytest.raises(ValueError):
            quadrature_solution(params, Constant(1.0), -0.5)


class TestReciprocalSolution:
    def test_known_value(self):
        # reciprocal of the frozen 3/4 value is exactly 4/3
        params = LogisticParams(1.0, 0.5, 0.0)
        z = reciprocal_solution(params, Constant(1.0), math.log(3.0), TIGHT)
        assert z == pytest.approx(4.0 / 3.0, rel=1e-9)

    def test_product_with_population_is_one(self):
        cap = SinusoidOffset(1.5, 0.5, 2.0)
        params = LogisticParams(0.8, 0.4, 0.0)
        for t in (0.5, 1.0, 2.7):
            p = quadrature_solution(params, cap, t, TIGHT)
            z = reciprocal_solution(params, cap, t, TIGHT)
            assert p * z == pytest.approx(1.0, rel=1e-12)

    def test_zero_population_has_infinite_reciprocal(self):
        params = LogisticParams(1.0, 0.0, 0.0)
        assert reciprocal_solution(params, Constant(1.0), 2.0) == math.inf

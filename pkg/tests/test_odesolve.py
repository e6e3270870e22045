import math

import numpy as np
import pytest
from scipy.special import i0

from oscpop import (
    Constant,
    ConvergenceError,
    DivergenceError,
    LogisticParams,
    SinusoidOffset,
    SolverConfig,
    StiffnessError,
    Tabulated,
    Trajectory,
    TwoPhase,
    adaptive_quadrature,
    integrate_logistic,
    integrate_riccati,
    logistic_constant,
    two_phase_value,
)
from oscpop.odesolve import SolverStats

TIGHT = SolverConfig(abs_tol=1e-13, rel_tol=1e-11)


def _stats():
    return SolverStats(solver="test")


class TestTrajectory:
    def test_length_and_final(self):
        tr = Trajectory(np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 3.0]), _stats())
        assert len(tr) == 3
        assert tr.final == 3.0

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 1.0]), np.array([1.0]), _stats())

    def test_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 0.0]), np.array([1.0, 1.0]), _stats())

    def test_rejects_nonfinite_population(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 1.0]), np.array([1.0, math.nan]), _stats())


class TestIntegrateLogistic:
    def test_equilibrium_is_exactly_flat(self):
        traj = integrate_logistic(LogisticParams(1.0, 1.5, 0.0), Constant(1.5), 10.0)
        assert float(np.max(np.abs(traj.populations - 1.5))) == 0.0

    def test_zero_span_returns_initial_sample(self):
        traj = integrate_logistic(LogisticParams(1.0, 0.5, 2.0), Constant(1.0), 2.0)
        assert len(traj) == 1
        assert traj.times[0] == 2.0 and traj.final == 0.5

    def test_rejects_backward_integration(self):
        with pytest.raises(ValueError):
            integrate_logistic(LogisticParams(1.0, 0.5, 0.0), Constant(1.0), -1.0)

    def test_constant_capacity_random_sweep(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            r = float(rng.uniform(0.2, 2.0))
            m = float(rng.uniform(0.3, 3.0))
            p0 = float(rng.uniform(0.05, 4.0))
            t_end = float(rng.uniform(0.5, 6.0))
            params = LogisticParams(r, p0, 0.0)
            got = integrate_logistic(params, Constant(m), t_end, TIGHT).final
            want = logistic_constant(params, m, t_end)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-11)

    def test_tolerance_controls_error(self):
        params = LogisticParams(1.0, 0.2, 0.0)
        exact = logistic_constant(params, 2.0, 5.0)
        loose = integrate_logistic(
            params, Constant(2.0), 5.0, SolverConfig(abs_tol=1e-6, rel_tol=1e-4)
        ).final
        tight = integrate_logistic(params, Constant(2.0), 5.0, TIGHT).final
        assert abs(tight - exact) < abs(loose - exact)
        assert abs(tight - exact) <= 1e-10

    def test_breakpoints_are_step_boundaries(self):
        cap = TwoPhase(1.0, 3.0, 2.0)
        traj = integrate_logistic(LogisticParams(1.0, 0.5, 0.0), cap, 4.0)
        for b in (1.0, 2.0, 3.0):
            assert b in traj.times

    def test_two_phase_endpoint_matches_exact_chain(self):
        cap = TwoPhase(0.8, 2.2, 1.5)
        params = LogisticParams(1.3, 0.4, 0.0)
        got = integrate_logistic(params, cap, 5.0, TIGHT).final
        assert got == pytest.approx(two_phase_value(params, cap, 5.0), rel=1e-9)

    def test_dense_output_accuracy(self):
        params = LogisticParams(1.0, 0.3, 0.0)
        cfg = SolverConfig(abs_tol=1e-12, rel_tol=1e-10, max_step=0.01)
        grid = np.linspace(0.0, 4.0, 57)
        traj = integrate_logistic(params, Constant(2.0), 4.0, cfg, t_eval=grid)
        for t, p in zip(grid, traj.populations):
            assert p == pytest.approx(logistic_constant(params, 2.0, float(t)), rel=1e-9)

    def test_dense_output_hits_requested_grid(self):
        grid = np.array([0.0, 0.7, 1.0, 2.0, 3.3])
        traj = integrate_logistic(
            LogisticParams(1.0, 0.5, 0.0), TwoPhase(1.0, 2.0, 2.0), 3.3, t_eval=grid
        )
        assert np.array_equal(traj.times, grid)
        assert traj.populations[0] == 0.5

    @pytest.mark.parametrize(
        "grid",
        [np.array([-0.5, 1.0]), np.array([0.0, 2.0, 1.0]), np.array([0.0, 5.0])],
    )
    def test_rejects_bad_eval_grid(self, grid):
        with pytest.raises(ValueError):
            integrate_logistic(LogisticParams(1.0, 0.5, 0.0), Constant(1.0), 4.0, t_eval=grid)

    def test_stats_populated(self):
        traj = integrate_logistic(LogisticParams(1.0, 0.5, 0.0), Constant(1.0), 4.0)
        meta = traj.meta
        assert meta.solver == "logistic-rk45"
        assert meta.n_accepted == len(traj) - 1
        assert meta.n_rhs_evals >= 6 * meta.n_accepted
        assert 0.0 < meta.smallest_step <= meta.largest_step

    def test_stiffness_error(self):
        cap = SinusoidOffset(1.0, 0.5, 0.05)
        cfg = SolverConfig(abs_tol=1e-14, rel_tol=1e-12, min_step=0.02, max_step=0.04)
        with pytest.raises(StiffnessError):
            integrate_logistic(LogisticParams(1.0, 0.5, 0.0), cap, 1.0, cfg)

    def test_step_budget_error(self):
        cfg = SolverConfig(max_iterations=3)
        with pytest.raises(ConvergenceError):
            integrate_logistic(LogisticParams(1.0, 0.5, 0.0), SinusoidOffset(2.0, 1.0, 0.5), 50.0, cfg)


class TestIntegrateRiccati:
    def test_matches_logistic_route_constant(self):
        params = LogisticParams(1.0, 0.4, 0.0)
        a = integrate_riccati(params, Constant(2.0), 5.0, TIGHT).final
        assert a == pytest.approx(logistic_constant(params, 2.0, 5.0), rel=1e-9)

    def test_matches_logistic_route_two_phase(self):
        cap = TwoPhase(1.0, 3.0, 2.0)
        params = LogisticParams(1.2, 0.8, 0.0)
        grid = np.linspace(0.0, 6.0, 25)
        cfg = SolverConfig(abs_tol=1e-12, rel_tol=1e-10, max_step=0.01)
        a = integrate_logistic(params, cap, 6.0, cfg, t_eval=grid).populations
        b = integrate_riccati(params, cap, 6.0, cfg, t_eval=grid).populations
        assert float(np.max(np.abs(a - b))) <= 1e-8

    def test_matches_logistic_route_sinusoid(self):
        # nonzero dM/dt exercises the shift term in the transformed equation
        cap = SinusoidOffset(2.0, 0.7, 3.0)
        params = LogisticParams(0.9, 1.1, 0.0)
        a = integrate_logistic(params, cap, 7.0, TIGHT).final
        b = integrate_riccati(params, cap, 7.0, TIGHT).final
        assert b == pytest.approx(a, rel=1e-8)

    def test_matches_logistic_route_tabulated(self):
        cap = Tabulated.from_pairs([(0.0, 1.0), (1.0, 2.5), (2.0, 0.8), (3.0, 1.9)])
        params = LogisticParams(1.0, 0.6, 0.0)
        a = integrate_logistic(params, cap, 3.0, TIGHT).final
        b = integrate_riccati(params, cap, 3.0, TIGHT).final
        assert b == pytest.approx(a, rel=1e-8)

    def test_population_continuous_at_jump(self):
        # the shifted variable jumps with the capacity; population must not
        cap = TwoPhase(1.0, 3.0, 2.0)
        params = LogisticParams(1.0, 0.5, 0.0)
        grid = np.array([1.0 - 1e-7, 1.0, 1.0 + 1e-7])
        traj = integrate_riccati(params, cap, 2.0, TIGHT, t_eval=grid)
        spread = float(np.max(traj.populations) - np.min(traj.populations))
        assert spread <= 1e-5

    def test_divergence_error(self):
        with pytest.raises(DivergenceError):
            integrate_riccati(LogisticParams(1.0, 1.0, 0.0), Constant(1e160), 1.0)

    def test_zero_span(self):
        traj = integrate_riccati(LogisticParams(1.0, 0.7, 1.0), Constant(2.0), 1.0)
        assert len(traj) == 1 and traj.final == 0.7


class TestAdaptiveQuadrature:
    def test_cubic_is_exact(self):
        got = adaptive_quadrature(lambda x: x**3, 0.0, 1.0)
        assert got == pytest.approx(0.25, abs=1e-14)

    def test_bessel_reference_value(self):
        # independent special-function route for the same integral
        got = adaptive_quadrature(lambda s: math.exp(-math.cos(s)), 0.0, math.pi, (), TIGHT)
        assert got == pytest.approx(math.pi * float(i0(1.0)), rel=1e-11)

    def test_kink_with_mandatory_point(self):
        f = lambda x: abs(x - 0.3)
        got = adaptive_quadrature(f, 0.0, 1.0, (0.3,), TIGHT)
        assert got == pytest.approx(0.5 * 0.3**2 + 0.5 * 0.7**2, rel=1e-12)

    def test_jump_integrand_with_breakpoints(self):
        cap = TwoPhase(1.0, 3.0, 2.0)
        pts = cap.breakpoints_between(0.0, 5.0)
        got = adaptive_quadrature(lambda t: cap.at(t), 0.0, 5.0, pts, TIGHT)
        assert got == pytest.approx(cap.integral(0.0, 5.0), rel=1e-12)

    def test_mandatory_points_outside_range_ignored(self):
        got = adaptive_quadrature(lambda x: x, 0.0, 1.0, (-1.0, 5.0))
        assert got == pytest.approx(0.5, abs=1e-13)

    def test_empty_interval(self):
        assert adaptive_quadrature(math.sin, 2.0, 2.0) == 0.0

    def test_rejects_reversed_bounds(self):
        with pytest.raises(ValueError):
            adaptive_quadrature(math.sin, 1.0, 0.0)

    def test_budget_exhaustion(self):
        cfg = SolverConfig(abs_tol=1e-15, rel_tol=1e-15, max_iterations=1)
        with pytest.raises(ConvergenceError):
            adaptive_quadrature(lambda s: math.exp(-math.cos(s)), 0.0, math.pi, (), cfg)

    def test_tolerance_scales_error(self):
        exact = math.pi * float(i0(1.0))
        loose = adaptive_quadrature(
            lambda s: math.exp(-math.cos(s)),
            0.0,
            math.pi,
            (),
            SolverConfig(abs_tol=1e-4, rel_tol=1e-4),
        )
        assert loose == pytest.approx(exact, abs=2e-4)

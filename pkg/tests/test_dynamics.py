"""Integrators: closed-form oracles, order, delay handling, Picard iteration."""

import dataclasses

import numpy as np
import pytest

from irsgame import (
    ConfigurationError,
    HistoryBuffer,
    IntegratorSpec,
    NonConvergenceError,
    NumericalDriftError,
    UtilityParams,
    UtilityVector,
    delayed_replicator_field,
    integrate_dde,
    integrate_ode,
    make_utilities,
    picard_solve,
    replicator_field,
)
from conftest import group_gains


def logistic_utilities(p):
    # constant payoff gap of 1 between two strategies
    return UtilityVector(np.array([1.0, 0.0]), float(p[0]))


def logistic_field(t, p):
    return replicator_field(t, p, logistic_utilities, mu=1.0)


def logistic_exact(t):
    return 1.0 / (1.0 + np.exp(-t))


def test_integrator_spec_validation():
    IntegratorSpec()
    with pytest.raises(ConfigurationError):
        IntegratorSpec(method="euler")
    with pytest.raises(ConfigurationError):
        IntegratorSpec(dt=0.0)
    with pytest.raises(ConfigurationError):
        IntegratorSpec(horizon=-1.0)


def test_integrator_spec_step_count():
    assert IntegratorSpec(dt=0.1, horizon=1.0).n_steps() == 10
    assert IntegratorSpec(dt=0.1, horizon=0.95).n_steps() == 10
    # float noise in horizon/dt must not add a spurious extra step
    assert IntegratorSpec(dt=0.1, horizon=0.1 * 7).n_steps() == 7


def test_rk4_logistic_oracle():
    spec = IntegratorSpec(method="rk4", dt=0.01, horizon=10.0)
    traj = integrate_ode(logistic_field, np.array([0.5, 0.5]), spec)
    err = np.max(np.abs(traj.states[:, 0] - logistic_exact(traj.times)))
    assert err < 1e-6
    assert traj.states[-1, 0] == pytest.approx(logistic_exact(10.0), abs=1e-6)


def test_forward_euler_logistic_converges_coarsely():
    spec = IntegratorSpec(method="forward-euler", dt=0.01, horizon=5.0)
    traj = integrate_ode(logistic_field, np.array([0.5, 0.5]), spec)
    err = np.max(np.abs(traj.states[:, 0] - logistic_exact(traj.times)))
    assert err < 1e-3  # first order: noticeably worse than rk4 at the same step


def test_rk4_step_halving_order():
    def run(dt):
        spec = IntegratorSpec(method="rk4", dt=dt, horizon=1.0, renormalize=False)
        traj = integrate_ode(logistic_field, np.array([0.5, 0.5]), spec)
        return abs(traj.states[-1, 0] - logistic_exact(1.0))

    e1, e2 = run(0.1), run(0.05)
    assert e1 / e2 >= 8.0  # fourth order would give 16


def test_zero_field_is_constant():
    spec = IntegratorSpec(dt=0.1, horizon=2.0)
    p0 = np.array([0.25, 0.75])
    traj = integrate_ode(lambda t, p: np.zeros_like(p), p0, spec)
    assert np.array_equal(traj.states, np.tile(p0, (len(traj), 1)))
    assert traj.total_drift == 0.0 and traj.total_absorbed == 0.0


def test_initial_state_validation():
    spec = IntegratorSpec(dt=0.1, horizon=1.0)
    with pytest.raises(ConfigurationError):
        integrate_ode(logistic_field, np.array([0.7, 0.7]), spec)
    with pytest.raises(ConfigurationError):
        integrate_ode(logistic_field, np.array([[0.5, 0.5]]), spec)


def test_drift_error_on_leaky_field():
    # a field that pumps mass in violates the tolerance within one step
    spec = IntegratorSpec(method="forward-euler", dt=0.1, horizon=1.0, drift_tol=1e-6)
    with pytest.raises(NumericalDriftError):
        integrate_ode(lambda t, p: np.array([0.01, 0.0]), np.array([0.5, 0.5]), spec)


def test_drift_recorded_without_projection():
    spec = IntegratorSpec(method="forward-euler", dt=0.1, horizon=1.0, renormalize=False)
    traj = integrate_ode(lambda t, p: np.array([0.01, 0.0]), np.array([0.5, 0.5]), spec)
    assert traj.total_drift == pytest.approx(0.001 * 10 * (10 + 1) / 2, rel=1e-9)
    assert float(traj.terminal_state.sum()) == pytest.approx(1.01, rel=1e-12)


def test_boundary_clamp_is_absorbing_not_fatal():
    # outflow pushes the small group through zero; the overshoot is clamped,
    # recorded as absorbed mass, and the run continues
    spec = IntegratorSpec(method="forward-euler", dt=0.02, horizon=1.0)
    traj = integrate_ode(
        lambda t, p: np.array([-1.0, 1.0]) * (p[0] > 0.0), np.array([0.01, 0.99]), spec
    )
    assert traj.terminal_state[0] == 0.0
    assert traj.total_absorbed == pytest.approx(0.01, rel=1e-9)
    assert abs(float(traj.terminal_state.sum()) - 1.0) < 1e-12


def test_history_buffer_lookup():
    hist = HistoryBuffer(t0=0.0, dt=0.5)
    a, b, c = np.array([1.0, 0.0]), np.array([0.5, 0.5]), np.array([0.0, 1.0])
    for s in (a, b, c):
        hist.append(s)
    assert np.array_equal(hist.lookup(0.0), a)
    assert np.array_equal(hist.lookup(0.5), b)
    assert np.array_equal(hist.lookup(1.0), c)
    # pre-history is the constant initial state
    assert np.array_equal(hist.lookup(-3.0), a)
    # interpolation halfway between samples
    assert np.allclose(hist.lookup(0.25), 0.5 * (a + b), atol=1e-15)
    # grid snap: a float hair off a sample still hits the sample exactly
    assert np.array_equal(hist.lookup(0.5 + 1e-12), b)
    with pytest.raises(ConfigurationError):
        hist.lookup(1.25)


def test_dde_zero_delay_matches_euler_exactly(default_cfg, default_utilities):
    spec = IntegratorSpec(method="forward-euler", dt=0.01, horizon=2.0)
    p0 = default_cfg.initial_population()
    mu = default_cfg.mu

    ode = integrate_ode(
        lambda t, p: replicator_field(t, p, default_utilities, mu), p0, spec, default_utilities
    )
    dde = integrate_dde(
        lambda t, lookup: delayed_replicator_field(t, lookup, 0.0, mu),
        p0,
        0.0,
        spec,
        default_utilities,
    )
    assert np.array_equal(ode.states, dde.states)
    assert np.array_equal(ode.u_bar, dde.u_bar)


def test_dde_small_delay_reaches_known_equilibrium(reduced_cfg, reduced_links):
    params = UtilityParams.from_config(reduced_cfg)
    utilities = make_utilities(reduced_links, params, reduced_cfg)
    gains = group_gains(reduced_cfg, reduced_links)
    p_star = gains / gains.sum()
    spec = IntegratorSpec(method="forward-euler", dt=0.01, horizon=300.0)
    traj = integrate_dde(
        lambda t, lookup: delayed_replicator_field(t, lookup, 5.0, reduced_cfg.mu),
        reduced_cfg.initial_population(),
        5.0,
        spec,
        utilities,
    )
    assert np.max(np.abs(traj.terminal_state - p_star)) < 1e-6


def test_dde_rejects_negative_delay(default_cfg, default_utilities):
    spec = IntegratorSpec(dt=0.1, horizon=1.0)
    with pytest.raises(ConfigurationError):
        integrate_dde(
            lambda t, lookup: delayed_replicator_field(t, lookup, -1.0, 0.1),
            default_cfg.initial_population(),
            -1.0,
            spec,
            default_utilities,
        )


def test_simplex_preserved_along_default_run(default_cfg, default_utilities):
    spec = IntegratorSpec(method="rk4", dt=0.01, horizon=5.0)
    traj = integrate_ode(
        lambda t, p: replicator_field(t, p, default_utilities, default_cfg.mu),
        default_cfg.initial_population(),
        spec,
        default_utilities,
    )
    sums = traj.states.sum(axis=1)
    assert np.max(np.abs(sums - 1.0)) < 1e-9
    assert np.min(traj.states) >= 0.0


def test_picard_zero_field_fixed_point():
    times = np.linspace(0.0, 1.0, 11)
    diffs = []
    traj = picard_solve(lambda t, p: np.zeros_like(p), np.array([0.5, 0.5]), times, diffs=diffs)
    assert np.array_equal(traj.states, np.tile([0.5, 0.5], (11, 1)))
    assert len(diffs) == 1 and diffs[0] == 0.0


def test_picard_matches_logistic():
    times = np.arange(0.0, 1.0 + 1e-12, 0.01)
    diffs = []
    traj = picard_solve(logistic_field, np.array([0.5, 0.5]), times, diffs=diffs)
    err = np.max(np.abs(traj.states[:, 0] - logistic_exact(times)))
    assert err < 1e-4  # quadrature error of the trapezoid grid
    # successive approximation: the round-to-round change eventually contracts
    tail = np.array(diffs[2:])
    assert np.all(np.diff(tail) <= 0.0)


def test_picard_round_budget():
    times = np.linspace(0.0, 1.0, 51)
    with pytest.raises(NonConvergenceError):
        picard_solve(logistic_field, np.array([0.5, 0.5]), times, max_rounds=2)


def test_picard_grid_validation():
    p0 = np.array([1.0])
    with pytest.raises(ConfigurationError):
        picard_solve(lambda t, p: p, p0, np.array([0.0]))
    with pytest.raises(ConfigurationError):
        picard_solve(lambda t, p: p, p0, np.array([0.0, 0.0, 1.0]))

import numpy as np
import pytest

from popreplace.dynamics import (CarryingCapacity, WolbachiaParams, build_separated_model,
                                 cubic_separated)
from popreplace.errors import Infeasible, PreconditionFailed
from popreplace.optimize import (cbar, cost_curve, eta_sweep, finite_s_feasible,
                                 finite_s_infimum, pulse_feasible, pulse_ocp,
                                 two_release_experiment)
from popreplace.periodic import Basin, classify_basin, find_periodic_envelope
from popreplace.release import Impulse, ReleaseSchedule, build_cost_potential, simulate_impulsive

from conftest import THETA_D

T = 12.0
C_STAR_REF = 0.0172994796   # converged value of this implementation (tol 1e-11, grid 256)


def test_cost_curve_invariants(curve):
    assert np.all(curve.values > 0)
    assert np.all(curve.C_star <= curve.values)
    assert len(curve.grid) == 257
    assert abs(curve.C_star - C_STAR_REF) < 1e-9
    assert curve.near_minima[0][1] >= curve.C_star


def test_cost_curve_grid_precondition(model, env, pot):
    with pytest.raises(ValueError):
        cost_curve(model, env, pot, grid_n=64)


def test_separated_minimiser_is_argmin_K(sep_model, sep_env, sep_pot):
    cc = cost_curve(sep_model, sep_env, sep_pot)
    assert abs(cc.t0_star - 6.0) < 1e-4 * T
    t = np.linspace(0, T, 97)
    assert np.allclose(cbar(sep_model, sep_env, sep_pot, t),
                       sep_model.K(t) * sep_pot(THETA_D), rtol=1e-9)


def test_flat_capacity_flat_curve(flat_model):
    env = find_periodic_envelope(flat_model, 256, 1e-11)
    pot = build_cost_potential(flat_model)
    cc = cost_curve(flat_model, env, pot)
    assert np.max(cc.values) - cc.C_star < 1e-9


def test_cost_curve_is_a_lower_bound(model, env, pot, curve, rng):
    for _ in range(5):
        t = float(rng.uniform(0, T))
        cb = float(cbar(model, env, pot, t))
        for C, expected in ((curve.C_star - 1e-6, Basin.ZERO), (cb + 1e-6, Basin.ONE)):
            tr = simulate_impulsive(model, pot, ReleaseSchedule((Impulse(t, C),)), 0.0,
                                    (0, t), 1e-11)
            assert classify_basin(env, t, float(tr(t))).outcome is expected


def test_finite_s_sweep(model, env, curve):
    res = [finite_s_infimum(model, env, S) for S in (2, 5, 10, 50, 100, 1000)]
    gaps = [abs(r.c_s_star - curve.C_star) for r in res]
    for a, b in zip(gaps, gaps[1:]):
        assert b <= 1.1 * a
    assert all(r.c_s_star > 0 for r in res)


def test_finite_s_large_S(model, env, curve):
    r = finite_s_infimum(model, env, 1e4)
    assert abs(r.c_s_star - curve.C_star) < 1e-3
    assert abs(r.t0_s_star - curve.t0_star) < 0.5
    assert r.bisection_history


def test_finite_s_feasibility_monotone(model, env, rng):
    for _ in range(20):
        S = float(10 ** rng.uniform(0.5, 3))
        t0 = float(rng.uniform(1.0 / S, T))
        C = float(rng.uniform(0.005, 0.04))
        if finite_s_feasible(model, env, S, C, t0, 1e-12):
            assert finite_s_feasible(model, env, S, C + float(rng.uniform(1e-6, 0.01)), t0, 1e-12)


def test_finite_s_preconditions(model, env):
    with pytest.raises(ValueError):
        finite_s_infimum(model, env, 0.05)
    with pytest.raises(ValueError):
        finite_s_infimum(model, env, 10, c_tol=1e-4)


def test_two_release_fails(sep_model, sep_pot, sep_env):
    r = two_release_experiment(sep_model, sep_pot, sep_env, 6.0, 8.0)
    assert r.verdict.outcome is Basin.ZERO
    assert r.p_t1_minus < r.p_t0_plus and r.decays
    assert r.C0 + r.C1 == pytest.approx(sep_pot(THETA_D) * 0.04)


def test_two_release_exploratory_budget(sep_model, sep_pot, sep_env):
    r = two_release_experiment(sep_model, sep_pot, sep_env, 6.0, 8.0, budget_factor=1.5)
    assert r.verdict.outcome in set(Basin)


@pytest.mark.parametrize("t0", [1.0, 4.0, 9.0])
def test_two_release_decay_witness(sep_model, sep_pot, sep_env, t0):
    r = two_release_experiment(sep_model, sep_pot, sep_env, t0, t0 + 2.5, split=0.3)
    assert r.decays


def test_two_release_preconditions(model, pot, env):
    with pytest.raises(PreconditionFailed):
        two_release_experiment(model, pot, env, 6.0, 8.0)
    K = CarryingCapacity.cosine(1.0, 0.0, T)
    bad = build_separated_model(cubic_separated(0.4, 1.5, T), K)
    with pytest.raises(PreconditionFailed):
        two_release_experiment(bad, build_cost_potential(bad), find_periodic_envelope(bad), 6.0, 8.0)


@pytest.fixture(scope="module")
def sweep(K):
    return eta_sweep(WolbachiaParams(d1=0.3), K, [0.04, 0.02, 0.01, 0.005, 0.0])


def test_eta_sweep_slopes(sweep):
    assert abs(sweep.slope_e - 1.0) <= 0.25
    assert sweep.slope_m >= 0.25


def test_eta_zero_is_separated_case(sweep):
    last = sweep.points[-1]
    assert last.eta == 0.0 and last.e < 1e-8 and abs(last.t_star - 6.0) < 1e-3


def test_eta_sweep_continuity(sweep):
    pts = [p for p in sweep.points if p.eta > 0]
    for a, b in zip(pts, pts[1:]):
        assert b.e <= 1.1 * a.e and b.m <= 1.1 * a.m


def test_eta_sweep_needs_equal_death_rates(K):
    with pytest.raises(ValueError):
        eta_sweep(WolbachiaParams(), K, [0.01])


@pytest.fixture(scope="module")
def plan(model, env):
    return pulse_ocp(model, env, 0.06)


def test_pulse_plan_invariants(plan):
    assert plan.feasible and plan.cost >= 0
    assert 0 <= plan.start and plan.start + plan.duration <= T
    assert plan.cost == pytest.approx(plan.M * plan.duration)


def test_pulse_inner_bisection(model, plan):
    assert not pulse_feasible(model, plan.M, plan.start, plan.duration - 1e-4, 1e-10)
    assert pulse_feasible(model, plan.M, plan.start, plan.duration + 1e-4, 1e-10)


def test_pulse_infeasible(model, env):
    with pytest.raises(Infeasible):
        pulse_ocp(model, env, 1e-4, coarse_n=12)
    with pytest.raises(ValueError):
        pulse_ocp(model, env, 0.0)

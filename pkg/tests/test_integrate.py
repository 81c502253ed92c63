import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from popreplace.dynamics import CarryingCapacity, custom_model
from popreplace.errors import BlowUp, DomainError, SpanMismatch, StepFailure
from popreplace.integrate import (CompartmentState, ControlSignal, integrate_compartments,
                                  integrate_scalar, reduction_gap, sup_distance)
from popreplace.io import read_csv

from conftest import THETA_D

T = 12.0


@pytest.mark.parametrize("p0", [0.0, 1.0])
def test_equilibria_preserved(model, p0):
    tr = integrate_scalar(model, ControlSignal(), p0, (0, 5 * T), 1e-10)
    assert np.max(np.abs(tr(np.linspace(0, 5 * T, 2001)) - p0)) < 1e-11
    assert np.max(np.abs(tr.y - p0)) < 1e-11


def test_separated_constant_solution(sep_model):
    tol = 1e-10
    tr = integrate_scalar(sep_model, ControlSignal(), THETA_D, (0, 3 * T), tol)
    assert np.max(np.abs(tr(np.linspace(0, 3 * T, 3001)) - THETA_D)) < 10 * tol


@pytest.mark.parametrize("tol", [1e-5, 1e-7, 1e-9])
def test_tolerance_convergence(model, tol):
    grid = np.linspace(0, 3 * T, 1000)
    ctrl = ControlSignal(((5.0, 6.0, 0.03),))
    a = integrate_scalar(model, ctrl, 0.3, (0, 3 * T), tol)
    b = integrate_scalar(model, ctrl, 0.3, (0, 3 * T), tol / 10)
    assert np.max(np.abs(a(grid) - b(grid))) < 20 * tol


def test_breakpoints_are_exact_nodes(model):
    a, b, c = 0.1 + 0.2, 5.0 / 3.0, 6.0 + 1e-3
    ctrl = ControlSignal(((a, b, 0.01), (c, 7.7, 0.02)))
    tr = integrate_scalar(model, ctrl, 0.0, (0, T), 1e-9)
    nodes = set(tr.t.tolist())
    for x in (a, b, c, 7.7):
        assert x in nodes


def test_trajectory_invariants(model):
    ctrl = ControlSignal(((5.9, 6.0, 0.5),))
    tr = integrate_scalar(model, ctrl, 0.0, (0, 2 * T), 1e-10)
    assert np.all(np.diff(tr.t) > 0)
    assert np.all((tr.y >= 0) & (tr.y <= 1))
    assert tr.jumps == ()
    assert tr.t_span == (0.0, 2 * T)


def test_dense_output_between_nodes(model):
    # the dense interpolant on a coarse run agrees with a fine reference
    a = integrate_scalar(model, ControlSignal(), 0.5, (0, T), 1e-8)
    ref = integrate_scalar(model, ControlSignal(), 0.5, (0, T), 1e-13)
    mid = 0.5 * (a.t[:-1] + a.t[1:])
    assert np.max(np.abs(a(mid) - ref(mid))) < 1e-7


def test_span_and_tol_preconditions(model):
    with pytest.raises(ValueError):
        integrate_scalar(model, ControlSignal(), 0.2, (1.0, 1.0))
    with pytest.raises(ValueError):
        integrate_scalar(model, ControlSignal(), 0.2, (0, 1), tol=1e-2)
    with pytest.raises(DomainError):
        integrate_scalar(model, ControlSignal(), 1.5, (0, 1))


def test_control_signal_validation():
    with pytest.raises(ValueError):
        ControlSignal(((1.0, 1.0, 0.1),))
    with pytest.raises(ValueError):
        ControlSignal(((0.0, 1.0, -0.1),))
    with pytest.raises(ValueError):
        ControlSignal(((0.0, 2.0, 0.1), (1.0, 3.0, 0.1)))
    s = ControlSignal.indicator(6.0, 0.5, 0.02)
    assert s.total() == pytest.approx(0.02)
    assert s.rate(5.5) == pytest.approx(0.04) and s.rate(6.0) == 0.0


def test_blowup_and_step_failure():
    K = CarryingCapacity.cosine(1.0, 0.0, T)
    push = custom_model(lambda t, p: 1.0 + 0.0 * p, None, lambda p: 1 - p, K)
    with pytest.raises(BlowUp):
        integrate_scalar(push, ControlSignal(), 0.5, (0, 1))
    singular = custom_model(lambda t, p: 1.0 / (0.5 - p), None, lambda p: 1 - p, K)
    with pytest.raises(StepFailure):
        integrate_scalar(singular, ControlSignal(), 0.0, (0, 1))


pieces = st.lists(st.tuples(st.floats(0.05, 0.9), st.floats(0.0, 0.05), st.floats(0.0, 0.05)),
                  min_size=1, max_size=3)


@settings(max_examples=25, deadline=None)
@given(p0=st.floats(0.0, 1.0), spec=pieces, start=st.floats(0.0, 10.0))
def test_comparison_principle(model, p0, spec, start):
    # u1 >= u2 pointwise: same supports, rate of u1 = rate of u2 + extra
    t = start
    lo, hi = [], []
    for width, r, extra in spec:
        lo.append((t, t + width, r))
        hi.append((t, t + width, r + extra))
        t += width + 0.3
    grid = np.linspace(0, 2 * T, 600)
    p_hi = integrate_scalar(model, ControlSignal(tuple(hi)), p0, (0, 2 * T), 1e-10)
    p_lo = integrate_scalar(model, ControlSignal(tuple(lo)), p0, (0, 2 * T), 1e-10)
    nodes = np.union1d(p_hi.t, p_lo.t)
    for x in (grid, nodes):
        assert np.all(p_hi(x) >= p_lo(x) - 1e-9)


def test_trajectory_csv(model, tmp_path):
    tr = integrate_scalar(model, ControlSignal(), 0.4, (0, T), 1e-9)
    tr.to_csv(tmp_path / "tr.csv")
    header, data = read_csv(tmp_path / "tr.csv")
    assert header == ["t", "p"]
    assert np.array_equal(data[:, 0], tr.t) and np.array_equal(data[:, 1], tr.y)


def test_sup_distance_examples(model):
    a = integrate_scalar(model, ControlSignal(), 0.3, (0, T), 1e-9)
    zero = integrate_scalar(model, ControlSignal(), 0.0, (0, T), 1e-9)
    one = integrate_scalar(model, ControlSignal(), 1.0, (0, T), 1e-9)
    assert sup_distance(a, a, (0, T)) == 0.0
    assert sup_distance(zero, one, (0, T)) == 1.0
    with pytest.raises(SpanMismatch):
        sup_distance(a, zero, (0, 2 * T))


def test_compartments_invariant_subspace(params, K):
    comp, prop = integrate_compartments(params, K, 0.05, ControlSignal(),
                                        CompartmentState(0.05, 0.0), (0, 2 * T), 1e-9)
    assert np.all(comp.y[:, 1] == 0.0)
    assert np.all(prop(np.linspace(0, 2 * T, 200)) == 0.0)
    assert np.all(comp.y[:, 0] > 0)


def test_compartments_zero_state(params, K):
    with pytest.raises(DomainError):
        CompartmentState(0.0, 0.0).proportion()
    with pytest.raises(DomainError):
        integrate_compartments(params, K, 0.05, ControlSignal(), CompartmentState(0.0, 0.0),
                               (0, T), 1e-9)


def test_compartment_csv_header(params, K, tmp_path):
    comp, _ = integrate_compartments(params, K, 0.1, ControlSignal(((5.5, 6.0, 0.03),)),
                                     CompartmentState(0.07, 0.0), (0, T), 1e-8)
    comp.to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "t,n1,n2"


@pytest.mark.slow
def test_reduction_gap_decreases(params, K, model):
    ctrl = ControlSignal(((5.5, 6.0, 0.03 / 0.5),))
    gaps = [reduction_gap(params, K, s, ctrl, (0, 2 * T), 1e-9, model)
            for s in (0.2, 0.1, 0.05, 0.025)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[1]


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_degenerate_segments(model, backend):
    from popreplace import _backend
    if backend == "compiled" and not _backend.HAVE_COMPILED:
        pytest.skip("compiled kernel not built")
    tiny = 2.2250738585072014e-308
    ctrl = ControlSignal(((tiny, 0.5, 0.01), (1.0, 1.0 + 1e-15, 0.3)))
    tr = integrate_scalar(model, ctrl, 0.0, (0, 2 * T), 1e-10, backend=backend)
    nodes = set(tr.t.tolist())
    assert {tiny, 0.5, 1.0, 1.0 + 1e-15} <= nodes
    assert np.all(np.diff(tr.t) > 0) and len(tr.coef) == len(tr.t) - 1
    ref = integrate_scalar(model, ControlSignal(((0.0, 0.5, 0.01),)), 0.0, (0, 2 * T), 1e-10,
                           backend=backend)
    assert abs(tr.at_end() - ref.at_end()) < 1e-9

"""Release-cost minimisation experiments.

* :func:`cost_curve` minimises ``Cbar(t) = K(t) G(p_M(t))`` over one period.
* :func:`finite_s_infimum` computes the smallest amount that succeeds when
  the release is spread over ``[t0 - 1/S, t0]``.
* :func:`two_release_experiment`, :func:`eta_sweep` and :func:`pulse_ocp`
  run the remaining numerical studies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._numerics import (bisect_threshold, golden_section, loglog_slope, parallel_map,
                        periodic_distance)
from .dynamics import (CarryingCapacity, ModelSpec, WolbachiaParams, build_separated_model,
                       build_wolbachia_model, separated_from_wolbachia)
from .errors import Infeasible, NoFeasibleC, NonUniquePeriodic, PreconditionFailed
from .integrate import ControlSignal, advance
from .periodic import (BasinVerdict, PeriodicEnvelope, classify_basin, envelope_at,
                       find_periodic_envelope)
from .release import (CostPotential, Impulse, ReleaseSchedule, build_cost_potential,
                      simulate_impulsive)

NEAR_MIN_FRACTION = 0.01
TIME_TOL_FRACTION = 1e-6


# ---------------------------------------------------------------------------
# asymptotic cost curve


@dataclass(frozen=True)
class CostCurve:
    grid: np.ndarray
    values: np.ndarray
    t0_star: float
    C_star: float
    near_minima: tuple = ()
    history: tuple = ()

    def csv_rows(self):
        return list(zip(self.grid.tolist(), self.values.tolist()))

    def to_dict(self) -> dict:
        return {
            "t0_star": self.t0_star,
            "C_star": self.C_star,
            "near_minima": [{"t": t, "C": c} for t, c in self.near_minima],
            "grid_n": int(len(self.grid) - 1),
        }


def cbar(model: ModelSpec, env: PeriodicEnvelope, pot: CostPotential, t):
    """Minimal impulse amount at time ``t``: ``K(t) G(p_M(t))``."""
    return np.asarray(model.K(t)) * pot(envelope_at(env, "max", t))


def _periodic_local_minima(values: np.ndarray) -> list[int]:
    n = len(values)
    out = []
    for i in range(n):
        v = values[i]
        if v < values[i - 1] and v <= values[(i + 1) % n]:
            out.append(i)
    return out


def cost_curve(model: ModelSpec, env: PeriodicEnvelope, pot: CostPotential,
               grid_n: int = 256) -> CostCurve:
    """Grid evaluation of ``Cbar`` on ``[0, T]`` plus golden-section refinement.

    Every grid-local minimum within 1% of the best grid value is refined and
    reported; the global minimiser is the lowest (earliest on ties).
    """
    if grid_n < 128:
        raise ValueError("grid_n must be at least 128")
    T = model.T
    grid = np.linspace(0.0, T, grid_n + 1)
    values = np.asarray(cbar(model, env, pot, grid), dtype=float)
    per = values[:-1]
    best = float(per.min())
    idx = [i for i in _periodic_local_minima(per) if per[i] <= best * (1 + NEAR_MIN_FRACTION)]
    if not idx:
        # flat curve: every point ties, report the earliest
        idx = [int(np.argmin(per))]
    dt = T / grid_n
    fn = lambda t: float(cbar(model, env, pot, t % T))  # noqa: E731
    minima = []
    for i in idx:
        t, c = golden_section(fn, grid[i] - dt, grid[i] + dt, TIME_TOL_FRACTION * T)
        if c > per[i]:
            t, c = float(grid[i]), float(per[i])
        minima.append((float(t % T), float(c)))
    minima.sort(key=lambda tc: (tc[1], tc[0]))
    t0, c0 = minima[0]
    near = tuple(sorted(m for m in minima if m[1] <= c0 * (1 + NEAR_MIN_FRACTION)))
    return CostCurve(grid, values, t0, c0, near)


# ---------------------------------------------------------------------------
# finite release rate


@dataclass(frozen=True)
class FiniteSResult:
    S: float
    c_s_star: float
    t0_s_star: float
    grid: np.ndarray
    thresholds: np.ndarray
    bisection_history: tuple = ()

    def to_dict(self) -> dict:
        return {"S": self.S, "c_s_star": self.c_s_star, "t0_s_star": self.t0_s_star}


def finite_s_state(model: ModelSpec, S: float, C: float, t0: float, tol: float) -> float:
    """``p_S(t0)`` for ``p(0) = 0`` and the release ``C S`` on ``[t0 - 1/S, t0]``.

    The state is identically 0 before the release starts, so only the pulse
    window is integrated.
    """
    eps = 1.0 / S
    ctrl = ControlSignal(((t0 - eps, t0, C * S),))
    return advance(model, ctrl, 0.0, t0 - eps, t0, tol)[0]


def finite_s_feasible(model, env, S, C, t0, tol) -> bool:
    return finite_s_state(model, S, C, t0, tol) > float(envelope_at(env, "max", t0))


def _threshold_at(model, env, S, t0, c_tol, tol, c_start, c_cap, history=None) -> float:
    feas = lambda c: finite_s_feasible(model, env, S, c, t0, tol)  # noqa: E731
    lo, hi = 0.0, c_start
    while not feas(hi):
        lo, hi = hi, 2.0 * hi
        if hi > c_cap:
            if feas(c_cap):
                hi = c_cap
                break
            raise NoFeasibleC(f"no feasible amount up to {c_cap:g} at t0={t0:g}, S={S:g}")
    return bisect_threshold(feas, lo, hi, c_tol, history)


def finite_s_infimum(model: ModelSpec, env: PeriodicEnvelope, S: float,
                     t0_grid_n: int = 64, c_tol: float = 1e-10, tol: float = 1e-12,
                     window: Optional[tuple] = None,
                     threads: Optional[int] = None) -> FiniteSResult:
    """Infimum over ``(C, t0)`` of amounts whose ``S``-spread release succeeds.

    Success at ``t0`` means ``p_S(t0) > p_M(t0)``, which is monotone in ``C``.
    The per-``t0`` threshold is bracketed by doubling and bisected to width
    ``c_tol``; the minimising ``t0`` is refined by golden section.

    Parameters
    ----------
    window : (float, float), optional
        Range of release end times, default ``[1/S, T]``.
    """
    T = model.T
    if not S > 1.0 / T:
        raise ValueError("S must exceed 1/T")
    if c_tol > 1e-5:
        raise ValueError("c_tol must be at most 1e-5")
    lo_t, hi_t = window if window is not None else (1.0 / S, T)
    grid = np.linspace(lo_t, hi_t, t0_grid_n + 1)
    g_at_max = float(model.g(float(np.max(env.maximal.p))))
    c_cap = 10.0 * model.K.maximum() / g_at_max
    c_start = float(model.K.minimum()) * float(np.max(env.maximal.p))

    def thr(t0, history=None):
        return _threshold_at(model, env, S, t0, c_tol, tol, c_start, c_cap, history)

    values = np.asarray(parallel_map(thr, grid, threads), dtype=float)
    i = int(np.argmin(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    dt = (hi_t - lo_t) / t0_grid_n
    t_best, c_best = golden_section(thr, a, b, min(TIME_TOL_FRACTION * T, dt))
    if c_best > values[i]:
        t_best, c_best = float(grid[i]), float(values[i])
    hist: list = []
    thr(t_best, hist)
    return FiniteSResult(float(S), float(c_best), float(t_best), grid, values, tuple(hist))


# ---------------------------------------------------------------------------
# two releases


@dataclass(frozen=True)
class TwoReleaseResult:
    verdict: BasinVerdict
    p_t0_plus: float
    p_t1_minus: float
    p_t1_plus: float
    C0: float
    C1: float
    c_min: float

    @property
    def decays(self) -> bool:
        return self.p_t1_minus < self.p_t0_plus

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.outcome.value, "witness": self.verdict.witness,
                "p_t0_plus": self.p_t0_plus, "p_t1_minus": self.p_t1_minus,
                "p_t1_plus": self.p_t1_plus, "C0": self.C0, "C1": self.C1,
                "c_min": self.c_min, "decay_witness": self.decays}


def two_release_experiment(model: ModelSpec, pot: CostPotential, env: PeriodicEnvelope,
                           t0: float, t1: float, split: float = 0.5,
                           budget_factor: float = 1.0, tol: float = 1e-10) -> TwoReleaseResult:
    """Split ``budget_factor * G(theta) * min K`` into two impulses at ``t0 < t1``.

    Requires a separated model with ``m > 0`` on a 256-point grid.
    """
    if model.separated is None:
        raise PreconditionFailed("two-release experiment needs a separated model")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if not 0.0 < split < 1.0:
        raise ValueError("split must lie in (0, 1)")
    T = model.T
    tg = np.linspace(0.0, T, 257)
    mvals = np.broadcast_to(np.asarray(model.separated.m(tg), dtype=float), tg.shape)
    if np.any(mvals <= 0):
        raise PreconditionFailed("m must be positive everywhere")
    c_min = pot(model.separated.theta_bar) * model.K.minimum()
    total = budget_factor * c_min
    C0, C1 = split * total, (1.0 - split) * total
    sched = ReleaseSchedule((Impulse(t0, C0), Impulse(t1, C1)))
    tr = simulate_impulsive(model, pot, sched, 0.0, (0.0, t1), tol)
    (_, _, p0p), (_, p1m, p1p) = tr.jumps
    verdict = classify_basin(env, t1, p1p)
    return TwoReleaseResult(verdict, p0p, p1m, p1p, C0, C1, float(c_min))


# ---------------------------------------------------------------------------
# eta sweep


@dataclass(frozen=True)
class EtaPoint:
    eta: float
    e: float
    m: float
    t_star: float
    unique: bool


@dataclass(frozen=True)
class EtaSweep:
    points: tuple
    slope_e: float
    slope_m: float
    theta_d: float
    flags: tuple = ()

    def csv_rows(self):
        return [(p.eta, p.e, p.m) for p in self.points]

    def to_dict(self) -> dict:
        return {"slope_e": self.slope_e, "slope_m": self.slope_m, "theta_d": self.theta_d,
                "points": [p.__dict__ for p in self.points], "flags": list(self.flags)}


def eta_sweep(base: WolbachiaParams, K: CarryingCapacity, etas: Sequence[float],
              grid_n: int = 256, tol: float = 1e-11, cost_grid_n: int = 256,
              delta: float = 1e-6) -> EtaSweep:
    """Distance to ``theta_d`` and minimiser drift as ``d1 = d2 - eta`` varies.

    ``e(eta) = sup |p_M(t) - theta_d|``; ``m(eta)`` is the periodic distance
    from the cost minimiser to the nearest minimiser of ``K``. Slopes are
    least-squares fits in log-log coordinates over the positive etas.
    Non-unique envelopes are flagged (the maximal solution is used).
    """
    if base.d1 != base.d2:
        raise ValueError("base parameters must have d1 == d2")
    theta = base.theta_bar_d
    kmins = K.minimizers()
    T = K.T
    points, flags = [], []
    for eta in etas:
        q = base.with_eta(float(eta))
        if eta == 0:
            model = build_separated_model(separated_from_wolbachia(q, K), K)
        else:
            model = build_wolbachia_model(q, K)
        env = find_periodic_envelope(model, grid_n, tol)
        if not env.unique:
            flags.append(str(NonUniquePeriodic(f"eta={eta}: {len(env.zeros)} periodic solutions")))
        pot = build_cost_potential(model, delta)
        cc = cost_curve(model, env, pot, cost_grid_n)
        e = float(np.max(np.abs(env.maximal.p - theta)))
        m = min(periodic_distance(cc.t0_star, tk, T) for tk in kmins)
        points.append(EtaPoint(float(eta), e, float(m), cc.t0_star, env.unique))
    pos = [p for p in points if p.eta > 0]
    slope_e = slope_m = math.nan
    if len(pos) >= 2:
        slope_e = loglog_slope([p.eta for p in pos], [p.e for p in pos])
        if all(p.m > 0 for p in pos):
            slope_m = loglog_slope([p.eta for p in pos], [p.m for p in pos])
    return EtaSweep(tuple(points), slope_e, slope_m, theta, tuple(flags))


# ---------------------------------------------------------------------------
# bounded-rate pulse search


@dataclass(frozen=True)
class PulsePlan:
    M: float
    start: float
    duration: float
    cost: float
    feasible: bool
    note: str = "search restricted to a single rectangular pulse at the rate bound"
    starts: tuple = field(default=(), repr=False)
    durations: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"M": self.M, "start": self.start, "duration": self.duration,
                "cost": self.cost, "feasible": self.feasible, "note": self.note}


def pulse_outcome(model: ModelSpec, M: float, start: float, duration: float,
                  tol: float, periods: int = 2) -> tuple[float, float]:
    """``(p(T_h - T), p(T_h))`` with ``T_h = periods*T`` for one pulse from ``p(0) = 0``."""
    T = model.T
    ctrl = ControlSignal(((start, start + duration, M),))
    pa, h = advance(model, ctrl, 0.0, start, (periods - 1) * T, tol)
    pb, _ = advance(model, ControlSignal(), pa, (periods - 1) * T, periods * T, tol, h0=h)
    return pa, pb


def pulse_feasible(model, M, start, duration, tol, periods=2) -> bool:
    pa, pb = pulse_outcome(model, M, start, duration, tol, periods)
    return pb > pa


def min_duration(model: ModelSpec, M: float, start: float, tol: float,
                 d_tol: float = 1e-6, periods: int = 2) -> float:
    """Shortest duration at ``start`` with ``p(2T) > p(T)``; ``inf`` if none fits."""
    dmax = model.T - start
    if dmax <= 0 or not pulse_feasible(model, M, start, dmax, tol, periods):
        return math.inf
    return bisect_threshold(lambda d: pulse_feasible(model, M, start, d, tol, periods),
                            0.0, dmax, d_tol)


def pulse_ocp(model: ModelSpec, env: Optional[PeriodicEnvelope], M: float,
              periods: int = 2, coarse_n: int = 48, tol: float = 1e-10,
              d_tol: float = 1e-6, threads: Optional[int] = None) -> PulsePlan:
    """Cheapest single pulse ``u = M`` on ``[start, start + d]`` within the first period.

    Success is ``p(periods*T) > p((periods-1)*T)``; the control vanishes after
    ``T``. The minimal duration is bisected for each start on a coarse grid
    of ``[0, T)`` and the best start is refined by golden section.

    Raises
    ------
    Infeasible
        If no start admits a feasible duration at this rate bound.
    """
    if not M > 0:
        raise ValueError("M must be positive")
    T = model.T
    starts = np.arange(coarse_n) * (T / coarse_n)
    durs = np.asarray(parallel_map(lambda s: min_duration(model, M, float(s), tol, d_tol, periods),
                                   starts, threads))
    if not np.isfinite(durs).any():
        raise Infeasible(f"no single pulse at rate {M:g} succeeds within one period")
    i = int(np.argmin(durs))
    ds = T / coarse_n
    lo, hi = max(starts[i] - ds, 0.0), min(starts[i] + ds, T)
    s_best, d_best = golden_section(lambda s: min_duration(model, M, s, tol, d_tol, periods),
                                    lo, hi, max(d_tol, 1e-4))
    if not d_best < durs[i]:
        s_best, d_best = float(starts[i]), float(durs[i])
    return PulsePlan(float(M), float(s_best), float(d_best), float(M * d_best), True,
                     starts=tuple(starts.tolist()), durations=tuple(durs.tolist()))


__all__ = [
    "CostCurve", "EtaSweep", "FiniteSResult", "PulsePlan", "TwoReleaseResult",
    "cbar", "cost_curve", "eta_sweep", "finite_s_infimum", "finite_s_state",
    "min_duration", "pulse_feasible", "pulse_ocp", "two_release_experiment",
]

"""Cost potential, impulse jump map and release simulations.

An impulse of amount ``C`` at time ``t0`` moves the state so that
``G(p+) - G(p-) = C / K(t0)`` where ``G`` is the antiderivative of ``1/g``
vanishing at 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._numerics import panel_integrals
from .dynamics import ModelSpec
from .errors import DomainError, OutOfRange, SingularWeight
from .integrate import ControlSignal, Trajectory, _Recorder, _check_tol, advance, integrate_scalar

DEFAULT_DELTA = 1e-6
TABLE_N = 4096
INVERT_TOL = 1e-12


@dataclass(frozen=True)
class CostPotential:
    """Tabulated ``G(p) = integral_0^p du / g(u)`` on ``[0, 1 - delta]``."""

    model: ModelSpec
    delta: float
    p: np.ndarray
    G: np.ndarray
    spline: CubicHermiteSpline

    @property
    def p_max(self) -> float:
        return float(self.p[-1])

    @property
    def G_max(self) -> float:
        return float(self.G[-1])

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p < 0.0) or np.any(p > self.p_max):
            raise OutOfRange(f"G is tabulated on [0, {self.p_max}]", saturated=self.p_max)
        out = self.spline(p)
        return float(out) if out.ndim == 0 else out

    def csv_rows(self):
        return list(zip(self.p.tolist(), self.G.tolist()))


def build_cost_potential(model: ModelSpec, delta: float = DEFAULT_DELTA,
                         tol: float = 1e-13, n: int = TABLE_N) -> CostPotential:
    """Integrate ``1/g`` panel by panel on a grid graded towards ``1 - delta``.

    The grid is ``p = 1 - exp(-s)`` with ``s`` uniform, so node spacing shrinks
    in proportion to the distance from 1 where ``1/g`` blows up.
    """
    if not 1e-8 <= delta <= 1e-2:
        raise ValueError(f"delta must lie in [1e-8, 1e-2], got {delta}")
    s = np.linspace(0.0, -np.log(delta), n)
    p = -np.expm1(-s)
    p[-1] = 1.0 - delta
    g = model.g
    gp = np.asarray(g(p), dtype=float)
    probe = np.linspace(0.0, 1.0 - delta, 4 * n)
    if np.any(gp <= 0.0) or np.any(np.asarray(g(probe)) <= 0.0):
        raise SingularWeight("g must be strictly positive on [0, 1 - delta]")
    inv_g = lambda x: 1.0 / np.asarray(g(x), dtype=float)  # noqa: E731
    pieces = panel_integrals(inv_g, p, tol)
    G = np.concatenate(([0.0], np.cumsum(pieces)))
    spline = CubicHermiteSpline(p, G, 1.0 / gp)
    return CostPotential(model, float(delta), p, G, spline)


def invert_cost(pot: CostPotential, y: float) -> float:
    """Return ``p`` with ``G(p) = y`` (bracketing plus safeguarded Newton)."""
    if y < 0.0:
        raise DomainError(f"cost value must be non-negative, got {y}")
    if y > pot.G_max:
        raise OutOfRange(f"G^-1({y}) exceeds the tabulated range (G max {pot.G_max})",
                         saturated=pot.p_max)
    if y == 0.0:
        return 0.0
    i = int(np.clip(np.searchsorted(pot.G, y) - 1, 0, len(pot.G) - 2))
    lo, hi = float(pot.p[i]), float(pot.p[i + 1])
    sp = pot.spline
    dsp = sp.derivative()
    x = lo + (hi - lo) * (y - pot.G[i]) / (pot.G[i + 1] - pot.G[i])
    for _ in range(60):
        r = float(sp(x)) - y
        if abs(r) < INVERT_TOL:
            break
        if r > 0:
            hi = x
        else:
            lo = x
        d = float(dsp(x))
        step = x - r / d if d > 0 else 0.5 * (lo + hi)
        x = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-16:
            break
    return x


def _K_at(model: ModelSpec, K, t0: float) -> float:
    if K is None:
        return float(model.K(t0))
    return float(K(t0)) if callable(K) else float(K)


def jump_map(pot: CostPotential, p_minus: float, C: float, t0: float,
             K=None) -> float:
    """State right after an impulse of amount ``C`` at ``t0``.

    ``K`` overrides the model's capacity (a callable or a number).

    Raises
    ------
    OutOfRange
        If the release overshoots the tabulated range; ``saturated`` holds
        the saturating value ``1 - delta``.
    """
    if C < 0:
        raise DomainError(f"release amount must be non-negative, got {C}")
    if not 0.0 <= p_minus < pot.p_max:
        raise DomainError(f"p_minus must lie in [0, {pot.p_max}), got {p_minus}")
    if C == 0:
        return float(p_minus)
    return invert_cost(pot, pot(p_minus) + C / _K_at(pot.model, K, t0))


@dataclass(frozen=True)
class Impulse:
    time: float
    amount: float

    @property
    def start(self) -> float:
        return self.time

    @property
    def end(self) -> float:
        return self.time


@dataclass(frozen=True)
class Pulse:
    start: float
    duration: float
    amount: float

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def rate(self) -> float:
        return self.amount / self.duration


Release = Union[Impulse, Pulse]


@dataclass(frozen=True)
class ReleaseSchedule:
    """Ordered, non-overlapping list of impulses and pulses."""

    releases: tuple = ()

    def __post_init__(self):
        rel = tuple(self.releases)
        prev_end, prev_start = -np.inf, -np.inf
        for r in rel:
            if r.amount < 0 or not np.isfinite(r.amount):
                raise ValueError(f"release amounts must be finite and >= 0: {r}")
            if isinstance(r, Pulse) and not r.duration > 0:
                raise ValueError(f"pulse duration must be positive: {r}")
            if not r.start > prev_start or r.start < prev_end:
                raise ValueError("releases must be strictly increasing and non-overlapping")
            prev_start, prev_end = r.start, r.end
        object.__setattr__(self, "releases", rel)

    @classmethod
    def from_lists(cls, impulses: Sequence = (), pulses: Sequence = ()) -> "ReleaseSchedule":
        items = [Impulse(float(t), float(c)) for t, c in impulses]
        items += [Pulse(float(s), float(d), float(c)) for s, d, c in pulses]
        return cls(tuple(sorted(items, key=lambda r: r.start)))

    @property
    def impulses(self) -> list[Impulse]:
        return [r for r in self.releases if isinstance(r, Impulse)]

    @property
    def pulses(self) -> list[Pulse]:
        return [r for r in self.releases if isinstance(r, Pulse)]

    def total(self) -> float:
        return sum(r.amount for r in self.releases)

    def control(self) -> ControlSignal:
        return ControlSignal(tuple((r.start, r.end, r.rate) for r in self.pulses if r.amount > 0))


def simulate_schedule(model: ModelSpec, pot: Optional[CostPotential], schedule: ReleaseSchedule,
                      p0: float, t_span: Sequence[float], tol: float = 1e-10,
                      backend: Optional[str] = None) -> Trajectory:
    """Mixed schedule: pulses act as release rates, impulses as jumps."""
    ta, tb = float(t_span[0]), float(t_span[1])
    if not tb > ta:
        raise ValueError("t_span must be increasing")
    if not 0.0 <= p0 <= 1.0:
        raise DomainError(f"p0 must lie in [0, 1], got {p0}")
    _check_tol(tol)
    impulses = schedule.impulses
    if impulses and pot is None:
        raise ValueError("impulses need a cost potential")
    for r in impulses:
        if not ta <= r.time <= tb:
            raise ValueError(f"impulse at t={r.time} lies outside {tuple(t_span)}")
    ctrl = schedule.control()
    rec = _Recorder(ta, p0)
    t, p, h0 = ta, float(p0), 0.0
    for r in impulses:
        if r.time > t:
            p, h0 = advance(model, ctrl, p, t, r.time, tol, backend=backend, recorder=rec, h0=h0)
            t = r.time
        p_plus = jump_map(pot, p, r.amount, r.time)
        rec.jump(r.time, p, p_plus)
        p = p_plus
    if tb > t:
        advance(model, ctrl, p, t, tb, tol, backend=backend, recorder=rec, h0=h0)
    return rec.build(tol, ctrl.pieces)


def simulate_impulsive(model: ModelSpec, pot: CostPotential, schedule: ReleaseSchedule,
                       p0: float, t_span: Sequence[float], tol: float = 1e-10,
                       backend: Optional[str] = None) -> Trajectory:
    """Uncontrolled flow between impulses, jump map at each impulse time."""
    if schedule.pulses:
        raise ValueError("simulate_impulsive accepts impulses only")
    return simulate_schedule(model, pot, schedule, p0, t_span, tol, backend)


def simulate_finite_rate(model: ModelSpec, schedule: ReleaseSchedule, p0: float,
                         t_span: Sequence[float], tol: float = 1e-10,
                         backend: Optional[str] = None) -> Trajectory:
    """Replace each pulse by the rate ``amount / duration`` over its support."""
    if schedule.impulses:
        raise ValueError("simulate_finite_rate accepts pulses only")
    return integrate_scalar(model, schedule.control(), p0, t_span, tol, backend=backend)

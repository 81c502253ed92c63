"""Controlled scalar ODE and two-compartment integration.

The scalar equation is ``p' = f(t, p) + u(t)/K(t) g(p)`` with a piecewise
constant release rate ``u``. Integration restarts exactly at every control
breakpoint so no step straddles a discontinuity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend, _dopri
from .dynamics import CarryingCapacity, ModelSpec, WolbachiaParams
from .errors import BlowUp, DomainError, SpanMismatch, StepFailure

PULSE_STEP_FRACTION = 20.0


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant release rate: ``(start, end, rate)`` pieces, zero elsewhere."""

    pieces: tuple = ()

    def __post_init__(self):
        pieces = tuple((float(a), float(b), float(r)) for a, b, r in self.pieces)
        prev_end = -np.inf
        for a, b, r in pieces:
            if not a < b:
                raise ValueError(f"control piece needs start < end, got ({a}, {b})")
            if not (np.isfinite(r) and r >= 0.0):
                raise ValueError(f"control rate must be finite and >= 0, got {r}")
            if a < prev_end:
                raise ValueError("control pieces must be sorted and non-overlapping")
            prev_end = b
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def zero(cls) -> "ControlSignal":
        return cls(())

    @classmethod
    def indicator(cls, t0: float, eps: float, amount: float) -> "ControlSignal":
        """Release of ``amount`` spread uniformly over ``[t0 - eps, t0]``."""
        return cls(((t0 - eps, t0, amount / eps),))

    def rate(self, t: float) -> float:
        for a, b, r in self.pieces:
            if a <= t < b:
                return r
        return 0.0

    def total(self) -> float:
        return sum((b - a) * r for a, b, r in self.pieces)

    def longest(self) -> float:
        return max((b - a for a, b, _ in self.pieces), default=0.0)

    def segments(self, ta: float, tb: float) -> list[tuple[float, float, float, float]]:
        """Split ``[ta, tb]`` at every breakpoint: ``(start, end, rate, width)``.

        ``width`` is the length of the enclosing piece (0 outside pieces).
        """
        cuts = {ta, tb}
        for a, b, _ in self.pieces:
            if ta < a < tb:
                cuts.add(a)
            if ta < b < tb:
                cuts.add(b)
        cuts = sorted(cuts)
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            rate, width = 0.0, 0.0
            mid = 0.5 * (a + b)
            for pa, pb, r in self.pieces:
                if pa <= mid < pb:
                    rate, width = r, pb - pa
                    break
            out.append((a, b, rate, width))
        return out


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution with DOPRI5 dense output between nodes.

    ``t`` is non-decreasing; a time repeats only at a recorded jump, where
    the first copy holds the left limit and the second the right limit.
    Evaluation is right-continuous.
    """

    t: np.ndarray
    y: np.ndarray
    coef: Optional[np.ndarray]
    jumps: tuple = ()
    tol: float = 1e-10
    forcing: tuple = ()
    labels: tuple = ("p",)
    evaluator: Optional[Callable] = field(default=None, repr=False)

    @property
    def t_span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def nodes(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.y.tolist()))

    def __call__(self, x):
        if self.evaluator is not None:
            return self.evaluator(x)
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = self.t
        n = t.shape[0]
        i = np.clip(np.searchsorted(t, x, side="right") - 1, 0, max(n - 2, 0))
        if n == 1 or self.coef is None:
            out = np.interp(x, t, self.y) if self.y.ndim == 1 else self.y[i]
        else:
            h = t[i + 1] - t[i]
            with np.errstate(invalid="ignore", divide="ignore"):
                s = np.where(h > 0, (x - t[i]) / np.where(h > 0, h, 1.0), 1.0)
            c = self.coef[i]
            if c.ndim == 3:
                s = s[:, None]
            r1, r2, r3, r4, r5 = (c[:, k] for k in range(5))
            out = r1 + s * (r2 + (1.0 - s) * (r3 + s * (r4 + (1.0 - s) * r5)))
            end = x >= t[-1]
            if end.any():
                out[end] = self.y[-1]
        return out[0] if scalar else out

    def at_end(self):
        return self.y[-1]

    def left_limit(self, x: float) -> float:
        """Value approaching ``x`` from the left (differs from ``self(x)`` at jumps)."""
        for tj, pm, _ in self.jumps:
            if tj == x:
                return pm
        return float(self(x))

    def csv_rows(self):
        if self.y.ndim == 1:
            return [(a, b) for a, b in zip(self.t.tolist(), self.y.tolist())]
        return [(a, *row) for a, row in zip(self.t.tolist(), self.y.tolist())]

    def to_csv(self, path) -> None:
        from .io import write_csv
        write_csv(path, ("t",) + tuple(self.labels), self.csv_rows())


def _check_tol(tol: float) -> None:
    if not 1e-13 <= tol <= 1e-3:
        raise ValueError(f"tol must lie in [1e-13, 1e-3], got {tol}")


class _Recorder:
    """Accumulates DOPRI segments (and jumps) into one Trajectory."""

    def __init__(self, t0: float, y0):
        self.ts = [np.array([t0])]
        self.ys = [np.array([y0], dtype=float)]
        self.cs = []
        self.jumps = []

    def add(self, ts, ys, cs):
        ts = np.asarray(ts, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if len(ts) > 1:
            self.ts.append(ts[1:])
            self.ys.append(ys[1:])
            self.cs.append(np.asarray(cs, dtype=float))

    def jump(self, t: float, pm: float, pp: float):
        self.ts.append(np.array([t]))
        self.ys.append(np.array([pp], dtype=float))
        self.cs.append(np.array([[pm, 0.0, 0.0, 0.0, 0.0]]))
        self.jumps.append((float(t), float(pm), float(pp)))

    def build(self, tol, forcing, labels=("p",)) -> Trajectory:
        t = np.concatenate(self.ts)
        y = np.concatenate(self.ys)
        coef = np.concatenate(self.cs) if self.cs else np.zeros((0, 5))
        return Trajectory(t=t, y=y, coef=coef, jumps=tuple(self.jumps), tol=tol,
                          forcing=tuple(forcing), labels=labels)


def _raise_for(code: int, t: float, y: float) -> None:
    if code == _dopri.BLOWUP:
        raise BlowUp(f"state {y!r} left [0, 1] beyond tolerance near t={t!r}")
    if code == _dopri.UNDERFLOW:
        raise StepFailure(f"step size underflow near t={t!r}")
    if code == _dopri.MAXSTEPS:
        raise StepFailure(f"too many steps near t={t!r}")
    if code != 0:
        raise StepFailure(f"integrator failure code {code}")


def rtol_for(tol: float) -> float:
    """Per-step tolerance handed to the kernel for a requested accuracy ``tol``."""
    return tol / 10.0


def advance(model: ModelSpec, control: ControlSignal, p0: float, ta: float, tb: float,
            tol: float, max_step: Optional[float] = None, backend: Optional[str] = None,
            recorder: Optional[_Recorder] = None, h0: float = 0.0):
    """Integrate from ``(ta, p0)`` to ``tb`` segment by segment.

    Returns ``(p(tb), h_next)``; appends nodes to ``recorder`` if given.
    """
    span = tb - ta
    hcap = span if max_step is None else min(max_step, span)
    rtol = rtol_for(tol)
    y = float(p0)
    for a, b, rate, width in control.segments(ta, tb):
        hmax = min(hcap, width / PULSE_STEP_FRACTION) if width > 0 else hcap
        code, y_end, ts, ys, cs, h0 = _backend.run_scalar(
            model, rate, a, b, y, rtol, rtol, hmax, min(h0, hmax) if h0 > 0 else 0.0,
            recorder is not None, tol, backend)
        _raise_for(code, a if ts is None or len(ts) == 0 else ts[-1], y_end)
        if recorder is not None:
            if len(ts) < 2:
                # span below the minimal step: no step taken, keep the breakpoint as a node
                ts, ys, cs = (a, b), (y, y_end), ((y, y_end - y, 0.0, 0.0, 0.0),)
            recorder.add(ts, ys, cs)
        y = float(y_end)
        if h0 < 64.0 * np.finfo(float).eps * max(abs(a), abs(b), 1.0):
            # a degenerate segment leaves no usable step estimate
            h0 = 0.0
    return y, h0


def integrate_scalar(model: ModelSpec, control: ControlSignal, p0: float,
                     t_span: Sequence[float], tol: float = 1e-10,
                     max_step: Optional[float] = None, backend: Optional[str] = None,
                     dense: bool = True):
    """Solve ``p' = f(t,p) + u(t)/K(t) g(p)`` on ``t_span`` from ``p0``.

    Parameters
    ----------
    model : ModelSpec
    control : ControlSignal
        Piecewise-constant release rate; every piece boundary inside the
        span becomes an exact node.
    p0 : float
        Initial proportion in [0, 1].
    t_span : (float, float)
    tol : float
        Target accuracy in [1e-13, 1e-3].
    backend : {"auto", "compiled", "python"}, optional
    dense : bool
        If False only the end value is returned (no node storage).

    Returns
    -------
    Trajectory, or float when ``dense`` is False.

    Raises
    ------
    BlowUp
        If the state leaves ``[-tol, 1 + tol]``.
    StepFailure
        On step-size underflow.
    """
    ta, tb = float(t_span[0]), float(t_span[1])
    if not tb > ta:
        raise ValueError("t_span must be increasing")
    if not 0.0 <= p0 <= 1.0:
        raise DomainError(f"p0 must lie in [0, 1], got {p0}")
    _check_tol(tol)
    if not dense:
        return advance(model, control, p0, ta, tb, tol, max_step, backend)[0]
    rec = _Recorder(ta, p0)
    advance(model, control, p0, ta, tb, tol, max_step, backend, rec)
    return rec.build(tol, control.pieces)


@dataclass(frozen=True)
class CompartmentState:
    n1: float
    n2: float

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise DomainError("compartment densities must be non-negative")

    def proportion(self) -> float:
        N = self.n1 + self.n2
        if not N > 0:
            raise DomainError("total density is zero; proportion undefined")
        return self.n2 / N


def compartment_rhs(params: WolbachiaParams, K: CarryingCapacity, sigma: float,
                    control: ControlSignal, rate: float = 0.0):
    q = params
    b1, b2 = q.b1 / sigma, q.b2 / sigma

    def rhs(t, n):
        n1, n2 = n[0], n[1]
        N = n1 + n2
        crowd = 1.0 - N / K(t)
        ci = 1.0 - q.sh * n2 / N if N > 0 else 1.0
        return np.array([b1 * n1 * ci * crowd - q.d1 * n1,
                         b2 * n2 * crowd - q.d2 * n2 + rate])
    return rhs


def integrate_compartments(params: WolbachiaParams, K: CarryingCapacity, sigma: float,
                           control: ControlSignal, init: CompartmentState,
                           t_span: Sequence[float], tol: float = 1e-10):
    """Integrate the unreduced wild/infected system with ``b_i = b_i^0 / sigma``.

    Returns ``(compartments, proportion)``: two trajectories, the first with
    columns ``n1, n2`` and the second ``p = n2 / (n1 + n2)``.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    _check_tol(tol)
    init.proportion()
    ta, tb = float(t_span[0]), float(t_span[1])
    y = np.array([init.n1, init.n2], dtype=float)
    ts_all, ys_all, cs_all = [np.array([ta])], [y[None, :]], []
    h0 = 0.0
    scale = max(K.maximum(), 1e-300)
    rtol = rtol_for(tol)
    for a, b, rate, width in control.segments(ta, tb):
        hmax = (b - a) if width == 0 else min(b - a, width / PULSE_STEP_FRACTION)
        rhs = compartment_rhs(params, K, sigma, control, rate)
        code, y_end, ts, ys, cs, h0 = _dopri.dopri_vector(
            rhs, a, b, y, rtol, rtol * scale, hmax, min(h0, hmax), lo=0.0, slack=tol * scale)
        if code == _dopri.BLOWUP:
            raise BlowUp(f"negative density near t={ts[-1]!r}")
        _raise_for(code, ts[-1], 0.0)
        ts_all.append(np.asarray(ts[1:]))
        ys_all.append(np.asarray(ys[1:]))
        cs_all.append(np.asarray(cs))
        y = y_end
    t = np.concatenate(ts_all)
    Y = np.concatenate(ys_all)
    coef = np.concatenate(cs_all)
    N = Y.sum(axis=1)
    if np.any(N <= 0):
        raise DomainError("total density vanished; proportion undefined")
    comp = Trajectory(t=t, y=Y, coef=coef, tol=tol, forcing=control.pieces,
                      labels=("n1", "n2"))

    def proportion(x):
        v = comp(x)
        v = np.asarray(v)
        return v[..., 1] / v.sum(axis=-1)

    prop = Trajectory(t=t, y=Y[:, 1] / N, coef=None, tol=tol, forcing=control.pieces,
                      labels=("p",), evaluator=proportion)
    return comp, prop


def sup_distance(a: Trajectory, b: Trajectory, t_span: Sequence[float], n: int = 1000,
                 window: Optional[float] = None) -> float:
    """Largest ``|a(t) - b(t)|`` over ``n`` uniform times in ``t_span``.

    Times in ``[t_j - w, t_j + w)`` around any jump ``t_j`` of either
    trajectory are skipped. By default ``w`` is twice the longest forcing
    piece of either trajectory, which hides the transit of a finite-rate
    release that stands in for an impulse.
    """
    ta, tb = float(t_span[0]), float(t_span[1])
    for tr in (a, b):
        lo, hi = tr.t_span
        if lo > ta + 1e-12 * max(1.0, abs(ta)) or hi < tb - 1e-12 * max(1.0, abs(tb)):
            raise SpanMismatch(f"trajectory covers [{lo}, {hi}], need [{ta}, {tb}]")
    grid = np.linspace(ta, tb, n)
    if window is None:
        longest = max([e - s for s, e, _ in (*a.forcing, *b.forcing)], default=0.0)
        window = 2.0 * longest
    keep = np.ones(n, dtype=bool)
    if window > 0:
        for tj, _, _ in (*a.jumps, *b.jumps):
            keep &= ~((grid >= tj - window) & (grid < tj + window))
    if not keep.any():
        return 0.0
    grid = grid[keep]
    return float(np.max(np.abs(np.asarray(a(grid)) - np.asarray(b(grid)))))


def reduction_gap(params: WolbachiaParams, K: CarryingCapacity, sigma: float,
                  control: ControlSignal, t_span: Sequence[float], tol: float = 1e-9,
                  model: Optional[ModelSpec] = None) -> float:
    """Sup-norm gap between the compartment proportion and the scalar model.

    Both start wild-type only: ``n1 = K(t0)(1 - sigma)``, ``n2 = 0`` and
    ``p = 0``; the same release rate drives both.
    """
    from .dynamics import build_wolbachia_model
    if model is None:
        model = build_wolbachia_model(params, K)
    ta = float(t_span[0])
    init = CompartmentState(float(K(ta)) * (1.0 - sigma), 0.0)
    _, prop = integrate_compartments(params, K, sigma, control, init, t_span, tol)
    scalar = integrate_scalar(model, control, 0.0, t_span, tol)
    return sup_distance(prop, scalar, t_span, window=0.0)

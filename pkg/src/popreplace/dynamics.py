"""Bistable periodic model families and their hypothesis checks.

A model is the pair of a periodic nonlinearity ``f(t, p)`` and a release
weight ``g(p)`` together with a positive periodic carrying capacity
``K(t)``. Three families are provided:

* ``wolbachia``: the reduced Wolbachia-replacement model with birth rates
  ``b1, b2``, death rates ``d1, d2`` and incompatibility rate ``sh``;
* ``separated``: ``f(t, p) = m(t) * ftilde(p)``;
* ``custom``: arbitrary analytic evaluators supplied in code.

All evaluators accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from ._numerics import bisect_root, integrate_doubling, richardson_simpson
from .errors import DomainError, InvalidParams

Evaluator = Callable[..., np.ndarray]


@dataclass(frozen=True)
class WolbachiaParams:
    """Birth/death rates and CI rate of the two-type competition model."""

    b1: float = 0.8
    b2: float = 0.6
    d1: float = 0.27
    d2: float = 0.3
    sh: float = 0.9

    @property
    def death_birth_ratio(self) -> float:
        """d1*b2 / (d2*b1), bracketed by ``condition_sh``."""
        return self.d1 * self.b2 / (self.d2 * self.b1)

    def violations(self) -> list[str]:
        out = []
        if not (self.b1 > self.d1 > 0 and self.b2 > self.d2 > 0):
            out.append("viability (b_i > d_i > 0)")
        if not (self.b1 > self.b2 and self.d1 <= self.d2):
            out.append("reduced fecundity/life span (b1 > b2, d1 <= d2)")
        if not (0.0 <= self.sh <= 1.0):
            out.append("sh in [0, 1]")
        if self.d2 > 0 and self.b1 > 0:
            r = self.death_birth_ratio
            if not (1.0 - self.sh < r < 1.0):
                out.append(f"condition_sh (1 - sh = {1.0 - self.sh:g}, d1*b2/(d2*b1) = {r:g})")
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise InvalidParams("invalid Wolbachia parameters: " + "; ".join(bad), bad)

    @property
    def theta_bar(self) -> float:
        """Interior zero of the period-averaged nonlinearity."""
        return (1.0 - self.death_birth_ratio) / self.sh

    @property
    def theta_bar_d(self) -> float:
        """Threshold of the equal-death-rate case, (b1 - b2) / (sh*b1)."""
        return (self.b1 - self.b2) / (self.sh * self.b1)

    def with_eta(self, eta: float) -> "WolbachiaParams":
        """Copy with ``d1 = d2 - eta``."""
        return WolbachiaParams(self.b1, self.b2, self.d2 - eta, self.d2, self.sh)

    def to_dict(self) -> dict:
        return {"b1": self.b1, "b2": self.b2, "d1": self.d1, "d2": self.d2, "sh": self.sh}


@dataclass(frozen=True)
class CarryingCapacity:
    """Positive T-periodic carrying capacity.

    Use :meth:`cosine` for ``K0 + A cos(2 pi t / T)`` or :meth:`sampled`
    for a uniform grid of values over one period (first == last); sampled
    capacities are interpolated by a periodic cubic spline.
    """

    kind: str
    T: float
    K0: float = 0.0
    A: float = 0.0
    samples: Optional[tuple] = None
    _spline: Optional[CubicSpline] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidParams("period T must be positive", ["T > 0"])
        if self.kind == "cosine":
            if not (self.K0 > self.A >= 0):
                raise InvalidParams(f"cosine capacity needs K0 > A >= 0, got K0={self.K0}, A={self.A}",
                                    ["K0 > A >= 0"])
        elif self.kind == "sampled":
            vals = np.asarray(self.samples, dtype=float)
            if vals.ndim != 1 or vals.size < 5:
                raise InvalidParams("sampled capacity needs at least 5 values", ["samples"])
            if not np.all(vals > 0):
                raise InvalidParams("sampled capacity must be strictly positive", ["min K > 0"])
            if vals[0] != vals[-1]:
                raise InvalidParams("sampled capacity must be periodic (first == last)", ["periodic"])
            t = np.linspace(0.0, self.T, vals.size)
            object.__setattr__(self, "_spline", CubicSpline(t, vals, bc_type="periodic"))
        else:
            raise InvalidParams(f"unknown capacity kind {self.kind!r}", ["kind"])

    @classmethod
    def cosine(cls, K0: float, A: float, T: float) -> "CarryingCapacity":
        return cls("cosine", float(T), float(K0), float(A))

    @classmethod
    def sampled(cls, values, T: float) -> "CarryingCapacity":
        return cls("sampled", float(T), samples=tuple(float(v) for v in values))

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T

    def __call__(self, t):
        if self.kind == "cosine":
            return self.K0 + self.A * np.cos(self.omega * t)
        return self._spline(np.mod(t, self.T))

    def derivative(self, t):
        if self.kind == "cosine":
            return -self.A * self.omega * np.sin(self.omega * t)
        return self._spline(np.mod(t, self.T), 1)

    def log_derivative(self, t):
        return self.derivative(t) / self(t)

    def minimizers(self, n: int = 2048) -> list[float]:
        """Global minimisers of K on [0, T)."""
        if self.kind == "cosine":
            return [0.0] if self.A == 0 else [self.T / 2.0]
        from ._numerics import golden_section
        t = np.linspace(0.0, self.T, n, endpoint=False)
        k = self(t)
        kmin = k.min()
        out = []
        h = self.T / n
        for i in np.flatnonzero(k <= kmin + 1e-12 * abs(kmin) + 1e-15):
            x, _ = golden_section(lambda s: float(self(s)), t[i] - h, t[i] + h, 1e-10 * self.T)
            x = x % self.T
            if all(abs(x - y) > 2 * h for y in out):
                out.append(x)
        return out

    def minimum(self) -> float:
        if self.kind == "cosine":
            return self.K0 - self.A
        return float(min(self(t) for t in self.minimizers()))

    def maximum(self) -> float:
        if self.kind == "cosine":
            return self.K0 + self.A
        t = np.linspace(0.0, self.T, 4096)
        return float(self(t).max())

    def to_dict(self) -> dict:
        if self.kind == "cosine":
            return {"kind": "cosine", "K0": self.K0, "A": self.A, "T": self.T}
        return {"kind": "sampled", "T": self.T, "samples": list(self.samples)}

    @classmethod
    def from_dict(cls, d: dict) -> "CarryingCapacity":
        if d["kind"] == "cosine":
            return cls.cosine(d["K0"], d["A"], d["T"])
        return cls.sampled(d["samples"], d["T"])


@dataclass(frozen=True)
class SeparatedSpec:
    """Factors of a separated nonlinearity ``f(t, p) = m(t) * ftilde(p)``."""

    m: Evaluator
    ftilde: Evaluator
    theta_bar: float
    dftilde: Optional[Evaluator] = None
    origin: Optional[dict] = None


@dataclass(frozen=True)
class ModelSpec:
    """Immutable bundle of evaluators describing one controlled model."""

    f: Evaluator
    dfdp: Evaluator
    g: Evaluator
    K: CarryingCapacity
    family: str
    params: Optional[WolbachiaParams] = None
    separated: Optional[SeparatedSpec] = None
    kernel: Optional[tuple] = None

    @property
    def T(self) -> float:
        return self.K.T

    def to_dict(self) -> dict:
        if self.family == "wolbachia":
            model = {"family": "wolbachia", "params": self.params.to_dict()}
        elif self.family == "separated" and self.separated.origin is not None:
            model = {"family": "separated", **self.separated.origin}
        else:
            raise TypeError("custom models carry code evaluators and cannot be serialised")
        model["capacity"] = self.K.to_dict()
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def model_from_dict(d: dict) -> ModelSpec:
    K = CarryingCapacity.from_dict(d["capacity"])
    if d["family"] == "wolbachia":
        return build_wolbachia_model(WolbachiaParams(**d["params"]), K, validate=False)
    if d["family"] == "separated":
        if d["origin"] == "wolbachia":
            return build_separated_model(separated_from_wolbachia(WolbachiaParams(**d["params"]), K), K)
        if d["origin"] == "cubic":
            return build_separated_model(cubic_separated(d["theta"], d["m_amp"], K.T), K)
    raise ValueError(f"cannot rebuild model from {d!r}")


def model_from_json(text: str) -> ModelSpec:
    return model_from_dict(json.loads(text))


def _wolbachia_denominator(q: WolbachiaParams, p):
    return q.b1 * (1.0 - p) * (1.0 - q.sh * p) + q.b2 * p


def _wolbachia_g(q: WolbachiaParams):
    def g(p):
        top = q.b1 * (1.0 - p) * (1.0 - q.sh * p)
        return top / (top + q.b2 * p)
    return g


def build_wolbachia_model(params: WolbachiaParams, K: CarryingCapacity,
                          validate: bool = True) -> ModelSpec:
    """Reduced Wolbachia model.

    ``f(t,p) = p(1-p)(alpha(t) p - beta(t)) / D(p)`` and
    ``g(p) = b1(1-p)(1-sh p) / D(p)`` with
    ``D(p) = b1(1-p)(1-sh p) + b2 p``,
    ``alpha = sh (d2 b1 + b1 K'/K)`` and
    ``beta = d2 b1 - d1 b2 + (b1 - b2) K'/K``.

    Raises :class:`InvalidParams` when ``validate`` and an invariant fails;
    pass ``validate=False`` to build a model for hypothesis reporting.
    """
    q = params
    if validate:
        q.validate()

    def alpha_beta(t):
        r = K.log_derivative(t)
        alpha = q.sh * (q.d2 * q.b1 + r * q.b1)
        beta = q.d2 * q.b1 - q.d1 * q.b2 + r * (q.b1 - q.b2)
        return alpha, beta

    def f(t, p):
        alpha, beta = alpha_beta(t)
        return p * (1.0 - p) * (alpha * p - beta) / _wolbachia_denominator(q, p)

    def dfdp(t, p):
        alpha, beta = alpha_beta(t)
        num = -alpha * p ** 3 + (alpha + beta) * p ** 2 - beta * p
        dnum = -3.0 * alpha * p ** 2 + 2.0 * (alpha + beta) * p - beta
        den = _wolbachia_denominator(q, p)
        dden = q.b1 * (2.0 * q.sh * p - (1.0 + q.sh)) + q.b2
        return (dnum * den - num * dden) / den ** 2

    kernel = None
    if K.kind == "cosine":
        kernel = ("wolbachia_cos", q.b1, q.b2, q.d1, q.d2, q.sh, K.K0, K.A, K.T)
    return ModelSpec(f=f, dfdp=dfdp, g=_wolbachia_g(q), K=K, family="wolbachia",
                     params=q, kernel=kernel)


def wolbachia_alpha(params: WolbachiaParams, K: CarryingCapacity) -> Evaluator:
    q = params
    return lambda t: q.sh * (q.d2 * q.b1 + K.log_derivative(t) * q.b1)


def separated_from_wolbachia(params: WolbachiaParams, K: CarryingCapacity) -> SeparatedSpec:
    """Separated form of the Wolbachia model when ``d1 == d2``.

    ``m = alpha`` and ``ftilde(p) = p(1-p)(p - theta_d) / D(p)``.
    """
    q = params
    if q.d1 != q.d2:
        raise InvalidParams("separated Wolbachia form needs d1 == d2", ["d1 == d2"])
    theta = q.theta_bar_d

    def ftilde(p):
        return p * (1.0 - p) * (p - theta) / _wolbachia_denominator(q, p)

    def dftilde(p):
        num = -p ** 3 + (1.0 + theta) * p ** 2 - theta * p
        dnum = -3.0 * p ** 2 + 2.0 * (1.0 + theta) * p - theta
        den = _wolbachia_denominator(q, p)
        dden = q.b1 * (2.0 * q.sh * p - (1.0 + q.sh)) + q.b2
        return (dnum * den - num * dden) / den ** 2

    return SeparatedSpec(m=wolbachia_alpha(q, K), ftilde=ftilde, theta_bar=theta,
                         dftilde=dftilde,
                         origin={"origin": "wolbachia", "params": q.to_dict()})


def cubic_separated(theta: float, m_amp: float, T: float) -> SeparatedSpec:
    """``m(t) = 1 + m_amp cos(2 pi t / T)``, ``ftilde(p) = p(1-p)(p - theta)``."""
    w = 2.0 * math.pi / T
    return SeparatedSpec(
        m=lambda t: 1.0 + m_amp * np.cos(w * np.asarray(t, dtype=float)),
        ftilde=lambda p: p * (1.0 - p) * (p - theta),
        dftilde=lambda p: -3.0 * p ** 2 + 2.0 * (1.0 + theta) * p - theta,
        theta_bar=float(theta),
        origin={"origin": "cubic", "theta": float(theta), "m_amp": float(m_amp)},
    )


def build_separated_model(spec: SeparatedSpec, K: CarryingCapacity,
                          g: Optional[Evaluator] = None) -> ModelSpec:
    """Model with ``f(t, p) = m(t) * ftilde(p)``.

    ``g`` defaults to the Wolbachia weight when the spec came from Wolbachia
    parameters and to ``1 - p`` otherwise.
    """
    bad = []
    theta = spec.theta_bar
    T = K.T
    mean_m = integrate_doubling(lambda t: np.broadcast_to(spec.m(t), t.shape), 0.0, T) / T
    if not mean_m > 0:
        bad.append(f"H7: integral of m over a period must be positive (mean {mean_m:g})")
    if not 0.0 < theta < 1.0:
        bad.append("theta_bar in (0, 1)")
    else:
        if abs(spec.ftilde(theta)) >= 1e-12:
            bad.append("ftilde(theta_bar) != 0")
        if abs(spec.ftilde(0.0)) >= 1e-12 or abs(spec.ftilde(1.0)) >= 1e-12:
            bad.append("ftilde(0) = ftilde(1) = 0")
        lo = np.linspace(0.0, theta, 66)[1:-1]
        hi = np.linspace(theta, 1.0, 66)[1:-1]
        if not (np.all(spec.ftilde(lo) < 0) and np.all(spec.ftilde(hi) > 0)):
            bad.append("H10: ftilde bistable sign pattern")
        h = 1e-6
        slope = (spec.dftilde(theta) if spec.dftilde is not None
                 else (spec.ftilde(theta + h) - spec.ftilde(theta - h)) / (2 * h))
        if not slope > 0:
            bad.append("H10: ftilde'(theta_bar) > 0")
    if bad:
        raise InvalidParams("invalid separated model: " + "; ".join(bad), bad)

    m, ft = spec.m, spec.ftilde
    if spec.dftilde is not None:
        dft = spec.dftilde
    else:
        def dft(p, h=1e-6):
            return (ft(p + h) - ft(p - h)) / (2 * h)

    def f(t, p):
        return m(t) * ft(p)

    def dfdp(t, p):
        return m(t) * dft(p)

    params = None
    kernel = None
    if g is None:
        if spec.origin is not None and spec.origin.get("origin") == "wolbachia":
            params = WolbachiaParams(**spec.origin["params"])
            g = _wolbachia_g(params)
            if K.kind == "cosine":
                q = params
                kernel = ("wolbachia_cos", q.b1, q.b2, q.d1, q.d2, q.sh, K.K0, K.A, K.T)
        else:
            g = lambda p: 1.0 - np.asarray(p, dtype=float)
    return ModelSpec(f=f, dfdp=dfdp, g=g, K=K, family="separated", params=params,
                     separated=spec, kernel=kernel)


def custom_model(f: Evaluator, dfdp: Evaluator, g: Evaluator, K: CarryingCapacity) -> ModelSpec:
    """Wrap analytic evaluators supplied in code (no validation)."""
    return ModelSpec(f=f, dfdp=dfdp, g=g, K=K, family="custom")


# --- period averages -------------------------------------------------------

def mean_nonlinearity(model: ModelSpec, p: float) -> float:
    """Period average ``f_m(p) = (1/T) int_0^T f(t, p) dt``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p = {p} outside [0, 1]")
    T = model.T
    return integrate_doubling(lambda t: model.f(t, p), 0.0, T, rtol=1e-10, atol=1e-15) / T


def wolbachia_mean_nonlinearity(params: WolbachiaParams, p):
    """Closed form of the period average for the Wolbachia family.

    The ``K'/K`` terms average to zero over a period.
    """
    q = params
    return (p * (1.0 - p) * (q.sh * q.d2 * q.b1 * p - q.d2 * q.b1 + q.d1 * q.b2)
            / _wolbachia_denominator(q, p))


def theta_bar(model: ModelSpec) -> float:
    """Interior zero of the mean nonlinearity.

    Closed form for Wolbachia and separated families; otherwise bisection of
    ``f_m`` on ``(1e-6, 1 - 1e-6)``.
    """
    if model.family == "separated":
        return model.separated.theta_bar
    if model.family == "wolbachia":
        return model.params.theta_bar
    delta = 1e-6
    return bisect_root(lambda p: mean_nonlinearity(model, p), delta, 1.0 - delta, xtol=1e-12)


# --- hypotheses ---------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    value: float
    detail: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "all_passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "value": c.value, "detail": c.detail}
                       for c in self.checks],
        }


def check_hypotheses(model: ModelSpec, grid_n: int = 64) -> HypothesisReport:
    """Sampled check of the standing hypotheses on ``model``.

    Means of ``dfdp(., 0)`` and ``dfdp(., 1)`` use composite Simpson on
    ``grid_n`` intervals with a Richardson error estimate against the
    half grid.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    grid_n += (-grid_n) % 4
    T = model.T
    t = np.linspace(0.0, T, grid_n + 1)
    pg = np.linspace(0.0, 1.0, 33)
    checks = []

    tt, pp = np.meshgrid(t, pg, indexing="ij")
    per = float(np.max(np.abs(model.f(tt + T, pp) - model.f(tt, pp))))
    checks.append(HypothesisCheck("H2_periodicity", per < 1e-10, per,
                                  "max |f(t+T,p) - f(t,p)|"))

    zeros = float(max(np.max(np.abs(model.f(t, 0.0))), np.max(np.abs(model.f(t, 1.0)))))
    checks.append(HypothesisCheck("H3_boundary_zeros", zeros < 1e-13, zeros,
                                  "max |f(t,0)|, |f(t,1)|"))

    for end in (0.0, 1.0):
        y = np.broadcast_to(model.dfdp(t, end), t.shape)
        integral, err = richardson_simpson(y, T / grid_n)
        mean = integral / T
        checks.append(HypothesisCheck(
            f"H4_mean_dfdp_{int(end)}", mean < 0, mean,
            f"Richardson error estimate {err / T:.3e}"))

    g0, g1 = float(model.g(0.0)), float(model.g(1.0))
    checks.append(HypothesisCheck("H5_g_boundary", abs(g0 - 1) < 1e-14 and abs(g1) < 1e-14,
                                  max(abs(g0 - 1), abs(g1)), "g(0) = 1, g(1) = 0"))
    gv = model.g(np.linspace(0.0, 1.0, 65))
    dg = float(np.max(np.diff(gv)))
    checks.append(HypothesisCheck("H5_g_decreasing", dg < 0, dg, "max g(p_{i+1}) - g(p_i)"))

    kmin = float(np.min(model.K(t)))
    checks.append(HypothesisCheck("H6_K_positive", kmin > 0, kmin, "min K on grid"))

    if model.family == "wolbachia" or (model.family == "separated" and model.params is not None):
        q = model.params
        r = q.death_birth_ratio
        checks.append(HypothesisCheck("condition_sh", 1.0 - q.sh < r < 1.0, r,
                                      f"need {1.0 - q.sh:g} < d1*b2/(d2*b1) < 1"))
        other = [v for v in q.violations() if not v.startswith("condition_sh")]
        checks.append(HypothesisCheck("parameter_ranges", not other, float(len(other)),
                                      "; ".join(other)))
    return HypothesisReport(tuple(checks))


def wolbachia_h4_closed_forms(params: WolbachiaParams) -> tuple[float, float]:
    """Closed-form period means of ``dfdp`` at ``p = 0`` and ``p = 1``."""
    q = params
    return (q.d1 * q.b2 / q.b1 - q.d2, q.d2 * q.b1 / q.b2 * (1.0 - q.sh) - q.d1)

"""Poincare maps, periodic solutions and basins of attraction."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import bisect_root, parallel_map, simpson
from .dynamics import ModelSpec
from .errors import DomainError, NoInteriorZero, TangentZeroWarning
from .integrate import ControlSignal, Trajectory, integrate_scalar

ZERO = ControlSignal()
BASIN_MARGIN = 1e-9
LAMBDA_EPS = 1e-8
BISECT_WIDTH = 1e-11


def poincare_map(model: ModelSpec, t_shift: float, p0: float, tol: float = 1e-10,
                 backend: Optional[str] = None) -> float:
    """``P(p0) = p(t_shift + T)`` for the uncontrolled flow started at ``(t_shift, p0)``."""
    if not 0.0 <= p0 <= 1.0:
        raise DomainError(f"p0 must lie in [0, 1], got {p0}")
    if p0 == 0.0 or p0 == 1.0:
        # boundary equilibria; the kernel would return them exactly anyway
        return float(p0)
    T = model.T
    return integrate_scalar(model, ZERO, p0, (t_shift, t_shift + T), tol,
                            backend=backend, dense=False)


@dataclass(frozen=True)
class PoincareSample:
    t_shift: float
    p0: np.ndarray
    values: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return self.values - self.p0

    def csv_rows(self):
        return list(zip(self.p0.tolist(), self.phi.tolist()))


def poincare_sample(model: ModelSpec, t_shift: float = 0.0, grid_n: int = 256,
                    tol: float = 1e-10, threads: Optional[int] = None) -> PoincareSample:
    """Evaluate P on the uniform grid ``i / grid_n``, ``i = 0..grid_n``."""
    p0 = np.linspace(0.0, 1.0, grid_n + 1)
    vals = parallel_map(lambda x: poincare_map(model, t_shift, float(x), tol), p0, threads)
    return PoincareSample(float(t_shift), p0, np.asarray(vals, dtype=float))


@dataclass(frozen=True)
class PeriodicOrbit:
    x: float
    orbit: Trajectory
    t: np.ndarray
    p: np.ndarray
    lam: float

    @property
    def attractive(self) -> Optional[bool]:
        if abs(self.lam) < LAMBDA_EPS:
            return None
        return bool(self.lam > 0)


@dataclass(frozen=True)
class PeriodicEnvelope:
    """Minimal and maximal T-periodic solutions with their eigenvalues."""

    T: float
    zeros: tuple
    orbits: tuple
    sample: PoincareSample
    tangents: tuple = ()

    @property
    def minimal(self) -> PeriodicOrbit:
        return self.orbits[0]

    @property
    def maximal(self) -> PeriodicOrbit:
        return self.orbits[-1]

    @property
    def x_m(self) -> float:
        return self.minimal.x

    @property
    def x_M(self) -> float:
        return self.maximal.x

    @property
    def lambda_m(self) -> float:
        return self.minimal.lam

    @property
    def lambda_M(self) -> float:
        return self.maximal.lam

    @property
    def unique(self) -> bool:
        return len(self.zeros) == 1

    def samples(self, which: str = "max") -> tuple[np.ndarray, np.ndarray]:
        o = self.maximal if which == "max" else self.minimal
        return o.t, o.p

    def csv_rows(self):
        t = self.minimal.t
        return list(zip(t.tolist(), self.minimal.p.tolist(), self.maximal.p.tolist()))

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "zeros": list(self.zeros),
            "x_m": self.x_m,
            "x_M": self.x_M,
            "lambda_m": self.lambda_m,
            "lambda_M": self.lambda_M,
            "attractive_m": self.minimal.attractive,
            "attractive_M": self.maximal.attractive,
            "eigenvalues": [o.lam for o in self.orbits],
            "tangent_points": list(self.tangents),
        }


def principal_eigenvalue(model: ModelSpec, t: np.ndarray, p: np.ndarray) -> float:
    """``-(1/T) * integral of dfdp(t, p(t))`` by Simpson on uniform orbit samples."""
    vals = np.asarray(model.dfdp(t, p), dtype=float)
    T = t[-1] - t[0]
    return float(-simpson(vals, T / (len(t) - 1)) / T)


def periodic_orbit(model: ModelSpec, x: float, tol: float = 1e-10,
                   orbit_n: int = 512) -> PeriodicOrbit:
    if orbit_n % 2:
        orbit_n += 1
    T = model.T
    tr = integrate_scalar(model, ZERO, x, (0.0, T), tol)
    t = np.linspace(0.0, T, orbit_n + 1)
    p = np.asarray(tr(t), dtype=float)
    return PeriodicOrbit(float(x), tr, t, p, principal_eigenvalue(model, t, p))


def _tangent_points(x: np.ndarray, phi: np.ndarray, tol: float) -> list[float]:
    out = []
    thresh = max(1e3 * tol, 1e-7)
    a = np.abs(phi)
    for i in range(1, len(phi) - 1):
        if phi[i] == 0.0:
            continue
        same = np.sign(phi[i - 1]) == np.sign(phi[i]) == np.sign(phi[i + 1])
        if same and a[i] <= a[i - 1] and a[i] <= a[i + 1] and a[i] < thresh:
            out.append(float(x[i]))
    return out


def find_periodic_envelope(model: ModelSpec, grid_n: int = 256, tol: float = 1e-10,
                           orbit_n: int = 512, threads: Optional[int] = None) -> PeriodicEnvelope:
    """Locate all transversal zeros of ``Phi = P - Id`` in (0, 1).

    Parameters
    ----------
    model : ModelSpec
    grid_n : int
        Uniform grid ``i / grid_n`` on which the sign of Phi is scanned (>= 64).
    tol : float
        Integrator accuracy.
    orbit_n : int
        Number of samples of each periodic orbit over one period.

    Raises
    ------
    NoInteriorZero
        If Phi has no sign change on the grid.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    sample = poincare_sample(model, 0.0, grid_n, tol, threads)
    x, phi = sample.p0[1:-1], sample.phi[1:-1]
    phi_fn = lambda v: poincare_map(model, 0.0, v, tol) - v  # noqa: E731
    zeros = []
    for i in range(len(x)):
        if phi[i] == 0.0:
            zeros.append(float(x[i]))
        elif i + 1 < len(x) and phi[i] * phi[i + 1] < 0.0:
            zeros.append(bisect_root(phi_fn, float(x[i]), float(x[i + 1]), BISECT_WIDTH,
                                     f_lo=float(phi[i])))
    tangents = _tangent_points(x, phi, tol)
    if tangents:
        warnings.warn(f"Phi touches zero without a sign change near {tangents}",
                      TangentZeroWarning, stacklevel=2)
    if not zeros:
        raise NoInteriorZero("Phi = P - Id has no sign change in (0, 1); check the "
                             "hypotheses or refine the grid")
    orbits = tuple(parallel_map(lambda z: periodic_orbit(model, z, tol, orbit_n), zeros, threads))
    return PeriodicEnvelope(model.T, tuple(zeros), orbits, sample, tuple(tangents))


def envelope_at(env: PeriodicEnvelope, which: str, t):
    """Value of the maximal (``"max"``) or minimal (``"min"``) periodic solution at ``t``."""
    if which not in ("max", "min"):
        raise ValueError("which must be 'max' or 'min'")
    o = env.maximal if which == "max" else env.minimal
    tt = np.mod(np.asarray(t, dtype=float), env.T)
    return o.orbit(tt)


class Basin(str, enum.Enum):
    ONE = "ConvergesToOne"
    ZERO = "ConvergesToZero"
    BETWEEN = "BetweenEnvelope"


@dataclass(frozen=True)
class BasinVerdict:
    outcome: Basin
    witness: float


def classify_basin(env: PeriodicEnvelope, t_bar: float, p0: float,
                   margin: float = BASIN_MARGIN) -> BasinVerdict:
    """Long-time fate of the solution started at ``(t_bar, p0)``.

    Above the maximal periodic solution (plus ``margin``) it tends to 1,
    below the minimal one (minus ``margin``) to 0.
    """
    if not 0.0 <= p0 <= 1.0:
        raise DomainError(f"p0 must lie in [0, 1], got {p0}")
    hi = float(envelope_at(env, "max", t_bar))
    if p0 > hi + margin:
        return BasinVerdict(Basin.ONE, hi)
    lo = float(envelope_at(env, "min", t_bar))
    if p0 < lo - margin:
        return BasinVerdict(Basin.ZERO, lo)
    return BasinVerdict(Basin.BETWEEN, hi)

"""Small numerical helpers: quadrature, bracketing searches, slope fits."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def simpson(y: np.ndarray, dx: float) -> float:
    """Composite Simpson rule on uniformly spaced samples (odd count)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0] - 1
    if n < 2 or n % 2:
        raise ValueError("simpson needs an even number of intervals")
    return float(dx / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def integrate_doubling(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       rtol: float = 1e-10, atol: float = 1e-14,
                       n0: int = 16, max_n: int = 1 << 20) -> float:
    """Composite Simpson with interval doubling until two estimates agree.

    ``fn`` must accept an array of abscissae.
    """
    n = n0
    x = np.linspace(a, b, n + 1)
    prev = simpson(fn(x), (b - a) / n)
    while True:
        n *= 2
        x = np.linspace(a, b, n + 1)
        cur = simpson(fn(x), (b - a) / n)
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return cur
        if n >= max_n:
            return cur
        prev = cur


def richardson_simpson(y: np.ndarray, dx: float) -> tuple[float, float]:
    """Simpson estimate on ``y`` plus a Richardson error estimate.

    The coarse estimate uses every other sample; requires (len(y) - 1)
    divisible by 4.
    """
    fine = simpson(y, dx)
    coarse = simpson(y[::2], 2.0 * dx)
    return fine, abs(fine - coarse) / 15.0


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def panel_integrals(fn: Callable[[np.ndarray], np.ndarray], edges: np.ndarray,
                    tol: float, depth: int = 0) -> np.ndarray:
    """Integral of ``fn`` over each panel ``[edges[i], edges[i+1]]``.

    Each panel is integrated with 8- and 16-point Gauss-Legendre rules;
    panels whose two estimates differ by more than ``tol`` are bisected
    and redone recursively.
    """
    a = edges[:-1]
    b = edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    ests = []
    for n in (8, 16):
        x, w = _gauss_legendre(n)
        pts = mid[:, None] + half[:, None] * x[None, :]
        ests.append(half * (fn(pts) * w[None, :]).sum(axis=1))
    lo, hi = ests
    bad = np.abs(hi - lo) > tol
    if bad.any() and depth < 30:
        for i in np.flatnonzero(bad):
            hi[i] = panel_integrals(fn, np.array([a[i], mid[i], b[i]]), tol / 2, depth + 1).sum()
    return hi


def bisect_root(fn: Callable[[float], float], lo: float, hi: float,
                xtol: float = 1e-12, f_lo: float | None = None,
                max_iter: int = 200) -> float:
    """Bisection for a sign change of ``fn`` in ``[lo, hi]``."""
    if f_lo is None:
        f_lo = fn(lo)
    for _ in range(max_iter):
        if hi - lo < xtol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_threshold(feasible: Callable[[float], bool], lo: float, hi: float,
                     width: float, history: list | None = None) -> float:
    """Smallest feasible value of a monotone predicate, to bracket ``width``.

    Requires ``feasible(hi)`` true and ``feasible(lo)`` false. Returns the
    upper (feasible) end of the final bracket.
    """
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        if history is not None:
            history.append((lo, hi))
    return hi


def golden_section(fn: Callable[[float], float], a: float, b: float,
                   tol: float) -> tuple[float, float]:
    """Golden-section minimisation of a unimodal ``fn`` on ``[a, b]``.

    Returns ``(x, fn(x))`` for the best point evaluated.
    """
    a, b = min(a, b), max(a, b)
    c = a + INV_PHI2 * (b - a)
    d = a + INV_PHI * (b - a)
    fc = fn(c)
    fd = fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = a + INV_PHI2 * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def periodic_distance(a: float, b: float, period: float) -> float:
    d = abs(a - b) % period
    return min(d, period - d)


_THREADS = 1


def set_threads(n: int) -> None:
    """Default worker count for :func:`parallel_map` (compiled kernels drop the GIL)."""
    global _THREADS
    _THREADS = max(1, int(n))


def parallel_map(fn: Callable, items, threads: int | None = None) -> list:
    """Order-preserving map, threaded when more than one worker is requested."""
    items = list(items)
    n = _THREADS if threads is None else max(1, int(threads))
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))

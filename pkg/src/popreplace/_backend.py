"""Selects the compiled DOPRI5 kernel when available.

Set ``POPREPLACE_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
from __future__ import annotations

import os

from . import _dopri

_compiled = None
if os.environ.get("POPREPLACE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

HAVE_COMPILED = _compiled is not None
DEFAULT = "compiled" if HAVE_COMPILED else "python"


def resolve(backend: str | None) -> str:
    """Normalise a backend request to ``"compiled"`` or ``"python"``."""
    if backend is None or backend == "auto":
        return DEFAULT
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel is not available in this installation")
    return backend


def run_scalar(model, rate: float, ta: float, tb: float, y0: float, rtol: float,
               atol: float, hmax: float, h0: float, store: bool, slack: float,
               backend: str | None = None):
    """One DOPRI5 segment of ``p' = f(t,p) + rate/K(t) g(p)`` on ``[ta, tb]``.

    Uses the compiled kernel when the model exposes one and the backend
    allows it; otherwise the Python kernel with model evaluators.
    """
    which = resolve(backend)
    kern = model.kernel
    if which == "compiled" and kern is not None and kern[0] == "wolbachia_cos":
        return _compiled.dopri_wolbachia(ta, tb, y0, rate, rtol, atol, hmax, h0, store,
                                         tuple(kern[1:]), 0.0, 1.0, slack)
    f, g, K = model.f, model.g, model.K
    if rate == 0.0:
        rhs = f
    else:
        def rhs(t, p):
            return f(t, p) + rate / K(t) * g(p)
    return _dopri.dopri_scalar(rhs, ta, tb, y0, rtol, atol, hmax, h0, store,
                               0.0, 1.0, slack)

import os
import subprocess
import sys

import numpy as np
import pytest

from popreplace import _backend, _dopri
from popreplace.integrate import ControlSignal, integrate_scalar
from popreplace.periodic import poincare_map

compiled = pytest.mark.skipif(not _backend.HAVE_COMPILED, reason="compiled kernel not built")


def test_resolve():
    assert _backend.resolve(None) == _backend.DEFAULT
    assert _backend.resolve("auto") == _backend.DEFAULT
    assert _backend.resolve("python") == "python"
    with pytest.raises(ValueError):
        _backend.resolve("fortran")


@compiled
@pytest.mark.parametrize("ctrl", [ControlSignal(), ControlSignal(((5.9, 6.0, 0.2),)),
                                  ControlSignal(((1.0, 4.0, 0.005), (7.0, 7.5, 0.01)))])
def test_dense_parity(model, ctrl):
    a = integrate_scalar(model, ctrl, 0.1, (0, 24), 1e-10, backend="compiled")
    b = integrate_scalar(model, ctrl, 0.1, (0, 24), 1e-10, backend="python")
    # same algorithm, same step sequence: agreement to rounding
    assert a.t.shape == b.t.shape
    assert np.max(np.abs(a.t - b.t)) < 1e-12
    assert np.max(np.abs(a.y - b.y)) < 1e-12
    g = np.linspace(0, 24, 999)
    assert np.max(np.abs(a(g) - b(g))) < 1e-12


@compiled
def test_poincare_parity(model, sep_model):
    for m in (model, sep_model):
        for x in np.linspace(0.05, 0.95, 10):
            a = poincare_map(m, 2.0, float(x), 1e-11, backend="compiled")
            b = poincare_map(m, 2.0, float(x), 1e-11, backend="python")
            assert abs(a - b) < 1e-13


@compiled
def test_compiled_error_codes(model):
    from popreplace import _kernels
    kern = tuple(model.kernel[1:])
    code, *_ = _kernels.dopri_wolbachia(0.0, 12.0, 0.3, 0.0, 1e-10, 1e-10, 12.0, 0.0, False,
                                        kern, 0.0, 1.0, 0.0)
    assert code == 0
    # with the upper bound lowered to 0.5 a strong release must leave the box
    code, *_ = _kernels.dopri_wolbachia(0.0, 1.0, 0.4, 1.0, 1e-10, 1e-10, 1.0, 0.0, False,
                                        kern, 0.0, 0.5, 0.0)
    assert code == _dopri.BLOWUP


def test_pure_python_env_switch():
    env = dict(os.environ, POPREPLACE_PURE_PYTHON="1")
    code = ("from popreplace import _backend, HAVE_COMPILED; "
            "from popreplace.dynamics import *; from popreplace.periodic import poincare_map; "
            "m = build_wolbachia_model(WolbachiaParams(), CarryingCapacity.cosine(0.06, 0.02, 12)); "
            "print(HAVE_COMPILED, _backend.DEFAULT, repr(poincare_map(m, 0.0, 0.5, 1e-11)))")
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    flag, default, value = r.stdout.split()
    assert flag == "False" and default == "python"
    from popreplace.dynamics import CarryingCapacity, WolbachiaParams, build_wolbachia_model
    m = build_wolbachia_model(WolbachiaParams(), CarryingCapacity.cosine(0.06, 0.02, 12))
    assert abs(float(value) - poincare_map(m, 0.0, 0.5, 1e-11)) < 1e-13


def test_python_kernel_blowup_code():
    code, *_ = _dopri.dopri_scalar(lambda t, y: 5.0, 0.0, 1.0, 0.5, 1e-10, 1e-10, 1.0, 0.0,
                                   False, 0.0, 1.0, 1e-10)
    assert code == _dopri.BLOWUP

"""Pure-Python Dormand-Prince 5(4) kernels.

These are the fallback for :mod:`popreplace._kernels` and the only path for
models without a compiled right-hand side. The step controller is the PI
controller of Hairer, Norsett & Wanner (DOPRI5), the dense output is the
order-4 continuous extension stored as five coefficients per step::

    y(t_k + s h) = r1 + s (r2 + (1-s) (r3 + s (r4 + (1-s) r5)))

Return codes shared with the compiled kernel: 0 ok, 1 state left its
admissible range, 2 step size underflow, 3 too many steps.
"""
from __future__ import annotations

import numpy as np

OK, BLOWUP, UNDERFLOW, MAXSTEPS = 0, 1, 2, 3

C2, C3, C4, C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
A21 = 0.2
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
D1, D3, D4, D5, D6, D7 = (-12715105075.0 / 11282082432.0, 87487479700.0 / 32700410799.0,
                          -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
                          -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0)

SAFE = 0.9
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
FACC1 = 1.0 / 0.2    # hnew / h <= 5
FACC2 = 1.0 / 10.0   # hnew / h >= 0.1
MAX_STEPS = 1_000_000


def initial_step(rhs, t, y, f0, direction_span, rtol, atol, hmax):
    """Starting step estimate (Hairer's HINIT, order 5)."""
    sk = atol + rtol * abs(y)
    d0 = abs(y) / sk
    d1 = abs(f0) / sk
    h = 1e-6 if (d0 < 1e-10 or d1 < 1e-10) else 0.01 * d0 / d1
    h = min(h, hmax, direction_span)
    y1 = y + h * f0
    f1 = rhs(t + h, y1)
    d2 = abs(f1 - f0) / sk / h
    big = max(d1, d2)
    h1 = max(1e-6, h * 1e-3) if big <= 1e-15 else (0.01 / big) ** 0.2
    return min(100.0 * h, h1, hmax, direction_span)


def dopri_scalar(rhs, ta: float, tb: float, y0: float, rtol: float, atol: float,
                 hmax: float, h0: float, store: bool, lo: float = 0.0, hi: float = 1.0,
                 slack: float = 0.0):
    """Integrate the scalar ODE ``y' = rhs(t, y)`` on ``[ta, tb]``.

    Accepted states outside ``[lo - slack, hi + slack]`` stop the run with
    code BLOWUP; states within the slack are projected onto ``[lo, hi]``.
    Returns ``(code, y_end, t_nodes, y_nodes, coef, h_next)``; node arrays
    are ``None`` unless ``store``.
    """
    t = ta
    y = y0
    span = tb - ta
    ts = [t] if store else None
    ys = [y] if store else None
    cs = [] if store else None
    k1 = rhs(t, y)
    h = h0 if h0 > 0 else initial_step(rhs, t, y, k1, span, rtol, atol, hmax)
    h = min(h, hmax)
    facold = 1e-4
    reject = False
    nstep = 0
    hmin = 16.0 * 2.220446049250313e-16 * max(abs(ta), abs(tb), 1.0)
    while t < tb:
        if nstep > MAX_STEPS:
            return MAXSTEPS, y, ts, ys, cs, h
        last = False
        if t + 1.01 * h >= tb or tb - t < hmin:
            h = tb - t
            last = True
        if h < hmin:
            if last:
                t = tb
                if store:
                    ts[-1] = tb
                break
            return UNDERFLOW, y, ts, ys, cs, h
        nstep += 1
        k2 = rhs(t + C2 * h, y + h * A21 * k1)
        k3 = rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        tnew = tb if last else t + h
        k7 = rhs(tnew, ynew)
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sk = atol + rtol * max(abs(y), abs(ynew))
        err = abs(errv) / sk
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(FACC2, min(FACC1, fac / SAFE))
        hnew = h / fac
        if err <= 1.0:
            facold = max(err, 1e-4)
            if ynew < lo - slack or ynew > hi + slack:
                return BLOWUP, ynew, ts, ys, cs, h
            if store:
                ydiff = ynew - y
                bspl = h * k1 - ydiff
                cs.append((y, ydiff, bspl, ydiff - h * k7 - bspl,
                           h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)))
            if ynew < lo or ynew > hi:
                ynew = lo if ynew < lo else hi
                k7 = rhs(tnew, ynew)
            k1 = k7
            y = ynew
            t = tnew
            if store:
                ts.append(t)
                ys.append(y)
            if abs(hnew) > hmax:
                hnew = hmax
            if reject:
                hnew = min(hnew, h)
            reject = False
            if last:
                h = hnew
                break
        else:
            hnew = h / min(FACC1, fac11 / SAFE)
            reject = True
        h = hnew
    return OK, y, ts, ys, cs, h


def dopri_vector(rhs, ta: float, tb: float, y0: np.ndarray, rtol: float, atol: float,
                 hmax: float, h0: float, lo: float = 0.0, slack: float = 0.0):
    """Vector DOPRI5 on ``[ta, tb]``; components are kept ``>= lo``.

    Always stores nodes. Returns ``(code, y_end, t_nodes, y_nodes, coef, h_next)``
    with ``coef`` of shape ``(steps, 5, dim)``.
    """
    t = ta
    y = np.array(y0, dtype=float)
    span = tb - ta
    ts = [t]
    ys = [y.copy()]
    cs = []
    k1 = rhs(t, y)
    if h0 > 0:
        h = h0
    else:
        sk = atol + rtol * np.abs(y)
        d0 = float(np.max(np.abs(y) / sk))
        d1 = float(np.max(np.abs(k1) / sk))
        h = 1e-6 if (d0 < 1e-10 or d1 < 1e-10) else 0.01 * d0 / d1
        h = min(h, hmax, span)
    h = min(h, hmax)
    facold = 1e-4
    reject = False
    nstep = 0
    hmin = 16.0 * 2.220446049250313e-16 * max(abs(ta), abs(tb), 1.0)
    while t < tb:
        if nstep > MAX_STEPS:
            return MAXSTEPS, y, ts, ys, cs, h
        last = False
        if t + 1.01 * h >= tb or tb - t < hmin:
            h = tb - t
            last = True
        if h < hmin:
            if last:
                t = tb
                ts[-1] = tb
                break
            return UNDERFLOW, y, ts, ys, cs, h
        nstep += 1
        k2 = rhs(t + C2 * h, y + h * A21 * k1)
        k3 = rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        tnew = tb if last else t + h
        k7 = rhs(tnew, ynew)
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sk = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = float(np.max(np.abs(errv) / sk))
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(FACC2, min(FACC1, fac / SAFE))
        hnew = h / fac
        if err <= 1.0:
            facold = max(err, 1e-4)
            if np.any(ynew < lo - slack):
                return BLOWUP, ynew, ts, ys, cs, h
            ydiff = ynew - y
            bspl = h * k1 - ydiff
            cs.append(np.stack((y, ydiff, bspl, ydiff - h * k7 - bspl,
                                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7))))
            if np.any(ynew < lo):
                ynew = np.maximum(ynew, lo)
                k7 = rhs(tnew, ynew)
            k1 = k7
            y = ynew
            t = tnew
            ts.append(t)
            ys.append(y.copy())
            hnew = min(hnew, hmax)
            if reject:
                hnew = min(hnew, h)
            reject = False
            if last:
                h = hnew
                break
        else:
            hnew = h / min(FACC1, fac11 / SAFE)
            reject = True
        h = hnew
    return OK, y, ts, ys, cs, h

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled DOPRI5 kernel for the Wolbachia model with cosine capacity.

Mirrors :func:`popreplace._dopri.dopri_scalar` step for step; the
right-hand side is inlined and the loop runs without the GIL.
"""
from libc.math cimport cos, sin, fabs, pow, fmax, fmin
from libc.stdlib cimport malloc, realloc, free

import numpy as np

cdef double C2 = 0.2
cdef double C3 = 0.3
cdef double C4 = 0.8
cdef double C5 = 8.0 / 9.0
cdef double A21 = 0.2
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0
cdef double A73 = 500.0 / 1113.0
cdef double A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0
cdef double A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0
cdef double D1 = -12715105075.0 / 11282082432.0
cdef double D3 = 87487479700.0 / 32700410799.0
cdef double D4 = -10690763975.0 / 1880347072.0
cdef double D5 = 701980252875.0 / 199316789632.0
cdef double D6 = -1453857185.0 / 822651844.0
cdef double D7 = 69997945.0 / 29380423.0
cdef double SAFE = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef double FACC1 = 5.0
cdef double FACC2 = 0.1
cdef long MAX_STEPS = 1000000

cdef struct Wolb:
    double b1, b2, d1, d2, sh, K0, A, omega, rate


cdef inline double rhs(const Wolb* q, double t, double p) noexcept nogil:
    cdef double K = q.K0 + q.A * cos(q.omega * t)
    cdef double r = (-q.A * q.omega * sin(q.omega * t)) / K
    cdef double alpha = q.sh * (q.d2 * q.b1 + r * q.b1)
    cdef double beta = q.d2 * q.b1 - q.d1 * q.b2 + r * (q.b1 - q.b2)
    cdef double top = q.b1 * (1.0 - p) * (1.0 - q.sh * p)
    cdef double den = top + q.b2 * p
    cdef double out = p * (1.0 - p) * (alpha * p - beta) / den
    if q.rate != 0.0:
        out = out + q.rate / K * (top / den)
    return out


cdef struct Buf:
    double* t
    double* y
    double* c
    Py_ssize_t n
    Py_ssize_t cap


cdef int buf_push(Buf* b, double t, double y, double c1, double c2, double c3,
                  double c4, double c5) noexcept nogil:
    cdef Py_ssize_t newcap
    if b.n + 1 >= b.cap:
        newcap = 2 * b.cap
        b.t = <double*> realloc(b.t, newcap * sizeof(double))
        b.y = <double*> realloc(b.y, newcap * sizeof(double))
        b.c = <double*> realloc(b.c, 5 * newcap * sizeof(double))
        if b.t == NULL or b.y == NULL or b.c == NULL:
            return -1
        b.cap = newcap
    b.c[5 * (b.n - 1)] = c1
    b.c[5 * (b.n - 1) + 1] = c2
    b.c[5 * (b.n - 1) + 2] = c3
    b.c[5 * (b.n - 1) + 3] = c4
    b.c[5 * (b.n - 1) + 4] = c5
    b.t[b.n] = t
    b.y[b.n] = y
    b.n += 1
    return 0


cdef double initial_step(const Wolb* q, double t, double y, double f0, double span,
                         double rtol, double atol, double hmax) noexcept nogil:
    cdef double sk = atol + rtol * fabs(y)
    cdef double d0 = fabs(y) / sk
    cdef double d1 = fabs(f0) / sk
    cdef double h, y1, f1, d2, big, h1
    if d0 < 1e-10 or d1 < 1e-10:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = fmin(fmin(h, hmax), span)
    y1 = y + h * f0
    f1 = rhs(q, t + h, y1)
    d2 = fabs(f1 - f0) / sk / h
    big = fmax(d1, d2)
    if big <= 1e-15:
        h1 = fmax(1e-6, h * 1e-3)
    else:
        h1 = pow(0.01 / big, 0.2)
    return fmin(fmin(fmin(100.0 * h, h1), hmax), span)


cdef int run(const Wolb* q, double ta, double tb, double y0, double rtol, double atol,
             double hmax, double h0, bint store, double lo, double hi, double slack,
             Buf* b, double* y_out, double* h_out) noexcept nogil:
    cdef double t = ta, y = y0, span = tb - ta
    cdef double k1, k2, k3, k4, k5, k6, k7, ynew, tnew, errv, sk, err
    cdef double fac11, fac, hnew, h, facold = 1e-4, ydiff, bspl
    cdef double hmin = 16.0 * 2.220446049250313e-16 * fmax(fmax(fabs(ta), fabs(tb)), 1.0)
    cdef bint reject = False, last
    cdef long nstep = 0
    k1 = rhs(q, t, y)
    if h0 > 0:
        h = h0
    else:
        h = initial_step(q, t, y, k1, span, rtol, atol, hmax)
    h = fmin(h, hmax)
    while t < tb:
        if nstep > MAX_STEPS:
            y_out[0] = y
            h_out[0] = h
            return 3
        last = False
        if t + 1.01 * h >= tb or tb - t < hmin:
            h = tb - t
            last = True
        if h < hmin:
            if last:
                t = tb
                if store:
                    b.t[b.n - 1] = tb
                break
            y_out[0] = y
            h_out[0] = h
            return 2
        nstep += 1
        k2 = rhs(q, t + C2 * h, y + h * A21 * k1)
        k3 = rhs(q, t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = rhs(q, t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(q, t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = rhs(q, t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        if last:
            tnew = tb
        else:
            tnew = t + h
        k7 = rhs(q, tnew, ynew)
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sk = atol + rtol * fmax(fabs(y), fabs(ynew))
        err = fabs(errv) / sk
        fac11 = pow(err, EXPO1)
        fac = fac11 / pow(facold, BETA)
        fac = fmax(FACC2, fmin(FACC1, fac / SAFE))
        hnew = h / fac
        if err <= 1.0:
            facold = fmax(err, 1e-4)
            if ynew < lo - slack or ynew > hi + slack:
                y_out[0] = ynew
                h_out[0] = h
                return 1
            if store:
                ydiff = ynew - y
                bspl = h * k1 - ydiff
                if buf_push(b, tnew, ynew, y, ydiff, bspl, ydiff - h * k7 - bspl,
                            h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)) != 0:
                    return 4
            if ynew < lo or ynew > hi:
                if ynew < lo:
                    ynew = lo
                else:
                    ynew = hi
                k7 = rhs(q, tnew, ynew)
                if store:
                    b.y[b.n - 1] = ynew
            k1 = k7
            y = ynew
            t = tnew
            if fabs(hnew) > hmax:
                hnew = hmax
            if reject:
                hnew = fmin(hnew, h)
            reject = False
            if last:
                h = hnew
                break
        else:
            hnew = h / fmin(FACC1, fac11 / SAFE)
            reject = True
        h = hnew
    y_out[0] = y
    h_out[0] = h
    return 0


def dopri_wolbachia(double ta, double tb, double y0, double rate, double rtol, double atol,
                    double hmax, double h0, bint store, tuple params,
                    double lo=0.0, double hi=1.0, double slack=0.0):
    """Compiled counterpart of ``dopri_scalar`` for the Wolbachia RHS.

    ``params`` is ``(b1, b2, d1, d2, sh, K0, A, T)``. Same return tuple as
    the Python kernel, with numpy arrays instead of lists.
    """
    cdef Wolb q
    q.b1, q.b2, q.d1, q.d2, q.sh, q.K0, q.A = params[0], params[1], params[2], params[3], \
        params[4], params[5], params[6]
    q.omega = 2.0 * 3.141592653589793 / <double> params[7]
    q.rate = rate
    cdef Buf b
    cdef double y_end = y0, h_next = 0.0
    cdef int code
    b.n = 0
    b.cap = 0
    b.t = NULL
    b.y = NULL
    b.c = NULL
    if store:
        b.cap = 256
        b.t = <double*> malloc(b.cap * sizeof(double))
        b.y = <double*> malloc(b.cap * sizeof(double))
        b.c = <double*> malloc(5 * b.cap * sizeof(double))
        if b.t == NULL or b.y == NULL or b.c == NULL:
            raise MemoryError()
        b.t[0] = ta
        b.y[0] = y0
        b.n = 1
    with nogil:
        code = run(&q, ta, tb, y0, rtol, atol, hmax, h0, store, lo, hi, slack, &b, &y_end, &h_next)
    if code == 4:
        free(b.t); free(b.y); free(b.c)
        raise MemoryError()
    ts = ys = cs = None
    cdef Py_ssize_t i
    cdef double[::1] tv, yv
    cdef double[:, ::1] cv
    if store:
        ts = np.empty(b.n)
        ys = np.empty(b.n)
        cs = np.empty((b.n - 1, 5))
        tv = ts
        yv = ys
        cv = cs
        for i in range(b.n):
            tv[i] = b.t[i]
            yv[i] = b.y[i]
        for i in range(b.n - 1):
            cv[i, 0] = b.c[5 * i]
            cv[i, 1] = b.c[5 * i + 1]
            cv[i, 2] = b.c[5 * i + 2]
            cv[i, 3] = b.c[5 * i + 3]
            cv[i, 4] = b.c[5 * i + 4]
        free(b.t); free(b.y); free(b.c)
    return code, y_end, ts, ys, cs, h_next

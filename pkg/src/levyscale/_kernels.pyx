# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled exponent kernel: sum of packed components on a complex grid.

Complex arithmetic is written out on real and imaginary parts so the inner
loops call nothing beyond ``exp``, ``log``, ``atan2``
and ``sincos``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, exp, log

cdef extern from "<math.h>" nogil:
    void sincos(double x, double* s, double* c)

cnp.import_array()

cdef enum:
    GAUSSIAN = 0
    DRIFT = 1
    TEMPERED_STABLE = 2
    STABLE = 3
    ATOM = 4
    SHIFTED_EXP = 5
    RATIONAL_TERM = 6


cdef inline void _rpow(double x, double y, double p, double* re, double* im) noexcept nogil:
    # principal branch of (x + iy)^p
    cdef double t, m, s, c
    if x == 0.0 and y == 0.0:
        re[0] = 0.0
        im[0] = 0.0
        return
    t = atan2(y, x)
    m = exp(0.5 * p * log(x * x + y * y))
    sincos(p * t, &s, &c)
    re[0] = m * c
    im[0] = m * s


def psi_packed(cnp.int64_t[::1] kinds, double[:, ::1] params, z):
    """Sum of the packed components at the points ``z`` (1-d complex array)."""
    zz = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    cdef double[::1] zr = np.ascontiguousarray(zz.real)
    cdef double[::1] zi = np.ascontiguousarray(zz.imag)
    cdef Py_ssize_t n = zr.shape[0], nk = kinds.shape[0], i, j, e
    out_re_arr = np.zeros(n)
    out_im_arr = np.zeros(n)
    cdef double[::1] ore = out_re_arr
    cdef double[::1] oim = out_im_arr
    cdef double x, y, pr, pi, c, a, b, d, ex, ar, ai, rr, ri, tr, ti, den
    cdef long kind, m
    with nogil:
        for j in range(nk):
            kind = kinds[j]
            c = params[j, 0]
            if kind == GAUSSIAN:
                for i in range(n):
                    x = zr[i]
                    y = zi[i]
                    ore[i] += c * (x * x - y * y)
                    oim[i] += c * 2.0 * x * y
            elif kind == DRIFT:
                for i in range(n):
                    ore[i] += c * zr[i]
                    oim[i] += c * zi[i]
            elif kind == TEMPERED_STABLE:
                a = params[j, 1]
                b = params[j, 2]
                d = params[j, 4]
                for i in range(n):
                    _rpow(zr[i] + a, zi[i], b, &pr, &pi)
                    ore[i] += c * (pr - params[j, 3] - d * zr[i])
                    oim[i] += c * (pi - d * zi[i])
            elif kind == STABLE:
                b = params[j, 1]
                for i in range(n):
                    _rpow(zr[i], zi[i], b, &pr, &pi)
                    ore[i] += c * pr
                    oim[i] += c * pi
            elif kind == ATOM:
                a = params[j, 1]
                for i in range(n):
                    ex = exp(-a * zr[i])
                    sincos(a * zi[i], &ti, &tr)
                    ore[i] += c * (ex * tr - 1.0)
                    oim[i] -= c * ex * ti
            elif kind == SHIFTED_EXP:
                a = params[j, 1]
                for i in range(n):
                    ex = exp(-a * zr[i])
                    sincos(a * zi[i], &ti, &tr)
                    tr = ex * tr
                    ti = -ex * ti
                    x = zr[i] + 1.0
                    y = zi[i]
                    den = x * x + y * y
                    ore[i] += c * ((tr * x + ti * y) / den - 1.0)
                    oim[i] += c * (ti * x - tr * y) / den
            elif kind == RATIONAL_TERM:
                ar = params[j, 0]
                ai = params[j, 1]
                m = <long>params[j, 4]
                for i in range(n):
                    x = zr[i] + params[j, 2]
                    y = zi[i] + params[j, 3]
                    # (x + iy)^-m by repeated multiplication of the reciprocal
                    den = x * x + y * y
                    tr = x / den
                    ti = -y / den
                    rr = 1.0
                    ri = 0.0
                    for e in range(m):
                        pr = rr * tr - ri * ti
                        ri = rr * ti + ri * tr
                        rr = pr
                    ore[i] += ar * rr - ai * ri
                    oim[i] += ar * ri + ai * rr
    return out_re_arr + 1j * out_im_arr

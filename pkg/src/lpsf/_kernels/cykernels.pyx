# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: periodic FD2 stencils and fused Chebyshev-recurrence steps.

Same call signatures as the pure-numpy fallback in pykernels.py; all "out"
arguments are written in place.
"""

import numpy as np

cimport cython


def fd2_apply_1d(const double complex[::1] f, const double[::1] v,
                 double inv_h2, double complex[::1] out):
    cdef Py_ssize_t n = f.shape[0], i, im, ip
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        out[i] = inv_h2 * (2.0 * f[i] - f[im] - f[ip]) + v[i] * f[i]


def fd2_apply_2d(const double complex[:, ::1] f, const double[:, ::1] v,
                 double inv_h2, double complex[:, ::1] out):
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            out[i, j] = inv_h2 * (4.0 * f[i, j]
                                  - f[im, j] - f[ip, j]
                                  - f[i, jm] - f[i, jp]) + v[i, j] * f[i, j]


def fd2_apply_3d(const double complex[:, :, ::1] f, const double[:, :, ::1] v,
                 double inv_h2, double complex[:, :, ::1] out):
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef Py_ssize_t i, j, k, im, ip, jm, jp, km, kp
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                out[i, j, k] = inv_h2 * (6.0 * f[i, j, k]
                                         - f[im, j, k] - f[ip, j, k]
                                         - f[i, jm, k] - f[i, jp, k]
                                         - f[i, j, km] - f[i, j, kp]) \
                    + v[i, j, k] * f[i, j, k]


def lincomb(double a, const double complex[::1] x,
            double b, const double complex[::1] y,
            double complex[::1] out):
    """out = a*x + b*y"""
    cdef Py_ssize_t n = x.shape[0], i
    for i in range(n):
        out[i] = a * x[i] + b * y[i]


def axpy(double complex c, const double complex[::1] x, double complex[::1] acc):
    """acc += c*x"""
    cdef Py_ssize_t n = x.shape[0], i
    for i in range(n):
        acc[i] = acc[i] + c * x[i]


def cheb_step(const double complex[::1] w, const double complex[::1] u1,
              double complex[::1] u0, double a1, double a2,
              double complex ck, double complex[::1] acc):
    """Fused three-term recurrence step.

    u0 <- a1*w + a2*u1 - u0   (the next Chebyshev vector, overwriting u_{k-1})
    acc += ck*u0
    """
    cdef Py_ssize_t n = w.shape[0], i
    cdef double complex t
    for i in range(n):
        t = a1 * w[i] + a2 * u1[i] - u0[i]
        u0[i] = t
        acc[i] = acc[i] + ck * t

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the grid operators, the CG inner solve and the
radial shooting loop.  Semantics match rgs._kernels_py exactly; see that
module for the conventions (axis layout, Dirichlet boundary)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()

ctypedef double complex dcomplex


def laplacian_apply(cnp.ndarray[dcomplex, ndim=2] v, double inv_h2, out=None):
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1]
    cdef cnp.ndarray[dcomplex, ndim=2] o
    if out is None:
        o = np.zeros((n0, n1), dtype=np.complex128)
    else:
        o = out
    cdef Py_ssize_t i, j
    for j in range(n1):
        o[0, j] = 0.0
        o[n0 - 1, j] = 0.0
    for i in range(n0):
        o[i, 0] = 0.0
        o[i, n1 - 1] = 0.0
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            o[i, j] = (v[i - 1, j] + v[i + 1, j] + v[i, j - 1] + v[i, j + 1]
                       - 4.0 * v[i, j]) * inv_h2
    return o


def rotation_apply(cnp.ndarray[dcomplex, ndim=2] v, cnp.ndarray[double, ndim=1] axis,
                   double omega, double inv_2h, out=None):
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1]
    cdef cnp.ndarray[dcomplex, ndim=2] o
    if out is None:
        o = np.zeros((n0, n1), dtype=np.complex128)
    else:
        o = out
    cdef Py_ssize_t i, j
    cdef dcomplex d1, d2
    cdef double x1, x2
    cdef dcomplex iw = 1j * omega
    for j in range(n1):
        o[0, j] = 0.0
        o[n0 - 1, j] = 0.0
    for i in range(n0):
        o[i, 0] = 0.0
        o[i, n1 - 1] = 0.0
    for i in range(1, n0 - 1):
        x2 = axis[i]
        for j in range(1, n1 - 1):
            x1 = axis[j]
            d1 = (v[i, j + 1] - v[i, j - 1]) * inv_2h
            d2 = (v[i + 1, j] - v[i - 1, j]) * inv_2h
            o[i, j] = iw * (x1 * d2 - x2 * d1)
    return o


def gradient_apply(cnp.ndarray[dcomplex, ndim=2] v, double inv_2h,
                   out1=None, out2=None):
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1]
    cdef cnp.ndarray[dcomplex, ndim=2] o1, o2
    o1 = np.zeros((n0, n1), dtype=np.complex128) if out1 is None else out1
    o2 = np.zeros((n0, n1), dtype=np.complex128) if out2 is None else out2
    cdef Py_ssize_t i, j
    for j in range(n1):
        o1[0, j] = 0.0; o1[n0 - 1, j] = 0.0
        o2[0, j] = 0.0; o2[n0 - 1, j] = 0.0
    for i in range(n0):
        o1[i, 0] = 0.0; o1[i, n1 - 1] = 0.0
        o2[i, 0] = 0.0; o2[i, n1 - 1] = 0.0
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            o1[i, j] = (v[i, j + 1] - v[i, j - 1]) * inv_2h
            o2[i, j] = (v[i + 1, j] - v[i - 1, j]) * inv_2h
    return o1, o2


def cg_shifted_laplacian(cnp.ndarray[dcomplex, ndim=2] b,
                         cnp.ndarray[dcomplex, ndim=2] x0,
                         double kappa, double tol, int maxiter):
    """Solve (I - dt*Lap_h) x = b, kappa = dt/h^2, zero Dirichlet boundary."""
    cdef Py_ssize_t n0 = b.shape[0], n1 = b.shape[1]
    cdef cnp.ndarray[dcomplex, ndim=2] x = x0.copy()
    cdef cnp.ndarray[dcomplex, ndim=2] r = np.zeros((n0, n1), dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=2] d = np.zeros((n0, n1), dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=2] ad = np.zeros((n0, n1), dtype=np.complex128)
    cdef Py_ssize_t i, j
    cdef double diag = 1.0 + 4.0 * kappa
    cdef double b2 = 0.0, rs = 0.0, rs_new, dad, alpha, beta
    cdef dcomplex av

    for j in range(n1):
        x[0, j] = 0.0; x[n0 - 1, j] = 0.0
    for i in range(n0):
        x[i, 0] = 0.0; x[i, n1 - 1] = 0.0

    for i in range(n0):
        for j in range(n1):
            b2 += b[i, j].real * b[i, j].real + b[i, j].imag * b[i, j].imag
    if b2 == 0.0:
        return np.zeros((n0, n1), dtype=np.complex128), 0, 0.0

    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            av = diag * x[i, j] - kappa * (x[i - 1, j] + x[i + 1, j]
                                           + x[i, j - 1] + x[i, j + 1])
            av = b[i, j] - av
            r[i, j] = av
            d[i, j] = av
            rs += av.real * av.real + av.imag * av.imag

    cdef double stop2 = tol * tol * b2
    cdef int it = 0
    while rs > stop2 and it < maxiter:
        dad = 0.0
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                av = diag * d[i, j] - kappa * (d[i - 1, j] + d[i + 1, j]
                                               + d[i, j - 1] + d[i, j + 1])
                ad[i, j] = av
                dad += d[i, j].real * av.real + d[i, j].imag * av.imag
        alpha = rs / dad
        rs_new = 0.0
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                x[i, j] = x[i, j] + alpha * d[i, j]
                av = r[i, j] - alpha * ad[i, j]
                r[i, j] = av
                rs_new += av.real * av.real + av.imag * av.imag
        beta = rs_new / rs
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                d[i, j] = r[i, j] + beta * d[i, j]
        rs = rs_new
        it += 1
    return x, it, sqrt(rs / b2)


cdef inline double _odd_pow(double y, double p) nogil:
    if y >= 0.0:
        return pow(y, p)
    return -pow(-y, p)


def shoot_radial(double p, double w0, double h, int n_steps):
    """RK4 for w'' + w'/r - w + sign(w)|w|^p = 0; see numpy twin for the
    classification contract (status 0/1/2)."""
    cdef cnp.ndarray[double, ndim=1] w = np.zeros(n_steps + 1)
    cdef cnp.ndarray[double, ndim=1] dw = np.zeros(n_steps + 1)
    cdef double y0 = w0, y1 = 0.0, r
    cdef double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b
    cdef int status = 0, stop = n_steps, k
    w[0] = w0
    for k in range(n_steps):
        r = k * h
        k1a = y1; k1b = _f(r, y0, y1, p)
        k2a = y1 + 0.5 * h * k1b
        k2b = _f(r + 0.5 * h, y0 + 0.5 * h * k1a, y1 + 0.5 * h * k1b, p)
        k3a = y1 + 0.5 * h * k2b
        k3b = _f(r + 0.5 * h, y0 + 0.5 * h * k2a, y1 + 0.5 * h * k2b, p)
        k4a = y1 + h * k3b
        k4b = _f(r + h, y0 + h * k3a, y1 + h * k3b, p)
        y0 = y0 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        y1 = y1 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        w[k + 1] = y0
        dw[k + 1] = y1
        if y0 <= 0.0:
            status = 1; stop = k + 1
            break
        if y1 > 0.0:
            status = 2; stop = k + 1
            break
    return w, dw, status, stop


cdef inline double _f(double r, double y0, double y1, double p) nogil:
    cdef double f = _odd_pow(y0, p)
    if r < 1e-12:
        return 0.5 * (y0 - f)
    return y0 - f - y1 / r

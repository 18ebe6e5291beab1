# distutils: language = c++
"""Compiled row-wise empirical risk kernels.

Same contracts as ``_pykernels``; loops release the GIL so replications can
run on worker threads.
"""

import numpy as np

cimport cython
from libc.math cimport exp, log, pow, sqrt
from libcpp.algorithm cimport nth_element
from libcpp.vector cimport vector



cdef inline double _row_sum(const double[:, ::1] M, Py_ssize_t i) noexcept nogil:
    # four independent accumulators so the loop pipelines and vectorizes
    cdef Py_ssize_t n = M.shape[1], j, m = n - n % 4
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    for j in range(0, m, 4):
        s0 += M[i, j]
        s1 += M[i, j + 1]
        s2 += M[i, j + 2]
        s3 += M[i, j + 3]
    for j in range(m, n):
        s0 += M[i, j]
    return (s0 + s1) + (s2 + s3)


def row_mean(const double[:, ::1] M):
    cdef Py_ssize_t k = M.shape[0], n = M.shape[1], i
    out = np.empty(k)
    cdef double[::1] o = out
    with nogil:
        for i in range(k):
            o[i] = _row_sum(M, i) / n
    return out


def row_semideviation(const double[:, ::1] M, double p, double a):
    cdef Py_ssize_t k = M.shape[0], n = M.shape[1], i, j
    cdef double s, mean, dev
    out = np.empty(k)
    cdef double[::1] o = out
    with nogil:
        for i in range(k):
            mean = _row_sum(M, i) / n
            s = 0.0
            for j in range(n):
                dev = M[i, j] - mean
                if dev > 0.0:
                    if p == 1.0:
                        s += dev
                    elif p == 2.0:
                        s += dev * dev
                    else:
                        s += pow(dev, p)
            s = s / n
            if p == 2.0:
                s = sqrt(s)
            elif p != 1.0:
                s = pow(s, 1.0 / p)
            o[i] = mean + a * s
    return out


def row_avar(const double[:, ::1] M, double alpha, Py_ssize_t k):
    """Tail average via selection of the ``k``-th order statistic (no full sort)."""
    cdef Py_ssize_t rows = M.shape[0], n = M.shape[1], i, j
    cdef vector[double] buf
    cdef double tail, q
    out = np.empty(rows)
    cdef double[::1] o = out
    with nogil:
        buf.resize(n)
        for i in range(rows):
            for j in range(n):
                buf[j] = M[i, j]
            nth_element(buf.begin(), buf.begin() + (k - 1), buf.end())
            q = buf[k - 1]
            tail = 0.0
            for j in range(k, n):
                tail += buf[j]
            o[i] = ((<double>k / n - alpha) * q + tail / n) / (1.0 - alpha)
    return out


def row_oce_avar(const double[:, ::1] M, double alpha, Py_ssize_t c,
                 const double[::1] lo, const double[::1] hi):
    """Leftmost minimizer ``x = -v_(n-c+1)`` (``c = ceil(n (1 - alpha))``), clipped to the bracket."""
    cdef Py_ssize_t rows = M.shape[0], n = M.shape[1], i, j
    cdef vector[double] buf
    cdef double x, s, y, scale = 1.0 / (n * (1.0 - alpha))
    vals = np.empty(rows)
    xs = np.empty(rows)
    cdef double[::1] ov = vals
    cdef double[::1] ox = xs
    with nogil:
        buf.resize(n)
        for i in range(rows):
            for j in range(n):
                buf[j] = M[i, j]
            nth_element(buf.begin(), buf.begin() + (n - c), buf.end())
            x = -buf[n - c]
            if x < lo[i]:
                x = lo[i]
            elif x > hi[i]:
                x = hi[i]
            s = 0.0
            for j in range(n):
                y = M[i, j] + x
                if y > 0.0:
                    s += y
            ov[i] = s * scale - x
            ox[i] = x
    return vals, xs


def row_oce_entropic(const double[:, ::1] M, const double[::1] lo, const double[::1] hi, double tol):
    """Minimize ``mean(exp(v + x)) - 1 - x`` over each row's bracket.

    The unconstrained minimizer is ``x = -ln mean(exp(v))``; the objective is
    convex, so clipping it to the bracket gives the bracket minimizer. ``tol``
    is accepted for signature parity with the golden-section kernel.
    """
    cdef Py_ssize_t rows = M.shape[0], n = M.shape[1], i, j
    cdef double m, s, x, lme
    vals = np.empty(rows)
    xs = np.empty(rows)
    cdef double[::1] ov = vals
    cdef double[::1] ox = xs
    with nogil:
        for i in range(rows):
            m = M[i, 0]
            for j in range(1, n):
                if M[i, j] > m:
                    m = M[i, j]
            s = 0.0
            for j in range(n):
                s += exp(M[i, j] - m)
            s = s / n
            lme = m + log(s)
            x = -lme
            if x < lo[i]:
                x = lo[i]
            elif x > hi[i]:
                x = hi[i]
            if x == -lme:
                ov[i] = lme
            else:
                ov[i] = exp(x + m) * s - 1.0 - x
            ox[i] = x
    return vals, xs

# cython: language_level=3
"""Compiled likelihood kernels; same contracts as ``_pykernels``."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, log1p

cnp.import_array()


cdef inline double _log_expit(double x) nogil:
    if x >= 0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline double _expit(double x) nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def mixture_terms(const cnp.int64_t[::1] n_events, const double[::1] s0,
                  const double[::1] log_cum0, const double[::1] eta,
                  const double[::1] u, bint zero_inflated):
    cdef Py_ssize_t m = n_events.shape[0]
    ll_arr = np.empty(m)
    gc_arr = np.empty(m)
    gu_arr = np.zeros(m)
    cdef double[::1] ll = ll_arr
    cdef double[::1] g_cum = gc_arr
    cdef double[::1] g_u = gu_arr
    cdef Py_ssize_t i
    cdef double lam, lp, lq, a, hi, lo, mix, w, pi
    with nogil:
        for i in range(m):
            lam = exp(log_cum0[i] + eta[i])
            if n_events[i] > 0:
                ll[i] = s0[i] + n_events[i] * eta[i] - lam
                g_cum[i] = -lam
                if zero_inflated:
                    ll[i] += _log_expit(u[i])
                    g_u[i] = _expit(-u[i])
            elif zero_inflated:
                lp = _log_expit(u[i])
                lq = _log_expit(-u[i])
                a = lp - lam
                if a > lq:
                    hi = a
                    lo = lq
                else:
                    hi = lq
                    lo = a
                mix = hi + log1p(exp(lo - hi))
                w = exp(a - mix)
                pi = _expit(u[i])
                ll[i] = mix
                g_cum[i] = -w * lam
                g_u[i] = w - pi
            else:
                ll[i] = -lam
                g_cum[i] = -lam
    return ll_arr, gc_arr, gu_arr


def bernstein_event_terms(const double[:, ::1] basis, const double[::1] gamma,
                          const cnp.int64_t[::1] owner, const cnp.int64_t[::1] offsets):
    cdef Py_ssize_t m = offsets.shape[0] - 1
    cdef Py_ssize_t d = gamma.shape[0]
    s0_arr = np.zeros(m)
    grad_arr = np.zeros(d)
    cdef double[::1] s0 = s0_arr
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t i, j, k
    cdef double lam, inv, acc
    with nogil:
        for i in range(m):
            acc = 0.0
            for j in range(offsets[i], offsets[i + 1]):
                lam = 0.0
                for k in range(d):
                    lam += basis[j, k] * gamma[k]
                acc += log(lam)
                inv = 1.0 / lam
                for k in range(d):
                    grad[k] += basis[j, k] * inv
            s0[i] = acc
        for k in range(d):
            grad[k] *= gamma[k]
    return s0_arr, grad_arr


def icar_quadratic(const double[::1] omega, const cnp.int64_t[:, ::1] edges):
    cdef Py_ssize_t n_edges = edges.shape[0]
    grad_arr = np.zeros(omega.shape[0])
    cdef double[::1] grad = grad_arr
    cdef Py_ssize_t e, a, b
    cdef double diff, q = 0.0
    with nogil:
        for e in range(n_edges):
            a = edges[e, 0]
            b = edges[e, 1]
            diff = omega[a] - omega[b]
            q += diff * diff
            grad[a] += 2.0 * diff
            grad[b] -= 2.0 * diff
    return q, grad_arr

# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: single-frequency recurrences and the first-difference metric profile.

Twisted phases follow the same contract as the reference backend: a scalar
recurrence w *= exp(-2*pi*i*theta), re-anchored from scratch every
ANCHOR_BLOCK samples so rounding drift cannot accumulate across long series.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, cos, fmod, ldexp, sin

cnp.import_array()

cdef Py_ssize_t ANCHOR_BLOCK = 65536
cdef double complex I_UNIT = 1j

BACKEND = "compiled"


def twisted_checkpoint_sums(const double complex[::1] series, double theta, checkpoints):
    """Partial sums S_n = sum_{j<n} exp(-2*pi*i*theta*j) * series[j] at each checkpoint."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cps = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t m = cps.shape[0]
    out = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef const cnp.int64_t[::1] cv = cps
    cdef Py_ssize_t n_last = <Py_ssize_t> cv[m - 1]
    cdef double complex acc = 0, w, step
    cdef double ang
    cdef Py_ssize_t j0, j1, j, ci = 0
    ang = -2.0 * M_PI * theta
    step = cos(ang) + I_UNIT * sin(ang)
    for j0 in range(0, n_last, ANCHOR_BLOCK):
        j1 = min(j0 + ANCHOR_BLOCK, n_last)
        ang = -2.0 * M_PI * fmod(theta * j0, 1.0)
        w = cos(ang) + I_UNIT * sin(ang)
        for j in range(j0, j1):
            acc = acc + w * series[j]
            w = w * step
            if ci < m and cv[ci] == j + 1:
                ov[ci] = acc
                ci += 1
    return out


def twisted_sums_multi(const double complex[::1] series, const double[::1] thetas, Py_ssize_t n):
    """S_n(theta_t) for a batch of frequencies over the same prefix of length n."""
    cdef Py_ssize_t tcount = thetas.shape[0]
    out = np.zeros(tcount, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef double complex acc, w, step
    cdef double ang, theta
    cdef Py_ssize_t t, j0, j1, j
    for t in range(tcount):
        theta = thetas[t]
        ang = -2.0 * M_PI * theta
        step = cos(ang) + I_UNIT * sin(ang)
        acc = 0
        for j0 in range(0, n, ANCHOR_BLOCK):
            j1 = min(j0 + ANCHOR_BLOCK, n)
            ang = -2.0 * M_PI * fmod(theta * j0, 1.0)
            w = cos(ang) + I_UNIT * sin(ang)
            for j in range(j0, j1):
                acc = acc + w * series[j]
                w = w * step
        ov[t] = acc
    return out


def first_diff_profile(const cnp.int64_t[::1] ext_x, const cnp.int64_t[::1] ext_y,
                       Py_ssize_t n, int lookahead):
    """rho_j = 2^(-min{|k| <= lookahead : x[j+k] != y[j+k]}), 0 when no difference is visible.

    Inputs are label arrays extended by ``lookahead`` on both sides, so the
    coordinate-0 symbol of the j-th pair sits at index j+lookahead.
    """
    cdef Py_ssize_t k = lookahead
    if ext_x.shape[0] != n + 2 * k or ext_y.shape[0] != n + 2 * k:
        raise ValueError("extended arrays must have length n + 2*lookahead")
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] table = np.empty(k + 1, dtype=np.float64)
    cdef Py_ssize_t d, j, c
    for d in range(k + 1):
        table[d] = ldexp(1.0, -<int> d)
    cdef double[::1] tv = table
    for j in range(n):
        c = j + k
        if ext_x[c] != ext_y[c]:
            ov[j] = 1.0
            continue
        for d in range(1, k + 1):
            if ext_x[c - d] != ext_y[c - d] or ext_x[c + d] != ext_y[c + d]:
                ov[j] = tv[d]
                break
    return out

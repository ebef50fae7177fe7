# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the threshold-filtered similarity sums.

Mirrors jobcorpus._kernels.pure.  Accumulation is compensated (Kahan) so the
two backends agree to near machine precision even on long sums.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pair_sum(const double[:, ::1] H, const double[::1] wa, const double[::1] wb, double p):
    """Sum of H[i,j] * wa[i] * wb[j] over entries with H[i,j] > p."""
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t m = H.shape[1]
    cdef Py_ssize_t i, j
    cdef double total = 0.0, comp = 0.0
    cdef double row, rcomp, h, y, t
    if n == 0 or m == 0:
        return 0.0
    with nogil:
        for i in range(n):
            row = 0.0
            rcomp = 0.0
            for j in range(m):
                h = H[i, j]
                if h > p:
                    y = h * wb[j] - rcomp
                    t = row + y
                    rcomp = (t - row) - y
                    row = t
            y = row * wa[i] - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total


def segment_scores(const double[:, ::1] H, const double[::1] wa, const double[::1] wcat,
                   const cnp.int64_t[::1] offsets, double p):
    """Per-segment pair sums: segment c covers columns offsets[c]:offsets[c+1]."""
    cdef Py_ssize_t ncat = offsets.shape[0] - 1
    if ncat < 0:
        ncat = 0
    out = np.zeros(ncat, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t c, i, j, s, e
    cdef double acc, comp, row, rcomp, h, y, t
    if n == 0 or ncat == 0 or H.shape[1] == 0:
        return out
    with nogil:
        for c in range(ncat):
            s = <Py_ssize_t> offsets[c]
            e = <Py_ssize_t> offsets[c + 1]
            acc = 0.0
            comp = 0.0
            for i in range(n):
                row = 0.0
                rcomp = 0.0
                for j in range(s, e):
                    h = H[i, j]
                    if h > p:
                        y = h * wcat[j] - rcomp
                        t = row + y
                        rcomp = (t - row) - y
                        row = t
                y = row * wa[i] - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            ov[c] = acc
    return out


def pair_count(const double[:, ::1] H, double p):
    """Number of entries strictly above the threshold."""
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t m = H.shape[1]
    cdef Py_ssize_t i, j
    cdef long long count = 0
    if n == 0 or m == 0:
        return 0
    with nogil:
        for i in range(n):
            for j in range(m):
                if H[i, j] > p:
                    count += 1
    return count

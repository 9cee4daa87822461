# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels. Mirrors ``_purepy`` exactly in semantics."""
import numpy as np

from libc.stdint cimport uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _unit(uint64_t key, Py_ssize_t counter) noexcept nogil:
    return <double>(_mix64(key + GOLDEN * <uint64_t>(counter + 1)) >> 11) * (1.0 / 9007199254740992.0)


def run_ensemble(const double[:, :, ::1] trans, const double[::1] cum, const double[::1] x0,
                 const uint64_t[::1] keys, Py_ssize_t horizon, double mono_tol):
    """Simulate ``len(keys)`` runs over ``horizon`` dwell intervals.

    Returns ``(final, gaps, monotone, counts)``: terminal states (R, n), the
    max-min gap at every dwell boundary (R, horizon+1), a per-run flag for gap
    monotonicity within ``mono_tol`` and per-graph draw counts.
    """
    cdef Py_ssize_t R = keys.shape[0], n = x0.shape[0], m = trans.shape[0]
    cdef Py_ssize_t r, k, i, j, g
    cdef double s, hi, lo, gap, prev, u
    final_np = np.empty((R, n))
    gaps_np = np.empty((R, horizon + 1))
    mono_np = np.ones(R, dtype=np.uint8)
    counts_np = np.zeros(m, dtype=np.int64)
    cdef double[:, ::1] final = final_np
    cdef double[:, ::1] gaps = gaps_np
    cdef unsigned char[::1] mono = mono_np
    cdef long long[::1] counts = counts_np
    cdef double[:, ::1] buf = np.empty((2, n))
    cdef Py_ssize_t cur
    with nogil:
        for r in range(R):
            cur = 0
            for i in range(n):
                buf[0, i] = x0[i]
            hi = buf[0, 0]
            lo = buf[0, 0]
            for i in range(1, n):
                if buf[0, i] > hi:
                    hi = buf[0, i]
                if buf[0, i] < lo:
                    lo = buf[0, i]
            prev = hi - lo
            gaps[r, 0] = prev
            for k in range(horizon):
                u = _unit(keys[r], k)
                g = 0
                while g < m - 1 and not (u < cum[g]):
                    g += 1
                counts[g] += 1
                for i in range(n):
                    s = 0.0
                    for j in range(n):
                        s = s + trans[g, i, j] * buf[cur, j]
                    buf[1 - cur, i] = s
                cur = 1 - cur
                hi = buf[cur, 0]
                lo = buf[cur, 0]
                for i in range(1, n):
                    if buf[cur, i] > hi:
                        hi = buf[cur, i]
                    if buf[cur, i] < lo:
                        lo = buf[cur, i]
                gap = hi - lo
                gaps[r, k + 1] = gap
                if gap > prev + mono_tol:
                    mono[r] = 0
                prev = gap
            for i in range(n):
                final[r, i] = buf[cur, i]
    return final_np, gaps_np, mono_np.astype(bool), counts_np


def delta_trajectory(const double[:, ::1] lap, const double[::1] x0, double h, Py_ssize_t steps):
    """States of ``steps`` delta steps ``x <- x + h*(-L x)``, shape (steps+1, n)."""
    cdef Py_ssize_t n = x0.shape[0], k, i, j
    cdef double s
    out_np = np.empty((steps + 1, n))
    cdef double[:, ::1] out = out_np
    with nogil:
        for i in range(n):
            out[0, i] = x0[i]
        for k in range(steps):
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s = s + lap[i, j] * out[k, j]
                out[k + 1, i] = out[k, i] + h * (-s)
    return out_np

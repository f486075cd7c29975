# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels: quantized forward sweeps over message batches.

Mantissas live in doubles (exact integers up to 2**53; the dispatcher only
routes formats within that limit here).  The arithmetic mirrors
``_kernels_py`` operation for operation so both kernels are bit-identical.
"""

import numpy as np

from libc.math cimport fabs, floor


cdef inline double _round_half_away(double x) noexcept nogil:
    cdef double a = fabs(x)
    cdef double f = floor(a)
    cdef double r
    if a - f >= 0.5:
        r = f + 1.0
    else:
        r = f
    if x < 0.0:
        return -r
    return r


cdef int _forward_one(const long long[:, ::1] cases, int c, int k, int n_edges,
                      const long long[:] comb_start, const long long[:] comb_in,
                      const double[:] comb_coef, double scale, double limit,
                      double[:] mant) noexcept nogil:
    """Returns the edge position that overflowed, or -1."""
    cdef int i, j
    cdef long long t
    cdef double acc, n
    for i in range(k):
        n = (<double> cases[c, i]) * scale
        if fabs(n) > limit:
            return i
        mant[i] = n
    for j in range(k, n_edges):
        acc = 0.0
        for t in range(comb_start[j], comb_start[j + 1]):
            acc += comb_coef[t] * mant[comb_in[t]]
        n = _round_half_away(acc)
        if fabs(n) > limit:
            return j
        mant[j] = n
    return -1


def verify_batch(const long long[:, ::1] cases, int k, int n_edges,
                 const long long[:] comb_start, const long long[:] comb_in,
                 const double[:] comb_coef,
                 const long long[:] term_start, const long long[:] term_in,
                 const double[:] term_coef, const long long[:] expect,
                 double scale, double inv_scale, double limit):
    cdef int n_cases = cases.shape[0]
    cdef int n_term = expect.shape[0]
    cdef double[:] mant = np.empty(n_edges, dtype=np.float64)

    fail_case_np = np.empty(n_cases * n_term, dtype=np.int64)
    fail_term_np = np.empty(n_cases * n_term, dtype=np.int64)
    fail_dec_np = np.empty(n_cases * n_term, dtype=np.int64)
    cdef long long[:] fail_case = fail_case_np
    cdef long long[:] fail_term = fail_term_np
    cdef long long[:] fail_dec = fail_dec_np

    cdef long long n_fail = 0
    cdef double max_res = 0.0
    cdef long long ovf_case = -1
    cdef long long ovf_edge = -1

    cdef int c, b, ovf
    cdef long long t, want, decoded
    cdef double acc, val, res, r

    with nogil:
        for c in range(n_cases):
            ovf = _forward_one(cases, c, k, n_edges, comb_start, comb_in,
                               comb_coef, scale, limit, mant)
            if ovf >= 0:
                ovf_case = c
                ovf_edge = ovf
                break
            for b in range(n_term):
                acc = 0.0
                for t in range(term_start[b], term_start[b + 1]):
                    acc += term_coef[t] * mant[term_in[t]]
                val = acc * inv_scale
                want = cases[c, expect[b]]
                res = fabs(val - (<double> want))
                if res > max_res:
                    max_res = res
                r = _round_half_away(val)
                if fabs(r) > 4611686018427387904.0:  # 2**62, matches pure kernel
                    r = 4611686018427387904.0 if r > 0.0 else -4611686018427387904.0
                decoded = <long long> r
                if decoded != want:
                    fail_case[n_fail] = c
                    fail_term[n_fail] = b
                    fail_dec[n_fail] = decoded
                    n_fail += 1

    return (int(n_fail), fail_case_np, fail_term_np, fail_dec_np,
            float(max_res), int(ovf_case), int(ovf_edge))


def forward_batch(const long long[:, ::1] cases, int k, int n_edges,
                  const long long[:] comb_start, const long long[:] comb_in,
                  const double[:] comb_coef, double scale, double limit):
    cdef int n_cases = cases.shape[0]
    out_np = np.empty((n_cases, n_edges), dtype=np.float64)
    cdef double[:, ::1] out = out_np
    cdef long long ovf_case = -1
    cdef long long ovf_edge = -1
    cdef int c, ovf

    with nogil:
        for c in range(n_cases):
            ovf = _forward_one(cases, c, k, n_edges, comb_start, comb_in,
                               comb_coef, scale, limit, out[c, :])
            if ovf >= 0:
                ovf_case = c
                ovf_edge = ovf
                break

    if ovf_case >= 0:
        return out_np[:ovf_case], int(ovf_case), int(ovf_edge)
    return out_np, -1, -1

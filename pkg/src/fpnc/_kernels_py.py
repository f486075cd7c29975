"""Pure-Python simulation kernels; the semantic reference.

Mantissas are Python integers (arbitrary precision, overflow is always a
checked condition).  Products and sums run in double precision in the same
left-to-right order as the compiled kernel, so results agree bit for bit
whenever every mantissa fits in 2**53.
"""

from __future__ import annotations

import math

import numpy as np


def _round_half_away(x: float) -> int:
    a = abs(x)
    f = math.floor(a)
    r = f + 1 if a - f >= 0.5 else f
    return -r if x < 0 else r


def _forward_one(plan, message, mant):
    """Fill ``mant`` (list of ints) for one message vector.

    Returns the edge position where the range was exceeded, or -1.
    """
    scale_int = plan.scale_int
    limit = plan.mantissa_limit
    start = plan.comb_start
    in_pos = plan.comb_in
    coef = plan.comb_coef
    for i in range(plan.k):
        m = int(message[i]) * scale_int
        if abs(m) > limit:
            return i
        mant[i] = m
    for j in range(plan.k, plan.n_edges):
        acc = 0.0
        for t in range(start[j], start[j + 1]):
            acc += coef[t] * float(mant[in_pos[t]])
        n = _round_half_away(acc)
        if abs(n) > limit:
            return j
        mant[j] = n
    return -1


def verify_batch(plan, cases: np.ndarray):
    from .kernels import BatchResult

    n_cases = cases.shape[0]
    n_term = len(plan.expect)
    tstart = plan.term_start
    t_in = plan.term_in
    t_coef = plan.term_coef
    expect = plan.expect
    inv_scale = plan.inv_scale

    fail_case: list[int] = []
    fail_term: list[int] = []
    fail_dec: list[int] = []
    max_res = 0.0
    mant = [0] * plan.n_edges

    for c in range(n_cases):
        row = cases[c]
        ovf = _forward_one(plan, row, mant)
        if ovf >= 0:
            return BatchResult(
                np.array(fail_case, dtype=np.int64),
                np.array(fail_term, dtype=np.int64),
                np.array(fail_dec, dtype=np.int64),
                max_res, (c, ovf))
        for b in range(n_term):
            acc = 0.0
            for t in range(tstart[b], tstart[b + 1]):
                acc += t_coef[t] * float(mant[t_in[t]])
            val = acc * inv_scale
            want = int(row[expect[b]])
            res = abs(val - want)
            if res > max_res:
                max_res = res
            decoded = _round_half_away(val)
            if abs(decoded) > 2 ** 62:
                decoded = 2 ** 62 if decoded > 0 else -(2 ** 62)
            if decoded != want:
                fail_case.append(c)
                fail_term.append(b)
                fail_dec.append(decoded)
    return BatchResult(
        np.array(fail_case, dtype=np.int64),
        np.array(fail_term, dtype=np.int64),
        np.array(fail_dec, dtype=np.int64),
        max_res, None)


def forward_batch(plan, cases: np.ndarray):
    n_cases = cases.shape[0]
    out = np.empty((n_cases, plan.n_edges), dtype=np.float64)
    mant = [0] * plan.n_edges
    for c in range(n_cases):
        ovf = _forward_one(plan, cases[c], mant)
        if ovf >= 0:
            return out[:c], (c, ovf)
        for j in range(plan.n_edges):
            out[c, j] = float(mant[j])
    return out, None

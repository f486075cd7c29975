"""Throughput comparison of the compiled and pure-Python simulation kernels.

Runs the same verification batches through both implementations, checks the
outputs are bit-identical, and prints cases/second plus the speedup.

    python benchmarks/bench_kernels.py [--cases 200000]
"""

import argparse
import time

import numpy as np

from fpnc import fixtures, kernels
from fpnc.fixedpoint import FixedPointFormat
from fpnc.simulate import build_plan
from fpnc.transfer import CodingSolution


def _instances():
    g2 = fixtures.build_g2()
    yield "g2 (21 edges)", g2, fixtures.g2_reference_solution(g2), \
        FixedPointFormat(2, 14, 9), 64
    net = fixtures.random_network(12, 3, 3, seed=5)
    rng = np.random.default_rng(5)
    alpha = {}
    src = set(net.source_edge_order)
    for e in net.edges:
        if e.id in src:
            continue
        for in_id in net.incoming[e.tail]:
            alpha[(in_id, e.id)] = float(rng.uniform(-2, 2))
    beta = {}
    for t in net.terminals:
        beta[t] = {1: {eid: float(rng.uniform(-1, 1))
                       for eid in net.incoming[t]}}
    yield f"random ({len(net.edges)} edges)", net, \
        CodingSolution(alpha=alpha, beta=beta), FixedPointFormat(2, 30, 6), 50


def _time(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cases", type=int, default=200000)
    args = ap.parse_args()

    if "c" not in kernels.implementation_names():
        print("compiled kernel not built; nothing to compare")
        return

    rng = np.random.default_rng(0)
    for label, net, sol, fmt, bound in _instances():
        plan = build_plan(net, sol, fmt)
        cases = rng.integers(-bound, bound + 1,
                             size=(args.cases, net.message_count)).astype(np.int64)
        res_c, t_c = _time(kernels.verify_batch, plan, cases, "c")
        py_cases = cases[: max(1, args.cases // 50)]
        res_py, t_py = _time(kernels.verify_batch, plan, py_cases, "py")

        check = kernels.verify_batch(plan, py_cases, "c")
        same = (np.array_equal(check.fail_case, res_py.fail_case)
                and np.array_equal(check.fail_decoded, res_py.fail_decoded)
                and check.max_residual == res_py.max_residual)
        rate_c = len(cases) / t_c
        rate_py = len(py_cases) / t_py
        print(f"{label}: compiled {rate_c:,.0f} cases/s, "
              f"pure {rate_py:,.0f} cases/s, "
              f"speedup {rate_c / rate_py:.0f}x, "
              f"bit-identical={same}")


if __name__ == "__main__":
    main()

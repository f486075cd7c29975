"""Kernel dispatch: compiled simulation core with a pure-Python fallback.

The quantized forward sweep over millions of message vectors is the hot
loop of verification.  ``fpnc._kernel_c`` is a Cython build of the exact
same arithmetic; the pure-Python twin in ``fpnc._kernels_py`` defines the
semantics and handles formats too wide for the compiled fast path.  Both
produce bit-identical results wherever the fast path is eligible (all
mantissas exactly representable as IEEE doubles).

Set FPNC_KERNEL=py or FPNC_KERNEL=c to force one implementation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py

try:
    from . import _kernel_c
except ImportError:  # extension not built; fall back to pure Python
    _kernel_c = None

# Mantissas above 2**53 are not exactly representable as doubles, so the
# compiled kernel (which stores mantissas in doubles) bows out.
_DOUBLE_EXACT_LIMIT = 2 ** 53


@dataclass(frozen=True)
class SimPlan:
    """Flattened network + solution + format, ready for batch execution.

    Edges are laid out in evaluation order: the k source edges first
    (position i carries message i), then every other edge ordered by depth
    so inputs are always computed before consumers.  ``comb`` arrays are a
    CSR-style layout of each edge's (input position, coefficient) list in
    canonical incoming order; ``term`` arrays do the same for each
    (terminal, demand) block.
    """

    k: int
    n_edges: int
    edge_ids: tuple[str, ...]           # by evaluation position
    comb_start: np.ndarray              # int64[n_edges + 1]
    comb_in: np.ndarray                 # int64[...]
    comb_coef: np.ndarray               # float64[...]
    term_start: np.ndarray              # int64[n_term + 1]
    term_in: np.ndarray                 # int64[...]
    term_coef: np.ndarray               # float64[...]
    expect: np.ndarray                  # int64[n_term], 0-based message index
    term_meta: tuple[tuple[str, int], ...]  # (terminal, demand position)
    base: int
    frac_digits: int
    mantissa_limit: int

    @property
    def scale_int(self) -> int:
        return self.base ** self.frac_digits

    @property
    def scale(self) -> float:
        # built by repeated multiplication so both kernels agree bitwise
        s = 1.0
        for _ in range(self.frac_digits):
            s *= float(self.base)
        return s

    @property
    def inv_scale(self) -> float:
        return 1.0 / self.scale

    @property
    def double_exact(self) -> bool:
        return self.mantissa_limit <= _DOUBLE_EXACT_LIMIT


@dataclass
class BatchResult:
    fail_case: np.ndarray       # local case indices with a bad decode
    fail_term: np.ndarray       # parallel: term block index
    fail_decoded: np.ndarray    # parallel: decoded integer
    max_residual: float         # max |pre-round decode - expected| seen
    overflow: tuple[int, int] | None  # (local case, edge position) or None


def implementation_names() -> tuple[str, ...]:
    return ("c", "py") if _kernel_c is not None else ("py",)


def select(plan: SimPlan) -> str:
    """Pick the kernel for this plan, honoring FPNC_KERNEL."""
    forced = os.environ.get("FPNC_KERNEL", "").strip().lower()
    if forced == "py":
        return "py"
    if forced == "c":
        if _kernel_c is None:
            raise RuntimeError("FPNC_KERNEL=c but the compiled kernel is not built")
        if not plan.double_exact:
            raise RuntimeError("FPNC_KERNEL=c but the format is too wide for the "
                               "compiled kernel (mantissa limit above 2**53)")
        return "c"
    if _kernel_c is not None and plan.double_exact:
        return "c"
    return "py"


def verify_batch(plan: SimPlan, cases: np.ndarray, impl: str | None = None) -> BatchResult:
    """Run every message vector, checking each terminal decode."""
    name = impl or select(plan)
    if name == "c":
        n_fail, f_case, f_term, f_dec, max_res, ovf_case, ovf_edge = _kernel_c.verify_batch(
            np.ascontiguousarray(cases, dtype=np.int64),
            plan.k, plan.n_edges,
            plan.comb_start, plan.comb_in, plan.comb_coef,
            plan.term_start, plan.term_in, plan.term_coef, plan.expect,
            plan.scale, plan.inv_scale, float(plan.mantissa_limit))
        overflow = (ovf_case, ovf_edge) if ovf_case >= 0 else None
        return BatchResult(f_case[:n_fail], f_term[:n_fail], f_dec[:n_fail],
                           max_res, overflow)
    return _kernels_py.verify_batch(plan, cases)


def forward_batch(plan: SimPlan, cases: np.ndarray, impl: str | None = None):
    """Per-edge quantized mantissas for every case (evaluation order).

    Returns (mantissas as float64[n_cases, n_edges], overflow or None).
    """
    name = impl or select(plan)
    if name == "c":
        mant, ovf_case, ovf_edge = _kernel_c.forward_batch(
            np.ascontiguousarray(cases, dtype=np.int64),
            plan.k, plan.n_edges,
            plan.comb_start, plan.comb_in, plan.comb_coef,
            plan.scale, float(plan.mantissa_limit))
        overflow = (ovf_case, ovf_edge) if ovf_case >= 0 else None
        return mant, overflow
    return _kernels_py.forward_batch(plan, cases)

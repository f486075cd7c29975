"""Forward execution of a coded network: exact real mode and quantized mode.

Real mode evaluates the linear combinations in doubles along a topological
order; it is the dual, accumulation-based route against which the
transfer-matrix gains are checked.  Quantized mode rounds every non-source
edge value to the fixed-point grid (source edges carry exact integers) and
decodes each demand by rounding the terminals' real-coefficient combination
to the nearest integer.  ``verify`` sweeps message vectors - exhaustively
or sampled - and reports any decode that misses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .fixedpoint import FixedPointFormat, FixedPointOverflowError, FixedPointValue, \
    round_half_away
from .network import Network, depth_partition
from .transfer import CodingSolution, check_solution

EXHAUSTIVE_BUDGET = 2 ** 22
_CHUNK = 65536


class BudgetExceededError(ValueError):
    """Exhaustive sweep would exceed the configured case budget."""


@dataclass(frozen=True)
class MessageVector:
    values: tuple[int, ...]
    bound: int

    def __post_init__(self):
        if any(abs(v) > self.bound for v in self.values):
            raise ValueError(f"message outside +/-{self.bound}: {self.values}")


@dataclass(frozen=True)
class Exhaustive:
    kind: str = field(default="exhaustive", init=False)


@dataclass(frozen=True)
class Sampled:
    count: int
    seed: int
    kind: str = field(default="sampled", init=False)


@dataclass(frozen=True)
class Failure:
    message: tuple[int, ...]
    terminal: str
    demand_pos: int
    decoded: int
    expected: int


@dataclass(frozen=True)
class VerificationReport:
    mode: Exhaustive | Sampled
    total_cases: int
    failure_count: int
    failures: tuple[Failure, ...]       # possibly capped; count is exact
    max_terminal_residual: float
    kernel: str

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def to_json_dict(self, failure_cap: int = 100) -> dict:
        mode: dict = {"kind": self.mode.kind}
        if isinstance(self.mode, Sampled):
            mode["count"] = self.mode.count
            mode["seed"] = self.mode.seed
        return {
            "mode": mode,
            "total_cases": self.total_cases,
            "passed": self.passed,
            "failure_count": self.failure_count,
            "max_terminal_residual": self.max_terminal_residual,
            "failures": [
                {"message": list(f.message), "terminal": f.terminal,
                 "demand": f.demand_pos, "decoded": f.decoded,
                 "expected": f.expected}
                for f in self.failures[:failure_cap]
            ],
        }


def _eval_order(net: Network) -> list[str]:
    """Source edges first (in message order), then by depth, then file order."""
    dp = depth_partition(net)
    rest = [e.id for e in net.edges if e.id not in set(net.source_edge_order)]
    rest.sort(key=lambda eid: (dp.depth_of_edge[eid], net.edge_index[eid]))
    return list(net.source_edge_order) + rest


def build_plan(net: Network, sol: CodingSolution, fmt: FixedPointFormat) -> kernels.SimPlan:
    check_solution(net, sol)
    if fmt.base != net.base:
        raise ValueError(f"format base {fmt.base} != network base {net.base}")
    order = _eval_order(net)
    pos = {eid: i for i, eid in enumerate(order)}
    k = net.message_count

    comb_start = [0] * (len(order) + 1)
    comb_in: list[int] = []
    comb_coef: list[float] = []
    for j, eid in enumerate(order):
        if j >= k:
            edge = net.edge_by_id[eid]
            for in_id in net.incoming[edge.tail]:
                a = sol.alpha.get((in_id, eid), 0.0)
                if a != 0.0:
                    comb_in.append(pos[in_id])
                    comb_coef.append(float(a))
        comb_start[j + 1] = len(comb_in)

    term_start = [0]
    term_in: list[int] = []
    term_coef: list[float] = []
    expect: list[int] = []
    meta: list[tuple[str, int]] = []
    for t in net.terminals:
        inc = net.incoming[t]
        for dpos, want in enumerate(net.demand_list(t), start=1):
            coeffs = sol.beta.get(t, {}).get(dpos, {})
            for eid in inc:
                b = float(coeffs.get(eid, 0.0))
                if b != 0.0:
                    term_in.append(pos[eid])
                    term_coef.append(b)
            term_start.append(len(term_in))
            expect.append(want - 1)
            meta.append((t, dpos))

    return kernels.SimPlan(
        k=k, n_edges=len(order), edge_ids=tuple(order),
        comb_start=np.array(comb_start, dtype=np.int64),
        comb_in=np.array(comb_in, dtype=np.int64),
        comb_coef=np.array(comb_coef, dtype=np.float64),
        term_start=np.array(term_start, dtype=np.int64),
        term_in=np.array(term_in, dtype=np.int64),
        term_coef=np.array(term_coef, dtype=np.float64),
        expect=np.array(expect, dtype=np.int64),
        term_meta=tuple(meta),
        base=fmt.base, frac_digits=fmt.frac_digits,
        mantissa_limit=fmt.mantissa_limit)


def run_real(net: Network, sol: CodingSolution, message) -> tuple[dict, dict]:
    """Edge values and per-(terminal, demand) decoded reals for one vector."""
    check_solution(net, sol)
    values: dict[str, float] = {}
    for i, eid in enumerate(net.source_edge_order):
        values[eid] = float(message[i])
    order = _eval_order(net)
    for eid in order[net.message_count:]:
        edge = net.edge_by_id[eid]
        acc = 0.0
        for in_id in net.incoming[edge.tail]:
            a = sol.alpha.get((in_id, eid), 0.0)
            if a != 0.0:
                acc += float(a) * values[in_id]
        values[eid] = acc
    decoded: dict[tuple[str, int], float] = {}
    for t in net.terminals:
        for dpos, _want in enumerate(net.demand_list(t), start=1):
            coeffs = sol.beta.get(t, {}).get(dpos, {})
            acc = 0.0
            for eid in net.incoming[t]:
                b = float(coeffs.get(eid, 0.0))
                if b != 0.0:
                    acc += b * values[eid]
            decoded[(t, dpos)] = acc
    return values, decoded


def run_real_batch(net: Network, sol: CodingSolution, cases: np.ndarray) -> np.ndarray:
    """Edge values for many vectors at once; columns follow edge file order."""
    check_solution(net, sol)
    order = _eval_order(net)
    pos = {eid: i for i, eid in enumerate(order)}
    n = len(order)
    vals = np.zeros((cases.shape[0], n))
    vals[:, :net.message_count] = cases.astype(np.float64)
    for j, eid in enumerate(order):
        if j < net.message_count:
            continue
        edge = net.edge_by_id[eid]
        acc = np.zeros(cases.shape[0])
        for in_id in net.incoming[edge.tail]:
            a = sol.alpha.get((in_id, eid), 0.0)
            if a != 0.0:
                acc += float(a) * vals[:, pos[in_id]]
        vals[:, j] = acc
    file_cols = [pos[e.id] for e in net.edges]
    return vals[:, file_cols]


@dataclass(frozen=True)
class FixedRun:
    edge_values: dict[str, FixedPointValue]
    decoded: dict[tuple[str, int], int]
    pre_round: dict[tuple[str, int], float]
    max_internal_residual: float


def run_fixed(net: Network, sol: CodingSolution, message, fmt: FixedPointFormat,
              track_internal: bool = True) -> FixedRun:
    """Quantized execution of one message vector.

    Every non-source edge value is rounded to the grid; terminal
    combinations are left unquantized and rounded straight to integers.
    ``max_internal_residual`` reports how far the double-precision node
    arithmetic drifted from exact rational evaluation of the same
    combination (observability for the fixed-precision-internals shortcut).
    """
    plan = build_plan(net, sol, fmt)
    mant: list[int] = [0] * plan.n_edges
    max_internal = 0.0
    for i in range(plan.k):
        m = int(message[i]) * plan.scale_int
        if abs(m) > plan.mantissa_limit:
            raise FixedPointOverflowError(
                f"source edge {plan.edge_ids[i]}: message {message[i]} out of range")
        mant[i] = m
    for j in range(plan.k, plan.n_edges):
        acc = 0.0
        exact = Fraction(0)
        for t in range(plan.comb_start[j], plan.comb_start[j + 1]):
            c = plan.comb_coef[t]
            n_in = mant[plan.comb_in[t]]
            acc += c * float(n_in)
            if track_internal:
                exact += Fraction(c) * n_in
        n = round_half_away(acc)
        if track_internal:
            max_internal = max(max_internal, abs(float(Fraction(acc) - exact)))
        if abs(n) > plan.mantissa_limit:
            raise FixedPointOverflowError(
                f"edge {plan.edge_ids[j]}: mantissa {n} outside "
                f"+/-{plan.mantissa_limit}")
        mant[j] = n

    edge_values = {eid: FixedPointValue(fmt, mant[i])
                   for i, eid in enumerate(plan.edge_ids)}
    decoded: dict[tuple[str, int], int] = {}
    pre: dict[tuple[str, int], float] = {}
    for b, (t, dpos) in enumerate(plan.term_meta):
        acc = 0.0
        for ti in range(plan.term_start[b], plan.term_start[b + 1]):
            acc += plan.term_coef[ti] * float(mant[plan.term_in[ti]])
        val = acc * plan.inv_scale
        pre[(t, dpos)] = val
        decoded[(t, dpos)] = round_half_away(val)
    return FixedRun(edge_values, decoded, pre, max_internal)


def run_fixed_batch(net: Network, sol: CodingSolution, cases: np.ndarray,
                    fmt: FixedPointFormat) -> np.ndarray:
    """Quantized edge values for many vectors; columns in edge file order.

    Values are mantissa / scale as floats, suitable for error-bound sweeps.
    """
    plan = build_plan(net, sol, fmt)
    mant, overflow = kernels.forward_batch(plan, np.asarray(cases, dtype=np.int64))
    if overflow is not None:
        case, epos = overflow
        raise FixedPointOverflowError(
            f"edge {plan.edge_ids[epos]} overflowed on case {cases[case]}")
    pos = {eid: i for i, eid in enumerate(plan.edge_ids)}
    file_cols = [pos[e.id] for e in net.edges]
    return mant[:, file_cols] / plan.scale


def _mixed_radix_chunk(lo: int, hi: int, k: int, bound: int) -> np.ndarray:
    """Cases lo..hi of the lexicographic enumeration of [-bound, bound]^k."""
    radix = 2 * bound + 1
    idx = np.arange(lo, hi, dtype=np.int64)
    out = np.empty((hi - lo, k), dtype=np.int64)
    for col in range(k - 1, -1, -1):
        out[:, col] = idx % radix - bound
        idx //= radix
    return out


def _boundary_vectors(k: int, bound: int) -> np.ndarray:
    rows = [np.zeros(k, dtype=np.int64),
            np.full(k, bound, dtype=np.int64),
            np.full(k, -bound, dtype=np.int64)]
    for i in range(k):
        for sign in (bound, -bound):
            row = np.zeros(k, dtype=np.int64)
            row[i] = sign
            rows.append(row)
    return np.stack(rows)


def verify(net: Network, sol: CodingSolution, fmt: FixedPointFormat, bound: int,
           mode: Exhaustive | Sampled = Exhaustive(),
           budget: int = EXHAUSTIVE_BUDGET,
           failure_cap: int = 1000) -> VerificationReport:
    """Sweep message vectors and check zero-error integer recovery."""
    plan = build_plan(net, sol, fmt)
    impl = kernels.select(plan)
    k = net.message_count

    def chunks():
        if isinstance(mode, Exhaustive):
            total = (2 * bound + 1) ** k
            if total > budget:
                raise BudgetExceededError(
                    f"exhaustive sweep needs {total} cases (budget {budget}); "
                    "use sampled mode")
            for lo in range(0, total, _CHUNK):
                yield _mixed_radix_chunk(lo, min(lo + _CHUNK, total), k, bound)
        else:
            fixed = _boundary_vectors(k, bound)[:mode.count]
            yield fixed
            remaining = mode.count - fixed.shape[0]
            if remaining > 0:
                rng = np.random.default_rng(mode.seed)
                for lo in range(0, remaining, _CHUNK):
                    n = min(_CHUNK, remaining - lo)
                    yield rng.integers(-bound, bound + 1, size=(n, k),
                                       dtype=np.int64)

    total_cases = 0
    failure_count = 0
    failures: list[Failure] = []
    max_res = 0.0
    for block in chunks():
        res = kernels.verify_batch(plan, block, impl)
        if res.overflow is not None:
            case, epos = res.overflow
            raise FixedPointOverflowError(
                f"edge {plan.edge_ids[epos]} overflowed on message "
                f"{tuple(int(x) for x in block[case])}")
        max_res = max(max_res, res.max_residual)
        failure_count += len(res.fail_case)
        if len(failures) < failure_cap:
            for c, b, dec in zip(res.fail_case, res.fail_term, res.fail_decoded):
                if len(failures) >= failure_cap:
                    break
                t, dpos = plan.term_meta[b]
                msg = tuple(int(x) for x in block[c])
                failures.append(Failure(msg, t, dpos, int(dec), msg[plan.expect[b]]))
        total_cases += block.shape[0]

    failures.sort(key=lambda f: (f.message, f.terminal, f.demand_pos))
    return VerificationReport(mode=mode, total_cases=total_cases,
                              failure_count=failure_count,
                              failures=tuple(failures),
                              max_terminal_residual=max_res,
                              kernel=impl)

"""Precision planning: pick (message bound, digit counts) so that quantized
execution decodes every demand exactly.

Two planners are exposed.  ``plan_worst_case`` evaluates the closed-form
bounds built from the network depth, the maximum in-degree and the largest
coefficient magnitude.  ``plan_per_edge`` propagates value and error bounds
edge by edge with the exact coefficients, which is much tighter; it comes
in two accountings (see the function docstring).  Both enforce the message
bound M < 1/(2*deviation) whenever the real solution is inexact, and both
derive the achievable rate = message bits / (digits per edge symbol).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from ._jsonio import dumps_canonical, format_float
from .fixedpoint import FixedPointFormat
from .network import Network, depth_partition
from .transfer import CodingSolution, check_solution

# Strictness slop: "p > x" means the smallest integer at least 1e-12 above x,
# so float noise right at an integer boundary cannot flip the digit count.
_EPS = 1e-12


class InfeasibleError(ValueError):
    """No precision plan exists for the requested message bound."""


class BoundDomainError(ValueError):
    """Closed-form bounds need max_in_degree * max_coeff >= 1; rescale."""


@dataclass(frozen=True)
class NetworkStats:
    """Derived quantities the closed-form bounds depend on."""

    depth: int
    max_in_degree: int
    max_coeff: float
    base: int


def network_stats(net: Network, sol: CodingSolution) -> NetworkStats:
    check_solution(net, sol)
    max_indeg = max((len(net.incoming[n.id]) for n in net.nodes), default=0)
    return NetworkStats(depth=depth_partition(net).depth,
                        max_in_degree=max_indeg,
                        max_coeff=sol.alpha_max(),
                        base=net.base)


@dataclass(frozen=True)
class PrecisionPlan:
    fmt: FixedPointFormat
    message_bound: int
    message_bits: int
    rate: Fraction | float
    method: str
    margin: float
    effective_depth: int | None = None

    def to_json_dict(self) -> dict:
        rate = (self.rate if isinstance(self.rate, Fraction)
                else format_float(float(self.rate)))
        return {"b": self.fmt.base, "P": self.fmt.int_digits,
                "p": self.fmt.frac_digits, "M": self.message_bound,
                "n_bits": self.message_bits, "rate": rate,
                "method": self.method, "margin": self.margin,
                "effective_depth": self.effective_depth}


def save_plan(path, plan: PrecisionPlan) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(plan.to_json_dict()))
        fh.write("\n")


def load_plan(path) -> PrecisionPlan:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    fmt = FixedPointFormat(int(doc["b"]), int(doc["P"]), int(doc["p"]))
    rate_raw = doc["rate"]
    if isinstance(rate_raw, str) and "/" in rate_raw:
        num, den = rate_raw.split("/", 1)
        rate: Fraction | float = Fraction(int(num), int(den))
    else:
        rate = float(rate_raw)
    return PrecisionPlan(fmt=fmt, message_bound=int(doc["M"]),
                         message_bits=int(doc["n_bits"]), rate=rate,
                         method=str(doc["method"]), margin=float(doc["margin"]),
                         effective_depth=doc.get("effective_depth"))


def _ceil_strict(x: float) -> int:
    return int(math.floor(x + _EPS)) + 1


def _ceil_loose(x: float) -> int:
    return int(math.ceil(x - _EPS))


def message_bits(bound: int) -> int:
    """Width of the widest two's-complement range [-2^(n-1), 2^(n-1)-1]
    that fits inside [-bound, bound]."""
    if bound < 1:
        raise ValueError("message bound must be at least 1")
    return bound.bit_length()


def bound_for_bits(n_bits: int) -> int:
    if n_bits < 1:
        raise ValueError("message bits must be at least 1")
    return 2 ** (n_bits - 1)


def rate(n_bits: int, int_digits: int, frac_digits: int, base: int):
    """Message bits per transmitted digit-width; exact when base is 2^w."""
    digits = int_digits + frac_digits
    if digits <= 0:
        raise ValueError("plan has no digits")
    if base & (base - 1) == 0:
        return Fraction(n_bits, digits * (base.bit_length() - 1))
    return n_bits / (digits * math.log2(base))


def value_bound(stats: NetworkStats, bound: int, i: int) -> float:
    """Peak magnitude reachable on a depth-i edge: (d_in*a_max)^i * bound."""
    if not 0 <= i <= max(stats.depth - 1, 0):
        raise ValueError(f"layer {i} outside [0, {stats.depth - 1}]")
    da = stats.max_in_degree * stats.max_coeff
    if da < 1.0 - _EPS:
        raise BoundDomainError(
            f"max_in_degree * max_coeff = {da} < 1; scale the coefficients up")
    return da ** i * bound


def noise_bound(stats: NetworkStats, frac_digits: int, i: int) -> float:
    """Accumulated quantization error on a depth-i edge.

    Geometric form ((da)^i - 1)/(da - 1) * base^-p, with the limit i * base^-p
    at da = 1.
    """
    if not 0 <= i <= max(stats.depth - 1, 0):
        raise ValueError(f"layer {i} outside [0, {stats.depth - 1}]")
    if i == 0:
        return 0.0
    da = stats.max_in_degree * stats.max_coeff
    if da < 1.0 - _EPS:
        raise BoundDomainError(
            f"max_in_degree * max_coeff = {da} < 1; scale the coefficients up")
    unit = float(stats.base) ** (-frac_digits)
    if abs(da - 1.0) < _EPS:
        return i * unit
    return (da ** i - 1.0) / (da - 1.0) * unit


def _resolve_bound(max_deviation: float, bound, n_bits):
    """(bound, bits) from whichever the caller supplied, checking M < 1/(2*dev)."""
    if (bound is None) == (n_bits is None):
        raise ValueError("give exactly one of message bound or message bits")
    if bound is None:
        bound = bound_for_bits(n_bits)
    bound = int(bound)
    if bound < 1:
        raise ValueError("message bound must be at least 1")
    if max_deviation > 0.0:
        if 2.0 * max_deviation * bound >= 1.0:
            raise InfeasibleError(
                f"message bound {bound} needs deviation below {1 / (2 * bound)}, "
                f"but the solution deviates by {max_deviation}")
    return bound, message_bits(bound)


def max_feasible_bound(max_deviation: float) -> int:
    """Largest integer bound with bound < 1/(2*deviation)."""
    if max_deviation <= 0.0:
        raise ValueError("exact solutions leave the message bound unconstrained")
    m = int(math.floor(1.0 / (2.0 * max_deviation)))
    while m >= 1 and 2.0 * max_deviation * m >= 1.0:
        m -= 1
    if m < 1:
        raise InfeasibleError(
            f"deviation {max_deviation} leaves no usable message range")
    return m


def _finish(base, int_digits, frac_digits, bound, bits, method, margin,
            effective_depth=None) -> PrecisionPlan:
    fmt = FixedPointFormat(base, int_digits, frac_digits)
    return PrecisionPlan(fmt=fmt, message_bound=bound, message_bits=bits,
                         rate=rate(bits, int_digits, frac_digits, base),
                         method=method, margin=margin,
                         effective_depth=effective_depth)


def plan_worst_case(stats: NetworkStats, max_deviation: float,
                    bound: int | None = None, n_bits: int | None = None,
                    effective_depth: int | None = None) -> PrecisionPlan:
    """Closed-form plan from depth, max in-degree and max coefficient.

    ``effective_depth`` substitutes the number of genuinely combining hops
    for the graph depth: nodes that merely copy add no quantization stages,
    so collapsing them tightens both digit counts without touching the
    formulas.
    """
    if bound is None and n_bits is None and max_deviation > 0.0:
        bound = max_feasible_bound(max_deviation)
    bound, bits = _resolve_bound(max_deviation, bound, n_bits)
    d = stats.depth if effective_depth is None else effective_depth
    if d < 1:
        raise ValueError("depth must be at least 1")
    exponent = d - 1
    base = stats.base
    da = stats.max_in_degree * stats.max_coeff

    if exponent == 0:
        err_coef = 0.0
        peak = float(bound)
    else:
        if da < 1.0 - _EPS:
            raise BoundDomainError(
                f"max_in_degree * max_coeff = {da} < 1; scale the coefficients up")
        if abs(da - 1.0) < _EPS:
            err_coef = float(exponent)
        else:
            err_coef = (da ** exponent - 1.0) / (da - 1.0)
        peak = da ** exponent * bound

    headroom = 0.5 - max_deviation * bound
    if err_coef == 0.0:
        frac_digits = 0
    else:
        frac_digits = max(0, _ceil_strict(math.log(err_coef, base)
                                          - math.log(headroom, base)))
    int_digits = max(1, _ceil_loose(math.log(2.0 * peak + 2.0, base)))
    margin = headroom - err_coef * float(base) ** (-frac_digits)
    return _finish(base, int_digits, frac_digits, bound, bits, "theorem",
                   margin, effective_depth)


def _edge_coefficients(net: Network, sol: CodingSolution, accounting: str):
    """Per-edge (value, error) coefficients by forward propagation.

    Value units are the message bound; error units are base^-p.  A hop adds
    fresh quantization error only if some incoming coefficient is
    non-integral: integer combinations of on-grid values stay on the grid.
    The fresh term is half a grid step (the true worst case of
    round-to-nearest) under "weighted" accounting and a full step under
    "unweighted".
    """
    fresh = 1.0 if accounting == "unweighted" else 0.5
    order_vals: dict[str, float] = {}
    order_errs: dict[str, float] = {}
    dp = depth_partition(net)
    edges = sorted(net.edges, key=lambda e: (dp.depth_of_edge[e.id],
                                             net.edge_index[e.id]))
    src = set(net.source_edge_order)
    for e in edges:
        if e.id in src:
            order_vals[e.id] = 1.0
            order_errs[e.id] = 0.0
            continue
        val = 0.0
        err = 0.0
        integral = True
        for in_id in net.incoming[e.tail]:
            a = sol.alpha.get((in_id, e.id), 0.0)
            if a == 0.0:
                continue
            if not float(a).is_integer():
                integral = False
            val += abs(a) * order_vals[in_id]
            err += abs(a) * order_errs[in_id]
        if not integral:
            err += fresh
        order_vals[e.id] = val
        order_errs[e.id] = err
    return order_vals, order_errs


def plan_per_edge(net: Network, sol: CodingSolution, max_deviation: float,
                  bound: int | None = None, n_bits: int | None = None,
                  accounting: str = "weighted") -> PrecisionPlan:
    """Tight plan: propagate value and error bounds with exact coefficients.

    accounting="weighted" (the default) budgets the true half grid step of
    round-to-nearest per combining hop and multiplies each incoming edge
    error by the magnitude of its decoding coefficient; the resulting plan
    upper-bounds the decode error with no assumptions on the terminal
    coefficients.  accounting="unweighted" budgets a full grid step per hop
    but charges terminals the plain, unweighted sum of their incoming edge
    errors; it reproduces the published tight digit counts for the g2
    benchmark, but it can underplan the fraction digits whenever a decode
    coefficient exceeds 1 in magnitude (g2 itself decodes wrongly for some
    messages under its own unweighted plan).
    """
    if accounting not in ("unweighted", "weighted"):
        raise ValueError(f"unknown accounting {accounting!r}")
    check_solution(net, sol)
    if bound is None and n_bits is None and max_deviation > 0.0:
        bound = max_feasible_bound(max_deviation)
    bound, bits = _resolve_bound(max_deviation, bound, n_bits)
    base = net.base
    vals, errs = _edge_coefficients(net, sol, accounting)

    worst_err = 0.0
    for t in net.terminals:
        for pos in range(1, len(net.demand_list(t)) + 1):
            coeffs = sol.beta.get(t, {}).get(pos, {})
            total = 0.0
            for eid in net.incoming[t]:
                b = float(coeffs.get(eid, 0.0))
                if b == 0.0:
                    continue
                weight = 1.0 if accounting == "unweighted" else abs(b)
                total += weight * errs[eid]
            worst_err = max(worst_err, total)

    headroom = 0.5 - max_deviation * bound
    if worst_err == 0.0:
        frac_digits = 0
    else:
        frac_digits = max(0, _ceil_strict(math.log(worst_err, base)
                                          - math.log(headroom, base)))
    peak = max(vals.values()) * bound
    int_digits = max(1, _ceil_loose(math.log(2.0 * peak + 2.0, base)))
    margin = headroom - worst_err * float(base) ** (-frac_digits)
    return _finish(base, int_digits, frac_digits, bound, bits, "tight", margin)

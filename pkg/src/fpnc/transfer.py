"""Transfer-matrix algebra over the line graph of a network.

The coding coefficients alpha define a matrix T on edge pairs; because the
graph is acyclic T is nilpotent and the cumulative gain sum(T^j, j=0..d)
gives, per source edge, the net coefficient carried by every edge.  From the
gains and the terminal coefficients beta we obtain each terminal's mixing
coefficients over the messages, the squared-error objective driven to zero
by the solver, and the worst-case deviation that governs how large messages
may be before quantized decoding breaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .network import Network, depth_partition

# Above this edge count the matrix work switches to scipy.sparse.
DENSE_EDGE_LIMIT = 512


class SolutionShapeError(ValueError):
    """A coefficient refers to an edge pair or demand that does not exist."""


@dataclass(frozen=True)
class CodingSolution:
    """Real coding coefficients: alpha per consecutive edge pair, beta per
    (terminal, demand position, incoming edge)."""

    alpha: dict[tuple[str, str], float]
    beta: dict[str, dict[int, dict[str, float]]]

    def alpha_max(self) -> float:
        return max((abs(v) for v in self.alpha.values()), default=0.0)


@dataclass(frozen=True)
class DeviationProfile:
    """Mixing coefficients and how far they sit from exact recovery.

    ``coeff[(t, pos, i)]`` is the weight of message i in what terminal t
    decodes for its pos-th demand (1-based).  ``objective`` is the total
    squared deviation from the ideal 0/1 pattern; ``max_deviation`` is the
    worst terminal's absolute deviation.  Both are zero exactly when the
    real solution is exact.
    """

    coeff: dict[tuple[str, int, int], float]
    objective: float
    max_deviation: float


def check_solution(net: Network, sol: CodingSolution) -> None:
    """Raise SolutionShapeError unless the solution fits the network."""
    for (e, e2), val in sol.alpha.items():
        if e not in net.edge_by_id or e2 not in net.edge_by_id:
            raise SolutionShapeError(f"alpha ({e}->{e2}): unknown edge")
        if net.edge_by_id[e].head != net.edge_by_id[e2].tail:
            raise SolutionShapeError(f"alpha ({e}->{e2}): edges are not consecutive")
        if not np.isfinite(val):
            raise SolutionShapeError(f"alpha ({e}->{e2}): non-finite coefficient")
    for t, per_demand in sol.beta.items():
        if t not in net.node_by_id:
            raise SolutionShapeError(f"beta: unknown terminal {t!r}")
        wants = net.demand_list(t)
        inc = set(net.incoming[t])
        for pos, coeffs in per_demand.items():
            if not 1 <= pos <= len(wants):
                raise SolutionShapeError(f"beta {t}: demand position {pos} out of range")
            for eid, val in coeffs.items():
                if eid not in inc:
                    raise SolutionShapeError(
                        f"beta {t} demand {pos}: {eid!r} is not an incoming edge")
                if not np.isfinite(val):
                    raise SolutionShapeError(f"beta {t} demand {pos}: non-finite value")


def _use_sparse(net: Network) -> bool:
    return len(net.edges) > DENSE_EDGE_LIMIT


def transfer_matrix(net: Network, sol: CodingSolution):
    """|E| x |E| line-graph coefficient matrix (dense or CSR by size)."""
    check_solution(net, sol)
    n = len(net.edges)
    idx = net.edge_index
    if _use_sparse(net):
        rows, cols, vals = [], [], []
        for (e, e2), val in sol.alpha.items():
            rows.append(idx[e])
            cols.append(idx[e2])
            vals.append(float(val))
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    T = np.zeros((n, n))
    for (e, e2), val in sol.alpha.items():
        T[idx[e], idx[e2]] = float(val)
    return T


def gain_matrix(net: Network, sol: CodingSolution) -> np.ndarray:
    """k x |E| cumulative gains: row i gives message i's coefficient on
    every edge, i.e. the source rows of sum(T^j, j=0..depth)."""
    T = transfer_matrix(net, sol)
    n = len(net.edges)
    d = depth_partition(net).depth
    k = net.message_count
    rows = np.zeros((k, n))
    for i, eid in enumerate(net.source_edge_order):
        rows[i, net.edge_index[eid]] = 1.0
    acc = rows.copy()
    cur = rows
    for _ in range(d):
        cur = np.asarray(cur @ T)
        acc += cur
    return acc


def _terminal_blocks(net: Network, sol: CodingSolution):
    """Flatten (terminal, demand position) pairs with their incoming-edge
    columns and beta vectors, in canonical order."""
    blocks = []
    for t in net.terminals:
        inc = net.incoming[t]
        per_demand = sol.beta.get(t, {})
        for pos, want in enumerate(net.demand_list(t), start=1):
            coeffs = per_demand.get(pos, {})
            beta = np.array([float(coeffs.get(eid, 0.0)) for eid in inc])
            cols = [net.edge_index[eid] for eid in inc]
            blocks.append((t, pos, want, cols, beta))
    return blocks


def deviation_profile(net: Network, sol: CodingSolution) -> DeviationProfile:
    """Mixing coefficients, squared-error objective and worst deviation."""
    gains = gain_matrix(net, sol)
    coeff: dict[tuple[str, int, int], float] = {}
    objective = 0.0
    max_dev = 0.0
    for t, pos, want, cols, beta in _terminal_blocks(net, sol):
        mix = gains[:, cols] @ beta  # length k
        dev = 0.0
        for i, value in enumerate(mix, start=1):
            coeff[(t, pos, i)] = float(value)
            if i == want:
                objective += (value - 1.0) ** 2
                dev += abs(value - 1.0)
            else:
                objective += value ** 2
                dev += abs(value)
        max_dev = max(max_dev, dev)
    return DeviationProfile(coeff=coeff, objective=float(objective),
                            max_deviation=float(max_dev))

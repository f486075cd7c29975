"""Coefficient search: drive the squared recovery error to zero.

Multi-start alternating minimization.  For fixed alpha the objective is an
independent convex quadratic in each terminal's beta vector, solved exactly
as a (minimum-norm) least-squares problem.  For fixed beta the objective is
polynomial in alpha; we take analytic gradient steps with a backtracking
line search.  Restart seeds derive deterministically from the config seed,
so a run is reproducible bit for bit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._jsonio import dumps_canonical
from .network import Network, depth_partition
from .transfer import (CodingSolution, DeviationProfile, _use_sparse,
                       deviation_profile)

LSTSQ_RCOND = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 32
    max_iters: int = 2000
    tol_objective: float = 1e-12
    tol_step: float = 1e-10
    seed: int = 0
    init_scale: float = 2.0
    coeff_cap: float = 64.0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if self.init_scale <= 0 or self.coeff_cap <= 0:
            raise ValueError("init_scale and coeff_cap must be positive")
        if self.tol_objective < 0 or self.tol_step < 0:
            raise ValueError("tolerances must be non-negative")


@dataclass(frozen=True)
class SolverReport:
    best: CodingSolution
    profile: DeviationProfile
    trace: tuple[tuple[int, int, float], ...]   # (restart, iteration, objective)
    wall_time: float
    converged: bool
    diagnostics: tuple[str, ...] = field(default=())


class _Workspace:
    """Precomputed structure shared by every restart."""

    def __init__(self, net: Network):
        self.net = net
        self.n = len(net.edges)
        self.k = net.message_count
        self.depth = depth_partition(net).depth
        idx = net.edge_index
        # alpha support in canonical order: consuming edge, then input order
        support: list[tuple[int, int, str, str]] = []
        src = set(net.source_edge_order)
        for e in net.edges:
            if e.id in src:
                continue
            for in_id in net.incoming[e.tail]:
                support.append((idx[in_id], idx[e.id], in_id, e.id))
        support.sort(key=lambda t: (t[1], t[0]))
        self.support = support
        self.rows = np.array([t[0] for t in support], dtype=np.intp)
        self.cols = np.array([t[1] for t in support], dtype=np.intp)
        self.sparse = _use_sparse(net)
        self.src_rows = np.array([idx[eid] for eid in net.source_edge_order],
                                 dtype=np.intp)
        # terminal blocks: (terminal, demand pos, wanted message, edge cols)
        self.blocks = []
        for t in net.terminals:
            cols = [idx[eid] for eid in net.incoming[t]]
            for pos, want in enumerate(net.demand_list(t), start=1):
                self.blocks.append((t, pos, want - 1, cols))

    def matrix(self, x: np.ndarray):
        if self.sparse:
            return sp.csr_matrix((x, (self.rows, self.cols)),
                                 shape=(self.n, self.n))
        T = np.zeros((self.n, self.n))
        T[self.rows, self.cols] = x
        return T

    def gains(self, T) -> np.ndarray:
        """Source rows of sum(T^j, j=0..depth)."""
        rows = np.zeros((self.k, self.n))
        rows[np.arange(self.k), self.src_rows] = 1.0
        acc = rows.copy()
        cur = rows
        for _ in range(self.depth):
            cur = np.asarray(cur @ T)
            acc += cur
        return acc

    def cumulative_column(self, T, v: np.ndarray) -> np.ndarray:
        """sum(T^j, j=0..depth) @ v without forming the full matrix."""
        acc = v.copy()
        cur = v
        for _ in range(self.depth):
            cur = np.asarray(T @ cur)
            acc = acc + cur
        return acc

    def solve_beta(self, gains: np.ndarray) -> list[np.ndarray]:
        """Exact per-block least squares, minimum-norm on rank deficiency."""
        betas = []
        for _t, _pos, want, cols in self.blocks:
            A = gains[:, cols]
            target = np.zeros(self.k)
            target[want] = 1.0
            beta, *_ = np.linalg.lstsq(A, target, rcond=LSTSQ_RCOND)
            betas.append(beta)
        return betas

    def objective(self, gains: np.ndarray, betas: list[np.ndarray]) -> float:
        total = 0.0
        for (_t, _pos, want, cols), beta in zip(self.blocks, betas):
            mix = gains[:, cols] @ beta
            mix[want] -= 1.0
            total += float(mix @ mix)
        return total

    def gradient(self, T, gains: np.ndarray, betas: list[np.ndarray]) -> np.ndarray:
        """d objective / d alpha on the support.

        With U = sum(T^j), the derivative of a mixing coefficient w.r.t.
        the (e, e') entry factors as U[src_i, e] * U[e', terminal edge],
        so the gradient is a sum of outer products of per-block vectors.
        """
        n_blocks = len(self.blocks)
        L = np.zeros((self.n, n_blocks))
        C = np.zeros((self.n, n_blocks))
        for bi, ((_t, _pos, want, cols), beta) in enumerate(zip(self.blocks, betas)):
            mix = gains[:, cols] @ beta
            mix[want] -= 1.0
            L[:, bi] = gains.T @ mix
            scatter = np.zeros(self.n)
            for col, b in zip(cols, beta):
                scatter[col] += b
            C[:, bi] = self.cumulative_column(T, scatter)
        return 2.0 * np.einsum("ij,ij->i", L[self.rows], C[self.cols])


def refine_beta(net: Network, alpha: dict[tuple[str, str], float]) -> dict:
    """Optimal beta for fixed alpha, one least-squares solve per demand."""
    ws = _Workspace(net)
    x = np.array([alpha.get((ein, eout), 0.0) for _r, _c, ein, eout in ws.support])
    gains = ws.gains(ws.matrix(x))
    betas = ws.solve_beta(gains)
    out: dict[str, dict[int, dict[str, float]]] = {}
    for (t, pos, _want, _cols), beta in zip(ws.blocks, betas):
        out.setdefault(t, {})[pos] = {
            eid: float(b) for eid, b in zip(net.incoming[t], beta)}
    return out


def _to_solution(ws: _Workspace, x: np.ndarray, betas: list[np.ndarray]) -> CodingSolution:
    alpha = {(ein, eout): float(v)
             for (_r, _c, ein, eout), v in zip(ws.support, x)}
    beta: dict[str, dict[int, dict[str, float]]] = {}
    for (t, pos, _want, _cols), b in zip(ws.blocks, betas):
        beta.setdefault(t, {})[pos] = {
            eid: float(v) for eid, v in zip(ws.net.incoming[t], b)}
    return CodingSolution(alpha=alpha, beta=beta)


def _unreachable_demands(ws: _Workspace) -> list[str]:
    """Demands with no source-to-terminal path at all (all-ones coding)."""
    ones = np.ones(len(ws.support))
    gains = ws.gains(ws.matrix(ones))
    out = []
    for t, pos, want, cols in ws.blocks:
        if not cols or not np.any(gains[want, cols]):
            out.append(f"terminal {t} demand {pos}: message {want + 1} is not "
                       f"reachable through any incoming edge")
    return out


def solve(net: Network, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    """Best solution over all restarts; deterministic given cfg.seed."""
    started = time.perf_counter()
    ws = _Workspace(net)
    diagnostics = _unreachable_demands(ws)

    trace: list[tuple[int, int, float]] = []
    best: tuple[float, int, np.ndarray, list[np.ndarray]] | None = None
    any_converged = False

    for r in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed,
                                                           spawn_key=(r,)))
        x = rng.uniform(-cfg.init_scale, cfg.init_scale, size=len(ws.support))
        step = 1.0
        T = ws.matrix(x)
        gains = ws.gains(T)
        betas = ws.solve_beta(gains)
        obj = ws.objective(gains, betas)
        trace.append((r, 0, obj))
        converged = obj < cfg.tol_objective

        it = 0
        while not converged and it < cfg.max_iters:
            it += 1
            grad = ws.gradient(T, gains, betas)
            gnorm2 = float(grad @ grad)
            if gnorm2 == 0.0:
                break
            accepted = False
            trial = min(step * 2.0, 1e6)
            while trial > 1e-18:
                x_try = np.clip(x - trial * grad, -cfg.coeff_cap, cfg.coeff_cap)
                T_try = ws.matrix(x_try)
                gains_try = ws.gains(T_try)
                obj_try = ws.objective(gains_try, betas)
                if obj_try <= obj - 1e-4 * trial * gnorm2 or obj_try < obj * (1 - 1e-12):
                    accepted = True
                    break
                trial *= 0.5
            if not accepted:
                break
            step = trial
            x, T = x_try, T_try
            betas = ws.solve_beta(gains_try)
            gains = gains_try
            new_obj = ws.objective(gains, betas)
            trace.append((r, it, new_obj))
            if new_obj < cfg.tol_objective:
                obj = new_obj
                converged = True
                break
            if obj - new_obj < cfg.tol_step * max(obj, 1e-300):
                obj = new_obj
                converged = True          # settled: relative progress exhausted
                break
            obj = new_obj

        any_converged = any_converged or converged
        if best is None or (obj, r) < (best[0], best[1]):
            best = (obj, r, x.copy(), [b.copy() for b in betas])

    assert best is not None
    _obj, _r, x, betas = best
    solution = _to_solution(ws, x, betas)
    profile = deviation_profile(net, solution)
    return SolverReport(best=solution, profile=profile, trace=tuple(trace),
                        wall_time=time.perf_counter() - started,
                        converged=any_converged and not diagnostics,
                        diagnostics=tuple(diagnostics))


def solution_to_json_dict(sol: CodingSolution, profile: DeviationProfile) -> dict:
    alpha = {f"{e}->{e2}": float(v) for (e, e2), v in sorted(sol.alpha.items())}
    beta = {t: {f"demand_{pos}": {eid: float(v) for eid, v in sorted(coeffs.items())}
                for pos, coeffs in sorted(per.items())}
            for t, per in sorted(sol.beta.items())}
    return {"alpha": alpha, "beta": beta,
            "gamma_max": profile.max_deviation, "F": profile.objective}


def save_solution(path, net: Network, sol: CodingSolution) -> None:
    profile = deviation_profile(net, sol)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(solution_to_json_dict(sol, profile)))
        fh.write("\n")


def load_solution(path) -> tuple[CodingSolution, float, float]:
    """Read a solution file; returns (solution, stored deviation, stored objective)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    alpha = {}
    for key, v in doc.get("alpha", {}).items():
        e, _, e2 = key.partition("->")
        if not e or not e2:
            raise ValueError(f"solution file: bad alpha key {key!r}")
        alpha[(e, e2)] = float(v)
    beta: dict[str, dict[int, dict[str, float]]] = {}
    for t, per in doc.get("beta", {}).items():
        beta[t] = {}
        for dkey, coeffs in per.items():
            if not dkey.startswith("demand_"):
                raise ValueError(f"solution file: bad demand key {dkey!r}")
            beta[t][int(dkey[len("demand_"):])] = {
                eid: float(v) for eid, v in coeffs.items()}
    return (CodingSolution(alpha=alpha, beta=beta),
            float(doc.get("gamma_max", 0.0)), float(doc.get("F", 0.0)))

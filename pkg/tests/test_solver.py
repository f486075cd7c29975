import numpy as np
import pytest

from fpnc import fixtures
from fpnc.network import Edge, Network, Node
from fpnc.solver import (SolverConfig, _Workspace, refine_beta, solve,
                         solution_to_json_dict)
from fpnc.transfer import CodingSolution, deviation_profile
from .conftest import corpus_instance

FAST = SolverConfig(restarts=6, max_iters=500, seed=3)


def test_identity_solves_in_one_step(identity_net):
    report = solve(identity_net, SolverConfig(restarts=1, max_iters=5))
    assert report.profile.objective < 1e-12
    assert report.profile.max_deviation < 1e-6
    assert report.converged


@pytest.mark.parametrize("name", ["identity", "chain", "butterfly", "g1"])
def test_exactly_solvable_fixtures_reach_zero(name):
    net = fixtures.build(name)
    report = solve(net, SolverConfig())      # default budget
    assert report.profile.objective < 1e-12
    assert report.profile.max_deviation < 1e-6
    assert report.converged


def test_deterministic_given_seed(butterfly_net):
    a = solve(butterfly_net, FAST)
    b = solve(butterfly_net, FAST)
    assert solution_to_json_dict(a.best, a.profile) == \
        solution_to_json_dict(b.best, b.profile)
    assert a.trace == b.trace


def test_trace_non_increasing_within_restart(g2_net):
    report = solve(g2_net, SolverConfig(restarts=3, max_iters=150, seed=5))
    by_restart = {}
    for r, _it, f in report.trace:
        by_restart.setdefault(r, []).append(f)
    for values in by_restart.values():
        assert all(b <= a * (1 + 1e-12) for a, b in zip(values, values[1:]))


def test_best_is_no_worse_than_every_trace_entry(g2_net):
    report = solve(g2_net, SolverConfig(restarts=3, max_iters=150, seed=5))
    assert report.profile.objective <= min(f for _r, _i, f in report.trace) + 1e-15


def test_refine_beta_identity(identity_net):
    beta = refine_beta(identity_net, {})
    assert beta["t"][1]["e1"] == pytest.approx(1.0, abs=1e-12)


def test_refine_beta_parallel_edges_picks_exact():
    net = Network(name="pair",
                  nodes=(Node("s", "source"), Node("t", "terminal")),
                  edges=(Edge("e1", "s", "t"), Edge("e2", "s", "t")),
                  source_edge_order=("e1", "e2"), demands={"t": (1,)})
    beta = refine_beta(net, {})
    assert beta["t"][1]["e1"] == pytest.approx(1.0, abs=1e-12)
    assert beta["t"][1]["e2"] == pytest.approx(0.0, abs=1e-12)


def test_refine_beta_duplicate_columns_splits_evenly():
    # both terminal edges carry the same value; normal equations give the
    # minimum-norm split (0.5, 0.5)
    net = Network(name="dup",
                  nodes=(Node("s", "source"), Node("a", "internal"),
                         Node("t", "terminal")),
                  edges=(Edge("e1", "s", "a"), Edge("e2", "a", "t"),
                         Edge("e3", "a", "t")),
                  source_edge_order=("e1",), demands={"t": (1,)})
    alpha = {("e1", "e2"): 1.0, ("e1", "e3"): 1.0}
    beta = refine_beta(net, alpha)
    assert beta["t"][1]["e2"] == pytest.approx(0.5, abs=1e-12)
    assert beta["t"][1]["e3"] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_refine_beta_is_first_order_stationary(seed):
    net, sol, _ = corpus_instance(seed)
    base = deviation_profile(net, sol).objective
    for t, per in sol.beta.items():
        for pos, coeffs in per.items():
            for eid in coeffs:
                for delta in (1e-3, -1e-3):
                    perturbed = {tt: {pp: dict(cc) for pp, cc in vv.items()}
                                 for tt, vv in sol.beta.items()}
                    perturbed[t][pos][eid] += delta
                    tweaked = CodingSolution(alpha=sol.alpha, beta=perturbed)
                    assert deviation_profile(net, tweaked).objective >= \
                        base - 1e-12


def test_unreachable_demand_reports_diagnostic():
    # t2 demands message 1 but only sees message 2's side of the graph
    net = Network(name="cut",
                  nodes=(Node("s", "source"), Node("a", "internal"),
                         Node("t1", "terminal"), Node("t2", "terminal")),
                  edges=(Edge("e1", "s", "t1"), Edge("e2", "s", "a"),
                         Edge("e3", "a", "t2")),
                  source_edge_order=("e1", "e2"),
                  demands={"t1": (1,), "t2": (1,)})
    report = solve(net, SolverConfig(restarts=2, max_iters=50, seed=0))
    assert not report.converged
    assert any("t2" in note for note in report.diagnostics)


@pytest.mark.parametrize("seed", range(8))
def test_gradient_matches_central_differences(seed):
    net, _sol, rng = corpus_instance(seed)
    ws = _Workspace(net)
    x = rng.uniform(-0.75, 0.75, size=len(ws.support))
    T = ws.matrix(x)
    gains = ws.gains(T)
    betas = [rng.uniform(-1, 1, size=len(cols)) for _t, _p, _w, cols in ws.blocks]
    grad = ws.gradient(T, gains, betas)
    h = 1e-6
    fd = np.zeros_like(grad)
    for i in range(len(x)):
        for s, sign in ((h, 1.0), (-h, -1.0)):
            x2 = x.copy()
            x2[i] += s
            fd[i] += sign * ws.objective(ws.gains(ws.matrix(x2)), betas)
        fd[i] /= (2 * h)
    scale = max(np.linalg.norm(fd), np.linalg.norm(grad), 1e-12)
    assert np.linalg.norm(grad - fd) / scale < 1e-4


@pytest.mark.slow
def test_g2_search_reaches_published_quality(g2_net):
    report = solve(g2_net, SolverConfig(restarts=64, max_iters=3000, seed=0))
    assert report.profile.max_deviation <= 0.006

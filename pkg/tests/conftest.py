import numpy as np
import pytest

from fpnc import fixtures, refine_beta
from fpnc.transfer import CodingSolution

# (nodes, max in-degree, terminals) ranges for the seeded corpus
CORPUS_SIZE = 200


def random_alpha(net, rng, scale=2.0):
    """Uniform coding coefficients on every consecutive edge pair."""
    alpha = {}
    src = set(net.source_edge_order)
    for e in net.edges:
        if e.id in src:
            continue
        for in_id in net.incoming[e.tail]:
            alpha[(in_id, e.id)] = float(rng.uniform(-scale, scale))
    return alpha


def random_beta(net, rng, scale=1.0):
    beta = {}
    for t in net.terminals:
        per = {}
        for pos in range(1, len(net.demand_list(t)) + 1):
            per[pos] = {eid: float(rng.uniform(-scale, scale))
                        for eid in net.incoming[t]}
        beta[t] = per
    return beta


def corpus_instance(seed, alpha_scale=2.0, fit_beta=True):
    """One seeded random network with random alpha and least-squares beta."""
    rng = np.random.default_rng(seed + 1000)
    n_nodes = int(rng.integers(5, 13))
    n_term = int(rng.integers(1, min(4, n_nodes - 2)))
    net = fixtures.random_network(n_nodes, 3, n_term, seed)
    alpha = random_alpha(net, rng, alpha_scale)
    beta = refine_beta(net, alpha) if fit_beta else random_beta(net, rng)
    return net, CodingSolution(alpha=alpha, beta=beta), rng


@pytest.fixture(scope="session")
def identity_net():
    return fixtures.build_identity()


@pytest.fixture(scope="session")
def chain_net():
    return fixtures.build_chain()


@pytest.fixture(scope="session")
def butterfly_net():
    return fixtures.build_butterfly()


@pytest.fixture(scope="session")
def g1_net():
    return fixtures.build_g1()


@pytest.fixture(scope="session")
def g2_net():
    return fixtures.build_g2()


@pytest.fixture(scope="session")
def g3_net():
    return fixtures.build_g3()


@pytest.fixture(scope="session")
def g2_solution(g2_net):
    return fixtures.g2_reference_solution(g2_net)


def near_critical_instance():
    """One-hop relay whose weighted plan sits right at the feasibility edge.

    With c = 1.37, b = (1 + 0.0045)/1.37 and message bound 100 the default
    per-edge plan is (P=9, p=3); dropping to p=2 mis-decodes six messages
    (first at -99).  Frozen from an exhaustive search.
    """
    from fpnc.network import Edge, Network, Node
    net = Network(name="nearcritical",
                  nodes=(Node("s", "source"), Node("a", "internal"),
                         Node("t", "terminal")),
                  edges=(Edge("e1", "s", "a"), Edge("e2", "a", "t")),
                  source_edge_order=("e1",), demands={"t": (1,)}, base=2)
    sol = CodingSolution(alpha={("e1", "e2"): 1.37},
                         beta={"t": {1: {"e2": (1.0 + 0.0045) / 1.37}}})
    return net, sol, 100

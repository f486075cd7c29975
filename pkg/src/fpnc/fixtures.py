"""Built-in reference networks and the seeded random-DAG generator.

``identity``, ``chain`` and ``butterfly`` are minimal networks with exact
real solutions.  ``g1``, ``g2`` and ``g3`` reconstruct the classic
insufficiency benchmarks (non-Fano-, Fano- and combined-type networks):
``g1`` is solvable over the reals by summing and subtracting (one terminal
needs a division by two), ``g2`` admits no exact real solution and ships
with a published approximate coefficient table, and ``g3`` runs both
side by side off one source.  See fixtures/README.md in the repository for
the reconstruction notes.
"""

from __future__ import annotations

import numpy as np

from .network import Edge, Network, Node, validate
from .transfer import CodingSolution

FIXTURE_NAMES = ("identity", "chain", "butterfly", "g1", "g2", "g3")

# Published approximate coefficients for the g2 topology (6 significant
# digits).  Keys mirror the edge names used by build_g2.
G2_ALPHA = {
    ("e1", "e5"): 0.0332528, ("e2", "e5"): -11.8712,
    ("e3", "e6"): 16.3384, ("e4", "e6"): 2.69746,
    ("e7", "e11"): 2.79007, ("e8", "e11"): 2.02721,
    ("e9", "e12"): -1.16509, ("e10", "e12"): 2.28349,
}
G2_BETA = {
    "t1": {1: {"f1": -0.0169705, "f2": 0.182872}},
    "t2": {1: {"f3": -0.030174, "f4": 0.0722992}},
    "t3": {1: {"f5": -25.8106, "f6": 21.8495}},
}


def _net(name, nodes, edges, source_order, demands, base=2) -> Network:
    net = Network(name=name,
                  nodes=tuple(Node(i, r) for i, r in nodes),
                  edges=tuple(Edge(i, a, b) for i, a, b in edges),
                  source_edge_order=tuple(source_order),
                  demands={t: tuple(w) for t, w in demands.items()},
                  base=base)
    problems = validate(net)
    if problems:
        raise AssertionError(f"fixture {name} invalid: {problems}")
    return net


def build_identity() -> Network:
    return _net("identity",
                [("s", "source"), ("t", "terminal")],
                [("e1", "s", "t")],
                ["e1"], {"t": [1]})


def build_chain() -> Network:
    return _net("chain",
                [("s", "source"), ("a", "internal"), ("b", "internal"),
                 ("t", "terminal")],
                [("e1", "s", "a"), ("e2", "a", "b"), ("e3", "b", "t")],
                ["e1"], {"t": [1]})


def build_butterfly() -> Network:
    """Seven-node multicast butterfly; both sinks demand both messages."""
    return _net("butterfly",
                [("s", "source"), ("u1", "internal"), ("u2", "internal"),
                 ("w1", "internal"), ("w2", "internal"),
                 ("t1", "terminal"), ("t2", "terminal")],
                [("e1", "s", "u1"), ("e2", "s", "u2"),
                 ("e3", "u1", "t1"), ("e4", "u1", "w1"),
                 ("e5", "u2", "w1"), ("e6", "u2", "t2"),
                 ("e7", "w1", "w2"),
                 ("e8", "w2", "t1"), ("e9", "w2", "t2")],
                ["e1", "e2"],
                {"t1": [1, 2], "t2": [1, 2]})


def _g1_parts():
    """Node/edge/demand lists of the g1 construction (shared with g3)."""
    nodes = ([("q%d" % i, "internal") for i in range(1, 6)]
             + [("v1", "internal"), ("v2", "internal"), ("v3", "internal"),
                ("w1", "internal")]
             + [("t1", "terminal"), ("t2", "terminal"), ("t3", "terminal"),
                ("v4", "terminal"), ("t5", "terminal"), ("t6", "terminal"),
                ("t7", "terminal")])
    edges = [
        ("q1_v1", "q1", "v1"), ("q2_v1", "q2", "v1"),      # v1 = m1 + m2
        ("q1_v2", "q1", "v2"), ("q3_v2", "q3", "v2"),      # v2 = m1 + m3
        ("q2_v3", "q2", "v3"), ("q3_v3", "q3", "v3"),      # v3 = m2 + m3
        ("q4_w1", "q4", "w1"), ("q5_w1", "q5", "w1"),      # w1 = m4 + m5
        ("v1_t1", "v1", "t1"), ("q2_t1", "q2", "t1"),
        ("v1_t2", "v1", "t2"), ("q1_t2", "q1", "t2"),
        ("v2_t3", "v2", "t3"), ("q1_t3", "q1", "t3"),
        ("v1_v4", "v1", "v4"), ("v2_v4", "v2", "v4"), ("v3_v4", "v3", "v4"),
        ("w1_t5", "w1", "t5"), ("q5_t5", "q5", "t5"),
        ("w1_t6", "w1", "t6"), ("q4_t6", "q4", "t6"),
        ("v3_t7", "v3", "t7"), ("q3_t7", "q3", "t7"),
    ]
    demands = {"t1": [1], "t2": [2], "t3": [3], "v4": [3],
               "t5": [4], "t6": [5], "t7": [2]}
    return nodes, edges, demands


def build_g1() -> Network:
    """Five messages, seven single-demand terminals, exactly solvable.

    Internal nodes sum everything they receive; six terminals decode by
    subtracting a copied message from a pairwise sum, and the middle
    terminal v4 halves (-v1 + v2 + v3) to recover its message.
    """
    nodes, edges, demands = _g1_parts()
    src_edges = [("a%d" % i, "s", "q%d" % i) for i in range(1, 6)]
    return _net("g1",
                [("s", "source")] + nodes,
                src_edges + edges,
                [e[0] for e in src_edges],
                demands)


def g1_exact_solution(net: Network) -> CodingSolution:
    """All-ones coding (relays copy, internal nodes sum); subtraction decodes."""
    alpha = {}
    for e in net.edges:
        tail = e.tail
        if tail == net.source:
            continue
        for in_id in net.incoming[tail]:
            alpha[(in_id, e.id)] = 1.0
    beta = {
        "t1": {1: {"v1_t1": 1.0, "q2_t1": -1.0}},
        "t2": {1: {"v1_t2": 1.0, "q1_t2": -1.0}},
        "t3": {1: {"v2_t3": 1.0, "q1_t3": -1.0}},
        "v4": {1: {"v1_v4": -0.5, "v2_v4": 0.5, "v3_v4": 0.5}},
        "t5": {1: {"w1_t5": 1.0, "q5_t5": -1.0}},
        "t6": {1: {"w1_t6": 1.0, "q4_t6": -1.0}},
        "t7": {1: {"v3_t7": 1.0, "q3_t7": -1.0}},
    }
    return CodingSolution(alpha=alpha, beta=beta)


def _g2_parts(m1: str, m2: str, m3: str, t1: str, t2: str, t3: str):
    """G2 wiring hung off relays carrying messages m1, m2, m3.

    Two combiner layers: a <- (m1, m2) -> e5, b <- (m2, m3) -> e6, then
    c <- (e5, e6 copies) -> e11 and d <- (e5 copy, m3 copy) -> e12.  The
    terminals read (m1, e11), (e11, e12) and (e12, e6) copies and demand
    m3, m2 and m1 respectively.
    """
    nodes = [("a", "internal"), ("b", "internal"), ("r5", "internal"),
             ("r6", "internal"), ("c", "internal"), ("d", "internal"),
             ("r11", "internal"), ("r12", "internal"),
             (t1, "terminal"), (t2, "terminal"), (t3, "terminal")]
    edges = [
        ("e1", m1, "a"), ("e2", m2, "a"),
        ("e3", m2, "b"), ("e4", m3, "b"),
        ("e5", "a", "r5"), ("e6", "b", "r6"),
        ("e7", "r5", "c"), ("e8", "r6", "c"),
        ("e9", "r5", "d"), ("e10", m3, "d"),
        ("e11", "c", "r11"), ("e12", "d", "r12"),
        ("f1", m1, t1), ("f2", "r11", t1),
        ("f3", "r11", t2), ("f4", "r12", t2),
        ("f5", "r12", t3), ("f6", "r6", t3),
    ]
    return nodes, edges


def build_g2() -> Network:
    nodes, edges = _g2_parts("u1", "u2", "u3", "t1", "t2", "t3")
    return _net("g2",
                [("s", "source"), ("u1", "internal"), ("u2", "internal"),
                 ("u3", "internal")] + nodes,
                [("s1", "s", "u1"), ("s2", "s", "u2"), ("s3", "s", "u3")] + edges,
                ["s1", "s2", "s3"],
                {"t1": [3], "t2": [2], "t3": [1]})


def g2_reference_solution(net: Network) -> CodingSolution:
    """The published coefficient table plus unit coefficients on every copy."""
    alpha = dict(G2_ALPHA)
    combiner_out = {e2 for (_, e2) in G2_ALPHA}
    for e in net.edges:
        tail = e.tail
        if tail == net.source or e.id in combiner_out:
            continue
        inc = net.incoming[tail]
        if len(inc) == 1:
            alpha[(inc[0], e.id)] = 1.0
    return CodingSolution(alpha=alpha, beta={t: dict(v) for t, v in G2_BETA.items()})


def build_g3() -> Network:
    """g1 and g2 run side by side off one five-message source.

    The g2 part reads the first three messages through the shared relays;
    its three terminals are renamed t8, t9, t10.
    """
    g1_nodes, g1_edges, g1_demands = _g1_parts()
    g2_nodes, g2_edges = _g2_parts("q1", "q2", "q3", "t8", "t9", "t10")
    src_edges = [("a%d" % i, "s", "q%d" % i) for i in range(1, 6)]
    demands = dict(g1_demands)
    demands.update({"t8": [3], "t9": [2], "t10": [1]})
    return _net("g3",
                [("s", "source")] + g1_nodes + g2_nodes,
                src_edges + g1_edges + g2_edges,
                [e[0] for e in src_edges],
                demands)


def g3_reference_solution(net: Network) -> CodingSolution:
    """g1's exact sums plus the g2 table on the combined network."""
    alpha = dict(G2_ALPHA)
    combiner_out = {e2 for (_, e2) in G2_ALPHA}
    for e in net.edges:
        tail = e.tail
        if tail == net.source or e.id in combiner_out:
            continue
        for in_id in net.incoming[tail]:
            alpha[(in_id, e.id)] = 1.0
    beta = {
        "t1": {1: {"v1_t1": 1.0, "q2_t1": -1.0}},
        "t2": {1: {"v1_t2": 1.0, "q1_t2": -1.0}},
        "t3": {1: {"v2_t3": 1.0, "q1_t3": -1.0}},
        "v4": {1: {"v1_v4": -0.5, "v2_v4": 0.5, "v3_v4": 0.5}},
        "t5": {1: {"w1_t5": 1.0, "q5_t5": -1.0}},
        "t6": {1: {"w1_t6": 1.0, "q4_t6": -1.0}},
        "t7": {1: {"v3_t7": 1.0, "q3_t7": -1.0}},
        "t8": {1: {"f1": G2_BETA["t1"][1]["f1"], "f2": G2_BETA["t1"][1]["f2"]}},
        "t9": {1: {"f3": G2_BETA["t2"][1]["f3"], "f4": G2_BETA["t2"][1]["f4"]}},
        "t10": {1: {"f5": G2_BETA["t3"][1]["f5"], "f6": G2_BETA["t3"][1]["f6"]}},
    }
    return CodingSolution(alpha=alpha, beta=beta)


def build(name: str) -> Network:
    builders = {"identity": build_identity, "chain": build_chain,
                "butterfly": build_butterfly, "g1": build_g1,
                "g2": build_g2, "g3": build_g3}
    try:
        return builders[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURE_NAMES}") from None


def exact_solution(net: Network) -> CodingSolution | None:
    """The known zero-deviation solution of a fixture, if one exists."""
    if net.name == "identity":
        return CodingSolution(alpha={}, beta={"t": {1: {"e1": 1.0}}})
    if net.name == "chain":
        return CodingSolution(alpha={("e1", "e2"): 1.0, ("e2", "e3"): 1.0},
                              beta={"t": {1: {"e3": 1.0}}})
    if net.name == "butterfly":
        alpha = {("e1", "e3"): 1.0, ("e1", "e4"): 1.0,
                 ("e2", "e5"): 1.0, ("e2", "e6"): 1.0,
                 ("e4", "e7"): 1.0, ("e5", "e7"): 1.0,
                 ("e7", "e8"): 1.0, ("e7", "e9"): 1.0}
        beta = {"t1": {1: {"e3": 1.0},
                       2: {"e3": -1.0, "e8": 1.0}},
                "t2": {1: {"e6": -1.0, "e9": 1.0},
                       2: {"e6": 1.0}}}
        return CodingSolution(alpha=alpha, beta=beta)
    if net.name == "g1":
        return g1_exact_solution(net)
    return None


def random_network(n_nodes: int, max_in_degree: int, n_terminals: int,
                   seed: int, name: str | None = None) -> Network:
    """Seeded random single-source DAG that always validates.

    Non-source nodes pick 1..max_in_degree distinct earlier non-terminal
    nodes as parents; internal nodes left without consumers are wired to a
    later node so every sink is a terminal.  Each terminal demands one
    random message.
    """
    if n_nodes < n_terminals + 1 or n_terminals < 1 or max_in_degree < 1:
        raise ValueError("need n_nodes > n_terminals >= 1 and max_in_degree >= 1")
    for attempt in range(50):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        net = _random_attempt(n_nodes, max_in_degree, n_terminals, rng,
                              name or f"random-{seed}")
        if net is not None and not validate(net):
            return net
    raise RuntimeError(f"random_network(seed={seed}) failed to produce a valid DAG")


def _random_attempt(n_nodes, max_in, n_terminals, rng, name):
    n_internal = n_nodes - 1 - n_terminals
    order = (["s"] + [f"n{i}" for i in range(1, n_internal + 1)]
             + [f"t{i}" for i in range(1, n_terminals + 1)])
    roles = {"s": "source"}
    roles.update({f"n{i}": "internal" for i in range(1, n_internal + 1)})
    roles.update({f"t{i}": "terminal" for i in range(1, n_terminals + 1)})

    position = {v: j for j, v in enumerate(order)}
    links: list[tuple[str, str]] = []
    indeg = {v: 0 for v in order}
    outdeg = {v: 0 for v in order}
    for j, v in enumerate(order):
        if v == "s":
            continue
        pool = [u for u in order[:j] if roles[u] != "terminal"]
        deg = int(rng.integers(1, min(max_in, len(pool)) + 1))
        parents = rng.choice(len(pool), size=deg, replace=False)
        for pi in sorted(int(x) for x in parents):
            u = pool[pi]
            links.append((u, v))
            indeg[v] += 1
            outdeg[u] += 1

    # every internal node must feed someone, else it becomes a second sink
    for j, u in enumerate(order):
        if roles[u] == "terminal" or u == "s" or outdeg[u] > 0:
            continue
        targets = [v for v in order[j + 1:] if indeg[v] < max_in]
        if not targets:
            return None
        v = min(targets, key=lambda x: (indeg[x], position[x]))
        links.append((u, v))
        indeg[v] += 1
        outdeg[u] += 1

    edges = [(f"e{i+1}", u, v) for i, (u, v) in enumerate(links)]
    src_order = [eid for eid, u, _ in edges if u == "s"]
    k = len(src_order)
    if k == 0:
        return None
    demands = {f"t{i}": [int(rng.integers(1, k + 1))]
               for i in range(1, n_terminals + 1)}
    return Network(name=name,
                   nodes=tuple(Node(v, roles[v]) for v in order),
                   edges=tuple(Edge(eid, u, v) for eid, u, v in edges),
                   source_edge_order=tuple(src_order),
                   demands={t: tuple(w) for t, w in demands.items()},
                   base=2)

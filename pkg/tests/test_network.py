import json

import pytest

from fpnc import fixtures
from fpnc.network import (Edge, Network, NetworkCycleError, NetworkFormatError,
                          Node, depth_partition, from_json_dict, load, save,
                          to_json_dict, validate)


def _rules(violations):
    return {v.rule for v in violations}


def test_identity_is_valid(identity_net):
    assert validate(identity_net) == []


def test_two_cycle_reports_acyclicity():
    net = Network(name="loop",
                  nodes=(Node("s", "source"), Node("a", "internal"),
                         Node("b", "internal"), Node("t", "terminal")),
                  edges=(Edge("e1", "s", "a"), Edge("e2", "a", "b"),
                         Edge("e3", "b", "a"), Edge("e4", "a", "t")),
                  source_edge_order=("e1",), demands={"t": (1,)})
    assert "acyclicity" in _rules(validate(net))
    with pytest.raises(NetworkCycleError):
        depth_partition(net)


def test_second_root_reports_unique_source():
    net = Network(name="tworoots",
                  nodes=(Node("s", "source"), Node("x", "internal"),
                         Node("t", "terminal")),
                  edges=(Edge("e1", "s", "t"), Edge("e2", "x", "t")),
                  source_edge_order=("e1",), demands={"t": (1,)})
    assert "unique-source" in _rules(validate(net))


def test_terminal_outgoing_edges_are_allowed():
    net = Network(name="passthrough",
                  nodes=(Node("s", "source"), Node("t1", "terminal"),
                         Node("t2", "terminal")),
                  edges=(Edge("e1", "s", "t1"), Edge("e2", "t1", "t2")),
                  source_edge_order=("e1",), demands={"t1": (1,), "t2": (1,)})
    assert validate(net) == []


def test_demand_out_of_range_is_flagged():
    net = Network(name="baddemand",
                  nodes=(Node("s", "source"), Node("t", "terminal")),
                  edges=(Edge("e1", "s", "t"),),
                  source_edge_order=("e1",), demands={"t": (2,)})
    assert "demands" in _rules(validate(net))


def test_depth_identity(identity_net):
    dp = depth_partition(identity_net)
    assert dp.depth == 1
    assert dp.layers == (("e1",),)


def test_depth_chain(chain_net):
    dp = depth_partition(chain_net)
    assert dp.depth == 3
    assert [len(layer) for layer in dp.layers] == [1, 1, 1]


def _longest_paths_by_enumeration(net):
    """Brute-force every source-rooted path; depth oracle for small graphs."""
    best = {net.source: 0}
    stack = [(net.source, 0)]
    while stack:
        v, d = stack.pop()
        for eid in net.outgoing[v]:
            h = net.edge_by_id[eid].head
            best[h] = max(best.get(h, 0), d + 1)
            stack.append((h, d + 1))
    return best


def test_depth_butterfly_matches_path_enumeration(butterfly_net):
    dp = depth_partition(butterfly_net)
    oracle = _longest_paths_by_enumeration(butterfly_net)
    assert dp.depth == 4
    assert dp.depth_of_node == oracle
    # layer sizes frozen from the enumeration oracle
    assert [len(layer) for layer in dp.layers] == [2, 4, 1, 2]
    assert set(dp.layers[0]) == {"e1", "e2"}
    assert set(dp.layers[2]) == {"e7"}


@pytest.mark.parametrize("name", fixtures.FIXTURE_NAMES)
def test_depth_invariants_on_fixtures(name):
    net = fixtures.build(name)
    dp = depth_partition(net)
    assert sum(len(layer) for layer in dp.layers) == len(net.edges)
    for e in net.edges:
        assert e.id in dp.layers[dp.depth_of_edge[e.id]]
        assert dp.depth_of_node[e.head] >= dp.depth_of_node[e.tail] + 1
    assert dp.depth_of_node[net.source] == 0


def test_round_trip_identity(identity_net, tmp_path):
    path = tmp_path / "identity.json"
    save(identity_net, path)
    assert load(path) == identity_net


def test_round_trip_butterfly_preserves_edge_order(butterfly_net, tmp_path):
    path = tmp_path / "butterfly.json"
    save(butterfly_net, path)
    loaded = load(path)
    assert loaded == butterfly_net
    assert [e.id for e in loaded.edges] == [e.id for e in butterfly_net.edges]


def test_load_rejects_demand_out_of_range(tmp_path):
    doc = to_json_dict(fixtures.build_identity())
    doc["demands"]["t"] = [2]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(NetworkFormatError, match="out of range"):
        load(path)


def test_load_rejects_unknown_edge_endpoint():
    doc = to_json_dict(fixtures.build_identity())
    doc["edges"][0]["to"] = "nowhere"
    with pytest.raises(NetworkFormatError, match="unknown node"):
        from_json_dict(doc)


def test_load_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "x",')
    with pytest.raises(NetworkFormatError, match="line"):
        load(path)


@pytest.mark.parametrize("seed", range(20))
def test_random_networks_validate_and_respect_limits(seed):
    net = fixtures.random_network(10, 3, 2, seed)
    assert validate(net) == []
    dp = depth_partition(net)
    assert dp.depth <= len(net.nodes) - 1
    assert max(len(net.incoming[n.id]) for n in net.nodes) <= 3


def test_random_network_is_seed_deterministic():
    a = fixtures.random_network(11, 3, 2, 42)
    b = fixtures.random_network(11, 3, 2, 42)
    assert to_json_dict(a) == to_json_dict(b)
    assert to_json_dict(a) != to_json_dict(fixtures.random_network(11, 3, 2, 43))

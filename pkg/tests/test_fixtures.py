import json
from pathlib import Path

import pytest

from fpnc import fixtures, load_solution, validate
from fpnc.network import load, to_json_dict
from fpnc.transfer import deviation_profile

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.mark.parametrize("name", fixtures.FIXTURE_NAMES)
def test_shipped_files_match_builders(name):
    built = fixtures.build(name)
    on_disk = load(FIXTURE_DIR / f"{name}.json")
    assert to_json_dict(on_disk) == to_json_dict(built)


@pytest.mark.parametrize("name", fixtures.FIXTURE_NAMES)
def test_fixtures_validate(name):
    assert validate(fixtures.build(name)) == []


@pytest.mark.parametrize("name", ["identity", "chain", "butterfly", "g1"])
def test_exact_solutions_have_zero_deviation(name):
    net = fixtures.build(name)
    prof = deviation_profile(net, fixtures.exact_solution(net))
    assert prof.objective < 1e-28
    assert prof.max_deviation < 1e-14


def test_g1_shape(g1_net):
    assert g1_net.message_count == 5
    assert len(g1_net.terminals) == 7
    # v4 is the middle terminal and the only one with three inputs
    assert g1_net.terminals[3] == "v4"
    assert len(g1_net.incoming["v4"]) == 3


def test_g2_shape(g2_net):
    assert g2_net.message_count == 3
    assert len(g2_net.terminals) == 3
    assert max(len(g2_net.incoming[n.id]) for n in g2_net.nodes) == 2


def test_g2_carries_fano_structure(g2_net, g2_solution):
    """Over GF(2), every carried value is a Fano-plane point and each
    terminal's two inputs XOR to exactly its demand."""
    masks = {eid: 0 for eid in g2_net.source_edge_order}
    for i, eid in enumerate(g2_net.source_edge_order):
        masks[eid] = 1 << i
    order = sorted(g2_net.edges, key=lambda e: g2_net.edge_index[e.id])
    for e in order:
        if e.id in masks:
            continue
        acc = 0
        for in_id in g2_net.incoming[e.tail]:
            if g2_solution.alpha.get((in_id, e.id), 0.0) != 0.0:
                acc ^= masks[in_id]
        masks[e.id] = acc
    for t, wants in g2_net.demands.items():
        inputs = [masks[eid] for eid in g2_net.incoming[t]]
        assert inputs[0] ^ inputs[1] == 1 << (wants[0] - 1)


def test_g2_solution_file_round_trips(g2_net):
    sol, stored_dev, stored_obj = load_solution(FIXTURE_DIR / "g2_solution.json")
    prof = deviation_profile(g2_net, sol)
    assert prof.max_deviation == pytest.approx(stored_dev, rel=1e-15)
    assert prof.objective == pytest.approx(stored_obj, rel=1e-15)


def test_g3_combines_both_parts(g3_net):
    assert g3_net.message_count == 5
    assert len(g3_net.terminals) == 10
    sol = fixtures.g3_reference_solution(g3_net)
    prof = deviation_profile(g3_net, sol)
    g2 = fixtures.build_g2()
    g2_prof = deviation_profile(g2, fixtures.g2_reference_solution(g2))
    assert prof.max_deviation == pytest.approx(g2_prof.max_deviation, rel=1e-12)


def test_g3_solution_file_round_trips(g3_net):
    sol, stored_dev, _ = load_solution(FIXTURE_DIR / "g3_solution.json")
    prof = deviation_profile(g3_net, sol)
    assert prof.max_deviation == pytest.approx(stored_dev, rel=1e-15)

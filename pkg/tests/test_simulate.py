import numpy as np
import pytest

import fpnc
from fpnc import fixtures
from fpnc.fixedpoint import FixedPointFormat, FixedPointOverflowError
from fpnc.simulate import (BudgetExceededError, Exhaustive, MessageVector,
                           Sampled, run_fixed, run_fixed_batch, run_real,
                           run_real_batch, verify)
from fpnc.transfer import CodingSolution, deviation_profile
from .conftest import corpus_instance, near_critical_instance


def test_message_vector_enforces_bound():
    MessageVector((3, -3), 3)
    with pytest.raises(ValueError):
        MessageVector((4,), 3)


def test_run_real_identity(identity_net):
    values, decoded = run_real(identity_net, fixtures.exact_solution(identity_net), [7])
    assert values["e1"] == 7.0
    assert decoded[("t", 1)] == 7.0


def test_run_real_chain_doubles():
    net = fixtures.build_chain()
    sol = CodingSolution(alpha={("e1", "e2"): 2.0, ("e2", "e3"): 1.0},
                         beta={"t": {1: {"e3": 1.0}}})
    values, _ = run_real(net, sol, [3])
    assert (values["e1"], values["e2"], values["e3"]) == (3.0, 6.0, 6.0)


def test_run_real_butterfly_decodes_both(butterfly_net):
    sol = fixtures.exact_solution(butterfly_net)
    _, decoded = run_real(butterfly_net, sol, [5, -2])
    assert decoded[("t1", 1)] == pytest.approx(5.0)
    assert decoded[("t1", 2)] == pytest.approx(-2.0)
    assert decoded[("t2", 1)] == pytest.approx(5.0)
    assert decoded[("t2", 2)] == pytest.approx(-2.0)


@pytest.mark.parametrize("seed", range(6))
def test_run_real_is_linear(seed):
    net, sol, rng = corpus_instance(seed)
    m = rng.integers(-20, 21, size=net.message_count)
    v1, _ = run_real(net, sol, m)
    v3, _ = run_real(net, sol, 3 * m)
    for eid, val in v1.items():
        assert v3[eid] == pytest.approx(3.0 * val, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_decoded_matches_mixing_coefficients(seed):
    net, sol, rng = corpus_instance(seed)
    prof = deviation_profile(net, sol)
    m = rng.integers(-20, 21, size=net.message_count)
    _, decoded = run_real(net, sol, m)
    for (t, pos), value in decoded.items():
        predicted = sum(prof.coeff[(t, pos, i + 1)] * m[i]
                        for i in range(net.message_count))
        assert value == pytest.approx(predicted, rel=1e-9, abs=1e-9)


def test_run_fixed_identity_integer_passthrough(identity_net):
    sol = fixtures.exact_solution(identity_net)
    out = run_fixed(identity_net, sol, [7], FixedPointFormat(2, 8, 0))
    assert out.decoded[("t", 1)] == 7
    assert out.edge_values["e1"].value == 7


def test_run_fixed_g1_decodes_everything(g1_net):
    # n-bit messages with two integer guard digits and no fraction digits
    sol = fixtures.g1_exact_solution(g1_net)
    n = 8
    fmt = FixedPointFormat(2, n + 2, 0)
    rng = np.random.default_rng(0)
    for _ in range(25):
        m = rng.integers(-2 ** (n - 1), 2 ** (n - 1), size=5)
        out = run_fixed(g1_net, sol, m, fmt)
        for t, wants in g1_net.demands.items():
            for pos, want in enumerate(wants, start=1):
                assert out.decoded[(t, pos)] == m[want - 1]
        assert out.max_internal_residual < 2 ** -40


def test_run_fixed_high_precision_matches_real(g2_net, g2_solution):
    fmt = FixedPointFormat(2, 13, 40)
    rng = np.random.default_rng(1)
    for _ in range(10):
        m = rng.integers(-64, 64, size=3)
        _, real_dec = run_real(g2_net, g2_solution, m)
        out = run_fixed(g2_net, g2_solution, m, fmt)
        for key, value in real_dec.items():
            assert out.decoded[key] == fpnc.round_to_int(value)


def test_run_fixed_overflow_names_edge():
    net = fixtures.build_chain()
    sol = CodingSolution(alpha={("e1", "e2"): 100.0, ("e2", "e3"): 1.0},
                         beta={"t": {1: {"e3": 0.01}}})
    with pytest.raises(FixedPointOverflowError, match="e2"):
        run_fixed(net, sol, [100], FixedPointFormat(2, 8, 0))


def test_batch_runs_agree_with_scalar_runs(g2_net, g2_solution):
    fmt = FixedPointFormat(2, 14, 7)
    rng = np.random.default_rng(2)
    cases = rng.integers(-64, 65, size=(50, 3))
    real = run_real_batch(g2_net, g2_solution, cases)
    fixed = run_fixed_batch(g2_net, g2_solution, cases, fmt)
    for row in range(0, 50, 13):
        values, _ = run_real(g2_net, g2_solution, cases[row])
        out = run_fixed(g2_net, g2_solution, cases[row], fmt, track_internal=False)
        for j, e in enumerate(g2_net.edges):
            assert real[row, j] == pytest.approx(values[e.id], rel=1e-12)
            assert fixed[row, j] == float(out.edge_values[e.id])


def test_verify_identity_exhaustive(identity_net):
    sol = fixtures.exact_solution(identity_net)
    report = verify(identity_net, sol, FixedPointFormat(2, 8, 0), 100)
    assert report.passed
    assert report.total_cases == 201
    assert report.max_terminal_residual == 0.0


def test_verify_butterfly_closed_form_plan(butterfly_net):
    sol = fixtures.exact_solution(butterfly_net)
    stats = fpnc.network_stats(butterfly_net, sol)
    plan = fpnc.plan_worst_case(stats, 0.0, bound=32)
    report = verify(butterfly_net, sol, plan.fmt, 32)
    assert report.passed
    assert report.total_cases == 65 * 65
    assert report.max_terminal_residual < 0.5


def test_verify_budget_guard(butterfly_net):
    sol = fixtures.exact_solution(butterfly_net)
    with pytest.raises(BudgetExceededError):
        verify(butterfly_net, sol, FixedPointFormat(2, 25, 0), 2 ** 20)


def test_verify_sampled_is_deterministic_and_bounded(butterfly_net):
    sol = fixtures.exact_solution(butterfly_net)
    mode = Sampled(count=500, seed=9)
    fmt = FixedPointFormat(2, 25, 0)
    a = verify(butterfly_net, sol, fmt, 2 ** 20, mode)
    b = verify(butterfly_net, sol, fmt, 2 ** 20, mode)
    assert a.passed and a.total_cases == 500
    assert a.to_json_dict() == b.to_json_dict()


def test_sampled_sweeps_lead_with_boundary_vectors():
    from fpnc.simulate import _boundary_vectors
    rows = _boundary_vectors(3, 7)
    assert rows.shape == (2 * 3 + 3, 3)
    assert rows[0].tolist() == [0, 0, 0]
    assert rows[1].tolist() == [7, 7, 7]
    assert rows[2].tolist() == [-7, -7, -7]
    singles = {tuple(r) for r in rows[3:].tolist()}
    assert (7, 0, 0) in singles and (0, -7, 0) in singles and (0, 0, 7) in singles


def test_failure_cap_limits_stored_failures_not_the_count():
    net, sol, bound = near_critical_instance()
    fmt = FixedPointFormat(2, 9, 2)
    report = verify(net, sol, fmt, bound, failure_cap=2)
    assert report.failure_count == 6
    assert len(report.failures) == 2
    assert len(report.to_json_dict()["failures"]) == 2


def test_undersized_fraction_digits_fail_and_are_recorded():
    net, sol, bound = near_critical_instance()
    dev = deviation_profile(net, sol).max_deviation
    plan = fpnc.plan_per_edge(net, sol, dev, bound=bound)
    good = verify(net, sol, plan.fmt, bound)
    assert good.passed
    low_fmt = FixedPointFormat(2, plan.fmt.int_digits, plan.fmt.frac_digits - 1)
    bad = verify(net, sol, low_fmt, bound)
    assert not bad.passed
    assert bad.failure_count == 6
    assert bad.failures[0].message == (-99,)
    assert bad.failures[0].decoded == -100
    assert bad.max_terminal_residual >= 0.5
    # failures arrive in lexicographic message order
    msgs = [f.message for f in bad.failures]
    assert msgs == sorted(msgs)


def test_closed_form_plan_true_depth_g2_sampled(g2_net, g2_solution):
    # graph depth counts relay hops, so the closed-form plan is very wide
    # (beyond the compiled kernel's 2**53 gate) but certainly sufficient
    dev = deviation_profile(g2_net, g2_solution).max_deviation
    stats = fpnc.network_stats(g2_net, g2_solution)
    plan = fpnc.plan_worst_case(stats, dev, bound=64)
    assert plan.fmt.mantissa_limit > 2 ** 53
    report = verify(g2_net, g2_solution, plan.fmt, 64, Sampled(3000, 4))
    assert report.kernel == "py"
    assert report.passed


@pytest.mark.slow
def test_closed_form_plan_true_depth_g2_exhaustive(g2_net, g2_solution):
    dev = deviation_profile(g2_net, g2_solution).max_deviation
    stats = fpnc.network_stats(g2_net, g2_solution)
    plan = fpnc.plan_worst_case(stats, dev, bound=64)
    report = verify(g2_net, g2_solution, plan.fmt, 64, Exhaustive())
    assert report.passed
    assert report.max_terminal_residual < 0.5


@pytest.mark.parametrize("seed", range(10))
def test_layer_bounds_hold_on_random_instances(seed):
    net, sol, rng = corpus_instance(seed)
    stats = fpnc.network_stats(net, sol)
    if stats.max_in_degree * stats.max_coeff < 1.0:
        pytest.skip("bounds assume max_in_degree * max_coeff >= 1")
    dp = fpnc.depth_partition(net)
    bound = 50
    frac = int(rng.integers(0, 7))
    top = fpnc.value_bound(stats, bound, stats.depth - 1)
    int_digits = int(np.ceil(np.log2(2 * top + 2))) + 1
    fmt = FixedPointFormat(2, int_digits, frac)
    cases = rng.integers(-bound, bound + 1, size=(100, net.message_count))
    real = run_real_batch(net, sol, cases)
    fixed = run_fixed_batch(net, sol, cases, fmt)
    for j, e in enumerate(net.edges):
        layer = dp.depth_of_edge[e.id]
        vb = fpnc.value_bound(stats, bound, layer)
        nb = fpnc.noise_bound(stats, frac, layer)
        assert np.max(np.abs(real[:, j])) <= vb * (1 + 1e-9) + 1e-9
        assert np.max(np.abs(fixed[:, j] - real[:, j])) <= nb * (1 + 1e-9) + 1e-12

"""Command-line pipeline: validate -> design -> plan -> verify -> report.

Exit codes: 0 success, 1 validation failure, 2 usage, 3 infeasible plan or
over-budget request, 4 verification failure, 5 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, fixtures, network, precision, simulate, solver
from ._jsonio import dumps_canonical, sha256_file
from .fixedpoint import FixedPointFormat, FixedPointOverflowError
from .precision import InfeasibleError
from .simulate import BudgetExceededError, Exhaustive, Sampled
from .transfer import SolutionShapeError, deviation_profile

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 3
EXIT_VERIFY_FAILED = 4
EXIT_IO = 5


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_net(path) -> network.Network:
    try:
        return network.load(path)
    except FileNotFoundError as exc:
        raise _CliError(EXIT_IO, f"{path}: {exc.strerror}") from exc
    except network.NetworkFormatError as exc:
        raise _CliError(EXIT_IO, str(exc)) from exc


def _load_sol(path):
    try:
        return solver.load_solution(path)
    except FileNotFoundError as exc:
        raise _CliError(EXIT_IO, f"{path}: {exc.strerror}") from exc
    except (ValueError, json.JSONDecodeError) as exc:
        raise _CliError(EXIT_IO, f"{path}: {exc}") from exc


def _load_plan(path) -> precision.PrecisionPlan:
    try:
        return precision.load_plan(path)
    except FileNotFoundError as exc:
        raise _CliError(EXIT_IO, f"{path}: {exc.strerror}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise _CliError(EXIT_IO, f"{path}: {exc}") from exc


def _merge_manifest(path, stanza: dict) -> None:
    if path is None:
        return
    doc = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        pass
    doc.setdefault("tool", {"name": "fpnc", "version": __version__})
    doc.update(stanza)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(doc))
        fh.write("\n")


def _cmd_validate(args) -> int:
    try:
        net = network.load(args.network)
    except network.NetworkFormatError as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    except FileNotFoundError as exc:
        raise _CliError(EXIT_IO, f"{args.network}: {exc.strerror}") from exc
    problems = network.validate(net)
    for v in problems:
        print(v)
    if problems:
        return EXIT_INVALID
    print(f"{net.name}: valid ({len(net.nodes)} nodes, {len(net.edges)} edges, "
          f"{net.message_count} messages, {len(net.terminals)} terminals)")
    return EXIT_OK


def _require_valid(net: network.Network) -> None:
    problems = network.validate(net)
    if problems:
        raise _CliError(EXIT_INVALID,
                        "network invalid:\n" + "\n".join(str(v) for v in problems))


def _cmd_design(args) -> int:
    net = _load_net(args.network)
    _require_valid(net)
    cfg = solver.SolverConfig(restarts=args.restarts, max_iters=args.iters,
                              tol_objective=args.tolF, tol_step=args.tol_step,
                              seed=args.seed, init_scale=args.init_scale,
                              coeff_cap=args.coeff_cap)
    report = solver.solve(net, cfg)
    solver.save_solution(args.output, net, report.best)
    for note in report.diagnostics:
        print(f"warning: {note}", file=sys.stderr)
    print(f"objective F = {report.profile.objective:.6e}")
    print(f"deviation gamma = {report.profile.max_deviation:.6e}")
    print(f"converged = {report.converged}  wall time = {report.wall_time:.2f}s")
    print(f"wrote {args.output}")
    _merge_manifest(args.manifest, {
        "network": {"path": str(args.network), "sha256": sha256_file(args.network)},
        "solver": {"seed": cfg.seed, "restarts": cfg.restarts,
                   "max_iters": cfg.max_iters, "tol_F": cfg.tol_objective,
                   "tol_step": cfg.tol_step, "init_scale": cfg.init_scale,
                   "coeff_cap": cfg.coeff_cap},
        "solution": {"path": str(args.output), "sha256": sha256_file(args.output),
                     "gamma_max": report.profile.max_deviation,
                     "F": report.profile.objective},
    })
    return EXIT_OK


def _cmd_plan(args) -> int:
    net = _load_net(args.network)
    _require_valid(net)
    sol, _, _ = _load_sol(args.solution)
    try:
        profile = deviation_profile(net, sol)
    except SolutionShapeError as exc:
        raise _CliError(EXIT_IO, f"solution does not fit network: {exc}") from exc
    dev = profile.max_deviation
    try:
        if args.method == "theorem":
            stats = precision.network_stats(net, sol)
            plan = precision.plan_worst_case(stats, dev, bound=args.M,
                                             n_bits=args.bits,
                                             effective_depth=args.effective_depth)
        else:
            accounting = "unweighted" if args.unweighted_errors else "weighted"
            plan = precision.plan_per_edge(net, sol, dev, bound=args.M,
                                           n_bits=args.bits,
                                           accounting=accounting)
    except InfeasibleError as exc:
        raise _CliError(EXIT_INFEASIBLE, str(exc)) from exc
    except (ValueError,) as exc:
        raise _CliError(EXIT_INFEASIBLE, str(exc)) from exc
    precision.save_plan(args.output, plan)
    rate = plan.rate
    rate_s = f"{rate.numerator}/{rate.denominator}" if hasattr(rate, "numerator") \
        else f"{rate:.6f}"
    print(f"P = {plan.fmt.int_digits}  p = {plan.fmt.frac_digits}  "
          f"M = {plan.message_bound}  n_bits = {plan.message_bits}")
    print(f"rate = {rate_s}  margin = {plan.margin:.3e}  method = {plan.method}")
    print(f"wrote {args.output}")
    _merge_manifest(args.manifest, {"plan": plan.to_json_dict()
                                    | {"path": str(args.output),
                                       "sha256": sha256_file(args.output)}})
    return EXIT_OK


def _cmd_verify(args) -> int:
    net = _load_net(args.network)
    _require_valid(net)
    sol, _, _ = _load_sol(args.solution)
    plan = _load_plan(args.plan)
    mode = Exhaustive() if args.exhaustive else Sampled(args.samples, args.seed)
    try:
        report = simulate.verify(net, sol, plan.fmt, plan.message_bound, mode,
                                 budget=args.budget)
    except BudgetExceededError as exc:
        raise _CliError(EXIT_INFEASIBLE, str(exc)) from exc
    except FixedPointOverflowError as exc:
        print(f"overflow: {exc}")
        return EXIT_VERIFY_FAILED
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps_canonical(report.to_json_dict()))
            fh.write("\n")
        print(f"wrote {args.output}")
    status = "PASS" if report.passed else "FAIL"
    print(f"{status}: {report.total_cases} cases, {report.failure_count} failures, "
          f"max terminal residual {report.max_terminal_residual:.6g} "
          f"[{report.kernel} kernel]")
    for f in report.failures[:10]:
        print(f"  {f.terminal} demand {f.demand_pos}: message {f.message} "
              f"decoded {f.decoded}, expected {f.expected}")
    _merge_manifest(args.manifest, {
        "verification": {"passed": report.passed,
                         "total_cases": report.total_cases,
                         "failure_count": report.failure_count,
                         "max_terminal_residual": report.max_terminal_residual}})
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def _parse_message(text: str, k: int) -> list[int]:
    try:
        values = [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise _CliError(EXIT_IO, f"bad message vector {text!r}") from exc
    if len(values) != k:
        raise _CliError(EXIT_IO, f"message vector needs {k} entries, got {len(values)}")
    return values


def _cmd_simulate(args) -> int:
    net = _load_net(args.network)
    _require_valid(net)
    sol, _, _ = _load_sol(args.solution)
    message = _parse_message(args.message, net.message_count)
    if args.plan:
        fmt = _load_plan(args.plan).fmt
    else:
        try:
            digits = [int(x) for x in args.format.split(",")]
            fmt = FixedPointFormat(net.base, digits[0], digits[1])
        except (ValueError, IndexError) as exc:
            raise _CliError(EXIT_IO, f"bad --format {args.format!r}; "
                                     "use P,p") from exc
    real_vals, real_dec = simulate.run_real(net, sol, message)
    try:
        fixed = simulate.run_fixed(net, sol, message, fmt)
    except FixedPointOverflowError as exc:
        print(f"overflow: {exc}")
        return EXIT_VERIFY_FAILED
    print(f"message = {message}   format: base {fmt.base}, "
          f"P={fmt.int_digits}, p={fmt.frac_digits}")
    print(f"{'edge':<12}{'real':>20}{'fixed':>20}")
    for e in net.edges:
        fixed_v = float(fixed.edge_values[e.id])
        print(f"{e.id:<12}{real_vals[e.id]:>20.10g}{fixed_v:>20.10g}")
    print("decodes:")
    for (t, pos), value in real_dec.items():
        dec = fixed.decoded[(t, pos)]
        want = message[net.demand_list(t)[pos - 1] - 1]
        mark = "ok" if dec == want else "WRONG"
        print(f"  {t} demand {pos}: real {value:.10g}  fixed {dec}  "
              f"expected {want}  [{mark}]")
    print(f"max internal residual = {fixed.max_internal_residual:.3e}")
    return EXIT_OK


def _cmd_gen(args) -> int:
    net = fixtures.random_network(args.nodes, args.max_indeg, args.terminals,
                                  args.seed)
    network.save(net, args.output)
    print(f"wrote {args.output} ({len(net.nodes)} nodes, {len(net.edges)} edges, "
          f"{net.message_count} messages)")
    return EXIT_OK


def _cmd_report(args) -> int:
    net = _load_net(args.network)
    sol, stored_dev, stored_obj = _load_sol(args.solution)
    plan = _load_plan(args.plan)
    profile = deviation_profile(net, sol)
    rate = plan.rate
    rate_f = float(rate)
    rate_s = f"{rate.numerator}/{rate.denominator}" if hasattr(rate, "numerator") \
        else f"{rate:.6f}"

    verification = None
    if args.verification:
        try:
            with open(args.verification, "r", encoding="utf-8") as fh:
                verification = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _CliError(EXIT_IO, f"{args.verification}: {exc}") from exc

    print(f"network     : {net.name} ({len(net.nodes)} nodes, "
          f"{len(net.edges)} edges, {net.message_count} messages)")
    print(f"deviation   : {profile.max_deviation:.8g} "
          f"(stored {stored_dev:.8g}), objective {profile.objective:.8g} "
          f"(stored {stored_obj:.8g})")
    print(f"plan        : base {plan.fmt.base}, P={plan.fmt.int_digits}, "
          f"p={plan.fmt.frac_digits}, M={plan.message_bound}, "
          f"n_bits={plan.message_bits}, method={plan.method}")
    print(f"rate        : {rate_s} = {rate_f:.4f}")
    print("reference   : routing baseline 1/3 = 0.3333, "
          "hybrid routing/coded 2/3 = 0.6667")
    if verification:
        print(f"verification: passed={verification.get('passed')} over "
              f"{verification.get('total_cases')} cases, "
              f"max residual {verification.get('max_terminal_residual')}")
    else:
        print("verification: (no report supplied)")

    _merge_manifest(args.manifest, {
        "network": {"path": str(args.network), "sha256": sha256_file(args.network),
                    "name": net.name},
        "solution": {"path": str(args.solution),
                     "sha256": sha256_file(args.solution),
                     "gamma_max": profile.max_deviation,
                     "F": profile.objective},
        "plan": plan.to_json_dict() | {"path": str(args.plan),
                                       "sha256": sha256_file(args.plan)},
        "verification": verification or {},
        "rate": {"value": rate_f, "display": rate_s,
                 "routing_baseline": "1/3", "hybrid_baseline": "2/3"},
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpnc", description=__doc__)
    ap.add_argument("--version", action="version", version=f"fpnc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a network file")
    v.add_argument("network")
    v.set_defaults(func=_cmd_validate)

    d = sub.add_parser("design", help="search coding coefficients")
    d.add_argument("network")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--restarts", type=int, default=32)
    d.add_argument("--iters", type=int, default=2000)
    d.add_argument("--tolF", type=float, default=1e-12)
    d.add_argument("--tol-step", type=float, default=1e-10)
    d.add_argument("--init-scale", type=float, default=2.0)
    d.add_argument("--coeff-cap", type=float, default=64.0)
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--manifest")
    d.set_defaults(func=_cmd_design)

    p = sub.add_parser("plan", help="derive a precision plan")
    p.add_argument("network")
    p.add_argument("solution")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--bits", type=int, help="message width in bits")
    group.add_argument("--M", type=int, help="message magnitude bound")
    p.add_argument("--method", choices=("theorem", "tight"), default="tight")
    p.add_argument("--effective-depth", type=int, default=None,
                   help="combining-hop depth override for --method theorem")
    p.add_argument("--unweighted-errors", action="store_true",
                   help="tight method: ignore decode-coefficient magnitudes "
                        "in the terminal error budget (reproduces the "
                        "published g2 digit counts; can underplan when a "
                        "decode coefficient exceeds 1)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=_cmd_plan)

    w = sub.add_parser("verify", help="sweep messages for zero-error recovery")
    w.add_argument("network")
    w.add_argument("solution")
    w.add_argument("plan")
    mode = w.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--samples", type=int)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--budget", type=int, default=simulate.EXHAUSTIVE_BUDGET)
    w.add_argument("-o", "--output")
    w.add_argument("--manifest")
    w.set_defaults(func=_cmd_verify)

    s = sub.add_parser("simulate", help="run one message vector in both modes")
    s.add_argument("network")
    s.add_argument("solution")
    s.add_argument("-m", "--message", required=True,
                   help="comma-separated integers, one per source message")
    fmt = s.add_mutually_exclusive_group(required=True)
    fmt.add_argument("--plan", help="take the format from a plan file")
    fmt.add_argument("--format", help="P,p digit counts")
    s.set_defaults(func=_cmd_simulate)

    g = sub.add_parser("gen", help="generate a seeded random network")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--max-indeg", type=int, required=True)
    g.add_argument("--terminals", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=_cmd_gen)

    r = sub.add_parser("report", help="summarize a pipeline run")
    r.add_argument("network")
    r.add_argument("solution")
    r.add_argument("plan")
    r.add_argument("verification", nargs="?")
    r.add_argument("--manifest")
    r.set_defaults(func=_cmd_report)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

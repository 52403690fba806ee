"""Command-line entry point: ``cfdqec <subcommand> ...``.

Exit status is 0 on success and 2 when a check fails or input is invalid.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .codes import LogicalCode, PhaseConvention, build_code, build_generator, build_recovery, correctable_span_check, verify_kl
from .experiments import (
    DEFAULT_G_SAMPLES,
    AveragedCurve,
    FixedCurve,
    NoCrossingError,
    StrategySpec,
    find_pseudothreshold,
    miscalibration_study,
    sweep,
)
from .quantum import superoperator_distance
from .two_qubit import abstract_recovery, build_two_qubit_code, circuit_recovery, export_circuit

EXIT_OK = 0
EXIT_INVALID = 2


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _bracket(text: str) -> tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError("bracket needs exactly two values, e.g. 0.05,1.0")
    return values[0], values[1]


def cmd_build_code(args) -> int:
    g = args.g
    convention = PhaseConvention("theta", args.theta) if len(g) == 2 else PhaseConvention("zero")
    code = build_code(g, convention)
    report = verify_kl(code)
    doc = code.to_dict()
    if args.out:
        code.save(args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(doc, indent=2))
    print(f"n={code.n} q={code.q} z={np.array2string(code.workspace.z, precision=6)} kl_max_violation={report.max_violation:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    code = LogicalCode.load(args.code)
    gen = build_generator(code.couplings)
    report = verify_kl(code, gen, tol=args.tol)
    print(f"kl_max_violation={report.max_violation:.3e} (raw {report.max_violation_raw:.3e}, worst m={report.worst_order}) tol={args.tol:g}")
    if not report.passed:
        print("FAIL: Knill-Laflamme conditions violated")
        return EXIT_INVALID
    infidelity = correctable_span_check(build_recovery(code, gen, kl_tol=args.tol), gen, trials=args.trials)
    print(f"span_max_infidelity={infidelity:.3e}")
    if infidelity > args.tol:
        print("FAIL: recovery does not correct the error span")
        return EXIT_INVALID
    print("PASS")
    return EXIT_OK


def cmd_sweep(args) -> int:
    strategies = [StrategySpec.parse(tok) for tok in args.strategies.split(",")]
    sigmas = np.geomspace(args.sigma_min, args.sigma_max, args.sigma_points)
    result = sweep(strategies, sigmas, args.g_samples, args.seed, workers=args.workers)
    out = Path(args.out)
    result.write_csv(out)
    result.write_metadata(out.with_suffix(".meta.json"))
    print(f"wrote {out} ({len(result.rows)} rows) and {out.with_suffix('.meta.json')}")
    if args.plot_data:
        result.write_plot_data(args.plot_data)
        print(f"wrote {args.plot_data}")
    return EXIT_OK


def cmd_pseudothreshold(args) -> int:
    strategy = StrategySpec("hardware_efficient", args.n)
    if args.g:
        if len(args.g) != args.n:
            print(f"--g needs {args.n} values", file=sys.stderr)
            return EXIT_INVALID
        ref_g = args.reference_g if args.reference_g is not None else min(abs(x) for x in args.g)
        code_curve = FixedCurve(strategy, args.g)
        ref_curve = FixedCurve(StrategySpec("physical"), [ref_g])
        policy = f"fixed g={args.g}, physical g={ref_g}"
    else:
        code_curve = AveragedCurve(strategy, args.g_samples, args.seed)
        ref_curve = AveragedCurve(StrategySpec("physical"), args.g_samples, args.seed)
        policy = f"uniform g, {args.g_samples} samples, seed {args.seed}"
    try:
        sigma = find_pseudothreshold(code_curve, ref_curve, args.bracket)
    except NoCrossingError as exc:
        print(f"no pseudothreshold ({policy}): {exc}")
        return EXIT_INVALID
    print(f"pseudothreshold sigma*={sigma:.6g} ({policy}); p={code_curve(sigma):.6g}")
    return EXIT_OK


def cmd_miscalibrate(args) -> int:
    rows = miscalibration_study(args.g, args.delta_grid, args.sigma, args.samples, args.seed)
    print("delta,mean_p,sem_p,samples")
    for r in rows:
        print(f"{r.delta:.17g},{r.mean_p:.17g},{r.sem_p:.17g},{r.samples}")
    return EXIT_OK


def cmd_circuit_check(args) -> int:
    code = build_two_qubit_code(args.g, args.theta)
    distance = superoperator_distance(circuit_recovery(code), abstract_recovery(code))
    print(f"superoperator_distance={distance:.3e}")
    if args.out:
        export_circuit(code, args.out)
        print(f"wrote {args.out}")
    if distance >= args.tol:
        print("FAIL: circuit and abstract recovery differ")
        return EXIT_INVALID
    print("PASS")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfdqec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-code", help="construct a code for given couplings")
    p.add_argument("--g", type=_floats, required=True, help="comma-separated couplings")
    p.add_argument("--theta", type=float, default=0.0, help="phase knob (two qubits only)")
    p.add_argument("--out", help="JSON output path (stdout if omitted)")
    p.set_defaults(func=cmd_build_code)

    p = sub.add_parser("verify", help="check a saved code against the Knill-Laflamme conditions")
    p.add_argument("--code", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="coupling-averaged p versus sigma")
    p.add_argument("--strategies", default="physical,rep3,rep5,he2,he3")
    p.add_argument("--sigma-min", type=float, default=0.02)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.add_argument("--sigma-points", type=int, default=24)
    p.add_argument("--g-samples", type=int, default=DEFAULT_G_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--plot-data", help="extra long-format CSV for plotting tools")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pseudothreshold", help="crossing of code and physical-qubit curves")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--bracket", type=_bracket, default=(0.05, 5.0))
    p.add_argument("--g", type=_floats, help="fixed couplings instead of uniform averaging")
    p.add_argument("--reference-g", type=float, help="physical-qubit coupling for --g (default: smallest |g|)")
    p.add_argument("--g-samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pseudothreshold)

    p = sub.add_parser("miscalibrate", help="p when the code is built from perturbed couplings")
    p.add_argument("--g", type=_floats, required=True)
    p.add_argument("--delta-grid", type=_floats, default=[0.0, 0.05, 0.1, 0.2])
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_miscalibrate)

    p = sub.add_parser("circuit-check", help="compare the ancilla circuit with the abstract recovery")
    p.add_argument("--g", type=_floats, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", help="write the gate list as JSON")
    p.set_defaults(func=cmd_circuit_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

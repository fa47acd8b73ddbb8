"""``regcov`` command-line interface.

Exit codes: 0 success, 1 input or validation error, 2 estimator did not
converge within ``--kmax`` iterations (the last iterate is still written).
"""

import argparse
import json
import sys

import numpy as np

from . import io
from .anscm import anscm
from .detect_sim import calibrate_threshold, detection_curve
from .estimators import METHODS, EstimatorConfig, estimate
from .exceptions import RegcovError
from .matlin import as_hpd

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which would collide with the
    # non-convergence code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _cmd_estimate(args):
    prior = as_hpd(io.read_matrix(args.prior), "prior")
    samples = io.read_samples(args.samples)
    cfg = EstimatorConfig(alpha=args.alpha, p=args.p, eps=args.eps, k_max=args.kmax,
                          seed=args.seed, mc_samples=args.mc_samples)
    result = estimate(args.method, prior, samples, cfg)
    io.write_rows(args.out, result.matrix)
    report = args.report or args.out + ".report.json"
    io.write_report(report, result)
    if not result.converged:
        print(f"warning: no convergence after {result.iterations} iterations "
              f"(residual {result.final_residual:.3e})", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_anscm(args):
    M = io.read_matrix(args.matrix)
    if args.method == "closed" and not np.iscomplexobj(M):
        raise RegcovError(
            "the closed form is derived for complex-circular data only; "
            "use --method mc for a real matrix"
        )
    out = anscm(M, method=args.method, mc_samples=args.mc_samples, seed=args.seed)
    io.write_rows(args.out, out)
    return EXIT_OK


def _cmd_calibrate(args):
    scenario = io.read_scenario(args.scenario)
    seed = scenario.master_seed if args.seed is None else args.seed
    thr = calibrate_threshold(scenario, trials=args.trials, seed=seed)
    io.write_threshold(args.out, thr, scenario, args.trials, seed)
    return EXIT_OK


def _cmd_simulate(args):
    scenario = io.read_scenario(args.scenario)
    record = io.read_threshold(args.threshold)
    if record["scenario_hash"] != scenario.digest():
        raise RegcovError(
            f"threshold file {args.threshold} was calibrated for a different scenario "
            f"(hash {record['scenario_hash'][:12]}..., scenario is {scenario.digest()[:12]}...)"
        )
    curve = detection_curve(scenario, record["threshold"], seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write(curve.to_csv())
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="regcov", description="Regularized robust covariance estimation and detection simulation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="run a regularized estimator on a sample batch")
    p.add_argument("--samples", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--kmax", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="seed of the real-field Monte-Carlo anscm")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="sidecar report path (default OUT.report.json)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("anscm", help="expected normalized sample covariance of a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--method", required=True, choices=("closed", "mc"))
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_anscm)

    p = sub.add_parser("calibrate", help="learn a detection threshold for a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trials", required=True, type=int)
    p.add_argument("--seed", type=int, default=None, help="defaults to the scenario's master_seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("simulate", help="estimate a Pd-vs-SiNR curve")
    p.add_argument("--scenario", required=True)
    p.add_argument("--threshold", required=True)
    p.add_argument("--seed", type=int, default=None, help="defaults to the scenario's master_seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    try:
        return args.func(args)
    except (RegcovError, ValueError, OSError, np.linalg.LinAlgError, json.JSONDecodeError) as exc:
        print(f"regcov {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

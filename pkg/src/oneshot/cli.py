"""Command line interface over the evaluators, smoothers, and the battery.

Exit codes: 0 success, 1 a verification check failed, 2 usage or input
problems, 3 numerical failure inside a solver.  The ONESHOT_LOG environment
variable (error, info, debug) controls logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .divergences import (
    PURIFIED,
    SmoothingBall,
    dh,
    dmax,
    dmax_smooth,
    ds,
    rel_entropy,
    renyi,
)
from .errors import CertificateViolation, DomainError, NumericalFailure
from .harness import SUITES, BatteryConfig, battery
from .linalg import HermitianOperator, load_matrix, state_to_json
from .smoothing import (
    gentle_projection,
    hypothesis_smoother,
    joint_smoother_feasibility,
    renyi_smoother,
)

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
_LOG = logging.getLogger("oneshot.cli")

DIVERGENCES = ("dmax", "renyi", "relative", "dh", "ds")
SMOOTH_METHODS = ("gentle", "renyi", "hypothesis", "joint")


def _configure_logging() -> None:
    name = os.environ.get("ONESHOT_LOG", "error").strip().lower()
    if name not in _LOG_LEVELS:
        raise DomainError(
            f"ONESHOT_LOG must be one of {', '.join(_LOG_LEVELS)}, got {name!r}"
        )
    logging.basicConfig(
        level=_LOG_LEVELS[name], format="%(levelname)s %(name)s: %(message)s"
    )


def _require(value, flag: str, context: str):
    if value is None:
        raise DomainError(f"{context} requires {flag}")
    return value


def _default_witness(sigma: np.ndarray) -> np.ndarray:
    trace = float(np.trace(sigma).real)
    return np.eye(sigma.shape[0]) / max(trace, 1.0)


def _cmd_compute(args) -> int:
    rho = load_matrix(args.rho)
    sigma = load_matrix(args.sigma)
    _LOG.info("loaded %dx%d operators", rho.shape[0], rho.shape[0])
    name = args.divergence
    if name == "dmax":
        if args.eps is not None and args.eps > 0.0:
            ball = SmoothingBall(args.ball, args.eps)
            value = dmax_smooth(rho, sigma, ball).value
        else:
            value = dmax(rho, sigma)
    elif name == "renyi":
        value = renyi(rho, sigma, _require(args.alpha, "--alpha", "renyi"))
    elif name == "relative":
        value = rel_entropy(rho, sigma)
    elif name == "dh":
        value = dh(rho, sigma, _require(args.eps, "--eps", "dh"))
    else:
        value = ds(rho, sigma, _require(args.eps, "--eps", "ds"))
    print(f"{value.bits:.12g}")
    return EXIT_PASS


def _cmd_verify(args) -> int:
    suites = SUITES if args.suite == "all" else (args.suite,)
    config = BatteryConfig(suites=suites, seed=args.seed, trials=args.trials, tol=args.tol)
    _LOG.info("battery starting: suites=%s trials=%d seed=%d", suites, args.trials, args.seed)
    report = battery(config)
    report.write_json(args.out)
    _LOG.info("wrote %s", args.out)
    if args.csv:
        report.write_csv(args.csv)
        _LOG.info("wrote %s", args.csv)
    if args.figures is not None:
        from .figures import render_battery_figures

        target = args.figures or os.path.dirname(os.path.abspath(args.out))
        for path in render_battery_figures(report, target):
            _LOG.info("wrote %s", path)
    for c in report.checks:
        flag = "ok" if c.fails == 0 else "FAIL"
        print(
            f"{flag:4s} {c.suite}/{c.check}: {c.passes}/{c.trials} pass,"
            f" {c.warns} warn, {c.fails} fail, worst slack {c.worst_slack:.3e}"
        )
    print(f"overall: {'pass' if report.passed else 'FAIL'}"
          f" in {report.runtime_seconds:.1f}s")
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILURE


def _cmd_smooth(args) -> int:
    method = args.method
    if method == "gentle":
        rho = load_matrix(_require(args.rho, "--rho", "gentle"))
        proj = HermitianOperator(load_matrix(_require(args.projector, "--projector", "gentle")))
        state, distance = gentle_projection(rho, proj)
        payload = {
            "method": "gentle",
            "distance": distance,
            "discarded_mass": distance**2,
            "smoothed_state": state_to_json(state),
        }
    elif method in ("renyi", "hypothesis"):
        rho = load_matrix(_require(args.rho, "--rho", method))
        sigma = load_matrix(_require(args.sigma, "--sigma", method))
        eps = _require(args.eps, "--eps", method)
        witness = load_matrix(args.witness) if args.witness else _default_witness(sigma)
        if method == "renyi":
            cert = renyi_smoother(
                rho, sigma, eps=eps, alpha=_require(args.alpha, "--alpha", "renyi"), m=witness
            )
        else:
            cert = hypothesis_smoother(rho, sigma, eps=eps, m=witness)
        payload = {"method": method, **cert.to_json()}
    else:
        rho = load_matrix(_require(args.rho, "--rho", "joint"))
        sigma_a = load_matrix(_require(args.sigma_a, "--sigma-a", "joint"))
        sigma_b = load_matrix(_require(args.sigma_b, "--sigma-b", "joint"))
        eps = _require(args.eps, "--eps", "joint")
        eps2 = _require(args.eps2, "--eps2", "joint")
        result = joint_smoother_feasibility(
            rho, sigma_a, sigma_b, eps, eps2, corollary_delta=args.delta
        )
        payload = {"method": "joint", **result.to_json()}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        _LOG.info("wrote %s", args.out)
    else:
        print(text)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oneshot",
        description="One-shot divergence evaluators, smoothing certificates, and verifier batteries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    comp = sub.add_parser("compute", help="evaluate a divergence, printing the value in bits")
    comp.add_argument("divergence", choices=DIVERGENCES)
    comp.add_argument("--rho", required=True, help="JSON matrix file for the state")
    comp.add_argument("--sigma", required=True, help="JSON matrix file for the reference")
    comp.add_argument("--eps", type=float, help="error budget or smoothing radius")
    comp.add_argument("--alpha", type=float, help="Renyi order")
    comp.add_argument("--ball", choices=("purified", "trace"), default=PURIFIED,
                      help="smoothing ball flavor when --eps is given with dmax")
    comp.set_defaults(func=_cmd_compute)

    ver = sub.add_parser("verify", help="run verifier suites and write a report")
    ver.add_argument("--suite", choices=SUITES + ("all",), required=True)
    ver.add_argument("--trials", type=int, default=50, help="trials per grid cell")
    ver.add_argument("--seed", type=int, default=1)
    ver.add_argument("--tol", type=float, default=1e-6, help="slack tolerance in bits")
    ver.add_argument("--out", required=True, help="JSON report path")
    ver.add_argument("--csv", help="optional CSV report path")
    ver.add_argument("--figures", nargs="?", const="", metavar="DIR",
                     help="also render slack histograms (default: next to --out)")
    ver.set_defaults(func=_cmd_verify)

    smo = sub.add_parser("smooth", help="run a smoothing construction, emitting its certificate JSON")
    smo.add_argument("--method", choices=SMOOTH_METHODS, required=True)
    smo.add_argument("--rho", help="JSON matrix file for the state")
    smo.add_argument("--sigma", help="JSON matrix file for the reference")
    smo.add_argument("--projector", help="gentle: JSON matrix file for the discard projector")
    smo.add_argument("--sigma-a", dest="sigma_a", help="joint: left marginal target")
    smo.add_argument("--sigma-b", dest="sigma_b", help="joint: right marginal target")
    smo.add_argument("--eps", type=float, help="smoothing parameter")
    smo.add_argument("--eps2", type=float, help="joint: second smoothing parameter")
    smo.add_argument("--alpha", type=float, help="renyi: order, must be > 1")
    smo.add_argument("--delta", type=float, help="joint: corollary slack parameter")
    smo.add_argument("--witness", help="optional witness operator file")
    smo.add_argument("--out", help="write the certificate here instead of stdout")
    smo.set_defaults(func=_cmd_smooth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging()
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificateViolation as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILURE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

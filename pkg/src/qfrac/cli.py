"""
Command-line front end for qfrac.

Every command prints one JSON envelope on stdout::

    {"success": bool, "data": ..., "message": str, "error": str (on failure)}

Logs go to stderr. Exit codes: 0 success, 2 parse error, 3 precondition,
4 non-convergence, 5 property failure.
"""

import argparse
import json
import sys
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import structlog

from . import __version__
from .config import QFracConfig
from .errors import ConvergenceError, PreconditionError, QFracError
from .fracpow import (
    FractionalPower,
    frac_power_halfplane,
    frac_power_neg,
    frac_power_neg_contour,
    frac_power_pos,
    kato_power,
    property_threshold,
)
from .logging_setup import setup_logging
from .qmatrix import QMatrix, inverse, load_matrix, opnorm
from .quadrature import QuadratureConfig, QuadratureReport
from .quaternion import ImaginaryUnit
from .sampling import random_sectorial
from .spectral import s_spectrum, sector_estimate
from .verification import SUITES, run_suite

logger = structlog.get_logger(__name__)

METHODS = ("ray", "contour", "halfplane", "kato")
CROSS_CHECK = {"ray": "contour", "contour": "ray", "halfplane": "ray", "kato": "ray"}
CROSS_CHECK_FACTOR = 10.0


class CommandResult(NamedTuple):
    data: Any
    message: str
    exit_code: int = 0


def envelope(success: bool, data: Any = None, message: str = "", error: Optional[str] = None) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"success": success, "data": data, "message": message}
    if error is not None:
        payload["error"] = error
    return payload


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


def emit(payload: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, default=_json_default) + "\n")
    sys.stdout.flush()


def quadrature_config(settings: QFracConfig, tol: Optional[float] = None) -> QuadratureConfig:
    """Environment defaults, with --tol as relative tolerance and tol/100 as absolute."""
    cfg = settings.quadrature_defaults
    if tol is None:
        return cfg
    return cfg.model_copy(update={"rel_tol": tol, "abs_tol": tol * 1e-2})


def _report_json(report: QuadratureReport) -> Dict[str, Any]:
    return report.model_dump(by_alias=True, mode="json", exclude={"value"})


# Fractional powers ----------------------------------------------------------


def compute_power(
    T: QMatrix,
    alpha: float,
    method: str,
    cfg: QuadratureConfig,
    *,
    positive: bool = False,
    plane: Optional[ImaginaryUnit] = None,
    side: str = "right",
) -> FractionalPower:
    """T^{-alpha} (or T^{alpha} with positive) by the named method."""
    if method == "kato":
        kato = kato_power(T, alpha, -1.0, cfg)
        value = kato.matrix if positive else inverse(kato.matrix)
        return FractionalPower(matrix=value, alpha=alpha, method="kato", report=kato.report)
    if method == "ray" and positive:
        return frac_power_pos(T, alpha, cfg)
    if method == "ray":
        result = frac_power_neg(T, alpha, cfg)
    elif method == "contour":
        result = frac_power_neg_contour(T, alpha, side=side, cfg=cfg, plane=plane)
    elif method == "halfplane":
        result = frac_power_halfplane(T, alpha, cfg)
    else:
        raise PreconditionError(f"Unknown method {method!r}", methods=list(METHODS))
    if positive:
        return FractionalPower(matrix=inverse(result.matrix), alpha=alpha, method=result.method, report=result.report)
    return result


def cross_check(first: FractionalPower, second: FractionalPower) -> Dict[str, Any]:
    discrepancy = opnorm(first.matrix - second.matrix)
    threshold = CROSS_CHECK_FACTOR * property_threshold(
        first.error_estimate + second.error_estimate, opnorm(first.matrix)
    )
    return {
        "method": second.method,
        "discrepancy": discrepancy,
        "threshold": threshold,
        "agrees": discrepancy <= threshold,
    }


# Commands -------------------------------------------------------------------


def cmd_spectrum(args: argparse.Namespace, settings: QFracConfig) -> CommandResult:
    T = load_matrix(args.file)
    data = s_spectrum(T).to_json()
    if args.sector:
        data["sectorEstimate"] = sector_estimate(T, allow_origin=True).to_json()
    return CommandResult(data, f"S-spectrum of a {T.n}x{T.n} matrix: {len(data['spheres'])} sphere(s)")


def cmd_fracpow(args: argparse.Namespace, settings: QFracConfig) -> CommandResult:
    T = load_matrix(args.file)
    cfg = quadrature_config(settings, args.tol)
    plane = ImaginaryUnit.parse(args.plane) if args.plane else settings.default_plane
    options = {"positive": args.positive, "plane": plane, "side": args.side}

    result = compute_power(T, args.alpha, args.method, cfg, **options)
    data: Dict[str, Any] = {
        "matrix": result.matrix.to_json(),
        "alpha": args.alpha,
        "sign": 1 if args.positive else -1,
        "method": result.method,
        "report": _report_json(result.report),
    }
    if result.norm_bound is not None:
        data["normBound"] = result.norm_bound
        data["withinBound"] = result.within_bound

    if not result.report.converged:
        raise ConvergenceError(
            "Quadrature did not reach the requested tolerance",
            error_estimate=result.error_estimate,
            evaluations=result.report.evaluations,
        )

    exit_code = 0
    message = f"Computed T^{'' if args.positive else '-'}{args.alpha:g} by {result.method}"
    if args.verify:
        other = compute_power(T, args.alpha, CROSS_CHECK[args.method], cfg, **options)
        data["crossCheck"] = cross_check(result, other)
        if not data["crossCheck"]["agrees"]:
            exit_code = 5
            message = f"{result.method} and {other.method} disagree beyond tolerance"
    return CommandResult(data, message, exit_code)


def cmd_verify(args: argparse.Namespace, settings: QFracConfig) -> CommandResult:
    seed = settings.qfrac_seed if settings.qfrac_seed is not None else args.seed
    if args.random is not None:
        T = random_sectorial(args.random, np.random.default_rng(seed))
    elif args.file:
        T = load_matrix(args.file)
    else:
        raise PreconditionError("verify needs a matrix file or --random N")

    report = run_suite(T, args.suite, seed, quadrature_config(settings, args.tol), args.draws)
    data = report.to_json()
    data["n"] = T.n
    if report.passed:
        return CommandResult(data, f"{len(report.checks)} checks passed")
    failed = ", ".join(c.name for c in report.failures)
    return CommandResult(data, f"Failed checks: {failed}", 5)


def cmd_convergence(args: argparse.Namespace, settings: QFracConfig) -> CommandResult:
    """Drift of the computed power against a reference at 1/100 of the tightest tolerance."""
    T = load_matrix(args.file)
    tols = sorted(args.tols, reverse=True)
    reference = compute_power(T, args.alpha, args.method, quadrature_config(settings, min(tols) * 1e-2))

    rows: List[Dict[str, Any]] = []
    for tol in tols:
        result = compute_power(T, args.alpha, args.method, quadrature_config(settings, tol))
        rows.append(
            {
                "tol": tol,
                "drift": opnorm(result.matrix - reference.matrix),
                "evaluations": result.report.evaluations,
                "errorEstimate": result.error_estimate,
                "converged": result.report.converged,
            }
        )
    drifts = [row["drift"] for row in rows]
    monotone = all(later <= earlier + 1e-15 for earlier, later in zip(drifts, drifts[1:]))
    data = {"alpha": args.alpha, "method": reference.method, "rows": rows, "monotone": monotone}
    return CommandResult(data, f"{len(rows)} tolerance levels, drift {'non-increasing' if monotone else 'not monotone'}")


COMMANDS = {
    "spectrum": cmd_spectrum,
    "fracpow": cmd_fracpow,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
}


# Parser ---------------------------------------------------------------------


def _tols(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return values


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfrac", description="Fractional powers of quaternionic matrices")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default from LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    spectrum = sub.add_parser("spectrum", help="S-spectrum of a matrix")
    spectrum.add_argument("file")
    spectrum.add_argument("--sector", action="store_true", help="also report the sampled sector estimate")

    fracpow = sub.add_parser("fracpow", help="fractional power T^-alpha")
    fracpow.add_argument("file")
    fracpow.add_argument("--alpha", type=_positive_float, required=True)
    fracpow.add_argument("--method", choices=METHODS, default="ray")
    fracpow.add_argument("--tol", type=_positive_float, default=None, help="relative quadrature tolerance")
    fracpow.add_argument("--plane", default=None, help="imaginary unit as a 3-vector, e.g. 0,1,0")
    fracpow.add_argument("--side", choices=("left", "right"), default="right", help="resolvent used by --method contour")
    fracpow.add_argument("--positive", action="store_true", help="compute T^alpha instead of T^-alpha")
    fracpow.add_argument("--verify", action="store_true", help="cross-check against a second method")

    verify = sub.add_parser("verify", help="run property suites")
    verify.add_argument("file", nargs="?")
    verify.add_argument("--random", type=int, default=None, metavar="N", help="random sectorial N x N matrix")
    verify.add_argument("--seed", type=int, default=0, help="overridden by QFRAC_SEED")
    verify.add_argument("--suite", choices=SUITES + ("all",), default="all")
    verify.add_argument("--draws", type=int, default=50, help="random points per sampled check")
    verify.add_argument("--tol", type=_positive_float, default=None)

    convergence = sub.add_parser("convergence", help="value drift under tightening tolerances")
    convergence.add_argument("file")
    convergence.add_argument("--alpha", type=_positive_float, required=True)
    convergence.add_argument("--tols", type=_tols, default=[1e-6, 1e-8, 1e-10])
    convergence.add_argument("--method", choices=METHODS, default="ray")

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch and print; returns the exit code."""
    args = build_parser().parse_args(argv)
    settings = QFracConfig()
    setup_logging(args.log_level or settings.effective_log_level)
    log = logger.bind(command=args.command)
    log.info("command_started")

    try:
        result = COMMANDS[args.command](args, settings)
    except QFracError as e:
        log.warning("command_failed", error=type(e).__name__, reason=e.message)
        emit(envelope(False, e.to_dict(), f"{args.command} failed", str(e)))
        return e.exit_code

    success = result.exit_code == 0
    emit(envelope(success, result.data, result.message, None if success else result.message))
    log.info("command_finished", exit_code=result.exit_code)
    return result.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""
Command-line interface

    python main.py constants [--grid-n N] [--json] [--strict-paper-signs]
    python main.py geometry --config run.txt [--out DIR]
    python main.py sweep --config run.txt --out DIR [--fit-alpha0]
    python main.py validate [--only MODULE] [--full]
    python main.py fit-alpha0 --config run.txt
    python main.py serve
"""

import argparse
import asyncio
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from src.core.config import load_run_config, settings
from src.core.errors import (
    EXIT_OK, EXIT_USAGE, CheckFailure, ConfigError, InsufficientDataError, TunnelingError
)
from src.models.schemas import CheckResult, RunConfig, Severity, SweepResult
from src.services.pipeline import PipelineService
from src.services.validation import MODULES, ValidationService
from src.utils.output import format_table, to_json, write_config_echo, write_csv
from src.utils.startup import configure_logging, log_system_status

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (key=value per line)")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--json", action="store_true", help="structured output on stdout")
    common.add_argument("--strict-paper-signs", "--literal-signs", dest="strict_paper_signs",
                        action="store_true",
                        help="also report the literal C1 = u0^2/6 and the +g prefactor variant")
    common.add_argument("--grid-n", type=int, help="de Gennes grid size (overrides degennes.n)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    parser = _Parser(prog="tunneling", description="Magnetic tunneling between boundary wells")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("constants", parents=[common], help="de Gennes constants and identity checks")
    sub.add_parser("geometry", parents=[common], help="wells, actions and prefactors of the domain")

    sweep = sub.add_parser("sweep", parents=[common], help="prediction and oracles over the h grid")
    sweep.add_argument("--fit-alpha0", action="store_true", help="fit alpha0 from the flux oracle")

    validate = sub.add_parser("validate", parents=[common], help="invariant suite")
    validate.add_argument("--only", choices=MODULES, help="run one module's checks")
    validate.add_argument("--full", action="store_true", help="include the oracle-agreement checks")

    sub.add_parser("fit-alpha0", parents=[common], help="sweep and fit alpha0")
    sub.add_parser("serve", parents=[common], help="start the HTTP service")
    return parser


def _override(config: RunConfig, section: str, **values) -> RunConfig:
    data = config.model_dump()
    data[section] = {**data[section], **values}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid {section} override: {str(e)}") from e


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --config plus command-line overrides"""
    config = load_run_config(args.config)
    if args.grid_n is not None:
        config = _override(config, "degennes", n=args.grid_n)
    if args.out is not None:
        config = _override(config, "output", dir=args.out)
    if args.strict_paper_signs:
        config = _override(config, "output", strict_paper_signs=True)
    if getattr(args, "fit_alpha0", False) or args.command == "fit-alpha0":
        config = _override(config, "splitting", fit_alpha0=True)
    return config


def _check_rows(checks: List[CheckResult]) -> List[str]:
    lines = []
    for c in checks:
        status = "PASS" if c.passed else ("FAIL" if c.severity == Severity.REQUIRED else "WARN")
        line = f"{status:4}  {c.module:10}  {c.name:55}  {c.value:.3e}  (tol {c.tolerance:.1e})"
        if c.detail:
            line += f"  {c.detail}"
        lines.append(line)
    return lines


def _emit(args: argparse.Namespace, payload: Any, text: str):
    print(to_json(payload) if args.json else text)


# ---------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------

def cmd_constants(args: argparse.Namespace, config: RunConfig) -> int:
    validation = ValidationService(config)
    checks = validation.run_group("degennes", validation.check_degennes)

    payload: Dict[str, Any] = {"checks": checks}
    rows: Dict[str, Any] = {}
    consts = validation.pipeline.cached_constants
    if consts is not None:
        payload["constants"] = consts
        rows = {"theta0": consts.theta0, "xi0": consts.xi0, "c1": consts.c1, "mu2": consts.mu2,
                "u0": consts.u0, "grid_n": consts.grid_n}
        if config.output.strict_paper_signs:
            literal = abs(consts.mu2 - 6.0 * consts.c1_literal * consts.theta0 ** 0.5) / consts.mu2
            payload["c1_literal"] = consts.c1_literal
            payload["mu2_identity_with_c1_literal"] = literal
            rows["c1_literal (u0^2/6)"] = consts.c1_literal
            rows["mu'' identity with c1_literal"] = literal

    failed = [c for c in checks if not c.passed and c.severity == Severity.REQUIRED]
    payload["passed"] = not failed
    text = format_table(rows, "de Gennes constants") + "\n\n" + "\n".join(_check_rows(checks))
    _emit(args, payload, text)
    if failed:
        names = ", ".join(c.name for c in failed)
        raise CheckFailure(f"{len(failed)} identity check(s) failed: {names}", failed)
    return EXIT_OK


def cmd_geometry(args: argparse.Namespace, config: RunConfig) -> int:
    pipeline = PipelineService(config)
    summary = pipeline.domain_summary()
    payload: Dict[str, Any] = {"domain": summary}
    rows = summary.model_dump(mode="json")
    if config.output.strict_paper_signs:
        payload["A_u_plus_g"] = "divergent"
        rows["A_u with +g integrand"] = "divergent (log singularity at the well)"

    if args.out is not None:
        path = write_csv(pipeline.potential_table(), os.path.join(config.output.dir, "potential.csv"),
                         "curvature and effective potential along the boundary")
        write_config_echo(config, config.output.dir)
        payload["potential_csv"] = path

    _emit(args, payload, format_table(rows, "domain"))
    return EXIT_OK


def _sweep_summary(result: SweepResult) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "points": int(len(result.table)),
        "S": result.inputs.S,
        "alpha0": result.inputs.alpha0,
        "predicted_zero_spacing": float(np.pi / (result.inputs.L * result.inputs.gamma0)),
        "rows_with_reason": int((result.table["reason"] != "").sum()),
    }
    for name, report in result.comparisons.items():
        summary[name] = report
    if result.alpha0_fit is not None:
        summary["alpha0_fit"] = result.alpha0_fit
    return summary


def _summary_text(summary: Dict[str, Any]) -> str:
    rows = {}
    for key, value in summary.items():
        if hasattr(value, "model_dump"):
            for field, inner in value.model_dump(mode="json").items():
                if inner is not None and inner != []:
                    rows[f"{key}.{field}"] = inner
        else:
            rows[key] = value
    return format_table(rows, "sweep")


def _run_sweep(config: RunConfig) -> SweepResult:
    pipeline = PipelineService(config)
    result = asyncio.run(pipeline.run_sweep())
    write_csv(result.table, os.path.join(config.output.dir, "sweep.csv"),
              "gap prediction and oracle gaps versus 1/h")
    write_config_echo(config, config.output.dir)
    return result


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    summary = _sweep_summary(_run_sweep(config))
    _emit(args, summary, _summary_text(summary))
    return EXIT_OK


def cmd_fit_alpha0(args: argparse.Namespace, config: RunConfig) -> int:
    result = _run_sweep(config)
    if result.alpha0_fit is None:
        raise InsufficientDataError("no flux-carrying oracle data to fit alpha0 (enable an oracle)")
    fit = result.alpha0_fit
    _emit(args, fit, format_table(fit.model_dump(mode="json"), "alpha0 fit"))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, config: RunConfig) -> int:
    report = ValidationService(config).run(only=args.only, full=args.full)
    payload = {"passed": report.passed, "checks": report.checks}
    _emit(args, payload, "\n".join(_check_rows(report.checks)))
    if not report.passed:
        raise CheckFailure(f"{len(report.failed)} check(s) failed", report.failed)
    logger.info(f"✅ All {len(report.checks)} checks passed or reported")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, config: RunConfig) -> int:
    import uvicorn

    uvicorn.run("main:app", host=settings.APP_HOST, port=settings.APP_PORT)
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "geometry": cmd_geometry,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "fit-alpha0": cmd_fit_alpha0,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    configure_logging(verbose=args.verbose, quiet=args.quiet)

    try:
        config = resolve_config(args)
        log_system_status(config)
        return COMMANDS[args.command](args, config)
    except TunnelingError as e:
        logger.error(f"❌ {args.command} failed: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return e.exit_code

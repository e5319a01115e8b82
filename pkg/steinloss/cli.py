"""Command line: batch experiments with CSV and JSON outputs.

Exit codes: 0 when every assertion passes, 1 when one fails, 2 on a usage or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .config import (
    ExperimentConfig,
    ModelSelectSpec,
    ResolvedRun,
    get_settings,
    load_experiment,
)
from .domination import run_conditions
from .enums import ConditionName, ExperimentKind, IdentityName
from .exceptions import ConfigError, SteinLossError
from .model_selection import LinearModelData, select
from .models import ConditionReport, RiskReport
from .presets import get_preset, list_presets
from .presets import identities as identities_preset
from .reports import (
    condition_frame,
    identity_frame,
    risk_frame,
    write_csv,
    write_summary,
)
from .risk_engine import identity_suite, mc_square_risk_difference, theta_sweep

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

BUNDLED_FIXTURE = Path(__file__).parent / "data" / "ridge_fixture.csv"

Command = Callable[[argparse.Namespace], int]


# ---- configuration ----


def _parse_identities(values: Optional[Sequence[str]]) -> List[IdentityName]:
    names = []
    for value in values or []:
        try:
            names.append(IdentityName(value))
        except ValueError as exc:
            raise ConfigError(f"unknown identity: {value}") from exc
    return names


def _base_config(
    args: argparse.Namespace, fallback: Optional[Callable[[], ExperimentConfig]]
) -> ExperimentConfig:
    if args.config:
        if args.preset:
            _LOGGER.debug("Both --config and --preset given, using %s", args.config)
        return load_experiment(args.config)
    if args.preset:
        return get_preset(args.preset)
    if fallback is not None:
        return fallback()
    raise ConfigError("either --config or --preset is required")


def load_config(
    args: argparse.Namespace, fallback: Optional[Callable[[], ExperimentConfig]] = None
) -> tuple[ExperimentConfig, ResolvedRun]:
    """Return the experiment and its run parameters (flag > config > preset > settings)."""
    config = _base_config(args, fallback)
    try:
        config = config.with_overrides(
            n=args.n, seed=args.seed, threads=args.threads, output_dir=args.output_dir
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid override: {exc}") from exc
    run = config.resolved(get_settings())
    _LOGGER.debug("Running %s with %s", config.name or config.kind.value, run)
    return config, run


def _output(run: ResolvedRun, config: ExperimentConfig, suffix: str) -> Path:
    return Path(run.output_dir) / f"{config.name or config.kind.value}-{suffix}"


# ---- risk comparisons ----


def _risk_failures(
    config: ExperimentConfig, run: ResolvedRun, reports: Sequence[RiskReport]
) -> List[str]:
    failures = []
    for report in reports:
        if not report.is_paired:
            continue
        assert report.paired_diff_mean is not None and report.paired_diff_se is not None
        where = f"{report.loss_estimator} at |theta|={report.theta_norm:g}"
        if report.sigma2 is not None:
            where += f", sigma2={report.sigma2:g}"
        if config.assert_domination and not report.dominates(run.tolerance_se):
            failures.append(
                f"{where} does not dominate {report.reference}: "
                f"diff {report.paired_diff_mean:.6g} ± {report.paired_diff_se:.3g}"
            )
        expected = config.expected_paired_diff
        if expected is not None and (
            abs(report.paired_diff_mean - expected) > run.tolerance_se * report.paired_diff_se
        ):
            failures.append(
                f"{where}: diff {report.paired_diff_mean:.6g} ± {report.paired_diff_se:.3g}, "
                f"expected {expected:g}"
            )
    return failures


def cmd_risk_compare(args: argparse.Namespace) -> int:
    """Run a risk comparison (or the one-dimensional square example)."""
    config, run = load_config(args)
    if config.kind is ExperimentKind.SQUARE_1D:
        assert config.square is not None
        reports = [
            mc_square_risk_difference(
                config.square, theta, run.n, run.seed, run.block_size, run.threads
            )
            for theta in config.theta_radii
        ]
    elif config.kind is ExperimentKind.RISK_COMPARE:
        reports = theta_sweep(config, run)
    else:
        raise ConfigError(f"risk-compare cannot run a {config.kind.value} experiment")

    failures = _risk_failures(config, run, reports)
    csv_path = write_csv(risk_frame(reports), _output(run, config, "risk.csv"))
    write_summary(
        {
            "experiment": config.name,
            "kind": config.kind.value,
            "n": run.n,
            "seed": run.seed,
            "tolerance_se": run.tolerance_se,
            "passed": not failures,
            "failures": failures,
            "reports": reports,
        },
        _output(run, config, "risk.json"),
    )
    for report in reports:
        line = (
            f"|theta|={report.theta_norm:<8g} {report.loss_estimator or '':<24} "
            f"risk={report.mean:.6g} ± {report.std_error:.3g}"
        )
        if report.is_paired:
            line += f"  diff={report.paired_diff_mean:.6g} ± {report.paired_diff_se:.3g}"
        print(line)
    for failure in failures:
        _LOGGER.error("Assertion failed: %s", failure)
    print(f"wrote {csv_path}")
    return EXIT_FAILED if failures else EXIT_OK


# ---- identities ----


def cmd_verify_identities(args: argparse.Namespace) -> int:
    """Run the identity verifiers."""
    config, run = load_config(args, fallback=identities_preset)
    names = _parse_identities(args.identity) or config.identities or list(IdentityName)
    negative = args.negative_control or config.negative_control
    reports = identity_suite(
        names, run.n, run.seed, negative, run.tolerance_se, run.block_size, run.threads
    )
    write_csv(identity_frame(reports), _output(run, config, "identities.csv"))
    passed = all(report.passed for report in reports)
    write_summary(
        {
            "experiment": config.name,
            "n": run.n,
            "seed": run.seed,
            "negative_control": negative,
            "passed": passed,
            "reports": reports,
        },
        _output(run, config, "identities.json"),
    )
    for report in reports:
        status = "pass" if report.passed else "FAIL"
        print(
            f"{status} {report.name.value:<12} {report.case:<20} "
            f"diff={report.diff_mean:.4g} ± {report.diff_se:.3g}"
        )
    return EXIT_OK if passed else EXIT_FAILED


# ---- conditions ----


def _describe_constants(report: ConditionReport) -> str:
    constants = dict(report.constants)
    if report.name is ConditionName.SIGN_LAPLACIAN:
        return (
            f"K0={constants['K0']:.10g} alpha={constants['alpha']:g} "
            f"range=(0, {constants['alpha_max']:.10g})"
        )
    return " ".join(f"{key}={value:.10g}" for key, value in sorted(constants.items()))


def cmd_check_conditions(args: argparse.Namespace) -> int:
    """Evaluate the declared differential inequalities on the grid."""
    config, run = load_config(args)
    if not config.conditions:
        raise ConfigError(f"{config.name or 'experiment'} declares no conditions")
    reports = run_conditions(config.conditions, config.grid)
    labels = [spec.display_name for spec in config.conditions]
    write_csv(condition_frame(reports, labels), _output(run, config, "conditions.csv"))
    passed = all(report.passed for report in reports)
    write_summary(
        {
            "experiment": config.name,
            "passed": passed,
            "conditions": [
                {
                    "label": label,
                    "name": report.name.value,
                    "passed": report.passed,
                    "max_lhs": report.max_lhs,
                    "constants": report.constants,
                    "note": report.note,
                }
                for label, report in zip(labels, reports)
            ],
        },
        _output(run, config, "conditions.json"),
    )
    for label, report in zip(labels, reports):
        status = "pass" if report.passed else "FAIL"
        print(
            f"{status} {label:<24} max_lhs={report.max_lhs:.6g} {_describe_constants(report)}"
        )
    return EXIT_OK if passed else EXIT_FAILED


# ---- model selection ----


def _model_select_spec(args: argparse.Namespace, config: ExperimentConfig) -> ModelSelectSpec:
    spec = config.model_select or ModelSelectSpec()
    updates: Dict[str, Any] = {}
    if args.data:
        updates["data"] = args.data
    if args.response:
        updates["response"] = args.response
    if args.lambdas:
        updates["lambdas"] = args.lambdas
    if args.sigma2 is not None:
        updates["sigma2"] = args.sigma2
    if not updates:
        return spec
    try:
        return ModelSelectSpec.model_validate({**spec.model_dump(), **updates})
    except ValidationError as exc:
        raise ConfigError(f"invalid model selection options: {exc}") from exc


def cmd_model_select(args: argparse.Namespace) -> int:
    """Choose the ridge penalty minimizing Cp*."""
    config, run = load_config(
        args,
        fallback=lambda: ExperimentConfig(
            name="model-select", kind=ExperimentKind.MODEL_SELECT, model_select=ModelSelectSpec()
        ),
    )
    spec = _model_select_spec(args, config)
    path = Path(spec.data) if spec.data else BUNDLED_FIXTURE
    data = LinearModelData.from_csv(path, response=spec.response, intercept=spec.intercept)
    selection = select(data, spec.lambdas, spec.sigma2)
    write_csv(selection.table, _output(run, config, "cp.csv"))
    write_summary(
        {
            "experiment": config.name,
            "data": str(path),
            "n": data.n,
            "p": data.p,
            "sigma2_hat": selection.sigma2_hat,
            "chosen_lambda": selection.chosen_lambda,
        },
        _output(run, config, "cp.json"),
    )
    print(selection.table.to_string(index=False))
    print(f"chosen lambda: {selection.chosen_lambda:g}")
    return EXIT_OK


# ---- presets ----


def cmd_list_presets(args: argparse.Namespace) -> int:
    """Print the preset registry."""
    for name, description in list_presets(args.filter):
        print(f"{name:<22} {description}")
    return EXIT_OK


# ---- parser ----


def _run_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="experiment JSON file")
    parent.add_argument("--preset", help="named experiment (see list-presets)")
    parent.add_argument("--seed", type=int, help="master seed (default: STEINLOSS_SEED or 42)")
    parent.add_argument("--threads", type=int, help="worker threads")
    parent.add_argument("--n", type=int, help="Monte Carlo replications")
    parent.add_argument("--output-dir", help="directory for CSV and JSON outputs")
    parent.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of the ``steinloss`` command."""
    parser = argparse.ArgumentParser(
        prog="steinloss", description="Loss estimation experiments for shrinkage estimators."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    run_options = _run_options()

    risk = commands.add_parser(
        "risk-compare", parents=[run_options], help="Monte Carlo risks of loss estimators"
    )
    risk.set_defaults(handler=cmd_risk_compare)

    identities = commands.add_parser(
        "verify-identities", parents=[run_options], help="check expectation identities"
    )
    identities.add_argument(
        "--identity", action="append", help="identity to run (repeatable; default all)"
    )
    identities.add_argument(
        "--negative-control", action="store_true", help="run the perturbed identities"
    )
    identities.set_defaults(handler=cmd_verify_identities)

    conditions = commands.add_parser(
        "check-conditions", parents=[run_options], help="evaluate domination conditions on a grid"
    )
    conditions.set_defaults(handler=cmd_check_conditions)

    model = commands.add_parser(
        "model-select", parents=[run_options], help="choose a ridge penalty by Cp*"
    )
    model.add_argument("data", nargs="?", help="CSV file with a header row")
    model.add_argument("--response", help="response column (default y)")
    model.add_argument("--lambdas", type=float, nargs="+", help="penalty grid")
    model.add_argument("--sigma2", type=float, help="variance estimate override")
    model.set_defaults(handler=cmd_model_select)

    presets = commands.add_parser("list-presets", help="list the named experiments")
    presets.add_argument("--filter", default=None, help="substring of the preset name")
    presets.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    presets.set_defaults(handler=cmd_list_presets)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``steinloss`` console script."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handler: Command = args.handler
    try:
        return handler(args)
    # pydantic ValidationError is a ValueError
    except (SteinLossError, ValueError) as exc:
        _LOGGER.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())

"""CSV and JSON writers for experiment results."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .const import CSV_FLOAT_FORMAT, ConditionColumn, IdentityColumn, RiskColumn
from .models import ConditionReport, IdentityReport, RiskReport

_LOGGER = logging.getLogger(__name__)

PathLike = Union[str, Path]


def risk_frame(reports: Iterable[RiskReport]) -> pd.DataFrame:
    """Return one row per (σ², θ, loss estimator)."""
    rows = [
        {
            RiskColumn.THETA_NORM: report.theta_norm,
            RiskColumn.ESTIMATOR: report.estimator,
            RiskColumn.LOSS_ESTIMATOR: report.loss_estimator,
            RiskColumn.MEAN: report.mean,
            RiskColumn.SE: report.std_error,
            RiskColumn.N: report.n,
            RiskColumn.SEED: report.seed,
            RiskColumn.PAIRED_DIFF_MEAN: report.paired_diff_mean,
            RiskColumn.PAIRED_DIFF_SE: report.paired_diff_se,
            RiskColumn.SIGMA2: report.sigma2,
            RiskColumn.REDRAWS: report.redraws,
        }
        for report in reports
    ]
    return pd.DataFrame(rows, columns=list(RiskColumn.ALL))


def condition_frame(
    reports: Sequence[ConditionReport], labels: Optional[Sequence[str]] = None
) -> pd.DataFrame:
    """Return one row per grid point (and s value) of every condition."""
    names = labels if labels is not None else [report.name.value for report in reports]
    frames = []
    for label, report in zip(names, reports):
        values = np.asarray(report.values, dtype=float)
        s_values = report.s_values or [np.nan] * len(values)
        frames.append(
            pd.DataFrame(
                {
                    ConditionColumn.CONDITION: label,
                    ConditionColumn.RADIUS: report.radii,
                    ConditionColumn.S: s_values,
                    ConditionColumn.LHS: values,
                    ConditionColumn.PASSED: values <= report.tolerance,
                },
                columns=list(ConditionColumn.ALL),
            )
        )
    if not frames:
        return pd.DataFrame(columns=list(ConditionColumn.ALL))
    return pd.concat(frames, ignore_index=True)


def identity_frame(reports: Iterable[IdentityReport]) -> pd.DataFrame:
    """Return one row per identity case."""
    rows = [
        {
            IdentityColumn.IDENTITY: report.name.value,
            IdentityColumn.CASE: report.case,
            IdentityColumn.LHS_MEAN: report.lhs_mean,
            IdentityColumn.RHS_MEAN: report.rhs_mean,
            IdentityColumn.DIFF_MEAN: report.diff_mean,
            IdentityColumn.DIFF_SE: report.diff_se,
            IdentityColumn.N: report.n,
            IdentityColumn.SEED: report.seed,
            IdentityColumn.PASSED: report.passed,
        }
        for report in reports
    ]
    return pd.DataFrame(rows, columns=list(IdentityColumn.ALL))


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a tidy UTF-8 CSV with 17 significant digits."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, encoding="utf-8")
    _LOGGER.debug("Wrote %s rows to %s", len(frame), target)
    return target


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_summary(summary: Dict[str, Any], path: PathLike) -> Path:
    """Write the JSON summary of a run."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=_jsonable) + "\n",
        encoding="utf-8",
    )
    _LOGGER.debug("Wrote summary to %s", target)
    return target

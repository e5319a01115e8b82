"""Settings and experiment configuration."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .const import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_IDENTITY_REPLICATIONS,
    DEFAULT_RISK_REPLICATIONS,
    DEFAULT_SEED,
    DEFAULT_THREADS,
    DEFAULT_TOLERANCE_SE,
)
from .enums import (
    ConditionName,
    Density1D,
    EstimatorKind,
    ExperimentKind,
    IdentityName,
    LossEstimatorBase,
    SamplerKind,
)
from .exceptions import ConfigError
from .models import (
    EstimatorSpec,
    FieldSpec,
    GridSpec,
    LossEstimatorSpec,
    MixingSpec,
    SamplerSpec,
)

_LOGGER = logging.getLogger(__name__)

_RESIDUAL_BASES = (LossEstimatorBase.RESIDUAL_LS, LossEstimatorBase.RESIDUAL_SHRINKAGE)


class Settings(BaseSettings):
    """Environment-backed defaults (prefix ``STEINLOSS_``)."""

    model_config = SettingsConfigDict(env_prefix="STEINLOSS_", env_file=".env", extra="ignore")

    seed: int = DEFAULT_SEED
    threads: int = Field(default=DEFAULT_THREADS, ge=1)
    risk_replications: int = Field(default=DEFAULT_RISK_REPLICATIONS, ge=1)
    identity_replications: int = Field(default=DEFAULT_IDENTITY_REPLICATIONS, ge=1)
    tolerance_se: float = Field(default=DEFAULT_TOLERANCE_SE, gt=0)
    block_size: int = Field(default=DEFAULT_BLOCK_SIZE, ge=1)
    output_dir: str = "."


def get_settings() -> Settings:
    """Read the settings from the environment."""
    return Settings()


class ConditionCheckSpec(BaseModel):
    """One differential inequality evaluated by ``check-conditions``."""

    model_config = ConfigDict(extra="forbid")

    condition: ConditionName
    label: Optional[str] = None
    p: int = Field(ge=1)
    k: Optional[int] = Field(default=None, ge=1)
    gamma: Optional[FieldSpec] = None
    alpha_or_d: float = 1.0
    g: Optional[FieldSpec] = None
    m: Optional[FieldSpec] = None
    xi: Optional[FieldSpec] = None
    prior: Optional[FieldSpec] = None
    mixing: Optional[MixingSpec] = None
    sampler: Optional[SamplerSpec] = None

    @model_validator(mode="after")
    def _check_fields(self) -> ConditionCheckSpec:
        needs_gamma = (
            ConditionName.KNOWN_VAR,
            ConditionName.UNKNOWN_VAR,
            ConditionName.MIXTURE,
            ConditionName.RESIDUAL_LS,
            ConditionName.RESIDUAL_SHRINK,
        )
        if self.condition in needs_gamma and self.gamma is None and self.xi is None:
            raise ValueError(f"{self.condition.value} check requires gamma (or m and xi)")
        if self.condition in (
            ConditionName.UNKNOWN_VAR,
            ConditionName.RESIDUAL_LS,
            ConditionName.RESIDUAL_SHRINK,
        ) and self.k is None:
            raise ValueError(f"{self.condition.value} check requires k")
        if self.condition is ConditionName.MIXTURE and self.mixing is None:
            raise ValueError("mixture check requires a mixing law")
        if self.condition is ConditionName.PRIOR and self.prior is None:
            raise ValueError("prior check requires a prior field")
        if self.condition is ConditionName.SIGN_LAPLACIAN and (self.m is None or self.xi is None):
            raise ValueError("sign_laplacian check requires m and xi")
        if self.condition is ConditionName.GENERAL_SPHERICAL and self.sampler is None:
            raise ValueError("general_spherical check requires a sampler")
        return self

    @property
    def display_name(self) -> str:
        """Return the label or the condition name."""
        return self.label or self.condition.value


class ModelSelectSpec(BaseModel):
    """Ridge path selection on a CSV data set."""

    model_config = ConfigDict(extra="forbid")

    data: Optional[str] = None
    response: str = "y"
    lambdas: List[float] = Field(
        default_factory=lambda: [0.0, 0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 1000.0]
    )
    sigma2: Optional[float] = Field(default=None, gt=0)
    intercept: bool = True

    @model_validator(mode="after")
    def _check_lambdas(self) -> ModelSelectSpec:
        if not self.lambdas:
            raise ValueError("lambda grid must not be empty")
        return self


class Square1DSpec(BaseModel):
    """One-dimensional estimation of θ² under a location density."""

    model_config = ConfigDict(extra="forbid")

    density: Density1D = Density1D.NORMAL
    scale: float = Field(default=1.0, gt=0)
    dof: Optional[float] = Field(default=None, gt=2)


class ExperimentConfig(BaseModel):
    """A single experiment; command-line flags override its fields."""

    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    kind: ExperimentKind = ExperimentKind.RISK_COMPARE
    description: Optional[str] = None
    sampler: Optional[SamplerSpec] = None
    estimator: EstimatorSpec = Field(default_factory=EstimatorSpec)
    loss_estimators: List[LossEstimatorSpec] = Field(default_factory=list)
    reference: Optional[str] = None
    theta_radii: List[float] = Field(default_factory=lambda: [0.0, 2.0, 5.0])
    sigma2_values: List[float] = Field(default_factory=list)
    n: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None
    threads: Optional[int] = Field(default=None, ge=1)
    block_size: Optional[int] = Field(default=None, ge=1)
    tolerance_se: Optional[float] = Field(default=None, gt=0)
    output_dir: Optional[str] = None
    assert_domination: bool = False
    expected_paired_diff: Optional[float] = None
    conditions: List[ConditionCheckSpec] = Field(default_factory=list)
    grid: GridSpec = Field(default_factory=GridSpec)
    identities: List[IdentityName] = Field(default_factory=list)
    negative_control: bool = False
    square: Optional[Square1DSpec] = None
    model_select: Optional[ModelSelectSpec] = None

    @model_validator(mode="after")
    def _check_consistency(self) -> ExperimentConfig:
        if self.kind is ExperimentKind.RISK_COMPARE:
            self._check_risk_compare()
        if self.kind is ExperimentKind.CHECK_CONDITIONS and not self.conditions:
            raise ValueError("check_conditions experiment declares no conditions")
        if self.kind is ExperimentKind.MODEL_SELECT and self.model_select is None:
            raise ValueError("model_select experiment requires a model_select section")
        if self.kind is ExperimentKind.SQUARE_1D and self.square is None:
            raise ValueError("square_1d experiment requires a square section")
        return self

    def _check_risk_compare(self) -> None:
        if self.sampler is None:
            raise ValueError("risk_compare experiment requires a sampler")
        if not self.loss_estimators:
            raise ValueError("risk_compare experiment declares no loss estimators")
        if not self.theta_radii or min(self.theta_radii) < 0:
            raise ValueError("theta_radii must be a non-empty list of radii >= 0")
        labels = [spec.label() for spec in self.loss_estimators]
        if len(set(labels)) != len(labels):
            raise ValueError("loss estimator names must be unique")
        if self.reference is not None and self.reference not in labels:
            raise ValueError(f"reference {self.reference!r} is not a declared loss estimator")
        sampler = self.sampler
        for spec in self.loss_estimators:
            if spec.base in _RESIDUAL_BASES and not sampler.has_residual:
                raise ValueError(
                    f"{spec.base.value} loss estimator requires a spherical_residual sampler"
                )
            if spec.base is LossEstimatorBase.UNBIASED_UNKNOWN_VAR and not (
                sampler.has_variance_stat
            ):
                raise ValueError(
                    "unbiased_unknown_var loss estimator requires a normal sampler with k >= 1"
                )
            if spec.base is LossEstimatorBase.SURE_KNOWN_VAR and sampler.kind is not (
                SamplerKind.NORMAL
            ):
                raise ValueError("sure_known_var loss estimator requires a normal sampler")
        if self.estimator.kind is EstimatorKind.JS_UNKNOWN_VAR and not sampler.has_variance_stat:
            raise ValueError("js_unknown_var estimator requires a normal sampler with k >= 1")
        if self.estimator.kind is EstimatorKind.RESIDUAL_SHRINKAGE and not sampler.has_residual:
            raise ValueError("residual_shrinkage estimator requires a spherical_residual sampler")

    @property
    def reference_label(self) -> str:
        """Return the label of the reference loss estimator (the first one by default)."""
        if self.reference is not None:
            return self.reference
        return self.loss_estimators[0].label()

    def resolved(self, settings: Settings) -> ResolvedRun:
        """Fill run parameters left open from ``settings``."""
        default_n = (
            settings.identity_replications
            if self.kind is ExperimentKind.VERIFY_IDENTITIES
            else settings.risk_replications
        )
        return ResolvedRun(
            n=self.n if self.n is not None else default_n,
            seed=self.seed if self.seed is not None else settings.seed,
            threads=self.threads if self.threads is not None else settings.threads,
            block_size=self.block_size if self.block_size is not None else settings.block_size,
            tolerance_se=(
                self.tolerance_se if self.tolerance_se is not None else settings.tolerance_se
            ),
            output_dir=self.output_dir if self.output_dir is not None else settings.output_dir,
        )

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        """Return a validated copy with the non-None ``overrides`` applied."""
        updates = {key: value for key, value in overrides.items() if value is not None}
        if not updates:
            return self
        return ExperimentConfig.model_validate({**self.model_dump(), **updates})


class ResolvedRun(BaseModel):
    """Run parameters after flag > config > preset > settings precedence."""

    model_config = ConfigDict(frozen=True)

    n: int
    seed: int
    threads: int
    block_size: int
    tolerance_se: float
    output_dir: str


def load_experiment(source: Union[str, Path, Dict[str, Any]]) -> ExperimentConfig:
    """Load an experiment from a JSON file path or an already parsed mapping."""
    if isinstance(source, dict):
        payload = source
    else:
        path = Path(source)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc

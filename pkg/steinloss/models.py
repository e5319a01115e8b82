"""Pydantic models for every serializable spec and report of steinloss."""

from __future__ import annotations

import math
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .const import (
    DEFAULT_SEED,
    EVIDENCE_NOTE,
    GRID_DIRECTIONS,
    GRID_RADII_COUNT,
    GRID_RADII_MAX,
    GRID_RADII_MIN,
    PASS_TOLERANCE,
)
from .enums import (
    ConditionName,
    CorrectionDirection,
    EstimatorKind,
    FieldName,
    IdentityName,
    LossEstimatorBase,
    MixingKind,
    RadialKind,
    SamplerKind,
    SignMode,
)


class FieldSpec(BaseModel):
    """Name and parameters of a library field.

    Example: ``{"name": "norm_power", "params": {"a": 2}}``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: FieldName
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _coerce_bare_name(cls, v: Any) -> Any:
        # accept "js_shrinkage" as shorthand for {"name": "js_shrinkage"}
        if isinstance(v, str):
            return {"name": v}
        return v

    def label(self) -> str:
        """Return a compact human readable label."""
        if not self.params:
            return self.name.value
        args = ",".join(f"{key}={value}" for key, value in sorted(self.params.items()))
        return f"{self.name.value}({args})"


class MixingSpec(BaseModel):
    """Mixing law G of the precision ς in a scale mixture of normals."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: MixingKind
    precision: Optional[float] = None
    precisions: Optional[List[float]] = None
    weight: Optional[float] = None
    shape: Optional[float] = None
    rate: Optional[float] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> MixingSpec:
        if self.kind is MixingKind.POINT_MASS:
            if self.precision is None or self.precision <= 0:
                raise ValueError("point_mass requires precision > 0")
        elif self.kind is MixingKind.TWO_POINT:
            if self.precisions is None or len(self.precisions) != 2:
                raise ValueError("two_point requires two precisions")
            if min(self.precisions) <= 0:
                raise ValueError("two_point precisions must be > 0")
            if self.weight is None or not 0.0 <= self.weight <= 1.0:
                raise ValueError("two_point weight must lie in [0, 1]")
        elif self.kind is MixingKind.GAMMA:
            if self.shape is None or self.rate is None:
                raise ValueError("gamma requires shape and rate")
            if self.shape <= 0 or self.rate <= 0:
                raise ValueError("gamma shape and rate must be > 0")
        return self

    @classmethod
    def point_mass(cls, precision: float = 1.0) -> MixingSpec:
        """Build a point mass at ``precision``."""
        return cls(kind=MixingKind.POINT_MASS, precision=precision)

    @classmethod
    def two_point(cls, first: float, second: float, weight: float) -> MixingSpec:
        """Build a two point law with mass ``weight`` on ``first``."""
        return cls(kind=MixingKind.TWO_POINT, precisions=[first, second], weight=weight)

    @classmethod
    def gamma(cls, shape: float, rate: float) -> MixingSpec:
        """Build a gamma(shape, rate) law."""
        return cls(kind=MixingKind.GAMMA, shape=shape, rate=rate)

    @classmethod
    def student_t(cls, dof: float) -> MixingSpec:
        """Build the gamma(ν/2, ν/2) law that induces a multivariate t with ν dof."""
        return cls.gamma(dof / 2.0, dof / 2.0)


class RadialSpec(BaseModel):
    """Law of the radius R = ||(X - θ, U)||."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: RadialKind
    radius: Optional[float] = None
    dof: Optional[int] = None
    scale: float = 1.0
    mixing: Optional[MixingSpec] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> RadialSpec:
        if self.kind is RadialKind.FIXED and (self.radius is None or self.radius <= 0):
            raise ValueError("fixed radial law requires radius > 0")
        if self.kind is RadialKind.MIXTURE_INDUCED and self.mixing is None:
            raise ValueError("mixture_induced radial law requires a mixing law")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.dof is not None and self.dof < 1:
            raise ValueError("dof must be >= 1")
        return self

    @classmethod
    def fixed(cls, radius: float) -> RadialSpec:
        """Build a fixed radius law."""
        return cls(kind=RadialKind.FIXED, radius=radius)

    @classmethod
    def chi(cls, dof: Optional[int] = None, scale: float = 1.0) -> RadialSpec:
        """Build a scaled chi law; ``dof`` defaults to the sampler dimension."""
        return cls(kind=RadialKind.CHI, dof=dof, scale=scale)

    @classmethod
    def mixture_induced(
        cls, mixing: MixingSpec, dof: Optional[int] = None
    ) -> RadialSpec:
        """Build the radius law induced by a scale mixture of normals."""
        return cls(kind=RadialKind.MIXTURE_INDUCED, mixing=mixing, dof=dof)

    def with_dof(self, dof: int) -> RadialSpec:
        """Return a copy with ``dof`` filled in when it was left open."""
        if self.dof is not None or self.kind is RadialKind.FIXED:
            return self
        return self.model_copy(update={"dof": dof})


class SamplerSpec(BaseModel):
    """Distributional model of the observations."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SamplerKind = SamplerKind.NORMAL
    p: int = Field(ge=1)
    k: int = Field(default=0, ge=0)
    theta: Optional[List[float]] = None
    sigma2: float = Field(default=1.0, gt=0)
    mixing: Optional[MixingSpec] = None
    radial: Optional[RadialSpec] = None

    @model_validator(mode="after")
    def _check_setting(self) -> SamplerSpec:
        if self.theta is not None and len(self.theta) != self.p:
            raise ValueError(f"theta has length {len(self.theta)}, expected p={self.p}")
        if self.kind is SamplerKind.SCALE_MIXTURE and self.mixing is None:
            raise ValueError("scale_mixture sampler requires a mixing law")
        if self.kind in (SamplerKind.RADIAL_SPHERICAL, SamplerKind.SPHERICAL_RESIDUAL):
            if self.radial is None:
                raise ValueError(f"{self.kind.value} sampler requires a radial law")
        if self.kind is SamplerKind.SPHERICAL_RESIDUAL and self.k < 1:
            raise ValueError("spherical_residual sampler requires k >= 1")
        return self

    @property
    def theta_array(self) -> np.ndarray:
        """Return θ as an array (zeros when unset)."""
        if self.theta is None:
            return np.zeros(self.p)
        return np.asarray(self.theta, dtype=float)

    @property
    def resolved_radial(self) -> Optional[RadialSpec]:
        """Return the radial law with its dof resolved against p (and k)."""
        if self.radial is None:
            return None
        if self.kind is SamplerKind.SPHERICAL_RESIDUAL:
            return self.radial.with_dof(self.p + self.k)
        return self.radial.with_dof(self.p)

    @property
    def has_variance_stat(self) -> bool:
        """Whether the setting carries S ~ σ²χ²_k next to X."""
        return self.kind is SamplerKind.NORMAL and self.k > 0

    @property
    def has_residual(self) -> bool:
        """Whether the setting carries a residual vector U."""
        return self.kind is SamplerKind.SPHERICAL_RESIDUAL

    def with_theta(self, theta: Any) -> SamplerSpec:
        """Return a copy located at ``theta``."""
        values = [float(value) for value in np.asarray(theta, dtype=float).ravel()]
        return self.model_validate({**self.model_dump(), "theta": values})


class EstimatorSpec(BaseModel):
    """Point estimator of θ."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: EstimatorKind = EstimatorKind.MLE
    p: Optional[int] = Field(default=None, ge=1)
    k: Optional[int] = Field(default=None, ge=1)
    m: Optional[FieldSpec] = None
    g: Optional[FieldSpec] = None

    @model_validator(mode="after")
    def _check_kind(self) -> EstimatorSpec:
        if self.kind is EstimatorKind.PSEUDO_BAYES and self.m is None:
            raise ValueError("pseudo_bayes estimator requires a marginal m")
        if self.kind is EstimatorKind.JS_UNKNOWN_VAR and self.k is None:
            raise ValueError("js_unknown_var estimator requires k")
        if self.kind in (
            EstimatorKind.JAMES_STEIN,
            EstimatorKind.JS_UNKNOWN_VAR,
        ) and self.p is not None and self.p < 3:
            raise ValueError("James-Stein estimators require p >= 3")
        return self

    def label(self) -> str:
        """Return a compact human readable label."""
        if self.kind is EstimatorKind.PSEUDO_BAYES and self.m is not None:
            return f"pseudo_bayes[{self.m.label()}]"
        if self.kind is EstimatorKind.RESIDUAL_SHRINKAGE and self.g is not None:
            return f"residual_shrinkage[{self.g.label()}]"
        return self.kind.value


class CorrectionSpec(BaseModel):
    """Correction γ subtracted (times the setting multiplier) from a base loss estimate.

    With ``sign_mode == fixed`` the correction is ``alpha_or_d * gamma(x)`` and
    ``direction`` says whether it lowers (``shrink``) or raises (``expand``) the
    base. With ``sign_mode == sgn_laplacian`` the correction is
    ``-alpha_or_d * sgn(Δξ(x)) ξ(x)/m(x)``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: Optional[FieldSpec] = None
    alpha_or_d: float = Field(gt=0)
    sign_mode: SignMode = SignMode.FIXED
    direction: CorrectionDirection = CorrectionDirection.SHRINK
    xi: Optional[FieldSpec] = None
    m: Optional[FieldSpec] = None

    @model_validator(mode="after")
    def _check_sign_mode(self) -> CorrectionSpec:
        if self.sign_mode is SignMode.FIXED and self.gamma is None:
            raise ValueError("fixed sign mode requires a gamma field")
        if self.sign_mode is SignMode.SGN_LAPLACIAN and (
            self.xi is None or self.m is None
        ):
            raise ValueError("sgn_laplacian sign mode requires xi and m fields")
        return self


class LossEstimatorSpec(BaseModel):
    """Loss estimator: a base estimate, an optional correction and positive part."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: Optional[str] = None
    base: LossEstimatorBase
    correction: Optional[CorrectionSpec] = None
    m: Optional[FieldSpec] = None
    g: Optional[FieldSpec] = None
    value: Optional[float] = None
    positive_part: bool = False

    @model_validator(mode="after")
    def _check_base(self) -> LossEstimatorSpec:
        if self.base is LossEstimatorBase.CONSTANT and self.value is None:
            raise ValueError("constant base requires a value")
        return self

    def label(self) -> str:
        """Return the configured name or a label derived from the parts."""
        if self.name:
            return self.name
        label = self.base.value
        if self.correction is not None:
            label += f"-corrected({self.correction.alpha_or_d:g})"
        if self.positive_part:
            label += "+"
        return label


class GridSpec(BaseModel):
    """Radial x random-direction evaluation grid."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    radii: List[float] = Field(
        default_factory=lambda: np.logspace(
            math.log10(GRID_RADII_MIN), math.log10(GRID_RADII_MAX), GRID_RADII_COUNT
        ).tolist()
    )
    directions_per_radius: int = Field(default=GRID_DIRECTIONS, ge=1)
    s_values: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    tolerance: float = PASS_TOLERANCE
    seed: int = DEFAULT_SEED

    @field_validator("radii", "s_values")
    @classmethod
    def _positive_nonempty(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("grid axis must not be empty")
        if min(v) <= 0:
            raise ValueError("grid values must be > 0")
        return v


class Observation(BaseModel):
    """Observed vector x, optionally with a residual vector u or a variance statistic s."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray
    u: Optional[np.ndarray] = None
    s: Optional[float] = None

    @field_validator("x", "u", mode="before")
    @classmethod
    def _as_array(cls, v: Any) -> Any:
        if v is None:
            return v
        return np.asarray(v, dtype=float)


class RiskReport(BaseModel):
    """Monte Carlo estimate bundle."""

    model_config = ConfigDict(extra="ignore")

    mean: float
    std_error: float
    n: int
    seed: int
    theta: List[float]
    sigma2: Optional[float] = None
    estimator: Optional[str] = None
    loss_estimator: Optional[str] = None
    reference: Optional[str] = None
    paired_diff_mean: Optional[float] = None
    paired_diff_se: Optional[float] = None
    unpaired_diff_se: Optional[float] = None
    redraws: int = 0
    flags: List[str] = Field(default_factory=list)

    @property
    def theta_norm(self) -> float:
        """Return ||θ||."""
        return float(np.linalg.norm(self.theta))

    @property
    def is_paired(self) -> bool:
        """Whether this report compares two estimators on common draws."""
        return self.paired_diff_mean is not None

    def dominates(self, tolerance_se: float) -> bool:
        """Whether the paired difference is <= 0 within ``tolerance_se`` paired SE."""
        if self.paired_diff_mean is None or self.paired_diff_se is None:
            raise ValueError("report carries no paired difference")
        return self.paired_diff_mean <= tolerance_se * self.paired_diff_se


class ConditionReport(BaseModel):
    """Per-point evaluation of a differential inequality on a grid."""

    model_config = ConfigDict(extra="ignore")

    name: ConditionName
    passed: bool
    max_lhs: float
    tolerance: float
    radii: List[float] = Field(default_factory=list)
    s_values: List[float] = Field(default_factory=list)
    values: List[float] = Field(default_factory=list)
    constants: Dict[str, float] = Field(default_factory=dict)
    note: str = EVIDENCE_NOTE

    @property
    def n_points(self) -> int:
        """Return the number of evaluated grid points."""
        return len(self.values)


class IdentityReport(BaseModel):
    """Monte Carlo check of an expectation identity on common draws."""

    model_config = ConfigDict(extra="ignore")

    name: IdentityName
    case: str
    lhs_mean: float
    rhs_mean: float
    diff_mean: float
    diff_se: float
    n: int
    seed: int
    passed: bool
    negative_control: bool = False

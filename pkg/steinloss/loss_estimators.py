"""Loss functions, unbiased loss estimators and their corrections."""

from __future__ import annotations

import logging
import math
from typing import Any, Optional, Union

import numpy as np

from . import calculus
from .enums import CorrectionDirection, Density1D, LossEstimatorBase, SignMode
from .estimators import PointEstimator, build_estimator
from .exceptions import (
    CorrectionRangeWarning,
    FinitenessWarning,
    InvalidMarginalError,
    MissingStatisticError,
    SteinDomainError,
    UnsupportedDistributionError,
)
from .fields import JointVectorField, ScalarField, VectorField, build_field
from .fields.corrections import ScaledField, SignLaplacianCorrection
from .fields.shrinkage import as_joint
from .models import (
    CorrectionSpec,
    EstimatorSpec,
    LossEstimatorSpec,
    RadialSpec,
    SamplerSpec,
)
from .samplers import expected_squared_radius, radial_second_moment
from .utils import send_warning

_LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)

ArrayLike = Union[float, np.ndarray]


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, x)


# ---- losses ----


def quadratic_loss(phi: Any, theta: Any) -> np.ndarray:
    """Return ||φ - θ||²."""
    return _squared_norm(np.asarray(phi, dtype=float) - np.asarray(theta, dtype=float))


def invariant_loss(phi: Any, theta: Any, sigma2: ArrayLike) -> np.ndarray:
    """Return ||φ - θ||² / σ²."""
    if np.any(np.asarray(sigma2) <= 0):
        raise SteinDomainError("sigma2 must be > 0")
    return quadratic_loss(phi, theta) / sigma2


def loss_estimation_loss(delta: ArrayLike, loss: ArrayLike) -> np.ndarray:
    """Return the squared error (δ - L)² of a loss estimate."""
    return np.square(np.asarray(delta, dtype=float) - np.asarray(loss, dtype=float))


def stein_type_loss(delta: ArrayLike, loss: ArrayLike) -> np.ndarray:
    """Return L/δ - log(L/δ) - 1 for positive δ and L."""
    d = np.asarray(delta, dtype=float)
    value = np.asarray(loss, dtype=float)
    if np.any(d <= 0) or np.any(value <= 0):
        raise SteinDomainError("the Stein-type loss needs positive estimate and loss")
    ratio = value / d
    return ratio - np.log(ratio) - 1.0


# ---- unbiased estimators of loss ----


def sure_known_var(g: VectorField, x: Any, sigma2: float = 1.0) -> np.ndarray:
    """Return p σ² + 2 σ² div g(x) + ||g(x)||² for φ = X + g(X)."""
    points = np.asarray(x, dtype=float)
    p = points.shape[-1]
    return p * sigma2 + 2.0 * sigma2 * calculus.divergence(g, points) + _squared_norm(
        g.value(points)
    )


def s_partial_norm2(g: JointVectorField, x: Any, s: Any) -> np.ndarray:
    """Return ∂/∂s ||g(x, s)||², in closed form when available.

    The finite-difference fallback is central, switching to a one-sided
    second-order stencil where s - h would leave the support s > 0.
    """
    points = np.asarray(x, dtype=float)
    stat = np.asarray(s, dtype=float)
    analytic = g.analytic_ds_norm2(points, stat)
    if analytic is not None:
        return analytic
    h = _EPS ** (1.0 / 3.0) * np.maximum(1.0, stat)

    def norm2(at: np.ndarray) -> np.ndarray:
        return _squared_norm(g.value(points, at))

    central = (norm2(stat + h) - norm2(stat - np.minimum(h, stat))) / (2.0 * h)
    forward = (-3.0 * norm2(stat) + 4.0 * norm2(stat + h) - norm2(stat + 2.0 * h)) / (2.0 * h)
    return np.where(stat - h > 0, central, forward)


def unbiased_loss_unknown_var(
    g: Union[JointVectorField, VectorField], x: Any, s: Any, k: int
) -> np.ndarray:
    """Return p + s {(k + 2)||g||² + 2 div_x g + 2 s ∂/∂s ||g||²} for φ = X + S g(X, S)."""
    points = np.asarray(x, dtype=float)
    stat = np.asarray(s, dtype=float)
    if np.any(stat <= 0):
        raise SteinDomainError("the variance statistic must be > 0")
    joint = as_joint(g)
    p = points.shape[-1]
    divergence = joint.analytic_divergence(points, stat)
    if divergence is None:
        divergence = calculus.divergence_fd(joint.at(stat), points)
    bracket = (
        (k + 2) * _squared_norm(joint.value(points, stat))
        + 2.0 * divergence
        + 2.0 * stat * s_partial_norm2(joint, points, stat)
    )
    return p + stat * bracket


def _positive_marginal(m: ScalarField, x: np.ndarray) -> np.ndarray:
    values = m.value(x)
    if np.any(values <= 0):
        raise InvalidMarginalError(f"marginal {m.name} is not positive at x")
    return values


def posterior_risk(m: ScalarField, x: Any) -> np.ndarray:
    """Return p + Δm/m - ||∇m||²/m², the posterior risk of X + ∇m/m."""
    points = np.asarray(x, dtype=float)
    values = _positive_marginal(m, points)
    grad = calculus.gradient(m, points)
    laplacian = calculus.laplacian(m, points)
    return points.shape[-1] + laplacian / values - _squared_norm(grad) / values**2


def unbiased_risk_bayes(m: ScalarField, x: Any) -> np.ndarray:
    """Return p + 2 Δm/m - ||∇m||²/m², the unbiased estimate of risk of X + ∇m/m."""
    points = np.asarray(x, dtype=float)
    values = _positive_marginal(m, points)
    grad = calculus.gradient(m, points)
    return (
        points.shape[-1]
        + 2.0 * calculus.laplacian(m, points) / values
        - _squared_norm(grad) / values**2
    )


def theorem21_correction(
    m: ScalarField,
    xi: ScalarField,
    alpha: float,
    x: Any,
    k0: Optional[float] = None,
) -> np.ndarray:
    """Return γ(x) = -α sgn(Δξ(x)) ξ(x)/m(x); the corrected estimate is δ0 - γ.

    When ``k0`` is given, α outside (0, 2 K0) only triggers a warning so that
    failures outside the range can still be simulated.
    """
    if k0 is not None and not 0.0 < alpha < 2.0 * k0:
        send_warning(
            f"alpha={alpha:g} lies outside the validity range (0, {2.0 * k0:g})",
            CorrectionRangeWarning,
        )
    points = np.asarray(x, dtype=float)
    if np.any(m.value(points) == 0):
        raise InvalidMarginalError(f"marginal {m.name} vanishes at x")
    return SignLaplacianCorrection(m, xi, alpha).value(points)


def residual_unbiased_ls(u: Any, p: int, k: Optional[int] = None) -> np.ndarray:
    """Return p ||u||² / k."""
    residual = np.asarray(u, dtype=float)
    dof = residual.shape[-1] if k is None else k
    if dof < 1:
        raise SteinDomainError("the residual dimension k must be >= 1")
    return p * _squared_norm(residual) / dof


def residual_unbiased_shrink(g: VectorField, x: Any, u: Any) -> np.ndarray:
    """Return (p/k)||u||² + (||g||² + (2/(k + 2)) div g) ||u||⁴ for φ = X + ||U||² g(X)."""
    points = np.asarray(x, dtype=float)
    residual = np.asarray(u, dtype=float)
    p, k = points.shape[-1], residual.shape[-1]
    norm2 = _squared_norm(residual)
    bracket = _squared_norm(g.value(points)) + 2.0 / (k + 2) * calculus.divergence(g, points)
    return p * norm2 / k + bracket * norm2**2


def constant_spherical_unbiased(radial: RadialSpec, dim: Optional[int] = None) -> float:
    """Return the unbiased constant estimate E[R²] of the loss of X."""
    value = radial_second_moment(radial, dim)
    if not math.isfinite(value):
        raise UnsupportedDistributionError("the radial law has no finite second moment")
    return value


def apply_correction(
    base: ArrayLike, gamma_value: ArrayLike, multiplier: ArrayLike = 1.0
) -> np.ndarray:
    """Return base - multiplier * γ."""
    return np.asarray(base, dtype=float) - np.asarray(multiplier) * np.asarray(gamma_value)


def positive_part(delta: ArrayLike) -> np.ndarray:
    """Return max(δ, 0)."""
    return np.maximum(np.asarray(delta, dtype=float), 0.0)


# ---- one-dimensional estimation of θ² ----


def location_second_moment(
    density: Density1D, scale: float = 1.0, dof: Optional[float] = None
) -> float:
    """Return E₀[X²] for a centred location density (normal or Student t)."""
    if density is Density1D.NORMAL:
        return scale**2
    if dof is None or dof <= 2:
        raise SteinDomainError("the Student t second moment needs dof > 2")
    if dof <= 4:
        send_warning(
            f"Student t with {dof:g} dof has no fourth moment; risks are infinite",
            FinitenessWarning,
        )
    return scale**2 * dof / (dof - 2.0)


def generalized_bayes_square(x: ArrayLike, second_moment: float) -> np.ndarray:
    """Return the uniform-prior posterior mean X² + E₀[X²] of θ²."""
    return np.square(np.asarray(x, dtype=float)) + second_moment


def unbiased_square(x: ArrayLike, second_moment: float) -> np.ndarray:
    """Return the unbiased estimate X² - E₀[X²] of θ²."""
    return np.square(np.asarray(x, dtype=float)) - second_moment


# ---- configured loss estimators ----


def correction_field(spec: CorrectionSpec) -> ScalarField:
    """Return γ as a field; the corrected estimate is base - multiplier * γ."""
    if spec.sign_mode is SignMode.SGN_LAPLACIAN:
        assert spec.m is not None and spec.xi is not None
        m, xi = build_field(spec.m), build_field(spec.xi)
        assert isinstance(m, ScalarField) and isinstance(xi, ScalarField)
        return SignLaplacianCorrection(m, xi, spec.alpha_or_d)
    assert spec.gamma is not None
    gamma = build_field(spec.gamma)
    assert isinstance(gamma, ScalarField)
    sign = 1.0 if spec.direction is CorrectionDirection.SHRINK else -1.0
    return ScaledField(gamma, sign * spec.alpha_or_d)


class LossEstimator:
    """Vectorized loss estimator δ(x[, s | u]) for a given point estimator and setting."""

    def __init__(
        self,
        spec: LossEstimatorSpec,
        estimator: PointEstimator,
        sampler: SamplerSpec,
    ) -> None:
        self.spec = spec
        self.estimator = estimator
        self.sampler = sampler
        self.label = spec.label()
        self.correction = None if spec.correction is None else correction_field(spec.correction)
        self.field = self._base_field()
        self._constant = self._base_constant()

    def _base_field(self) -> Any:
        base = self.spec.base
        if base in (LossEstimatorBase.SURE_KNOWN_VAR, LossEstimatorBase.UNBIASED_UNKNOWN_VAR):
            if self.spec.g is not None:
                return build_field(self.spec.g)
            return self.estimator.shrinkage
        if base is LossEstimatorBase.RESIDUAL_SHRINKAGE:
            if self.spec.g is not None:
                return build_field(self.spec.g)
            return self.estimator.residual_field(self.sampler.k)
        if base is LossEstimatorBase.POSTERIOR_RISK:
            m_spec = self.spec.m if self.spec.m is not None else self.estimator.spec.m
            if m_spec is None:
                raise MissingStatisticError("posterior_risk needs a marginal m")
            return build_field(m_spec)
        return None

    def _base_constant(self) -> Optional[float]:
        if self.spec.base is LossEstimatorBase.CONSTANT:
            return self.spec.value
        if self.spec.base is LossEstimatorBase.CONSTANT_SPHERICAL:
            value = expected_squared_radius(self.sampler)
            if not math.isfinite(value):
                raise UnsupportedDistributionError("the sampler has no finite second moment")
            return value
        return None

    @property
    def multiplier_kind(self) -> str:
        """Return the correction multiplier of the setting: '1', 'S' or '||U||^4'."""
        if self.spec.base is LossEstimatorBase.UNBIASED_UNKNOWN_VAR:
            return "S"
        if self.spec.base in (LossEstimatorBase.RESIDUAL_LS, LossEstimatorBase.RESIDUAL_SHRINKAGE):
            return "||U||^4"
        return "1"

    def base(
        self, x: np.ndarray, s: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Return the uncorrected estimate δ0."""
        base = self.spec.base
        n_shape = x.shape[:-1]
        if self._constant is not None:
            return np.full(n_shape, float(self._constant))
        if base is LossEstimatorBase.SURE_KNOWN_VAR:
            return sure_known_var(self.field, x, self.sampler.sigma2)
        if base is LossEstimatorBase.UNBIASED_UNKNOWN_VAR:
            if s is None:
                raise MissingStatisticError("unbiased_unknown_var needs the variance statistic s")
            return unbiased_loss_unknown_var(self.field, x, s, self.sampler.k)
        if base is LossEstimatorBase.POSTERIOR_RISK:
            return posterior_risk(self.field, x)
        if u is None:
            raise MissingStatisticError(f"{base.value} needs the residual vector u")
        if base is LossEstimatorBase.RESIDUAL_LS:
            return residual_unbiased_ls(u, x.shape[-1])
        return residual_unbiased_shrink(self.field, x, u)

    def multiplier(
        self, x: np.ndarray, s: Optional[np.ndarray] = None, u: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Return the per-draw correction multiplier."""
        kind = self.multiplier_kind
        if kind == "S":
            if s is None:
                raise MissingStatisticError("the correction multiplier needs s")
            return np.asarray(s, dtype=float)
        if kind == "||U||^4":
            if u is None:
                raise MissingStatisticError("the correction multiplier needs u")
            return _squared_norm(np.asarray(u, dtype=float)) ** 2
        return np.ones(x.shape[:-1])

    def __call__(
        self, x: Any, s: Optional[Any] = None, u: Optional[Any] = None
    ) -> np.ndarray:
        """Return δ at the observations."""
        points = np.asarray(x, dtype=float)
        stat = None if s is None else np.asarray(s, dtype=float)
        residual = None if u is None else np.asarray(u, dtype=float)
        delta = self.base(points, stat, residual)
        if self.correction is not None:
            delta = apply_correction(
                delta, self.correction.value(points), self.multiplier(points, stat, residual)
            )
        if self.spec.positive_part:
            delta = positive_part(delta)
        return delta


def build_loss_estimator(
    spec: LossEstimatorSpec,
    estimator_spec: EstimatorSpec,
    sampler_spec: SamplerSpec,
) -> LossEstimator:
    """Build the vectorized loss estimator of ``spec`` for an estimator and a setting."""
    return LossEstimator(spec, build_estimator(estimator_spec), sampler_spec)


__all__ = [
    "LossEstimator",
    "apply_correction",
    "build_loss_estimator",
    "constant_spherical_unbiased",
    "correction_field",
    "generalized_bayes_square",
    "invariant_loss",
    "location_second_moment",
    "loss_estimation_loss",
    "positive_part",
    "posterior_risk",
    "quadratic_loss",
    "residual_unbiased_ls",
    "residual_unbiased_shrink",
    "s_partial_norm2",
    "stein_type_loss",
    "sure_known_var",
    "theorem21_correction",
    "unbiased_loss_unknown_var",
    "unbiased_risk_bayes",
]

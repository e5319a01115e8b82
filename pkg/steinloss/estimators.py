"""Point estimators φ of θ in each distributional setting."""

from __future__ import annotations

import logging
from typing import Any, Optional, Union

import numpy as np

from . import calculus
from .const import SINGULAR_NORM
from .enums import EstimatorKind
from .exceptions import (
    InvalidMarginalError,
    MissingStatisticError,
    ShrinkageSingularityError,
)
from .fields import JointVectorField, ScalarField, VectorField, build_field
from .fields.shrinkage import (
    JamesSteinField,
    JamesSteinUnknownVariance,
    PseudoBayesShift,
    ZeroField,
)
from .models import EstimatorSpec, Observation

_LOGGER = logging.getLogger(__name__)

ShrinkageField = Union[VectorField, JointVectorField]


def _check_off_singularity(field: Any, x: np.ndarray) -> None:
    singular = field.singular_points(x.shape[-1])
    if singular.shape[0] == 0:
        return
    distance = np.linalg.norm(x[..., np.newaxis, :] - singular, axis=-1).min(axis=-1)
    if np.any(distance <= SINGULAR_NORM):
        raise ShrinkageSingularityError(f"{field.name} evaluated at its singularity")


def pseudo_bayes_shift(m: ScalarField, x: Any) -> np.ndarray:
    """Return ∇m(x)/m(x), the shift of the pseudo-Bayes estimator X + ∇m/m."""
    points = np.asarray(x, dtype=float)
    values = m.value(points)
    if np.any(values <= 0):
        raise InvalidMarginalError(f"marginal {m.name} is not positive at x")
    return calculus.gradient(m, points) / values[..., np.newaxis]


class PointEstimator:
    """Vectorized point estimator built from an ``EstimatorSpec``.

    The estimator is X + g(X) (known variance), X + S g(X, S) (unknown variance)
    or X + ||U||² g(X) (residual setting); ``shrinkage`` is that g.
    """

    def __init__(self, spec: EstimatorSpec) -> None:
        self.spec = spec
        self.label = spec.label()
        self.shrinkage = self._shrinkage_field(spec)

    @staticmethod
    def _shrinkage_field(spec: EstimatorSpec) -> ShrinkageField:
        if spec.kind is EstimatorKind.MLE:
            return ZeroField()
        if spec.kind is EstimatorKind.JAMES_STEIN:
            return JamesSteinField()
        if spec.kind is EstimatorKind.PSEUDO_BAYES:
            assert spec.m is not None
            marginal = build_field(spec.m)
            assert isinstance(marginal, ScalarField)
            return PseudoBayesShift(marginal)
        if spec.kind is EstimatorKind.JS_UNKNOWN_VAR:
            return JamesSteinUnknownVariance(k=spec.k)
        if spec.g is not None:
            field = build_field(spec.g)
            assert isinstance(field, VectorField)
            return field
        return _ResidualJamesStein(spec.k)

    @property
    def is_shrinkage(self) -> bool:
        """Whether the estimator moves X at all."""
        return not isinstance(self.shrinkage, ZeroField)

    def __call__(
        self, x: Any, s: Optional[Any] = None, u: Optional[Any] = None
    ) -> np.ndarray:
        """Evaluate φ at observations x (with s or u when the kind needs them)."""
        points = np.asarray(x, dtype=float)
        kind = self.spec.kind
        if kind is EstimatorKind.MLE:
            return points.copy()
        _check_off_singularity(self.shrinkage, points)
        if kind is EstimatorKind.JS_UNKNOWN_VAR:
            if s is None:
                raise MissingStatisticError("js_unknown_var needs the variance statistic s")
            stat = np.asarray(s, dtype=float)
            assert isinstance(self.shrinkage, JointVectorField)
            return points + stat[..., np.newaxis] * self.shrinkage.value(points, stat)
        if kind is EstimatorKind.RESIDUAL_SHRINKAGE:
            if u is None:
                raise MissingStatisticError("residual_shrinkage needs the residual vector u")
            residual = np.asarray(u, dtype=float)
            norm2 = np.einsum("...i,...i->...", residual, residual)
            if isinstance(self.shrinkage, _ResidualJamesStein):
                self.shrinkage.bind_k(residual.shape[-1])
            assert isinstance(self.shrinkage, VectorField)
            return points + norm2[..., np.newaxis] * self.shrinkage.value(points)
        assert isinstance(self.shrinkage, VectorField)
        return points + self.shrinkage.value(points)

    def residual_field(self, k: int) -> VectorField:
        """Return the residual-setting g with its default constant bound to ``k``."""
        if isinstance(self.shrinkage, _ResidualJamesStein):
            self.shrinkage.bind_k(k)
        assert isinstance(self.shrinkage, VectorField)
        return self.shrinkage


class _ResidualJamesStein(JamesSteinField):
    """g(x) = -a x/||x||² with the optimal a = (p - 2)/(k + 2)."""

    def __init__(self, k: Optional[int]) -> None:
        super().__init__()
        self.k = k
        self.name = "residual_js"

    def bind_k(self, k: int) -> None:
        if self.k is None:
            self.k = k

    def constant(self, p: int) -> float:
        if self.k is None:
            raise MissingStatisticError("residual shrinkage constant needs k")
        return (p - 2) / (self.k + 2)


def build_estimator(spec: EstimatorSpec) -> PointEstimator:
    """Build the vectorized estimator of ``spec``."""
    return PointEstimator(spec)


def estimate(spec: EstimatorSpec, obs: Observation) -> np.ndarray:
    """Return φ(obs) for a single observation."""
    return build_estimator(spec)(obs.x, obs.s, obs.u)

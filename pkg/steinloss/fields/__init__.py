"""This package contains the scalar and vector fields the estimators are built from.

Every field is vectorized: it accepts points of shape ``(..., p)`` and infers the
dimension ``p`` from the last axis. Analytic derivatives are optional; an
``analytic_*`` method returning ``None`` means the closed form is not available
and callers fall back to finite differences.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Mapping, Optional, Union

import numpy as np

from ..enums import FieldName
from ..exceptions import CalculusError, UnknownFieldError

_LOGGER = logging.getLogger(__name__)


def _as_points(x: Any) -> np.ndarray:
    points = np.asarray(x, dtype=float)
    if points.ndim == 0:
        raise CalculusError("fields are evaluated at points of R^p, got a scalar")
    return points


class ScalarField:
    """Scalar field f: R^p -> R."""

    name = "scalar"
    singular_at_origin = False

    def __call__(self, x: Any) -> np.ndarray:
        """Evaluate the field."""
        return self.value(_as_points(x))

    def value(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the field at points of shape (..., p)."""
        raise NotImplementedError

    def analytic_gradient(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Return the closed-form gradient, or None."""
        return None

    def analytic_laplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Return the closed-form Laplacian, or None."""
        return None

    def analytic_bilaplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Return the closed-form bi-Laplacian, or None."""
        return None

    def singular_order(self, p: int) -> float:
        """Return a with |f(x)| ~ ||x||^(-a) near the origin (0 when bounded)."""
        return 0.0

    def singular_points(self, p: int) -> np.ndarray:
        """Return the declared singular set as an array of shape (m, p)."""
        if self.singular_at_origin:
            return np.zeros((1, p))
        return np.zeros((0, p))

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.name}>"


class VectorField:
    """Vector field g: R^p -> R^p."""

    name = "vector"
    singular_at_origin = False

    def __call__(self, x: Any) -> np.ndarray:
        """Evaluate the field."""
        return self.value(_as_points(x))

    def value(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the field at points of shape (..., p)."""
        raise NotImplementedError

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Return the closed-form divergence, or None."""
        return None

    def singular_order(self, p: int) -> float:
        """Return b with ||g(x)|| ~ ||x||^(-b) near the origin (0 when bounded)."""
        return 0.0

    def singular_points(self, p: int) -> np.ndarray:
        """Return the declared singular set as an array of shape (m, p)."""
        if self.singular_at_origin:
            return np.zeros((1, p))
        return np.zeros((0, p))

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.name}>"


class JointVectorField:
    """Vector field g(x, s) on R^p x R+ used with a variance statistic s."""

    name = "joint_vector"
    singular_at_origin = False

    def __call__(self, x: Any, s: Any) -> np.ndarray:
        """Evaluate the field."""
        return self.value(_as_points(x), np.asarray(s, dtype=float))

    def value(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Evaluate at points x of shape (..., p) and s of shape (...)."""
        raise NotImplementedError

    def analytic_divergence(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        """Return div_x g(x, s) in closed form, or None."""
        return None

    def analytic_ds_norm2(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        """Return d/ds ||g(x, s)||^2 in closed form, or None."""
        return None

    def at(self, s: Any) -> VectorField:
        """Freeze s and return the section x -> g(x, s)."""
        return _FrozenSection(self, s)

    def singular_order(self, p: int) -> float:
        """Return the singular order in x near the origin."""
        return 0.0

    def singular_points(self, p: int) -> np.ndarray:
        """Return the declared singular set in x."""
        if self.singular_at_origin:
            return np.zeros((1, p))
        return np.zeros((0, p))

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.name}>"


class JointScalarField:
    """Scalar field h(x, s) on R^p x R+."""

    name = "joint_scalar"

    def __call__(self, x: Any, s: Any) -> np.ndarray:
        """Evaluate the field."""
        return self.value(_as_points(x), np.asarray(s, dtype=float))

    def value(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Evaluate at points x of shape (..., p) and s of shape (...)."""
        raise NotImplementedError

    def analytic_ds(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        """Return dh/ds in closed form, or None."""
        return None

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.name}>"


class _FrozenSection(VectorField):
    def __init__(self, field: JointVectorField, s: Any) -> None:
        self._field = field
        self._s = np.asarray(s, dtype=float)
        self.name = f"{field.name}|s"
        self.singular_at_origin = field.singular_at_origin

    def _s_like(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._s, x.shape[:-1])

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._field.value(x, self._s_like(x))

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        return self._field.analytic_divergence(x, self._s_like(x))

    def singular_order(self, p: int) -> float:
        return self._field.singular_order(p)


class FunctionField(ScalarField):
    """Scalar field wrapping a plain vectorized callable, without closed forms."""

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        name: str = "function",
        singular_at_origin: bool = False,
    ) -> None:
        self._func = func
        self.name = name
        self.singular_at_origin = singular_at_origin

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._func(x), dtype=float)


class FunctionVectorField(VectorField):
    """Vector field wrapping a plain vectorized callable, without closed forms."""

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        name: str = "function",
        singular_at_origin: bool = False,
    ) -> None:
        self._func = func
        self.name = name
        self.singular_at_origin = singular_at_origin

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._func(x), dtype=float)


AnyField = Union[ScalarField, VectorField, JointVectorField, JointScalarField]


def _resolve_nested(params: Mapping[str, Any]) -> dict[str, Any]:
    """Build nested field parameters given as ``{"name": ..., "params": ...}`` mappings."""
    resolved: dict[str, Any] = {}
    for key, value in params.items():
        if isinstance(value, Mapping) and "name" in value:
            resolved[key] = field_library(value["name"], value.get("params"))
        elif isinstance(value, (ScalarField, VectorField, JointVectorField)):
            resolved[key] = value
        elif hasattr(value, "name") and hasattr(value, "params"):
            resolved[key] = field_library(value.name, value.params)
        else:
            resolved[key] = value
    return resolved


def field_library(
    name: Union[str, FieldName], params: Optional[Mapping[str, Any]] = None
) -> AnyField:
    """Map a field name and its parameters to the field instance."""
    # pylint: disable=import-outside-toplevel,cyclic-import
    from .radial import (
        ConstantField,
        FundamentalHarmonic,
        GaussianField,
        norm_power,
        prior_shifted_power,
        shifted_norm_power,
    )
    from .shrinkage import (
        GradientField,
        JamesSteinField,
        JamesSteinUnknownVariance,
        LinearField,
        PseudoBayesShift,
        ScaledLinearJointField,
        SPowerField,
        ZeroField,
    )

    mapping: dict[FieldName, Callable[..., AnyField]] = {
        FieldName.CONSTANT: ConstantField,
        FieldName.FUNDAMENTAL_HARMONIC: FundamentalHarmonic,
        FieldName.NORM_POWER: norm_power,
        FieldName.SHIFTED_NORM_POWER: shifted_norm_power,
        FieldName.PRIOR_SHIFTED_POWER: prior_shifted_power,
        FieldName.GAUSSIAN: GaussianField,
        FieldName.JS_SHRINKAGE: JamesSteinField,
        FieldName.ZERO: ZeroField,
        FieldName.LINEAR: LinearField,
        FieldName.PSEUDO_BAYES_SHIFT: PseudoBayesShift,
        FieldName.GRADIENT: GradientField,
        FieldName.JS_UNKNOWN_VAR: JamesSteinUnknownVariance,
        FieldName.SCALED_LINEAR_S: ScaledLinearJointField,
        FieldName.S_POWER: SPowerField,
    }

    try:
        field_name = FieldName(name)
    except ValueError as exc:
        raise UnknownFieldError(f"unknown field: {name}") from exc

    factory = mapping[field_name]
    kwargs = _resolve_nested(params or {})
    try:
        field = factory(**kwargs)
    except TypeError as exc:
        raise CalculusError(f"invalid parameters for {field_name.value}: {exc}") from exc
    _LOGGER.debug("Built field %s with %s", field_name.value, kwargs)
    return field


def build_field(spec: Any) -> AnyField:
    """Build a field from a ``FieldSpec`` (or anything with ``name`` and ``params``)."""
    return field_library(spec.name, spec.params)


__all__ = [
    "AnyField",
    "FunctionField",
    "FunctionVectorField",
    "JointScalarField",
    "JointVectorField",
    "ScalarField",
    "VectorField",
    "build_field",
    "field_library",
]

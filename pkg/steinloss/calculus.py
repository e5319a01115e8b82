"""Differential operators on fields: central finite differences and analytic dispatch.

All operators are vectorized over points of shape ``(..., p)``. The default step is
``cbrt(eps) * max(1, ||x||)`` for first differences, ``eps**(1/4) * max(1, ||x||)``
for second differences and ``eps**(1/6) * max(1, ||x||)`` for the nested
fourth-order stencil. Weak differentiability (Sobolev membership) is assumed and
cannot be checked numerically; only pointwise smoothness off the declared
singular set is relied upon.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any, Optional, Union

import numpy as np

from .const import SINGULARITY_GUARD_STEPS
from .exceptions import StencilOnSingularityError
from .fields import FunctionField

if TYPE_CHECKING:
    from .fields import ScalarField, VectorField

_LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_STEP_BASE = {1: _EPS ** (1.0 / 3.0), 2: _EPS ** 0.25, 4: _EPS ** (1.0 / 6.0)}

# Nested stencils agree with closed forms to this relative tolerance.
BILAPLACIAN_STENCIL_TOLERANCE = 1e-3

Step = Union[float, np.ndarray, None]


def default_step(x: Any, order: int = 1) -> np.ndarray:
    """Return the default step for points ``x``, shaped (..., 1)."""
    points = np.asarray(x, dtype=float)
    scale = np.maximum(1.0, np.linalg.norm(points, axis=-1, keepdims=True))
    return _STEP_BASE[order] * scale


def _steps(x: np.ndarray, h: Step, order: int) -> np.ndarray:
    if h is None:
        return default_step(x, order)
    steps = np.asarray(h, dtype=float)
    if np.any(steps <= 0):
        raise ValueError("step size must be > 0")
    return np.broadcast_to(steps, x.shape[:-1] + (1,)) if steps.ndim == 0 else steps


def _check_stencil(field: Any, x: np.ndarray, h: np.ndarray, reach: float = 1.0) -> None:
    singular = field.singular_points(x.shape[-1])
    if singular.shape[0] == 0:
        return
    distance = np.linalg.norm(x[..., np.newaxis, :] - singular, axis=-1).min(axis=-1)
    guard = SINGULARITY_GUARD_STEPS * reach * h[..., 0]
    too_close = distance <= guard
    if np.any(too_close):
        offending = x[too_close][0]
        raise StencilOnSingularityError(
            f"stencil of {field.name} at {offending.tolist()} reaches its singular set"
        )


def _shifted(x: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return the forward and backward stencil points, shaped (..., p, p)."""
    offsets = h[..., np.newaxis] * np.eye(x.shape[-1])
    centre = x[..., np.newaxis, :]
    return centre + offsets, centre - offsets


def gradient_fd(f: ScalarField, x: Any, h: Step = None) -> np.ndarray:
    """Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / (2h)."""
    points = np.asarray(x, dtype=float)
    steps = _steps(points, h, 1)
    _check_stencil(f, points, steps)
    forward, backward = _shifted(points, steps)
    return (f.value(forward) - f.value(backward)) / (2.0 * steps)


def divergence_fd(g: VectorField, x: Any, h: Step = None) -> np.ndarray:
    """Central-difference divergence, the sum of the diagonal partial derivatives."""
    points = np.asarray(x, dtype=float)
    steps = _steps(points, h, 1)
    _check_stencil(g, points, steps)
    forward, backward = _shifted(points, steps)
    diagonal = np.diagonal(g.value(forward) - g.value(backward), axis1=-2, axis2=-1)
    return diagonal.sum(axis=-1) / (2.0 * steps[..., 0])


def laplacian_fd(f: ScalarField, x: Any, h: Step = None) -> np.ndarray:
    """Second-difference Laplacian sum_i (f(x + h e_i) - 2 f(x) + f(x - h e_i)) / h^2."""
    points = np.asarray(x, dtype=float)
    steps = _steps(points, h, 2)
    _check_stencil(f, points, steps)
    forward, backward = _shifted(points, steps)
    neighbours = (f.value(forward) + f.value(backward)).sum(axis=-1)
    centre = 2.0 * points.shape[-1] * f.value(points)
    return (neighbours - centre) / steps[..., 0] ** 2


def bilaplacian_fd(f: ScalarField, x: Any, h: Step = None) -> np.ndarray:
    """Bi-Laplacian as a Laplacian of the Laplacian.

    The analytic Laplacian is composed with one finite-difference Laplacian when
    the field provides it; otherwise two nested stencils with a common step are
    used and agreement is only expected to ``BILAPLACIAN_STENCIL_TOLERANCE``.
    """
    points = np.asarray(x, dtype=float)
    if f.analytic_laplacian(points) is not None:
        inner = FunctionField(
            f.analytic_laplacian,  # type: ignore[arg-type]
            name=f"laplacian({f.name})",
            singular_at_origin=f.singular_at_origin,
        )
        return laplacian_fd(inner, points, h)

    steps = _steps(points, h, 4)
    _check_stencil(f, points, steps, reach=2.0)
    forward, backward = _shifted(points, steps)
    p = points.shape[-1]
    inner_steps = steps[..., np.newaxis, :]
    neighbours = (
        laplacian_fd(f, forward, inner_steps) + laplacian_fd(f, backward, inner_steps)
    ).sum(axis=-1)
    centre = 2.0 * p * laplacian_fd(f, points, steps)
    return (neighbours - centre) / steps[..., 0] ** 2


def gradient(f: ScalarField, x: Any) -> np.ndarray:
    """Return the analytic gradient when available, else the central difference."""
    points = np.asarray(x, dtype=float)
    analytic = f.analytic_gradient(points)
    return analytic if analytic is not None else gradient_fd(f, points)


def divergence(g: VectorField, x: Any) -> np.ndarray:
    """Return the analytic divergence when available, else the central difference."""
    points = np.asarray(x, dtype=float)
    analytic = g.analytic_divergence(points)
    return analytic if analytic is not None else divergence_fd(g, points)


def laplacian(f: ScalarField, x: Any) -> np.ndarray:
    """Return the analytic Laplacian when available, else the second difference."""
    points = np.asarray(x, dtype=float)
    analytic = f.analytic_laplacian(points)
    return analytic if analytic is not None else laplacian_fd(f, points)


def bilaplacian(f: ScalarField, x: Any) -> np.ndarray:
    """Return the analytic bi-Laplacian when available, else ``bilaplacian_fd``."""
    points = np.asarray(x, dtype=float)
    analytic: Optional[np.ndarray] = f.analytic_bilaplacian(points)
    return analytic if analytic is not None else bilaplacian_fd(f, points)

"""Vector fields g used as shrinkage directions, and joint fields in (x, s)."""

from __future__ import annotations

import logging
from typing import Any, List, Optional, Sequence, Union

import numpy as np

from .. import calculus
from ..exceptions import CalculusError, InvalidMarginalError
from . import JointScalarField, JointVectorField, ScalarField, VectorField

_LOGGER = logging.getLogger(__name__)


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, x)


class ZeroField(VectorField):
    """g ≡ 0."""

    name = "zero"

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(x)

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        return np.zeros(x.shape[:-1])


class LinearField(VectorField):
    """g(x) = A (x - center), with A a matrix or a multiple of the identity."""

    name = "linear"

    def __init__(
        self,
        matrix: Optional[Sequence[Sequence[float]]] = None,
        scale: float = 1.0,
        center: Optional[Sequence[float]] = None,
    ) -> None:
        self.matrix = None if matrix is None else np.asarray(matrix, dtype=float)
        if self.matrix is not None and (
            self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]
        ):
            raise CalculusError("linear field matrix must be square")
        self.scale = float(scale)
        self.center = None if center is None else np.asarray(center, dtype=float)

    def _centred(self, x: np.ndarray) -> np.ndarray:
        return x if self.center is None else x - self.center

    def value(self, x: np.ndarray) -> np.ndarray:
        shifted = self._centred(x)
        if self.matrix is None:
            return self.scale * shifted
        return shifted @ self.matrix.T

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        trace = (
            self.scale * x.shape[-1] if self.matrix is None else float(np.trace(self.matrix))
        )
        return np.full(x.shape[:-1], trace)


class JamesSteinField(VectorField):
    """g(x) = -c x / ||x||^2, with c = p - 2 by default."""

    name = "js_shrinkage"
    singular_at_origin = True

    def __init__(self, c: Optional[float] = None) -> None:
        self.c = None if c is None else float(c)

    def constant(self, p: int) -> float:
        """Return the shrinkage constant for dimension p."""
        return float(p - 2) if self.c is None else self.c

    def value(self, x: np.ndarray) -> np.ndarray:
        c = self.constant(x.shape[-1])
        return -c * x / _squared_norm(x)[..., np.newaxis]

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        p = x.shape[-1]
        return -self.constant(p) * (p - 2) / _squared_norm(x)

    def singular_order(self, p: int) -> float:
        return 1.0


class GradientField(VectorField):
    """g = ∇f for a scalar field f."""

    name = "gradient"

    def __init__(self, f: ScalarField) -> None:
        self.f = f
        self.name = f"gradient({f.name})"
        self.singular_at_origin = f.singular_at_origin

    def value(self, x: np.ndarray) -> np.ndarray:
        return calculus.gradient(self.f, x)

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        return self.f.analytic_laplacian(x)

    def singular_order(self, p: int) -> float:
        order = self.f.singular_order(p)
        return order + 1.0 if order > 0 else 0.0


class PseudoBayesShift(VectorField):
    """g = ∇m / m for a positive (pseudo-)marginal m."""

    name = "pseudo_bayes_shift"

    def __init__(self, m: ScalarField) -> None:
        self.m = m
        self.name = f"pseudo_bayes_shift({m.name})"
        self.singular_at_origin = m.singular_at_origin

    def _marginal(self, x: np.ndarray) -> np.ndarray:
        values = self.m.value(x)
        if np.any(values <= 0):
            raise InvalidMarginalError(f"marginal {self.m.name} is not positive at x")
        return values

    def value(self, x: np.ndarray) -> np.ndarray:
        return calculus.gradient(self.m, x) / self._marginal(x)[..., np.newaxis]

    def analytic_divergence(self, x: np.ndarray) -> Optional[np.ndarray]:
        grad = self.m.analytic_gradient(x)
        lap = self.m.analytic_laplacian(x)
        if grad is None or lap is None:
            return None
        m = self._marginal(x)
        return lap / m - _squared_norm(grad) / m**2

    def singular_order(self, p: int) -> float:
        return 1.0 if self.m.singular_order(p) > 0 else 0.0


class SeparableJointField(JointVectorField):
    """g(x, s) = g(x), independent of s."""

    def __init__(self, g: VectorField) -> None:
        self.g = g
        self.name = g.name
        self.singular_at_origin = g.singular_at_origin

    def value(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        return self.g.value(x)

    def analytic_divergence(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        return calculus.divergence(self.g, x)

    def analytic_ds_norm2(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        return np.zeros(x.shape[:-1])

    def singular_order(self, p: int) -> float:
        return self.g.singular_order(p)


class JamesSteinUnknownVariance(SeparableJointField):
    """g(x, s) = -a x / ||x||^2 with a = (p - 2)/(k + 2) unless given."""

    name = "js_unknown_var"

    def __init__(self, a: Optional[float] = None, k: Optional[int] = None) -> None:
        if a is None and k is None:
            raise CalculusError("js_unknown_var requires either a or k")
        self.a = a
        self.k = k
        super().__init__(_UnknownVarianceShrinkage(self))
        self.name = "js_unknown_var"

    def constant(self, p: int) -> float:
        """Return the shrinkage constant a for dimension p."""
        if self.a is not None:
            return float(self.a)
        assert self.k is not None
        return (p - 2) / (self.k + 2)


class _UnknownVarianceShrinkage(JamesSteinField):
    def __init__(self, owner: JamesSteinUnknownVariance) -> None:
        super().__init__()
        self._owner = owner

    def constant(self, p: int) -> float:
        return self._owner.constant(p)


class ScaledLinearJointField(JointVectorField):
    """g(x, s) = c s x."""

    name = "scaled_linear_s"

    def __init__(self, c: float = 1.0) -> None:
        self.c = float(c)

    def value(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        return self.c * s[..., np.newaxis] * x

    def analytic_divergence(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        return self.c * s * x.shape[-1]

    def analytic_ds_norm2(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        return 2.0 * self.c**2 * s * _squared_norm(x)


class SPowerField(JointScalarField):
    """h(x, s) = s^q f(x), with f ≡ 1 when no factor is given."""

    name = "s_power"

    def __init__(self, q: float = 1.0, f: Optional[ScalarField] = None) -> None:
        self.q = float(q)
        self.f = f
        self.name = f"s^{self.q:g}" + ("" if f is None else f"*{f.name}")

    def _factor(self, x: np.ndarray) -> Union[np.ndarray, float]:
        return 1.0 if self.f is None else self.f.value(x)

    def value(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        return np.power(s, self.q) * self._factor(x)

    def analytic_ds(self, x: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
        if self.q == 0:
            return np.zeros_like(s * self._factor(x))
        return self.q * np.power(s, self.q - 1.0) * self._factor(x)


def as_joint(g: Any) -> JointVectorField:
    """Lift a vector field to a joint field that ignores s."""
    if isinstance(g, JointVectorField):
        return g
    if isinstance(g, VectorField):
        return SeparableJointField(g)
    raise CalculusError(f"{g!r} is not a vector field")


__all__: List[str] = [
    "GradientField",
    "JamesSteinField",
    "JamesSteinUnknownVariance",
    "LinearField",
    "PseudoBayesShift",
    "ScaledLinearJointField",
    "SeparableJointField",
    "SPowerField",
    "ZeroField",
    "as_joint",
]

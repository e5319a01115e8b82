"""Correction fields γ subtracted from a base loss estimate."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .. import calculus
from ..exceptions import InvalidMarginalError
from . import ScalarField


class ScaledField(ScalarField):
    """c * f for a scalar field f."""

    def __init__(self, field: ScalarField, factor: float) -> None:
        self.field = field
        self.factor = float(factor)
        self.name = f"{self.factor:g}*{field.name}"
        self.singular_at_origin = field.singular_at_origin

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.factor * self.field.value(x)

    def analytic_gradient(self, x: np.ndarray) -> Optional[np.ndarray]:
        grad = self.field.analytic_gradient(x)
        return None if grad is None else self.factor * grad

    def analytic_laplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        lap = self.field.analytic_laplacian(x)
        return None if lap is None else self.factor * lap

    def analytic_bilaplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        bilap = self.field.analytic_bilaplacian(x)
        return None if bilap is None else self.factor * bilap

    def singular_order(self, p: int) -> float:
        return self.field.singular_order(p)

    def singular_points(self, p: int) -> np.ndarray:
        return self.field.singular_points(p)


class SignLaplacianCorrection(ScalarField):
    """γ(x) = -α sgn(Δξ(x)) ξ(x) / m(x).

    The sign is locally constant off the zero set of Δξ, so the derivatives of γ
    are those of the quotient ξ/m scaled by -α sgn(Δξ).
    """

    def __init__(self, m: ScalarField, xi: ScalarField, alpha: float) -> None:
        self.m = m
        self.xi = xi
        self.alpha = float(alpha)
        self.name = f"-{self.alpha:g}*sgn(Δ{xi.name})*{xi.name}/{m.name}"
        self.singular_at_origin = m.singular_at_origin or xi.singular_at_origin

    def _marginal(self, x: np.ndarray) -> np.ndarray:
        values = self.m.value(x)
        if np.any(values == 0):
            raise InvalidMarginalError(f"marginal {self.m.name} vanishes at x")
        return values

    def sign(self, x: np.ndarray) -> np.ndarray:
        """Return sgn(Δξ(x))."""
        return np.sign(calculus.laplacian(self.xi, x))

    def _factor(self, x: np.ndarray) -> np.ndarray:
        return -self.alpha * self.sign(x)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._factor(x) * self.xi.value(x) / self._marginal(x)

    def analytic_gradient(self, x: np.ndarray) -> Optional[np.ndarray]:
        grad_xi = self.xi.analytic_gradient(x)
        grad_m = self.m.analytic_gradient(x)
        if grad_xi is None or grad_m is None:
            return None
        m = self._marginal(x)[..., np.newaxis]
        xi = self.xi.value(x)[..., np.newaxis]
        quotient = grad_xi / m - xi * grad_m / m**2
        return self._factor(x)[..., np.newaxis] * quotient

    def analytic_laplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        grad_xi = self.xi.analytic_gradient(x)
        grad_m = self.m.analytic_gradient(x)
        lap_xi = self.xi.analytic_laplacian(x)
        lap_m = self.m.analytic_laplacian(x)
        if grad_xi is None or grad_m is None or lap_xi is None or lap_m is None:
            return None
        m = self._marginal(x)
        xi = self.xi.value(x)
        cross = np.einsum("...i,...i->...", grad_xi, grad_m)
        grad_m2 = np.einsum("...i,...i->...", grad_m, grad_m)
        quotient = (
            lap_xi / m - 2.0 * cross / m**2 - xi * lap_m / m**2 + 2.0 * xi * grad_m2 / m**3
        )
        return self._factor(x) * quotient

    def singular_order(self, p: int) -> float:
        return max(self.xi.singular_order(p) - self.m.singular_order(p), 0.0)

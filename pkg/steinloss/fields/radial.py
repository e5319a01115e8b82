"""Radial scalar fields f(x) = F(||x||^2) with closed-form derivatives.

For a profile F of u = ||x||^2 on R^p the operators reduce to

    grad f = 2 F'(u) x
    Δf     = 4 u F''(u) + 2 p F'(u)
    Δ²f    = 4 u G''(u) + 2 p G'(u),   G = 4 u F'' + 2 p F'

so every radial family only has to provide the derivatives of its profile.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..exceptions import CalculusError
from . import ScalarField


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, x)


class RadialField(ScalarField):
    """Scalar field depending on x only through u = ||x||^2."""

    name = "radial"

    def profile(self, u: np.ndarray, order: int, p: int) -> np.ndarray:
        """Return the ``order``-th derivative of the profile F at u."""
        raise NotImplementedError

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.profile(_squared_norm(x), 0, x.shape[-1])

    def analytic_gradient(self, x: np.ndarray) -> Optional[np.ndarray]:
        first = self.profile(_squared_norm(x), 1, x.shape[-1])
        return 2.0 * first[..., np.newaxis] * x

    def analytic_laplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        p = x.shape[-1]
        u = _squared_norm(x)
        return 4.0 * u * self.profile(u, 2, p) + 2.0 * p * self.profile(u, 1, p)

    def analytic_bilaplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        p = x.shape[-1]
        u = _squared_norm(x)
        f2 = self.profile(u, 2, p)
        f3 = self.profile(u, 3, p)
        f4 = self.profile(u, 4, p)
        g1 = (4.0 + 2.0 * p) * f2 + 4.0 * u * f3
        g2 = (8.0 + 2.0 * p) * f3 + 4.0 * u * f4
        return 4.0 * u * g2 + 2.0 * p * g1


class ConstantField(RadialField):
    """f(x) = c."""

    name = "constant"

    def __init__(self, c: float = 1.0) -> None:
        self.c = float(c)

    def profile(self, u: np.ndarray, order: int, p: int) -> np.ndarray:
        if order == 0:
            return np.full_like(u, self.c, dtype=float)
        return np.zeros_like(u, dtype=float)


class ShiftedPowerField(RadialField):
    """f(x) = scale * (||x||^2 + shift)^(-b)."""

    name = "shifted_power"

    def __init__(self, b: float, shift: float = 0.0, scale: float = 1.0) -> None:
        if shift < 0:
            raise CalculusError("shift must be >= 0")
        self.b = float(b)
        self.shift = float(shift)
        self.scale = float(scale)

    def exponent(self, p: int) -> float:
        """Return the exponent b for dimension p."""
        return self.b

    @property
    def singular_at_origin(self) -> bool:  # type: ignore[override]
        if self.shift > 0:
            return False
        return not (self.b <= 0 and float(self.b).is_integer())

    def singular_order(self, p: int) -> float:
        b = self.exponent(p)
        if self.shift > 0 or b <= 0:
            return 0.0
        return 2.0 * b

    def profile(self, u: np.ndarray, order: int, p: int) -> np.ndarray:
        b = self.exponent(p)
        coefficient = self.scale
        for i in range(order):
            coefficient *= -b - i
        if coefficient == 0.0:
            return np.zeros_like(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return coefficient * np.power(u + self.shift, -b - order)


class FundamentalHarmonic(ShiftedPowerField):
    """m(x) = ||x||^(2-p), harmonic off the origin for p >= 3."""

    name = "fundamental_harmonic"

    def __init__(self, scale: float = 1.0) -> None:
        super().__init__(b=0.0, shift=0.0, scale=scale)

    def exponent(self, p: int) -> float:
        if p < 3:
            raise CalculusError("fundamental_harmonic requires p >= 3")
        return (p - 2) / 2.0

    @property
    def singular_at_origin(self) -> bool:  # type: ignore[override]
        return True

    def analytic_laplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        self.exponent(x.shape[-1])
        return np.zeros(x.shape[:-1])

    def analytic_bilaplacian(self, x: np.ndarray) -> Optional[np.ndarray]:
        self.exponent(x.shape[-1])
        return np.zeros(x.shape[:-1])


class GaussianField(RadialField):
    """f(x) = exp(-||x||^2 / (2 scale^2))."""

    name = "gaussian"

    def __init__(self, scale: float = 1.0) -> None:
        if scale <= 0:
            raise CalculusError("scale must be > 0")
        self.rate = 1.0 / (2.0 * float(scale) ** 2)

    def profile(self, u: np.ndarray, order: int, p: int) -> np.ndarray:
        return (-self.rate) ** order * np.exp(-self.rate * u)


def norm_power(a: float, scale: float = 1.0) -> ShiftedPowerField:
    """Return f(x) = scale * ||x||^(-a)."""
    field = ShiftedPowerField(b=a / 2.0, shift=0.0, scale=scale)
    field.name = "norm_power"
    return field


def shifted_norm_power(a: float, b: float, scale: float = 1.0) -> ShiftedPowerField:
    """Return ξ_b(x) = scale * (||x||^2 + a)^(-b)."""
    field = ShiftedPowerField(b=b, shift=a, scale=scale)
    field.name = "shifted_norm_power"
    return field


def prior_shifted_power(a: float, b: float) -> ShiftedPowerField:
    """Return π(θ) = (||θ||^2/2 + a)^(-b), i.e. 2^b (||θ||^2 + 2a)^(-b)."""
    field = ShiftedPowerField(b=b, shift=2.0 * a, scale=math.pow(2.0, b))
    field.name = "prior_shifted_power"
    return field

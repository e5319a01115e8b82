"""Random generation for the four distributional settings.

Seeding contract: replication i belongs to block i // block_size and the block
stream is ``Generator(Philox(SeedSequence(seed, spawn_key=(block,))))``. Within a
block the draws are taken in a fixed order:

* normal:             z (standard normal, n x p), then S = σ² χ²_k when k >= 1
* scale_mixture:      z (n x p), then ς ~ G (nothing is drawn for a point mass)
* radial_spherical:   direction (normalized standard normal, n x p), then R
* spherical_residual: direction (n x (p + k)), then R

Gamma variates use numpy's Marsaglia-Tsang sampler and chi-square variates its
gamma transform, so streams are reproducible within one numpy build.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import special

from .const import DEFAULT_BLOCK_SIZE, SINGULAR_NORM
from .enums import MixingKind, RadialKind, SamplerKind
from .exceptions import SamplerError, UnsupportedDistributionError
from .models import MixingSpec, RadialSpec, SamplerSpec
from .utils import block_generator, block_ranges

_LOGGER = logging.getLogger(__name__)


class Draws(BaseModel):
    """A batch of observations (x, optionally s or u) drawn at θ."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    theta: np.ndarray
    s: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    sigma2: float = 1.0
    redraws: int = 0

    @property
    def size(self) -> int:
        """Return the number of draws."""
        return int(self.x.shape[0])

    @classmethod
    def concatenate(cls, parts: List[Draws]) -> Draws:
        """Concatenate blocks in order."""
        first = parts[0]
        return cls(
            x=np.concatenate([part.x for part in parts]),
            theta=first.theta,
            s=None
            if first.s is None
            else np.concatenate([part.s for part in parts if part.s is not None]),
            u=None
            if first.u is None
            else np.concatenate([part.u for part in parts if part.u is not None]),
            sigma2=first.sigma2,
            redraws=sum(part.redraws for part in parts),
        )


def mixing_moment(mixing: MixingSpec, order: float) -> float:
    """Return E[ς^order] under G, ``inf`` when the moment diverges."""
    if mixing.kind is MixingKind.POINT_MASS:
        assert mixing.precision is not None
        return float(mixing.precision**order)
    if mixing.kind is MixingKind.TWO_POINT:
        assert mixing.precisions is not None and mixing.weight is not None
        first, second = mixing.precisions
        return float(mixing.weight * first**order + (1.0 - mixing.weight) * second**order)
    assert mixing.shape is not None and mixing.rate is not None
    if mixing.shape + order <= 0:
        return math.inf
    return math.exp(
        special.gammaln(mixing.shape + order)
        - special.gammaln(mixing.shape)
        - order * math.log(mixing.rate)
    )


def radial_second_moment(radial: RadialSpec, dim: Optional[int] = None) -> float:
    """Return E[R²] for a radial law in ``dim`` dimensions."""
    if radial.kind is RadialKind.FIXED:
        assert radial.radius is not None
        return radial.radius**2
    dof = radial.dof if radial.dof is not None else dim
    if dof is None:
        raise SamplerError("radial law needs its degrees of freedom or a dimension")
    if radial.kind is RadialKind.CHI:
        return dof * radial.scale**2
    assert radial.mixing is not None
    return dof * radial.scale**2 * mixing_moment(radial.mixing, -1.0)


def expected_squared_radius(spec: SamplerSpec) -> float:
    """Return E||X - θ||² under the sampler."""
    if spec.kind is SamplerKind.NORMAL:
        return spec.p * spec.sigma2
    if spec.kind is SamplerKind.SCALE_MIXTURE:
        assert spec.mixing is not None
        return spec.p * mixing_moment(spec.mixing, -1.0)
    radial = spec.resolved_radial
    assert radial is not None
    if spec.kind is SamplerKind.RADIAL_SPHERICAL:
        return radial_second_moment(radial, spec.p)
    return spec.p * radial_second_moment(radial, spec.p + spec.k) / (spec.p + spec.k)


def _precisions(rng: np.random.Generator, mixing: MixingSpec, size: int) -> np.ndarray:
    if mixing.kind is MixingKind.POINT_MASS:
        assert mixing.precision is not None
        return np.full(size, float(mixing.precision))
    if mixing.kind is MixingKind.TWO_POINT:
        assert mixing.precisions is not None and mixing.weight is not None
        first = rng.random(size) < mixing.weight
        return np.where(first, mixing.precisions[0], mixing.precisions[1])
    assert mixing.shape is not None and mixing.rate is not None
    return rng.gamma(mixing.shape, 1.0 / mixing.rate, size)


def _radii(rng: np.random.Generator, radial: RadialSpec, size: int) -> np.ndarray:
    if radial.kind is RadialKind.FIXED:
        assert radial.radius is not None
        return np.full(size, float(radial.radius))
    assert radial.dof is not None
    if radial.kind is RadialKind.CHI:
        return radial.scale * np.sqrt(rng.chisquare(radial.dof, size))
    assert radial.mixing is not None
    precision = _precisions(rng, radial.mixing, size)
    return radial.scale * np.sqrt(rng.chisquare(radial.dof, size) / precision)


def uniform_directions(rng: np.random.Generator, dim: int, size: int) -> np.ndarray:
    """Return ``size`` points uniform on the unit sphere of R^dim."""
    directions = rng.standard_normal((size, dim))
    norms = np.linalg.norm(directions, axis=1)
    degenerate = norms == 0.0
    while np.any(degenerate):
        directions[degenerate] = rng.standard_normal((int(degenerate.sum()), dim))
        norms = np.linalg.norm(directions, axis=1)
        degenerate = norms == 0.0
    return directions / norms[:, np.newaxis]


def _draw(spec: SamplerSpec, rng: np.random.Generator, size: int) -> Draws:
    theta = spec.theta_array
    p = spec.p
    if spec.kind is SamplerKind.NORMAL:
        z = rng.standard_normal((size, p))
        x = theta + z * math.sqrt(spec.sigma2)
        s = spec.sigma2 * rng.chisquare(spec.k, size) if spec.k > 0 else None
        return Draws(x=x, theta=theta, s=s, sigma2=spec.sigma2)
    if spec.kind is SamplerKind.SCALE_MIXTURE:
        assert spec.mixing is not None
        z = rng.standard_normal((size, p))
        precision = _precisions(rng, spec.mixing, size)
        x = theta + z * (1.0 / np.sqrt(precision))[:, np.newaxis]
        return Draws(x=x, theta=theta)
    radial = spec.resolved_radial
    assert radial is not None
    if spec.kind is SamplerKind.RADIAL_SPHERICAL:
        directions = uniform_directions(rng, p, size)
        x = theta + _radii(rng, radial, size)[:, np.newaxis] * directions
        return Draws(x=x, theta=theta)
    directions = uniform_directions(rng, p + spec.k, size)
    joint = _radii(rng, radial, size)[:, np.newaxis] * directions
    return Draws(x=theta + joint[:, :p], theta=theta, u=joint[:, p:])


def draw_block(
    spec: SamplerSpec, rng: np.random.Generator, size: int, reject_origin: bool = False
) -> Draws:
    """Draw one block; with ``reject_origin`` rows with x ≈ 0 are redrawn and counted."""
    draws = _draw(spec, rng, size)
    if not reject_origin:
        return draws
    redraws = 0
    singular = np.linalg.norm(draws.x, axis=1) <= SINGULAR_NORM
    while np.any(singular):
        count = int(singular.sum())
        redraws += count
        replacement = _draw(spec, rng, count)
        draws.x[singular] = replacement.x
        if draws.s is not None and replacement.s is not None:
            draws.s[singular] = replacement.s
        if draws.u is not None and replacement.u is not None:
            draws.u[singular] = replacement.u
        singular = np.linalg.norm(draws.x, axis=1) <= SINGULAR_NORM
    if redraws:
        _LOGGER.debug("Redrew %s singular draws", redraws)
    draws.redraws = redraws
    return draws


def sample(
    spec: SamplerSpec,
    n: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    reject_origin: bool = False,
) -> Draws:
    """Draw ``n`` observations, block by block, under the seeding contract."""
    parts = [
        draw_block(spec, block_generator(seed, block), stop - start, reject_origin)
        for block, start, stop in block_ranges(n, block_size)
    ]
    return Draws.concatenate(parts)


def sample_normal(
    spec: SamplerSpec, n: int, seed: int, block_size: int = DEFAULT_BLOCK_SIZE
) -> np.ndarray:
    """Return ``n`` i.i.d. draws of N(θ, σ² I_p)."""
    if spec.kind is not SamplerKind.NORMAL:
        raise SamplerError(f"sample_normal needs a normal spec, got {spec.kind.value}")
    return sample(spec, n, seed, block_size).x


def sample_scale_mixture(
    spec: SamplerSpec, n: int, seed: int, block_size: int = DEFAULT_BLOCK_SIZE
) -> np.ndarray:
    """Return ``n`` hierarchical draws ς ~ G, X | ς ~ N(θ, I/ς)."""
    if spec.kind is not SamplerKind.SCALE_MIXTURE:
        raise SamplerError(
            f"sample_scale_mixture needs a scale_mixture spec, got {spec.kind.value}"
        )
    return sample(spec, n, seed, block_size).x


def sample_spherical_residual(
    spec: SamplerSpec, n: int, seed: int, block_size: int = DEFAULT_BLOCK_SIZE
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``n`` draws (x, u) with (x - θ, u) = R V and V uniform on the (p + k)-sphere."""
    if spec.kind is not SamplerKind.SPHERICAL_RESIDUAL:
        raise SamplerError(
            f"sample_spherical_residual needs a spherical_residual spec, got {spec.kind.value}"
        )
    draws = sample(spec, n, seed, block_size)
    assert draws.u is not None
    return draws.x, draws.u


def sample_uniform_sphere(
    p: int,
    radius: float,
    center: Optional[np.ndarray],
    n: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> np.ndarray:
    """Return ``n`` points at distance ``radius`` from ``center`` in R^p."""
    if radius <= 0:
        raise SamplerError("radius must be > 0")
    origin = np.zeros(p) if center is None else np.asarray(center, dtype=float)
    parts = [
        origin + radius * uniform_directions(block_generator(seed, block), p, stop - start)
        for block, start, stop in block_ranges(n, block_size)
    ]
    return np.concatenate(parts)


def sample_variance_stat(
    sigma2: float, k: int, n: int, seed: int, block_size: int = DEFAULT_BLOCK_SIZE
) -> np.ndarray:
    """Return ``n`` i.i.d. draws of σ² χ²_k."""
    if k < 1:
        raise SamplerError("variance statistic requires k >= 1")
    if sigma2 <= 0:
        raise SamplerError("sigma2 must be > 0")
    parts = [
        sigma2 * block_generator(seed, block).chisquare(k, stop - start)
        for block, start, stop in block_ranges(n, block_size)
    ]
    return np.concatenate(parts)


def generating_function(spec: SamplerSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Return the density generator g with density(x) = g(||x - θ||²)."""
    p = spec.p
    if spec.kind is SamplerKind.NORMAL:
        return _normal_generator(p, spec.sigma2)
    if spec.kind is SamplerKind.SCALE_MIXTURE:
        assert spec.mixing is not None
        return _mixture_generator(p, spec.mixing, 1.0)
    if spec.kind is SamplerKind.RADIAL_SPHERICAL:
        radial = spec.resolved_radial
        assert radial is not None
        if radial.kind is RadialKind.FIXED:
            raise UnsupportedDistributionError("a fixed radius law has no density")
        if radial.dof != p:
            raise UnsupportedDistributionError(
                f"radial law with {radial.dof} dof does not induce a closed-form density in R^{p}"
            )
        if radial.kind is RadialKind.CHI:
            return _normal_generator(p, radial.scale**2)
        assert radial.mixing is not None
        return _mixture_generator(p, radial.mixing, radial.scale**2)
    raise UnsupportedDistributionError("generating functions cover the law of X alone")


def _normal_generator(p: int, sigma2: float) -> Callable[[np.ndarray], np.ndarray]:
    constant = (2.0 * math.pi * sigma2) ** (-p / 2.0)

    def generator(z: np.ndarray) -> np.ndarray:
        return constant * np.exp(-np.asarray(z, dtype=float) / (2.0 * sigma2))

    return generator


def _mixture_generator(
    p: int, mixing: MixingSpec, scale2: float
) -> Callable[[np.ndarray], np.ndarray]:
    half = p / 2.0
    if mixing.kind is MixingKind.GAMMA:
        assert mixing.shape is not None and mixing.rate is not None
        shape, rate = mixing.shape, mixing.rate
        log_constant = (
            -half * math.log(2.0 * math.pi * scale2)
            + shape * math.log(rate)
            + special.gammaln(shape + half)
            - special.gammaln(shape)
        )

        def gamma_generator(z: np.ndarray) -> np.ndarray:
            zz = np.asarray(z, dtype=float) / scale2
            return np.exp(log_constant - (shape + half) * np.log(rate + zz / 2.0))

        return gamma_generator

    if mixing.kind is MixingKind.POINT_MASS:
        assert mixing.precision is not None
        atoms = [(1.0, mixing.precision)]
    else:
        assert mixing.precisions is not None and mixing.weight is not None
        atoms = [
            (mixing.weight, mixing.precisions[0]),
            (1.0 - mixing.weight, mixing.precisions[1]),
        ]

    def atom_generator(z: np.ndarray) -> np.ndarray:
        zz = np.asarray(z, dtype=float) / scale2
        total = np.zeros_like(zz)
        for weight, precision in atoms:
            total = total + weight * (precision / (2.0 * math.pi * scale2)) ** half * np.exp(
                -precision * zz / 2.0
            )
        return total

    return atom_generator

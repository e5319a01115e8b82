"""Tests for the samplers and their seeding contract."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from steinloss.exceptions import SamplerError, UnsupportedDistributionError
from steinloss.models import MixingSpec, RadialSpec, SamplerSpec
from steinloss.samplers import (
    Draws,
    expected_squared_radius,
    generating_function,
    mixing_moment,
    radial_second_moment,
    sample,
    sample_normal,
    sample_scale_mixture,
    sample_spherical_residual,
    sample_uniform_sphere,
    sample_variance_stat,
)

T6 = MixingSpec.student_t(6.0)


def test_sample_is_reproducible() -> None:
    spec = SamplerSpec(p=3, k=2)
    first = sample(spec, 100, seed=5, block_size=16)
    again = sample(spec, 100, seed=5, block_size=16)
    other = sample(spec, 100, seed=6, block_size=16)
    np.testing.assert_array_equal(first.x, again.x)
    np.testing.assert_array_equal(first.s, again.s)
    assert not np.allclose(first.x, other.x)
    assert first.size == 100
    assert first.s is not None and first.s.shape == (100,)


def test_normal_moments() -> None:
    spec = SamplerSpec(p=3, theta=[1.0, 2.0, 3.0], sigma2=2.0, k=4)
    draws = sample(spec, 20_000, seed=1)
    np.testing.assert_allclose(draws.x.mean(axis=0), [1.0, 2.0, 3.0], atol=0.05)
    np.testing.assert_allclose(draws.x.var(axis=0), 2.0, rtol=0.05)
    assert draws.s is not None
    assert draws.s.mean() == pytest.approx(8.0, rel=0.03)
    assert draws.sigma2 == 2.0


def test_scale_mixture_matches_student_t_second_moment() -> None:
    spec = SamplerSpec(kind="scale_mixture", p=4, mixing=T6)
    x = sample_scale_mixture(spec, 40_000, seed=3)
    # E||X||² = p ν / (ν - 2)
    assert np.mean(np.sum(x**2, axis=1)) == pytest.approx(6.0, rel=0.05)
    assert expected_squared_radius(spec) == pytest.approx(6.0)


def test_spherical_residual_with_fixed_radius() -> None:
    spec = SamplerSpec(
        kind="spherical_residual", p=3, k=2, theta=[1.0, 0.0, 0.0], radial=RadialSpec.fixed(2.0)
    )
    x, u = sample_spherical_residual(spec, 500, seed=9)
    assert u.shape == (500, 2)
    radius = np.sqrt(np.sum((x - spec.theta_array) ** 2, axis=1) + np.sum(u**2, axis=1))
    np.testing.assert_allclose(radius, 2.0)
    assert expected_squared_radius(spec) == pytest.approx(3 * 4.0 / 5)


def test_radial_spherical_chi_is_normal() -> None:
    spec = SamplerSpec(kind="radial_spherical", p=5, radial=RadialSpec.chi())
    draws = sample(spec, 20_000, seed=2)
    np.testing.assert_allclose(draws.x.var(axis=0), 1.0, rtol=0.06)
    assert expected_squared_radius(spec) == pytest.approx(5.0)


def test_sample_uniform_sphere() -> None:
    center = np.array([1.0, -1.0, 2.0])
    points = sample_uniform_sphere(3, 1.5, center, 200, seed=4, block_size=64)
    np.testing.assert_allclose(np.linalg.norm(points - center, axis=1), 1.5)
    with pytest.raises(SamplerError):
        sample_uniform_sphere(3, 0.0, None, 10, seed=4)


def test_sample_variance_stat() -> None:
    s = sample_variance_stat(0.5, 6, 20_000, seed=8)
    assert s.mean() == pytest.approx(3.0, rel=0.03)
    with pytest.raises(SamplerError):
        sample_variance_stat(1.0, 0, 10, seed=8)
    with pytest.raises(SamplerError):
        sample_variance_stat(0.0, 2, 10, seed=8)


def test_typed_samplers_check_their_kind() -> None:
    normal = SamplerSpec(p=2)
    assert sample_normal(normal, 10, seed=1).shape == (10, 2)
    with pytest.raises(SamplerError):
        sample_scale_mixture(normal, 10, seed=1)
    with pytest.raises(SamplerError):
        sample_spherical_residual(normal, 10, seed=1)
    with pytest.raises(SamplerError):
        sample_normal(SamplerSpec(kind="scale_mixture", p=2, mixing=T6), 10, seed=1)


def test_draws_concatenate() -> None:
    theta = np.zeros(2)
    parts = [
        Draws(x=np.ones((2, 2)), theta=theta, s=np.ones(2), redraws=1),
        Draws(x=np.zeros((3, 2)), theta=theta, s=np.zeros(3), redraws=2),
    ]
    merged = Draws.concatenate(parts)
    assert merged.size == 5
    assert merged.redraws == 3
    assert merged.s is not None and merged.s.tolist() == [1.0, 1.0, 0.0, 0.0, 0.0]
    assert merged.u is None


def test_mixing_moments() -> None:
    assert mixing_moment(MixingSpec.point_mass(2.0), -1.0) == pytest.approx(0.5)
    two_point = MixingSpec.two_point(1.0, 4.0, weight=0.25)
    assert mixing_moment(two_point, 1.0) == pytest.approx(0.25 + 3.0)
    assert mixing_moment(T6, -1.0) == pytest.approx(1.5)
    assert mixing_moment(T6, 1.0) == pytest.approx(1.0)
    assert math.isinf(mixing_moment(MixingSpec.gamma(1.0, 1.0), -1.0))


def test_radial_second_moment() -> None:
    assert radial_second_moment(RadialSpec.fixed(3.0)) == 9.0
    assert radial_second_moment(RadialSpec.chi(scale=2.0), dim=5) == pytest.approx(20.0)
    induced = RadialSpec.mixture_induced(T6)
    assert radial_second_moment(induced, dim=4) == pytest.approx(6.0)
    with pytest.raises(SamplerError):
        radial_second_moment(RadialSpec.chi())


def test_generating_functions() -> None:
    z = np.array([0.0, 0.5, 2.0])
    normal = generating_function(SamplerSpec(p=1, sigma2=2.0))
    np.testing.assert_allclose(normal(z), stats.norm.pdf(np.sqrt(z), scale=math.sqrt(2.0)))

    student = generating_function(SamplerSpec(kind="scale_mixture", p=1, mixing=T6))
    np.testing.assert_allclose(student(z), stats.t.pdf(np.sqrt(z), df=6.0))

    point = generating_function(
        SamplerSpec(kind="scale_mixture", p=3, mixing=MixingSpec.point_mass(1.0))
    )
    np.testing.assert_allclose(point(z), generating_function(SamplerSpec(p=3))(z))

    chi = generating_function(
        SamplerSpec(kind="radial_spherical", p=3, radial=RadialSpec.chi(scale=2.0))
    )
    np.testing.assert_allclose(chi(z), generating_function(SamplerSpec(p=3, sigma2=4.0))(z))


def test_generating_function_unsupported() -> None:
    with pytest.raises(UnsupportedDistributionError):
        generating_function(
            SamplerSpec(kind="radial_spherical", p=3, radial=RadialSpec.fixed(1.0))
        )
    with pytest.raises(UnsupportedDistributionError):
        generating_function(
            SamplerSpec(kind="radial_spherical", p=3, radial=RadialSpec.chi(dof=5))
        )
    with pytest.raises(UnsupportedDistributionError):
        generating_function(
            SamplerSpec(kind="spherical_residual", p=3, k=1, radial=RadialSpec.chi())
        )


@pytest.mark.parametrize(
    ("radial", "coordinate_variance"),
    [(RadialSpec.fixed(2.0), 4.0 / 7.0), (RadialSpec.chi(), 1.0)],
    ids=["fixed", "chi"],
)
def test_spherical_residual_is_centred_and_uncorrelated(
    radial: RadialSpec, coordinate_variance: float
) -> None:
    spec = SamplerSpec(
        kind="spherical_residual", p=4, k=3, theta=[1.0, -2.0, 0.5, 0.0], radial=radial
    )
    x, u = sample_spherical_residual(spec, 40_000, seed=12)
    joint = np.column_stack([x - spec.theta_array, u])
    np.testing.assert_allclose(x.mean(axis=0), spec.theta_array, atol=0.03)
    np.testing.assert_allclose(u.mean(axis=0), 0.0, atol=0.03)
    # E[R²]/(p + k) on the diagonal, zero off it
    second = joint.T @ joint / joint.shape[0]
    np.testing.assert_allclose(second, coordinate_variance * np.eye(7), atol=0.04)


def test_uniform_sphere_is_centred_and_uncorrelated() -> None:
    center = np.array([1.0, 0.0, -1.0, 2.0, 0.5])
    points = sample_uniform_sphere(5, 1.5, center, 40_000, seed=13)
    offsets = points - center
    np.testing.assert_allclose(points.mean(axis=0), center, atol=0.02)
    second = offsets.T @ offsets / offsets.shape[0]
    np.testing.assert_allclose(second, 1.5**2 / 5 * np.eye(5), atol=0.02)

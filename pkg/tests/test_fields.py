"""Tests for the field library."""

from __future__ import annotations

import numpy as np
import pytest

from steinloss import calculus
from steinloss.exceptions import CalculusError, InvalidMarginalError, UnknownFieldError
from steinloss.fields import build_field, field_library
from steinloss.fields.corrections import ScaledField, SignLaplacianCorrection
from steinloss.fields.radial import (
    ConstantField,
    FundamentalHarmonic,
    ShiftedPowerField,
    norm_power,
    prior_shifted_power,
    shifted_norm_power,
)
from steinloss.fields.shrinkage import (
    GradientField,
    JamesSteinField,
    JamesSteinUnknownVariance,
    LinearField,
    PseudoBayesShift,
    ScaledLinearJointField,
    SeparableJointField,
    SPowerField,
    ZeroField,
    as_joint,
)
from steinloss.models import FieldSpec

X5 = np.array([[1.0, 1.0, 0.0, 0.0, 0.0], [0.5, -2.0, 1.0, 0.3, -0.4]])


def test_norm_power_value_and_laplacian() -> None:
    field = norm_power(2.0)
    x = np.array([3.0, 4.0, 0.0])
    assert field(x) == pytest.approx(0.04)
    # Δ||x||^(-a) = a (a + 2 - p) ||x||^(-a-2)
    assert field.analytic_laplacian(x) == pytest.approx(2.0 / 625.0)
    assert field.singular_at_origin
    assert field.singular_order(3) == 2.0


@pytest.mark.parametrize("a", [1.0, 3.0, 5.0])
def test_norm_power_bilaplacian_matches_formula(a: float) -> None:
    p = 5
    x = X5[1]
    r2 = float(x @ x)
    lap = a * (a + 2 - p)
    bilap = lap * (a + 2) * (a + 4 - p)
    assert norm_power(a).analytic_bilaplacian(x) == pytest.approx(bilap * r2 ** (-(a + 4) / 2))


def test_nonnegative_even_powers_are_regular() -> None:
    assert not norm_power(-2.0).singular_at_origin
    assert not shifted_norm_power(1.0, 2.0).singular_at_origin
    assert ShiftedPowerField(b=0.5).singular_at_origin
    with pytest.raises(CalculusError):
        ShiftedPowerField(b=1.0, shift=-1.0)


def test_fundamental_harmonic_is_harmonic() -> None:
    field = FundamentalHarmonic()
    np.testing.assert_allclose(field.analytic_laplacian(X5), 0.0)
    np.testing.assert_allclose(calculus.laplacian_fd(field, X5), 0.0, atol=1e-5)
    assert field(X5[0]) == pytest.approx(2.0 ** -1.5)
    with pytest.raises(CalculusError):
        field(np.ones(2))


def test_prior_shifted_power_scaling() -> None:
    field = prior_shifted_power(a=1.0, b=1.0)
    assert field(np.zeros(4)) == pytest.approx(1.0)
    theta = np.array([2.0, 0.0, 0.0, 0.0])
    assert field(theta) == pytest.approx(1.0 / (2.0 + 1.0))


def test_constant_field() -> None:
    field = ConstantField(3.0)
    assert field(X5).tolist() == [3.0, 3.0]
    np.testing.assert_allclose(field.analytic_laplacian(X5), 0.0)


def test_james_stein_divergence() -> None:
    field = JamesSteinField()
    r2 = np.einsum("ij,ij->i", X5, X5)
    np.testing.assert_allclose(field(X5), -3.0 * X5 / r2[:, None])
    np.testing.assert_allclose(field.analytic_divergence(X5), -9.0 / r2)
    assert JamesSteinField(c=1.5).constant(5) == 1.5


def test_linear_field() -> None:
    field = LinearField(scale=2.0, center=[1.0, 0.0])
    np.testing.assert_allclose(field(np.array([3.0, 1.0])), [4.0, 2.0])
    assert field.analytic_divergence(np.zeros(2)) == pytest.approx(4.0)
    matrix = LinearField(matrix=[[1.0, 2.0], [0.0, 3.0]])
    np.testing.assert_allclose(matrix(np.array([1.0, 1.0])), [3.0, 3.0])
    assert matrix.analytic_divergence(np.zeros(2)) == pytest.approx(4.0)
    with pytest.raises(CalculusError):
        LinearField(matrix=[[1.0, 2.0]])


def test_zero_and_gradient_fields() -> None:
    np.testing.assert_allclose(ZeroField()(X5), 0.0)
    gradient = GradientField(norm_power(-2.0))
    np.testing.assert_allclose(gradient(X5), 2.0 * X5)
    np.testing.assert_allclose(gradient.analytic_divergence(X5), 10.0)


def test_pseudo_bayes_shift_of_harmonic_is_james_stein() -> None:
    shift = PseudoBayesShift(FundamentalHarmonic())
    np.testing.assert_allclose(shift(X5), JamesSteinField()(X5))
    np.testing.assert_allclose(
        shift.analytic_divergence(X5), JamesSteinField().analytic_divergence(X5)
    )


def test_pseudo_bayes_shift_rejects_nonpositive_marginal() -> None:
    with pytest.raises(InvalidMarginalError):
        PseudoBayesShift(ConstantField(-1.0))(X5)


def test_joint_fields() -> None:
    g = JamesSteinUnknownVariance(k=3)
    assert g.constant(5) == pytest.approx(0.6)
    s = np.array([2.0, 4.0])
    np.testing.assert_allclose(g(X5, s), 0.2 * JamesSteinField()(X5))
    np.testing.assert_allclose(g.analytic_ds_norm2(X5, s), 0.0)
    with pytest.raises(CalculusError):
        JamesSteinUnknownVariance()

    scaled = ScaledLinearJointField(c=0.5)
    np.testing.assert_allclose(scaled(X5, s), 0.5 * s[:, None] * X5)
    r2 = np.einsum("ij,ij->i", X5, X5)
    np.testing.assert_allclose(scaled.analytic_ds_norm2(X5, s), 0.5 * s * r2)

    section = scaled.at(2.0)
    np.testing.assert_allclose(section(X5), X5)
    np.testing.assert_allclose(section.analytic_divergence(X5), 5.0)


def test_s_power_field() -> None:
    h = SPowerField(q=2.0, f=norm_power(-2.0))
    s = np.array([3.0, 1.0])
    r2 = np.einsum("ij,ij->i", X5, X5)
    np.testing.assert_allclose(h(X5, s), s**2 * r2)
    np.testing.assert_allclose(h.analytic_ds(X5, s), 2.0 * s * r2)
    np.testing.assert_allclose(SPowerField(q=0.0).analytic_ds(X5, s), 0.0)


def test_as_joint() -> None:
    joint = as_joint(JamesSteinField())
    assert isinstance(joint, SeparableJointField)
    assert as_joint(joint) is joint
    with pytest.raises(CalculusError):
        as_joint(norm_power(1.0))


def test_scaled_field() -> None:
    field = ScaledField(norm_power(2.0), -3.0)
    x = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
    assert field(x) == pytest.approx(-0.6)
    assert field.analytic_laplacian(x) == pytest.approx(-3.0 * 2.0 * (-1.0) / 25.0)
    assert field.singular_at_origin


def test_sign_laplacian_correction_reproduces_james_stein_correction() -> None:
    """-α sgn(Δξ) ξ/m with m = ||x||^(2-p), ξ = ||x||^(-p) is -α/||x||^2."""
    gamma = SignLaplacianCorrection(FundamentalHarmonic(), norm_power(5.0), alpha=10.0)
    x = X5[0]
    assert gamma.sign(x) == 1.0
    assert gamma(x) == pytest.approx(-5.0)
    np.testing.assert_allclose(gamma.analytic_gradient(x), 20.0 * x / 4.0)
    # Δ(-α ||x||^-2) = 2α ||x||^-4 for p = 5
    assert gamma.analytic_laplacian(x) == pytest.approx(5.0)
    assert calculus.laplacian_fd(gamma, x) == pytest.approx(5.0, rel=1e-4)


def test_field_library_lookup() -> None:
    assert isinstance(field_library("js-shrinkage"), JamesSteinField)
    assert isinstance(field_library("Fundamental Harmonic"), FundamentalHarmonic)
    power = field_library("norm_power", {"a": 2})
    assert power(np.array([2.0, 0.0])) == pytest.approx(0.25)

    nested = field_library("gradient", {"f": {"name": "norm_power", "params": {"a": -2}}})
    np.testing.assert_allclose(nested(np.array([1.0, 2.0])), [2.0, 4.0])

    built = build_field(FieldSpec(name="shifted_norm_power", params={"a": 1.0, "b": 1.0}))
    assert built(np.zeros(3)) == pytest.approx(1.0)


def test_field_library_errors() -> None:
    with pytest.raises(UnknownFieldError):
        field_library("no_such_field")
    with pytest.raises(CalculusError):
        field_library("constant", {"bogus": 1.0})

"""Tests for the point estimators."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import ortho_group

from steinloss.enums import EstimatorKind
from steinloss.estimators import build_estimator, estimate, pseudo_bayes_shift
from steinloss.exceptions import (
    InvalidMarginalError,
    MissingStatisticError,
    ShrinkageSingularityError,
)
from steinloss.fields.radial import ConstantField, FundamentalHarmonic
from steinloss.models import EstimatorSpec, Observation

X = np.array([[1.0, 1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0, 0.0]])


def test_mle_returns_a_copy() -> None:
    estimator = build_estimator(EstimatorSpec())
    result = estimator(X)
    np.testing.assert_array_equal(result, X)
    assert result is not X
    assert not estimator.is_shrinkage


def test_james_stein() -> None:
    estimator = build_estimator(EstimatorSpec(kind=EstimatorKind.JAMES_STEIN))
    # x (1 - (p - 2)/||x||²)
    np.testing.assert_allclose(estimator(X), [[-0.5, -0.5, 0, 0, 0], [0.5, 0, 0, 0, 0]])
    assert estimator.is_shrinkage
    with pytest.raises(ShrinkageSingularityError):
        estimator(np.zeros(5))


def test_james_stein_unknown_variance() -> None:
    estimator = build_estimator(EstimatorSpec(kind="js_unknown_var", k=3))
    s = np.array([2.0, 4.0])
    # a = (p - 2)/(k + 2) = 0.6, φ = x (1 - a s/||x||²)
    np.testing.assert_allclose(estimator(X, s=s), [[0.4, 0.4, 0, 0, 0], [0.8, 0, 0, 0, 0]])
    with pytest.raises(MissingStatisticError):
        estimator(X)


def test_residual_shrinkage_binds_k_from_u() -> None:
    estimator = build_estimator(EstimatorSpec(kind="residual_shrinkage"))
    u = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])
    # a = (p - 2)/(k + 2) = 0.5, φ = x (1 - a ||u||²/||x||²)
    np.testing.assert_allclose(estimator(X, u=u), [[0.75, 0.75, 0, 0, 0], [1.0, 0, 0, 0, 0]])
    assert estimator.residual_field(4).constant(5) == pytest.approx(0.5)
    with pytest.raises(MissingStatisticError):
        estimator(X)


def test_residual_shrinkage_with_explicit_field() -> None:
    g = {"name": "js_shrinkage", "params": {"c": 1.0}}
    estimator = build_estimator(EstimatorSpec(kind="residual_shrinkage", g=g))
    u = np.array([[1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(estimator(X, u=u), [[0.5, 0.5, 0, 0, 0], [1.0, 0, 0, 0, 0]])


def test_pseudo_bayes_with_harmonic_marginal_is_james_stein() -> None:
    bayes = build_estimator(EstimatorSpec(kind="pseudo_bayes", m="fundamental_harmonic"))
    stein = build_estimator(EstimatorSpec(kind="james_stein"))
    np.testing.assert_allclose(bayes(X), stein(X))
    assert bayes.label == "pseudo_bayes[fundamental_harmonic]"


def test_pseudo_bayes_shift_function() -> None:
    shift = pseudo_bayes_shift(FundamentalHarmonic(), X)
    np.testing.assert_allclose(shift, -3.0 * X / np.array([[2.0], [4.0]]))
    with pytest.raises(InvalidMarginalError):
        pseudo_bayes_shift(ConstantField(0.0), X)


def test_estimate_single_observation() -> None:
    spec = EstimatorSpec(kind="js_unknown_var", k=3)
    obs = Observation(x=[1.0, 1.0, 0.0, 0.0, 0.0], s=2.0)
    np.testing.assert_allclose(estimate(spec, obs), [0.4, 0.4, 0.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "spec",
    [
        EstimatorSpec(kind="james_stein"),
        EstimatorSpec(kind="pseudo_bayes", m="fundamental_harmonic"),
        EstimatorSpec(
            kind="pseudo_bayes", m={"name": "shifted_norm_power", "params": {"a": 1, "b": 2}}
        ),
        EstimatorSpec(kind="js_unknown_var", k=3),
        EstimatorSpec(kind="residual_shrinkage", k=4),
    ],
    ids=lambda spec: spec.label(),
)
def test_estimators_commute_with_rotations(spec: EstimatorSpec) -> None:
    rng = np.random.default_rng(17)
    x = rng.standard_normal((6, 5)) + 1.0
    s = rng.chisquare(3, 6)
    u = rng.standard_normal((6, 4))
    rotation = ortho_group.rvs(dim=5, random_state=3)
    residual_rotation = ortho_group.rvs(dim=4, random_state=4)
    estimator = build_estimator(spec)

    expected = estimator(x, s, u) @ rotation.T
    np.testing.assert_allclose(estimator(x @ rotation.T, s, u), expected, atol=1e-10)
    # the residual only enters through ||u||
    np.testing.assert_allclose(
        estimator(x @ rotation.T, s, u @ residual_rotation.T), expected, atol=1e-10
    )
    for row in range(2):
        obs = Observation(x=rotation @ x[row], s=float(s[row]), u=u[row])
        np.testing.assert_allclose(estimate(spec, obs), expected[row], atol=1e-10)

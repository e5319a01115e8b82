"""Tests for the canonical form, degrees of freedom and Cp* ridge selection."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from steinloss.cli import BUNDLED_FIXTURE
from steinloss.const import CpColumn
from steinloss.exceptions import (
    DataFormatError,
    DegenerateResidualError,
    InvalidPenaltyError,
    RankDeficientError,
    Sigma2DependenceWarning,
    SteinDomainError,
)
from steinloss.model_selection import (
    INTERCEPT,
    LinearModelData,
    canonical_transform,
    cp_star,
    df_divergence,
    df_linear,
    kfold_prediction_error,
    ridge_fit,
    ridge_study,
    select,
    sigma2_unbiased,
    smoother_matrix,
    sure_prediction_error,
)

DESIGN = np.array(
    [[0.0, 1.0], [1.0, 0.5], [2.0, -1.0], [3.0, 0.0], [4.0, 2.0], [5.0, 1.5], [6.0, -0.5]]
)
Y = np.array([1.2, 1.9, 3.4, 3.8, 6.1, 6.4, 7.7])


@pytest.fixture(name="data")
def fixture_data() -> LinearModelData:
    return LinearModelData(y=Y, design=DESIGN, intercept=True)


@pytest.fixture(name="fixture")
def fixture_bundled() -> LinearModelData:
    return LinearModelData.from_csv(BUNDLED_FIXTURE)


def _least_squares_rss(data: LinearModelData) -> float:
    coef, *_ = np.linalg.lstsq(data.v, data.y, rcond=None)
    residual = data.y - data.v @ coef
    return float(residual @ residual)


def test_linear_model_data(data: LinearModelData) -> None:
    assert (data.n, data.p) == (7, 3)
    assert data.names == [INTERCEPT, "x0", "x1"]
    np.testing.assert_array_equal(data.v[:, 0], np.ones(7))
    subset = data.subset(np.arange(4))
    assert subset.n == 4 and subset.intercept
    with pytest.raises(ValidationError):
        LinearModelData(y=Y[:2], design=DESIGN[:2], intercept=True)
    with pytest.raises(ValidationError):
        LinearModelData(y=Y, design=DESIGN, column_names=["a"])


def test_canonical_transform(data: LinearModelData) -> None:
    form = canonical_transform(data)
    assert form.x.shape == (3,)
    assert form.u.shape == (4,)
    rotation = np.vstack([form.basis, form.complement])
    np.testing.assert_allclose(rotation @ rotation.T, np.eye(7), atol=1e-12)
    np.testing.assert_allclose(form.x @ form.x + form.rss, Y @ Y)
    assert form.rss == pytest.approx(_least_squares_rss(data))
    assert np.all(np.diag(form.r) > 0)
    np.testing.assert_allclose(form.basis.T @ form.r, data.v[:, form.permutation], atol=1e-12)
    # the complement is orthogonal to every column of V
    np.testing.assert_allclose(form.complement @ data.v, 0.0, atol=1e-12)


def test_canonical_transform_rank_deficient() -> None:
    design = np.column_stack([DESIGN[:, 0], np.zeros(7)])
    with pytest.raises(RankDeficientError):
        canonical_transform(LinearModelData(y=Y, design=design))


def test_sigma2_unbiased(data: LinearModelData) -> None:
    assert sigma2_unbiased(data) == pytest.approx(_least_squares_rss(data) / 4.0)
    square = LinearModelData(y=Y[:3], design=DESIGN[:3], intercept=True)
    with pytest.raises(DegenerateResidualError):
        sigma2_unbiased(square)


def test_df_linear() -> None:
    matrix = np.array([[0.5, 0.1], [0.2, 0.25]])
    assert df_linear(matrix) == pytest.approx(0.75)
    assert df_linear(np.diag(matrix)) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        df_linear(np.ones((2, 3)))


def test_cp_star() -> None:
    # ||y - φ||²/n + 2 div φ σ̂²/n = 5/2 + 2 * 1 * 2/2
    assert cp_star([1.0, 2.0], [0.0, 0.0], 1.0, 2.0) == pytest.approx(4.5)
    assert cp_star([1.0, 2.0], [0.0, 0.0], 1.0, 2.0, n=5) == pytest.approx(1.8)
    with pytest.raises(SteinDomainError):
        cp_star([1.0], [0.0], 1.0, 0.0)


def test_divergence_of_ridge_fit_is_trace(data: LinearModelData) -> None:
    smoother = smoother_matrix(data, 2.0)
    fit = ridge_fit(data, 2.0)
    np.testing.assert_allclose(smoother @ Y, fit.fitted)
    assert df_linear(smoother) == pytest.approx(fit.df)
    assert df_divergence(lambda y: smoother @ y, Y) == pytest.approx(fit.df, rel=1e-6)

    sigma2 = sigma2_unbiased(data)
    expected = cp_star(Y, fit.fitted, fit.df, sigma2)
    assert sure_prediction_error(lambda y: smoother @ y, Y, sigma2) == pytest.approx(
        expected, rel=1e-6
    )
    with pytest.warns(Sigma2DependenceWarning):
        sure_prediction_error(lambda y: smoother @ y, Y, sigma2, depends_on_sigma2=True)


def test_ridge_fit(data: LinearModelData) -> None:
    ols = ridge_fit(data, 0.0)
    assert ols.df == pytest.approx(3.0)
    assert ols.rss == pytest.approx(_least_squares_rss(data))
    np.testing.assert_allclose(ols.predict(DESIGN), ols.fitted)

    dfs = [ridge_fit(data, penalty).df for penalty in (0.0, 1.0, 10.0, 1e6)]
    assert dfs == sorted(dfs, reverse=True)
    # the intercept is never penalized
    assert dfs[-1] == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(InvalidPenaltyError):
        ridge_fit(data, -1.0)


def test_bundled_fixture(fixture: LinearModelData) -> None:
    assert (fixture.n, fixture.p) == (40, 5)
    assert fixture.names == [INTERCEPT, "x1", "x2", "x3", "x4"]
    assert fixture.y[0] == pytest.approx(1.497576)


def test_select(fixture: LinearModelData) -> None:
    lambdas = [0.0, 0.1, 1.0, 10.0, 100.0]
    selection = select(fixture, lambdas)
    table = selection.table
    assert list(table.columns) == list(CpColumn.ALL)
    assert table[CpColumn.LAMBDA].tolist() == lambdas
    assert selection.sigma2_hat == pytest.approx(sigma2_unbiased(fixture))
    assert table[CpColumn.DF].iloc[0] == pytest.approx(5.0)
    best = table[CpColumn.CP_STAR].min()
    assert selection.chosen_row[CpColumn.CP_STAR] == best
    assert selection.chosen_lambda == selection.chosen_row[CpColumn.LAMBDA]
    # λ = 100 shrinks away most of the signal
    assert selection.chosen_lambda < 100.0

    fixed = select(fixture, lambdas, sigma2_hat=1.0)
    assert fixed.sigma2_hat == 1.0
    with pytest.raises(InvalidPenaltyError):
        select(fixture, [])


def test_select_keeps_first_of_ties(data: LinearModelData) -> None:
    selection = select(data, [0.0, 0.0, 0.0])
    assert selection.chosen_lambda == 0.0
    assert selection.chosen_row.name == 0


@pytest.mark.parametrize(
    "frame, message",
    [
        (pd.DataFrame({"x": [1.0, 2.0, 3.0]}), "response column"),
        (pd.DataFrame({"y": [1.0, math.nan, 3.0], "x": [1.0, 2.0, 3.0]}), "missing values"),
        (pd.DataFrame({"y": [1.0, 2.0, 3.0], "x": ["a", "b", "c"]}), "non-numeric"),
        (pd.DataFrame({"y": [1.0], "x": [2.0]}), "invalid linear model data"),
    ],
)
def test_from_frame_errors(frame: pd.DataFrame, message: str) -> None:
    with pytest.raises(DataFormatError, match=message):
        LinearModelData.from_frame(frame)


def test_from_csv_missing_file(tmp_path: Path) -> None:
    with pytest.raises(DataFormatError):
        LinearModelData.from_csv(tmp_path / "missing.csv")


def test_kfold_prediction_error(fixture: LinearModelData) -> None:
    error = kfold_prediction_error(fixture, 1.0, folds=5, seed=3)
    assert error > 0 and math.isfinite(error)
    assert kfold_prediction_error(fixture, 1.0, folds=5, seed=3) == error
    with pytest.raises(ValueError):
        kfold_prediction_error(fixture, 1.0, folds=1)


def test_ridge_study_cp_star_is_unbiased() -> None:
    study = ridge_study(
        n=30, p=5, lambdas=(0.0, 1.0, 10.0), replications=2000, seed=7, block_size=256
    )
    assert study[CpColumn.LAMBDA].tolist() == [0.0, 1.0, 10.0]
    assert study[CpColumn.DF].iloc[0] == pytest.approx(5.0)
    assert (study["diff_mean"].abs() <= 5.0 * study["diff_se"]).all()
    with pytest.raises(DegenerateResidualError):
        ridge_study(n=5, p=5, replications=10)


def test_select_ignores_a_shift_of_the_response(fixture: LinearModelData) -> None:
    lambdas = [0.0, 1.0, 10.0]
    shifted = LinearModelData(
        y=fixture.y + 100.0,
        design=fixture.design,
        column_names=fixture.column_names,
        intercept=True,
    )
    original = select(fixture, lambdas).table[CpColumn.CP_STAR].to_numpy()
    moved = select(shifted, lambdas).table[CpColumn.CP_STAR].to_numpy()
    np.testing.assert_allclose(moved, original, rtol=1e-8)

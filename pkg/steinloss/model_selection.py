"""Canonical form of the linear model, degrees of freedom and Cp* selection of ridge fits.

For a fit φ(Y) of the mean of Y ~ N(θ, σ² I_n) the criterion

    Cp*(φ) = ||Y - φ(Y)||² / n + 2 div φ(Y) σ̂² / n

has the expectation of the prediction error E||Y_new - φ(Y)||² / n whenever φ
does not depend on σ̂². Ridge fits at a fixed penalty are linear smoothers,
so div φ is the trace of the smoother matrix.
"""

from __future__ import annotations

import functools
import logging
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import calculus
from .const import DEFAULT_BLOCK_SIZE, DEFAULT_SEED, CpColumn
from .exceptions import (
    DataFormatError,
    DegenerateResidualError,
    InvalidPenaltyError,
    RankDeficientError,
    Sigma2DependenceWarning,
    SteinDomainError,
)
from .fields import VectorField
from .risk_engine import Moments
from .utils import block_generator, block_ranges, run_blocks, send_warning

_LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)

INTERCEPT = "intercept"

FittedMap = Union[VectorField, Callable[[np.ndarray], np.ndarray]]


class LinearModelData(BaseModel):
    """Response y and design V of the model Y = V β + ε.

    With ``intercept`` set, V is ``design`` preceded by a column of ones that
    ridge fits leave unpenalized.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    y: np.ndarray
    design: np.ndarray
    column_names: List[str] = Field(default_factory=list)
    response: str = "y"
    intercept: bool = False

    @field_validator("y", "design", mode="before")
    @classmethod
    def _as_array(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=float)

    @model_validator(mode="after")
    def _check_shapes(self) -> LinearModelData:
        if self.y.ndim != 1:
            raise ValueError("response must be a vector")
        if self.design.ndim != 2 or self.design.shape[0] != self.y.shape[0]:
            raise ValueError("design must be a matrix with one row per response")
        if self.column_names and len(self.column_names) != self.design.shape[1]:
            raise ValueError("one column name per design column is required")
        if self.p < 1:
            raise ValueError("the model needs at least one column")
        if self.n < self.p:
            raise ValueError(f"n={self.n} observations cannot fit p={self.p} columns")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.design))):
            raise ValueError("data must be finite")
        return self

    @property
    def n(self) -> int:
        """Return the number of observations."""
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        """Return the number of columns of V, intercept included."""
        return int(self.design.shape[1]) + int(self.intercept)

    @property
    def v(self) -> np.ndarray:
        """Return the full design matrix V."""
        if not self.intercept:
            return self.design
        return np.column_stack([np.ones(self.n), self.design])

    @property
    def names(self) -> List[str]:
        """Return the names of the columns of V."""
        names = self.column_names or [f"x{i}" for i in range(self.design.shape[1])]
        return [INTERCEPT, *names] if self.intercept else list(names)

    def subset(self, rows: np.ndarray) -> LinearModelData:
        """Return the model restricted to ``rows``."""
        return LinearModelData(
            y=self.y[rows],
            design=self.design[rows],
            column_names=self.column_names,
            response=self.response,
            intercept=self.intercept,
        )

    @classmethod
    def from_frame(
        cls, frame: pd.DataFrame, response: str = "y", intercept: bool = True
    ) -> LinearModelData:
        """Build from a data frame: ``response`` is y, every other column is a regressor."""
        if response not in frame.columns:
            raise DataFormatError(f"response column {response!r} not found")
        missing = [str(col) for col in frame.columns if frame[col].isna().any()]
        if missing:
            raise DataFormatError(f"missing values in columns: {', '.join(missing)}")
        non_numeric = [
            str(col)
            for col in frame.columns
            if not pd.api.types.is_numeric_dtype(frame[col])
            or pd.api.types.is_bool_dtype(frame[col])
        ]
        if non_numeric:
            raise DataFormatError(f"non-numeric columns: {', '.join(non_numeric)}")
        regressors = [str(col) for col in frame.columns if col != response]
        try:
            return cls(
                y=frame[response].to_numpy(dtype=float),
                design=frame[regressors].to_numpy(dtype=float).reshape(len(frame), -1),
                column_names=regressors,
                response=response,
                intercept=intercept,
            )
        except ValidationError as exc:
            raise DataFormatError(f"invalid linear model data: {exc}") from exc

    @classmethod
    def from_csv(
        cls, path: Union[str, Path], response: str = "y", intercept: bool = True
    ) -> LinearModelData:
        """Read a CSV file with a header row."""
        try:
            frame = pd.read_csv(path)
        except (OSError, ValueError) as exc:
            raise DataFormatError(f"cannot read {path}: {exc}") from exc
        _LOGGER.debug("Read %s rows x %s columns from %s", *frame.shape, path)
        return cls.from_frame(frame, response=response, intercept=intercept)


class CanonicalForm(BaseModel):
    """X = G1 Y and U = G2 Y for an orthogonal G = (G1, G2) with G1 spanning col(V)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray
    u: np.ndarray
    basis: np.ndarray
    complement: np.ndarray
    r: np.ndarray
    permutation: np.ndarray

    @property
    def rss(self) -> float:
        """Return ||U||², the least squares residual sum of squares."""
        return float(self.u @ self.u)


def canonical_transform(data: LinearModelData, rtol: Optional[float] = None) -> CanonicalForm:
    """Rotate Y into its canonical form with a column-pivoted QR factorization of V.

    The diagonal of R is made positive so the rotation is reproducible.
    """
    v = data.v
    q, r, permutation = scipy.linalg.qr(v, mode="full", pivoting=True)
    p = data.p
    diagonal = np.diag(r)[:p]
    tolerance = (rtol if rtol is not None else max(v.shape) * _EPS) * abs(diagonal[0])
    rank = int(np.count_nonzero(np.abs(diagonal) > tolerance))
    if rank < p:
        raise RankDeficientError(f"design has rank {rank} < {p} columns")
    signs = np.where(diagonal < 0, -1.0, 1.0)
    q[:, :p] *= signs
    r[:p] *= signs[:, np.newaxis]
    basis = q[:, :p].T
    complement = q[:, p:].T
    return CanonicalForm(
        x=basis @ data.y,
        u=complement @ data.y,
        basis=basis,
        complement=complement,
        r=r[:p],
        permutation=permutation,
    )


def sigma2_unbiased(data: LinearModelData) -> float:
    """Return ||U||² / (n - p), the residual variance estimate."""
    if data.n == data.p:
        raise DegenerateResidualError("no residual degrees of freedom (n = p)")
    return canonical_transform(data).rss / (data.n - data.p)


def df_linear(smoother: Any) -> float:
    """Return the degrees of freedom tr(S) of a linear smoother (matrix or its diagonal)."""
    values = np.asarray(smoother, dtype=float)
    if values.ndim == 1:
        return float(values.sum())
    if values.ndim == 2 and values.shape[0] == values.shape[1]:
        return float(np.trace(values))
    raise ValueError("expected a square smoother matrix or its diagonal")


class _MapField(VectorField):
    """Fitted-value map y -> φ(y) on R^n."""

    name = "fitted_values"

    def __init__(self, phi: Callable[[np.ndarray], np.ndarray]) -> None:
        self.phi = phi

    def value(self, x: np.ndarray) -> np.ndarray:
        flat = x.reshape(-1, x.shape[-1])
        fitted = np.stack([np.asarray(self.phi(row), dtype=float) for row in flat])
        return fitted.reshape(x.shape)


def _as_field(phi: FittedMap) -> VectorField:
    return phi if isinstance(phi, VectorField) else _MapField(phi)


def df_divergence(phi: FittedMap, y: Any) -> float:
    """Return div φ(y) by central differences, the data-driven degrees of freedom."""
    return float(calculus.divergence_fd(_as_field(phi), np.asarray(y, dtype=float)))


def cp_star(
    y: Any, fitted: Any, div_phi: float, sigma2_hat: float, n: Optional[int] = None
) -> float:
    """Return ||y - φ||² / n + 2 div φ σ̂² / n."""
    if sigma2_hat <= 0:
        raise SteinDomainError("Cp* needs a positive variance estimate")
    residual = np.asarray(y, dtype=float) - np.asarray(fitted, dtype=float)
    size = residual.shape[-1] if n is None else n
    return float(residual @ residual / size + 2.0 * div_phi * sigma2_hat / size)


def sure_prediction_error(
    phi: FittedMap, y: Any, sigma2_hat: float, depends_on_sigma2: bool = False
) -> float:
    """Return Cp* of an arbitrary fit, with its divergence taken numerically."""
    if depends_on_sigma2:
        send_warning(
            "Cp* omits the derivative terms of a fit that depends on the variance estimate",
            Sigma2DependenceWarning,
        )
    points = np.asarray(y, dtype=float)
    fitted = _as_field(phi).value(points)
    return cp_star(points, fitted, df_divergence(phi, points), sigma2_hat)


class RidgeFit(BaseModel):
    """Ridge fit at one penalty."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    penalty: float
    coef: np.ndarray
    intercept: float
    fitted: np.ndarray
    df: float
    rss: float

    def predict(self, design: Any) -> np.ndarray:
        """Return fitted values at new rows of the (intercept-free) design."""
        return self.intercept + np.asarray(design, dtype=float) @ self.coef


class _RidgeBasis:
    """SVD of the centered design shared by every penalty."""

    def __init__(self, data: LinearModelData) -> None:
        self.data = data
        design = data.design
        self.x_mean = design.mean(axis=0) if data.intercept else np.zeros(design.shape[1])
        self.y_mean = float(data.y.mean()) if data.intercept else 0.0
        self.u, self.d, self.vt = scipy.linalg.svd(design - self.x_mean, full_matrices=False)
        cutoff = max(design.shape) * _EPS * (self.d[0] if self.d.size else 0.0)
        self.active = self.d > cutoff

    def weights(self, penalty: float) -> np.ndarray:
        """Return the shrinkage factors d²/(d² + λ) of the principal directions."""
        if penalty < 0:
            raise InvalidPenaltyError(f"ridge penalty must be >= 0, got {penalty}")
        d2 = np.square(self.d)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.active, d2 / (d2 + penalty), 0.0)

    def fit(self, penalty: float) -> RidgeFit:
        response = self.data.y
        weights = self.weights(penalty)
        scores = self.u.T @ (response - self.y_mean)
        with np.errstate(divide="ignore", invalid="ignore"):
            inverse_d = np.where(self.active, 1.0 / self.d, 0.0)
        coef = self.vt.T @ (weights * inverse_d * scores)
        intercept = self.y_mean - float(self.x_mean @ coef)
        fitted = intercept + self.data.design @ coef
        residual = response - fitted
        return RidgeFit(
            penalty=penalty,
            coef=coef,
            intercept=intercept,
            fitted=fitted,
            df=float(weights.sum()) + float(self.data.intercept),
            rss=float(residual @ residual),
        )

    def smoother(self, penalty: float) -> np.ndarray:
        matrix = (self.u * self.weights(penalty)) @ self.u.T
        if self.data.intercept:
            matrix += 1.0 / self.data.n
        return matrix


def ridge_fit(data: LinearModelData, penalty: float) -> RidgeFit:
    """Fit ridge regression through the SVD of the (centered) design."""
    return _RidgeBasis(data).fit(penalty)


def smoother_matrix(data: LinearModelData, penalty: float) -> np.ndarray:
    """Return the n x n ridge smoother S with fitted values S y."""
    return _RidgeBasis(data).smoother(penalty)


class ModelSelection(BaseModel):
    """Cp* table over a penalty grid and its first minimizer."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    chosen_lambda: float
    sigma2_hat: float
    table: pd.DataFrame

    @property
    def chosen_row(self) -> pd.Series:
        """Return the table row of the chosen penalty."""
        return self.table.loc[self.table[CpColumn.CP_STAR].idxmin()]


def select(
    data: LinearModelData, lambdas: Sequence[float], sigma2_hat: Optional[float] = None
) -> ModelSelection:
    """Return the penalty minimizing Cp* over ``lambdas`` (the first one on ties)."""
    if not lambdas:
        raise InvalidPenaltyError("penalty grid is empty")
    sigma2 = sigma2_unbiased(data) if sigma2_hat is None else sigma2_hat
    basis = _RidgeBasis(data)
    rows = []
    for penalty in lambdas:
        fit = basis.fit(float(penalty))
        rows.append(
            {
                CpColumn.LAMBDA: fit.penalty,
                CpColumn.RSS: fit.rss,
                CpColumn.DF: fit.df,
                CpColumn.CP_STAR: cp_star(data.y, fit.fitted, fit.df, sigma2),
            }
        )
    table = pd.DataFrame(rows, columns=list(CpColumn.ALL))
    chosen = float(table[CpColumn.LAMBDA].iloc[int(np.argmin(table[CpColumn.CP_STAR]))])
    _LOGGER.info(
        "Selected lambda=%s over %s penalties (sigma2_hat=%.6g)", chosen, len(lambdas), sigma2
    )
    return ModelSelection(chosen_lambda=chosen, sigma2_hat=sigma2, table=table)


def kfold_prediction_error(
    data: LinearModelData, penalty: float, folds: int = 5, seed: int = DEFAULT_SEED
) -> float:
    """Return the K-fold cross-validated mean squared prediction error of a ridge fit."""
    if not 2 <= folds <= data.n:
        raise ValueError(f"folds must lie in [2, {data.n}]")
    order = np.random.default_rng(seed).permutation(data.n)
    total = 0.0
    for held_out in np.array_split(order, folds):
        train = np.setdiff1d(order, held_out)
        fit = ridge_fit(data.subset(train), penalty)
        error = data.y[held_out] - fit.predict(data.design[held_out])
        total += float(error @ error)
    return total / data.n


def simulated_design(
    n: int, p: int, seed: int = DEFAULT_SEED, sigma2: float = 1.0
) -> tuple[LinearModelData, np.ndarray]:
    """Return one normal-noise draw from a fixed random design and its mean Vβ."""
    rng = np.random.default_rng(seed)
    design = rng.standard_normal((n, p))
    beta = rng.standard_normal(p) * np.linspace(1.0, 0.0, p, endpoint=False)
    mean = design @ beta
    y = mean + np.sqrt(sigma2) * rng.standard_normal(n)
    return LinearModelData(y=y, design=design), mean


def ridge_study(
    n: int = 50,
    p: int = 10,
    sigma2: float = 1.0,
    lambdas: Sequence[float] = (0.0, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0),
    replications: int = 10_000,
    seed: int = DEFAULT_SEED,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> pd.DataFrame:
    """Compare mean Cp* to the mean realized prediction error over replications.

    The design and β are fixed by ``seed``; replication blocks redraw Y and an
    independent Y_new around Vβ. Cp* uses the residual variance estimate.
    """
    if n <= p:
        raise DegenerateResidualError("the study needs n > p")
    data, mean = simulated_design(n, p, seed, sigma2)
    basis = _RidgeBasis(data)
    smoothers = np.stack([basis.smoother(float(penalty)) for penalty in lambdas])
    dfs = np.trace(smoothers, axis1=1, axis2=2)
    projection = basis.smoother(0.0)
    scale = np.sqrt(sigma2)

    def run(block: int, start: int, stop: int) -> Moments:
        rng = block_generator(seed, block)
        size = stop - start
        y = mean + scale * rng.standard_normal((size, n))
        y_new = mean + scale * rng.standard_normal((size, n))
        residual_ls = y - y @ projection
        sigma2_hat = np.einsum("ij,ij->i", residual_ls, residual_ls) / (n - p)
        fitted = np.einsum("lij,bj->bli", smoothers, y)
        rss = np.square(y[:, np.newaxis, :] - fitted).sum(axis=-1)
        cp = rss / n + 2.0 * dfs * sigma2_hat[:, np.newaxis] / n
        prediction = np.square(y_new[:, np.newaxis, :] - fitted).sum(axis=-1) / n
        return Moments.of(np.concatenate([cp, prediction, cp - prediction], axis=1))

    moments = functools.reduce(
        Moments.merge, run_blocks(run, block_ranges(replications, block_size), threads)
    )
    count = len(lambdas)
    se = moments.std_error
    _LOGGER.info("Ridge study: %s replications, %s penalties", moments.count, count)
    return pd.DataFrame(
        {
            CpColumn.LAMBDA: list(lambdas),
            CpColumn.DF: dfs,
            "cp_star_mean": moments.mean[:count],
            "cp_star_se": se[:count],
            "prediction_error_mean": moments.mean[count : 2 * count],
            "prediction_error_se": se[count : 2 * count],
            "diff_mean": moments.mean[2 * count :],
            "diff_se": se[2 * count :],
        }
    )

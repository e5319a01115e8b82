"""Monte Carlo risks, paired risk differences and identity verification.

All estimates run on replication blocks: block b draws from the generator keyed
by (seed, b), computes per-draw columns and reduces them to (count, mean, M2).
Blocks are merged in block order with the pairwise mean/variance update, so a
run gives the same bits whatever the number of worker threads.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import calculus
from .config import ExperimentConfig, ResolvedRun, Square1DSpec
from .const import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_TOLERANCE_SE,
    RELATIVE_SE_FLAG,
)
from .enums import Density1D, IdentityName, LossEstimatorBase, SamplerKind
from .estimators import PointEstimator, build_estimator
from .exceptions import (
    FinitenessWarning,
    MonteCarloPrecisionWarning,
    SamplerError,
)
from .fields import JointScalarField, JointVectorField, ScalarField, VectorField
from .fields.radial import ConstantField, norm_power
from .fields.shrinkage import (
    JamesSteinField,
    JamesSteinUnknownVariance,
    LinearField,
    SPowerField,
)
from .loss_estimators import (
    LossEstimator,
    build_loss_estimator,
    generalized_bayes_square,
    location_second_moment,
    quadratic_loss,
    unbiased_square,
)
from .models import (
    EstimatorSpec,
    IdentityReport,
    LossEstimatorSpec,
    MixingSpec,
    RadialSpec,
    RiskReport,
    SamplerSpec,
)
from .samplers import Draws, draw_block, mixing_moment, radial_second_moment
from .utils import block_generator, block_ranges, first_or_none, run_blocks, send_warning

_LOGGER = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)

Column = Callable[[Draws], np.ndarray]
Evaluator = Callable[[Draws], Mapping[str, np.ndarray]]


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, x)


class Moments:
    """Count, mean and sum of squared deviations of a set of columns."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self, count: int, mean: np.ndarray, m2: np.ndarray) -> None:
        self.count = count
        self.mean = mean
        self.m2 = m2

    @classmethod
    def of(cls, values: np.ndarray) -> Moments:
        """Reduce a (n, c) block of per-draw values."""
        mean = values.mean(axis=0)
        return cls(values.shape[0], mean, np.square(values - mean).sum(axis=0))

    def merge(self, other: Moments) -> Moments:
        """Combine two disjoint sets of draws."""
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / count)
        m2 = self.m2 + other.m2 + np.square(delta) * (self.count * other.count / count)
        return Moments(count, mean, m2)

    @property
    def std_error(self) -> np.ndarray:
        """Return sample sd / sqrt(n) per column."""
        if self.count < 2:
            return np.full_like(self.mean, math.nan)
        return np.sqrt(self.m2 / (self.count - 1) / self.count)


class ColumnTable:
    """Merged Monte Carlo moments of named per-draw columns."""

    def __init__(self, names: Sequence[str], moments: Moments, seed: int, redraws: int) -> None:
        self.names = list(names)
        self.moments = moments
        self.seed = seed
        self.redraws = redraws

    @property
    def n(self) -> int:
        """Return the number of draws."""
        return self.moments.count

    def mean(self, name: str) -> float:
        """Return the Monte Carlo mean of a column."""
        return float(self.moments.mean[self.names.index(name)])

    def se(self, name: str) -> float:
        """Return the standard error of a column mean."""
        return float(self.moments.std_error[self.names.index(name)])


def mc_columns(
    sampler: SamplerSpec,
    evaluate: Evaluator,
    n: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
    reject_origin: bool = True,
) -> ColumnTable:
    """Estimate the means of the named per-draw columns returned by ``evaluate``.

    Every column is computed on the same draws (common random numbers).
    """
    blocks = block_ranges(n, block_size)
    _LOGGER.debug(
        "Sampling %s draws (%s, p=%s) in %s blocks, seed %s",
        n,
        sampler.kind.value,
        sampler.p,
        len(blocks),
        seed,
    )

    def run_block(block: int, start: int, stop: int) -> Tuple[List[str], Moments, int]:
        draws = draw_block(sampler, block_generator(seed, block), stop - start, reject_origin)
        columns = evaluate(draws)
        values = np.column_stack([np.asarray(column, dtype=float) for column in columns.values()])
        return list(columns), Moments.of(values), draws.redraws

    results = run_blocks(run_block, blocks, threads)
    names, merged, _ = results[0]
    for _, moments, _ in results[1:]:
        merged = merged.merge(moments)
    redraws = sum(count for _, _, count in results)
    if redraws:
        _LOGGER.debug("Redrew %s singular draws", redraws)
    return ColumnTable(names, merged, seed, redraws)


def located(sampler: SamplerSpec, theta: Any = None, sigma2: Optional[float] = None) -> SamplerSpec:
    """Return the sampler moved to ``theta`` and, optionally, to variance ``sigma2``."""
    spec = sampler if theta is None else sampler.with_theta(theta)
    if sigma2 is not None and sigma2 != spec.sigma2:
        spec = spec.model_validate({**spec.model_dump(), "sigma2": sigma2})
    return spec


def loss_of(estimator: PointEstimator, sampler: SamplerSpec) -> Column:
    """Return the per-draw loss column, invariant when the setting carries S."""

    def loss(draws: Draws) -> np.ndarray:
        phi = estimator(draws.x, draws.s, draws.u)
        value = quadratic_loss(phi, draws.theta)
        if sampler.has_variance_stat:
            value = value / draws.sigma2
        return value

    return loss


def _flag_precision(report: RiskReport) -> RiskReport:
    flags = list(report.flags)
    checks = [("mean", report.mean, report.std_error)]
    if report.paired_diff_mean is not None and report.paired_diff_se is not None:
        checks.append(("paired_diff", report.paired_diff_mean, report.paired_diff_se))
    for label, mean, se in checks:
        if se > RELATIVE_SE_FLAG * abs(mean) and se > 0:
            flags.append(f"{label}_relative_se>{RELATIVE_SE_FLAG:g}")
            send_warning(
                f"{label} {mean:.6g} has relative SE above {RELATIVE_SE_FLAG:.0%} "
                f"({report.loss_estimator or report.estimator}, |θ|={report.theta_norm:.4g})",
                MonteCarloPrecisionWarning,
            )
    return report.model_copy(update={"flags": flags})


def mc_point_risk(
    est: EstimatorSpec,
    sampler: SamplerSpec,
    theta: Any = None,
    n: int = 200_000,
    seed: int = 42,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> RiskReport:
    """Return the Monte Carlo risk E_θ[L(θ, φ(X))] of a point estimator."""
    spec = located(sampler, theta)
    estimator = build_estimator(est)
    loss = loss_of(estimator, spec)
    table = mc_columns(spec, lambda draws: {"loss": loss(draws)}, n, seed, block_size, threads)
    report = RiskReport(
        mean=table.mean("loss"),
        std_error=table.se("loss"),
        n=table.n,
        seed=seed,
        theta=spec.theta_array.tolist(),
        sigma2=spec.sigma2,
        estimator=estimator.label,
        redraws=table.redraws,
    )
    return _flag_precision(report)


def _loss_estimator(
    delta: Union[LossEstimatorSpec, LossEstimator], est: EstimatorSpec, sampler: SamplerSpec
) -> LossEstimator:
    if isinstance(delta, LossEstimator):
        return delta
    return build_loss_estimator(delta, est, sampler)


def mc_loss_estimator_risk(
    delta: Union[LossEstimatorSpec, LossEstimator],
    est: EstimatorSpec,
    sampler: SamplerSpec,
    theta: Any = None,
    n: int = 200_000,
    seed: int = 42,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> RiskReport:
    """Return the Monte Carlo risk E_θ[(δ - L)²] of a loss estimator."""
    spec = located(sampler, theta)
    estimator = build_estimator(est)
    loss_estimator = _loss_estimator(delta, est, spec)
    loss = loss_of(estimator, spec)

    def squared_error(draws: Draws) -> Dict[str, np.ndarray]:
        return {"risk": np.square(loss_estimator(draws.x, draws.s, draws.u) - loss(draws))}

    table = mc_columns(spec, squared_error, n, seed, block_size, threads)
    report = RiskReport(
        mean=table.mean("risk"),
        std_error=table.se("risk"),
        n=table.n,
        seed=seed,
        theta=spec.theta_array.tolist(),
        sigma2=spec.sigma2,
        estimator=estimator.label,
        loss_estimator=loss_estimator.label,
        redraws=table.redraws,
    )
    return _flag_precision(report)


def mc_risk_difference(
    delta_a: Union[LossEstimatorSpec, LossEstimator],
    delta_b: Union[LossEstimatorSpec, LossEstimator],
    est: EstimatorSpec,
    sampler: SamplerSpec,
    theta: Any = None,
    n: int = 200_000,
    seed: int = 42,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> RiskReport:
    """Return the risk of ``delta_a`` and its paired difference to ``delta_b``.

    Both loss estimators are evaluated on identical draws; ``paired_diff_se`` is
    the standard error of the per-draw difference and ``unpaired_diff_se`` the one
    independent runs would have given.
    """
    spec = located(sampler, theta)
    estimator = build_estimator(est)
    first = _loss_estimator(delta_a, est, spec)
    second = _loss_estimator(delta_b, est, spec)
    loss = loss_of(estimator, spec)

    def errors(draws: Draws) -> Dict[str, np.ndarray]:
        value = loss(draws)
        error_a = np.square(first(draws.x, draws.s, draws.u) - value)
        error_b = np.square(second(draws.x, draws.s, draws.u) - value)
        return {"a": error_a, "b": error_b, "diff": error_a - error_b}

    table = mc_columns(spec, errors, n, seed, block_size, threads)
    report = RiskReport(
        mean=table.mean("a"),
        std_error=table.se("a"),
        n=table.n,
        seed=seed,
        theta=spec.theta_array.tolist(),
        sigma2=spec.sigma2,
        estimator=estimator.label,
        loss_estimator=first.label,
        reference=second.label,
        paired_diff_mean=table.mean("diff"),
        paired_diff_se=table.se("diff"),
        unpaired_diff_se=math.hypot(table.se("a"), table.se("b")),
        redraws=table.redraws,
    )
    return _flag_precision(report)


# ---- experiment sweeps ----


def _rotated_direction(p: int) -> np.ndarray:
    return np.full(p, 1.0 / math.sqrt(p))


def theta_sweep(
    config: ExperimentConfig,
    run: ResolvedRun,
    radii: Optional[Sequence[float]] = None,
) -> List[RiskReport]:
    """Return one report per (σ², θ = r e1, loss estimator).

    The reference loss estimator gets its plain risk; every other one is compared
    to it on common draws. The reference risk at the largest radius is repeated at
    a rotated θ and the rows are flagged when the two disagree beyond tolerance.
    """
    sweep = list(config.theta_radii if radii is None else radii)
    if not sweep:
        raise ValueError("theta sweep needs at least one radius")
    if config.sampler is None:
        raise SamplerError("theta sweep needs a sampler")
    sampler = config.sampler
    p = sampler.p
    reference_label = config.reference_label
    specs = {spec.label(): spec for spec in config.loss_estimators}
    reference = specs[reference_label]
    sigma2_values = config.sigma2_values or [sampler.sigma2]
    finiteness_warnings(config.estimator, list(specs.values()), sampler)

    reports: List[RiskReport] = []
    for sigma2 in sigma2_values:
        base = located(sampler, None, sigma2)
        for radius in sweep:
            theta = np.zeros(p)
            theta[0] = radius
            reports.append(
                mc_loss_estimator_risk(
                    reference,
                    config.estimator,
                    base,
                    theta,
                    run.n,
                    run.seed,
                    run.block_size,
                    run.threads,
                )
            )
            for label, spec in specs.items():
                if label == reference_label:
                    continue
                reports.append(
                    mc_risk_difference(
                        spec,
                        reference,
                        config.estimator,
                        base,
                        theta,
                        run.n,
                        run.seed,
                        run.block_size,
                        run.threads,
                    )
                )
        largest = max(sweep)
        if largest > 0:
            reports = _rotation_spot_check(
                reports, config, base, reference, largest, run
            )
    _LOGGER.info(
        "Swept %s radii x %s variances for %s loss estimators",
        len(sweep),
        len(sigma2_values),
        len(specs),
    )
    return reports


def _rotation_spot_check(
    reports: List[RiskReport],
    config: ExperimentConfig,
    sampler: SamplerSpec,
    reference: LossEstimatorSpec,
    radius: float,
    run: ResolvedRun,
) -> List[RiskReport]:
    theta = radius * _rotated_direction(sampler.p)
    rotated = mc_loss_estimator_risk(
        reference, config.estimator, sampler, theta, run.n, run.seed, run.block_size, run.threads
    )
    axis = first_or_none(
        reports,
        lambda report: report.reference is None
        and report.sigma2 == sampler.sigma2
        and math.isclose(report.theta_norm, radius),
    )
    if axis is None:
        return reports
    gap = abs(rotated.mean - axis.mean)
    if gap <= run.tolerance_se * math.hypot(rotated.std_error, axis.std_error):
        _LOGGER.debug("Rotated spot check at |θ|=%s agrees (gap %.4g)", radius, gap)
        return reports
    send_warning(
        f"risk at a rotated θ differs from θ = r e1 at r={radius:g} (gap {gap:.4g})",
        MonteCarloPrecisionWarning,
    )
    return [
        report.model_copy(update={"flags": [*report.flags, "rotation_check_failed"]})
        if report.sigma2 == sampler.sigma2 and math.isclose(report.theta_norm, radius)
        else report
        for report in reports
    ]


def square_sampler(spec: Square1DSpec, theta: float) -> SamplerSpec:
    """Return the one-dimensional location sampler of ``spec`` at ``theta``."""
    if spec.density is Density1D.NORMAL:
        return SamplerSpec(p=1, theta=[theta], sigma2=spec.scale**2)
    assert spec.dof is not None
    # X = θ + z / sqrt(ς) with ς ~ gamma(ν/2, rate ν/(2 scale²)) is scale * t_ν.
    mixing = MixingSpec.gamma(spec.dof / 2.0, spec.dof / (2.0 * spec.scale**2))
    return SamplerSpec(kind=SamplerKind.SCALE_MIXTURE, p=1, theta=[theta], mixing=mixing)


def mc_square_risk_difference(
    spec: Square1DSpec,
    theta: float,
    n: int = 200_000,
    seed: int = 42,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> RiskReport:
    """Compare X² + E₀[X²] with X² - E₀[X²] as estimates of θ² on common draws."""
    second_moment = location_second_moment(spec.density, spec.scale, spec.dof)
    sampler = square_sampler(spec, theta)
    target = theta**2

    def errors(draws: Draws) -> Dict[str, np.ndarray]:
        x = draws.x[:, 0]
        bayes = np.square(generalized_bayes_square(x, second_moment) - target)
        unbiased = np.square(unbiased_square(x, second_moment) - target)
        return {"a": bayes, "b": unbiased, "diff": bayes - unbiased}

    table = mc_columns(
        sampler,
        errors,
        n,
        seed,
        block_size,
        threads,
        reject_origin=False,
    )
    report = RiskReport(
        mean=table.mean("a"),
        std_error=table.se("a"),
        n=table.n,
        seed=seed,
        theta=[theta],
        estimator=f"square[{spec.density.value}]",
        loss_estimator="generalized_bayes",
        reference="unbiased",
        paired_diff_mean=table.mean("diff"),
        paired_diff_se=table.se("diff"),
        unpaired_diff_se=math.hypot(table.se("a"), table.se("b")),
    )
    return _flag_precision(report)


# ---- identity verification ----


def _identity_report(
    name: IdentityName,
    case: str,
    table: ColumnTable,
    tolerance_se: float,
    negative_control: bool,
) -> IdentityReport:
    diff_mean, diff_se = table.mean("diff"), table.se("diff")
    lhs_mean = table.mean("lhs")
    exact = abs(diff_mean) <= 1e-12 * max(1.0, abs(lhs_mean))
    passed = exact or abs(diff_mean) <= tolerance_se * diff_se
    report = IdentityReport(
        name=name,
        case=case,
        lhs_mean=lhs_mean,
        rhs_mean=table.mean("rhs"),
        diff_mean=diff_mean,
        diff_se=diff_se,
        n=table.n,
        seed=table.seed,
        passed=bool(passed),
        negative_control=negative_control,
    )
    _LOGGER.debug("%s[%s]: diff %.4g ± %.4g", name.value, case, diff_mean, diff_se)
    return report


def _sides(lhs: Column, rhs: Column) -> Evaluator:
    def evaluate(draws: Draws) -> Dict[str, np.ndarray]:
        left, right = lhs(draws), rhs(draws)
        return {"lhs": left, "rhs": right, "diff": left - right}

    return evaluate


def verify_stein_identity(
    g: VectorField,
    theta: Any,
    sigma2: float = 1.0,
    n: int = 1_000_000,
    seed: int = 42,
    negative_control: bool = False,
    case: Optional[str] = None,
    tolerance_se: float = DEFAULT_TOLERANCE_SE,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> IdentityReport:
    """Check E[(X - θ)ᵗ g(X)]/σ² = E[div g(X)] for X ~ N(θ, σ² I).

    The negative control flips the sign of g on the left-hand side.
    """
    centre = np.asarray(theta, dtype=float)
    sampler = SamplerSpec(p=centre.shape[0], theta=centre.tolist(), sigma2=sigma2)
    sign = -1.0 if negative_control else 1.0

    def lhs(draws: Draws) -> np.ndarray:
        return sign * np.einsum("ij,ij->i", draws.x - draws.theta, g.value(draws.x)) / sigma2

    def rhs(draws: Draws) -> np.ndarray:
        return calculus.divergence(g, draws.x)

    table = mc_columns(sampler, _sides(lhs, rhs), n, seed, block_size, threads)
    return _identity_report(
        IdentityName.STEIN, case or g.name, table, tolerance_se, negative_control
    )


def _ds_fd(h: JointScalarField, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    analytic = h.analytic_ds(x, s)
    if analytic is not None:
        return analytic
    step = _EPS ** (1.0 / 3.0) * np.maximum(1.0, s)
    central = (h.value(x, s + step) - h.value(x, np.maximum(s - step, step))) / (2.0 * step)
    forward = (-3.0 * h.value(x, s) + 4.0 * h.value(x, s + step) - h.value(x, s + 2.0 * step)) / (
        2.0 * step
    )
    return np.where(s - step > 0, central, forward)


def verify_lemma_a1(
    theta: Any,
    sigma2: float,
    k: int,
    n: int = 1_000_000,
    seed: int = 42,
    h: Optional[JointScalarField] = None,
    g: Optional[JointVectorField] = None,
    negative_control: bool = False,
    case: Optional[str] = None,
    tolerance_se: float = DEFAULT_TOLERANCE_SE,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> IdentityReport:
    """Check one part of the integration by parts identities with S ~ σ² χ²_k.

    With ``h``: E[h(X, S)/σ²] = E[2 ∂h/∂S + (k - 2) h(X, S)/S]; the negative
    control uses k in place of k - 2. With ``g``:
    E[(X - θ)ᵗ g(X, S)/σ²] = E[div_x g(X, S)]; the negative control flips g.
    """
    if (h is None) == (g is None):
        raise ValueError("pass exactly one of h or g")
    centre = np.asarray(theta, dtype=float)
    sampler = SamplerSpec(p=centre.shape[0], k=k, theta=centre.tolist(), sigma2=sigma2)

    if h is not None:
        weight = k if negative_control else k - 2

        def lhs(draws: Draws) -> np.ndarray:
            assert draws.s is not None
            return h.value(draws.x, draws.s) / sigma2

        def rhs(draws: Draws) -> np.ndarray:
            assert draws.s is not None
            return 2.0 * _ds_fd(h, draws.x, draws.s) + weight * h.value(draws.x, draws.s) / draws.s

        label = case or f"part(ii) {h.name}"
    else:
        assert g is not None
        sign = -1.0 if negative_control else 1.0

        def lhs(draws: Draws) -> np.ndarray:
            assert draws.s is not None
            shift = g.value(draws.x, draws.s)
            return sign * np.einsum("ij,ij->i", draws.x - draws.theta, shift) / sigma2

        def rhs(draws: Draws) -> np.ndarray:
            assert draws.s is not None
            divergence = g.analytic_divergence(draws.x, draws.s)
            if divergence is None:
                divergence = calculus.divergence_fd(g.at(draws.s), draws.x)
            return divergence

        label = case or f"part(i) {g.name}"

    table = mc_columns(sampler, _sides(lhs, rhs), n, seed, block_size, threads)
    return _identity_report(IdentityName.LEMMA_A1, label, table, tolerance_se, negative_control)


def _residual_sampler(
    theta: Any, k: int, radius: Optional[float], radial: Optional[RadialSpec]
) -> SamplerSpec:
    centre = np.asarray(theta, dtype=float)
    law = radial if radial is not None else RadialSpec.fixed(radius if radius is not None else 1.0)
    return SamplerSpec(
        kind=SamplerKind.SPHERICAL_RESIDUAL,
        p=centre.shape[0],
        k=k,
        theta=centre.tolist(),
        radial=law,
    )


def verify_lemma_a5(
    g: VectorField,
    q: float,
    radius: Optional[float],
    theta: Any,
    k: int,
    n: int = 1_000_000,
    seed: int = 42,
    negative_control: bool = False,
    radial: Optional[RadialSpec] = None,
    case: Optional[str] = None,
    tolerance_se: float = DEFAULT_TOLERANCE_SE,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> IdentityReport:
    """Check E[||U||^q (X - θ)ᵗ g(X)] = E[||U||^(q+2) div g(X)]/(k + q) under a spherical law.

    This is the residual integration by parts with h(t) = t^(q/2), whose
    antiderivative gives H(t)/t^(k/2 - 1) = t^((q+2)/2)/(k + q). The negative
    control divides by k + q + 2 instead.
    """
    sampler = _residual_sampler(theta, k, radius, radial)
    denominator = k + q + 2 if negative_control else k + q

    def lhs(draws: Draws) -> np.ndarray:
        assert draws.u is not None
        norm = np.sqrt(_squared_norm(draws.u))
        return norm**q * np.einsum("ij,ij->i", draws.x - draws.theta, g.value(draws.x))

    def rhs(draws: Draws) -> np.ndarray:
        assert draws.u is not None
        norm = np.sqrt(_squared_norm(draws.u))
        return norm ** (q + 2) * calculus.divergence(g, draws.x) / denominator

    table = mc_columns(sampler, _sides(lhs, rhs), n, seed, block_size, threads)
    label = case or f"q={q:g} {g.name}"
    return _identity_report(IdentityName.LEMMA_A5, label, table, tolerance_se, negative_control)


def verify_corollary_a(
    gamma: ScalarField,
    q: float,
    radius: Optional[float],
    theta: Any,
    k: int,
    n: int = 1_000_000,
    seed: int = 42,
    negative_control: bool = False,
    radial: Optional[RadialSpec] = None,
    case: Optional[str] = None,
    tolerance_se: float = DEFAULT_TOLERANCE_SE,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> IdentityReport:
    """Check the spherical identity for ||U||^q ||X - θ||² γ(X).

    E[||U||^q ||X-θ||² γ] = p/(k+q) E[||U||^(q+2) γ] + E[||U||^(q+4) Δγ]/((k+q)(k+q+2)).

    The negative control uses p/(k + q + 2) in the first right-hand term.
    """
    sampler = _residual_sampler(theta, k, radius, radial)
    p = sampler.p
    first = p / (k + q + 2) if negative_control else p / (k + q)
    second = 1.0 / ((k + q) * (k + q + 2))

    def lhs(draws: Draws) -> np.ndarray:
        assert draws.u is not None
        norm2 = _squared_norm(draws.u)
        return norm2 ** (q / 2.0) * _squared_norm(draws.x - draws.theta) * gamma.value(draws.x)

    def rhs(draws: Draws) -> np.ndarray:
        assert draws.u is not None
        norm2 = _squared_norm(draws.u)
        return (
            first * norm2 ** ((q + 2) / 2.0) * gamma.value(draws.x)
            + second * norm2 ** ((q + 4) / 2.0) * calculus.laplacian(gamma, draws.x)
        )

    table = mc_columns(sampler, _sides(lhs, rhs), n, seed, block_size, threads)
    label = case or f"q={q:g} {gamma.name}"
    return _identity_report(IdentityName.COROLLARY_A, label, table, tolerance_se, negative_control)


def identity_suite(
    names: Optional[Sequence[IdentityName]] = None,
    n: int = 1_000_000,
    seed: int = 42,
    negative_control: bool = False,
    tolerance_se: float = DEFAULT_TOLERANCE_SE,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> List[IdentityReport]:
    """Run the positive cases of the selected identities (all by default)."""
    selected = list(names) if names else list(IdentityName)
    options: Dict[str, Any] = {
        "n": n,
        "seed": seed,
        "negative_control": negative_control,
        "tolerance_se": tolerance_se,
        "block_size": block_size,
        "threads": threads,
    }
    e1 = np.eye(5)[0]
    origin6 = np.zeros(6)
    near6 = 0.5 * np.eye(6)[0]
    # ||θ|| > R keeps X away from the origin so 1/||x||^4 terms have finite variance
    outside6 = 3.0 * np.eye(6)[0]
    reports: List[IdentityReport] = []
    for name in selected:
        if name is IdentityName.STEIN:
            reports += [
                verify_stein_identity(LinearField(), e1, 1.0, case="identity", **options),
                verify_stein_identity(
                    JamesSteinField(), np.zeros(5), 1.0, case="js theta=0", **options
                ),
                verify_stein_identity(
                    JamesSteinField(), 2.0 * e1, 2.0, case="js sigma2=2", **options
                ),
            ]
        elif name is IdentityName.LEMMA_A1:
            reports += [
                verify_lemma_a1(e1, 1.0, 3, h=SPowerField(1.0), case="h=s", **options),
                verify_lemma_a1(e1, 2.0, 3, h=SPowerField(2.0), case="h=s^2", **options),
                verify_lemma_a1(
                    2.0 * e1,
                    1.0,
                    3,
                    g=JamesSteinUnknownVariance(k=3),
                    case="js_unknown_var",
                    **options,
                ),
            ]
        elif name is IdentityName.LEMMA_A5:
            reports += [
                verify_lemma_a5(
                    LinearField(center=origin6), 0.0, 2.0, origin6, 4, case="h=1 x-theta", **options
                ),
                verify_lemma_a5(JamesSteinField(), 2.0, 2.0, near6, 4, case="q=2 js", **options),
                verify_lemma_a5(JamesSteinField(), 4.0, 2.0, origin6, 4, case="q=4 js", **options),
            ]
        else:
            reports += [
                verify_corollary_a(
                    ConstantField(1.0), 0.0, 2.0, origin6, 4, case="gamma=1", **options
                ),
                verify_corollary_a(
                    norm_power(2.0), 4.0, 2.0, outside6, 4, case="gamma=1/|x|^2", **options
                ),
                verify_corollary_a(
                    norm_power(-2.0), 2.0, 2.0, near6, 4, case="gamma=|x|^2", **options
                ),
            ]
    return reports


# ---- finiteness ----


def finiteness_warnings(
    est: EstimatorSpec,
    delta: Union[LossEstimatorSpec, Sequence[LossEstimatorSpec], None],
    sampler: SamplerSpec,
) -> List[str]:
    """Return (and emit) heuristic warnings about infinite second moments.

    A correction γ ~ ||x||^(-a) near the origin has E[γ²] < ∞ only when 2a < p.
    The paired risk difference squares γ², so its standard error is only
    trustworthy when 4a < p or θ lies far from the origin. The
    unbiased estimate of a shrinkage g ~ ||x||^(-b) is square integrable
    only when 2(b + 1) < p. Mixing laws must keep E[1/ς] and E[ς^-2] finite.
    """
    specs: List[LossEstimatorSpec] = (
        [] if delta is None else [delta] if isinstance(delta, LossEstimatorSpec) else list(delta)
    )
    p = sampler.p
    messages: List[str] = []
    estimator = build_estimator(est)
    shrink_order = estimator.shrinkage.singular_order(p)
    if shrink_order > 0 and 2.0 * (shrink_order + 1.0) >= p:
        messages.append(
            f"second moment of the unbiased loss estimate of {estimator.label} may be infinite "
            f"(singular order {shrink_order:g} in p={p})"
        )
    for spec in specs:
        if spec.base is LossEstimatorBase.CONSTANT:
            continue
        loss_estimator = build_loss_estimator(spec, est, sampler)
        if loss_estimator.correction is None:
            continue
        order = loss_estimator.correction.singular_order(p)
        if order > 0 and 2.0 * order >= p:
            messages.append(
                f"second moment of correction may be infinite for {loss_estimator.label} "
                f"(singular order {order:g} in p={p})"
            )
        elif order > 0 and 4.0 * order >= p:
            messages.append(
                f"fourth moment of correction is infinite for {loss_estimator.label} "
                f"(singular order {order:g} in p={p}): paired SEs are unreliable when "
                "θ is near the origin"
            )
    mixing = sampler.mixing
    if sampler.radial is not None and sampler.radial.mixing is not None:
        mixing = sampler.radial.mixing
    if mixing is not None:
        if not math.isfinite(mixing_moment(mixing, -1.0)):
            messages.append("E[1/precision] is infinite: the loss has infinite expectation")
        elif not math.isfinite(mixing_moment(mixing, -2.0)):
            messages.append("E[precision^-2] is infinite: risks of loss estimators may be infinite")
    if sampler.radial is not None and sampler.resolved_radial is not None:
        if not math.isfinite(radial_second_moment(sampler.resolved_radial)):
            messages.append("radial law has an infinite second moment")
    for message in messages:
        send_warning(message, FinitenessWarning)
    return messages

"""Tests for the Monte Carlo risk engine and identity checks."""

from __future__ import annotations

import math
from typing import Callable, Dict

import numpy as np
import pytest

from steinloss.config import ExperimentConfig, ResolvedRun, Square1DSpec
from steinloss.enums import IdentityName
from steinloss.estimators import build_estimator
from steinloss.exceptions import FinitenessWarning
from steinloss.fields.radial import ConstantField
from steinloss.fields.shrinkage import JamesSteinField, LinearField, SPowerField
from steinloss.loss_estimators import build_loss_estimator
from steinloss.models import (
    CorrectionSpec,
    EstimatorSpec,
    LossEstimatorSpec,
    MixingSpec,
    RadialSpec,
    SamplerSpec,
)
from steinloss.presets import get_preset, johnstone_js, johnstone_mle
from steinloss.risk_engine import (
    Moments,
    finiteness_warnings,
    identity_suite,
    located,
    loss_of,
    mc_columns,
    mc_loss_estimator_risk,
    mc_point_risk,
    mc_risk_difference,
    mc_square_risk_difference,
    theta_sweep,
    verify_corollary_a,
    verify_lemma_a1,
    verify_lemma_a5,
    verify_stein_identity,
)
from steinloss.samplers import Draws

JS = EstimatorSpec(kind="james_stein")
UNBIASED = LossEstimatorSpec(name="unbiased", base="sure_known_var")
# δ0 + 20/||x||² improves δ0 for James-Stein in p = 10: E[(c² - 4pc)/||X||⁴] < 0
EXPANDED = LossEstimatorSpec(
    name="expanded",
    base="sure_known_var",
    correction=CorrectionSpec(
        gamma={"name": "norm_power", "params": {"a": 2}}, alpha_or_d=20.0, direction="expand"
    ),
)


def test_moments_merge_matches_single_pass() -> None:
    values = np.arange(24, dtype=float).reshape(12, 2) ** 1.5
    whole = Moments.of(values)
    merged = Moments.of(values[:5]).merge(Moments.of(values[5:]))
    assert merged.count == 12
    np.testing.assert_allclose(merged.mean, whole.mean)
    np.testing.assert_allclose(merged.m2, whole.m2)
    expected_se = values.std(axis=0, ddof=1) / np.sqrt(12)
    np.testing.assert_allclose(merged.std_error, expected_se)
    assert np.isnan(Moments.of(values[:1]).std_error).all()


def test_mc_columns_is_thread_count_invariant() -> None:
    spec = SamplerSpec(p=3)

    def evaluate(draws: Draws) -> Dict[str, np.ndarray]:
        return {"norm2": np.sum(draws.x**2, axis=1)}

    serial = mc_columns(spec, evaluate, 5000, seed=11, block_size=512, threads=1)
    parallel = mc_columns(spec, evaluate, 5000, seed=11, block_size=512, threads=3)
    assert serial.n == 5000
    assert serial.mean("norm2") == parallel.mean("norm2")
    assert serial.se("norm2") == parallel.se("norm2")
    assert serial.mean("norm2") == pytest.approx(3.0, abs=5 * serial.se("norm2"))


def test_point_risk_of_mle_and_james_stein() -> None:
    sampler = SamplerSpec(p=5)
    mle = mc_point_risk(EstimatorSpec(), sampler, n=20_000, seed=1)
    assert mle.mean == pytest.approx(5.0, abs=5 * mle.std_error)
    assert mle.estimator == "mle"
    # p - (p - 2) at θ = 0
    stein = mc_point_risk(JS, sampler, n=20_000, seed=1)
    assert stein.mean == pytest.approx(2.0, abs=5 * stein.std_error)
    assert stein.theta == [0.0] * 5
    assert stein.flags == []


def test_loss_estimator_risk_of_constant_estimate() -> None:
    # δ0 = p for the MLE, so the risk is Var(χ²_p) = 2p
    report = mc_loss_estimator_risk(UNBIASED, EstimatorSpec(), SamplerSpec(p=5), n=20_000, seed=2)
    assert report.mean == pytest.approx(10.0, abs=5 * report.std_error)
    assert report.loss_estimator == "unbiased"
    assert not report.is_paired


def test_risk_difference_of_expanded_loss_estimator() -> None:
    sampler = SamplerSpec(p=10)
    report = mc_risk_difference(EXPANDED, UNBIASED, JS, sampler, n=20_000, seed=3, block_size=2048)
    assert report.is_paired
    assert report.loss_estimator == "expanded"
    assert report.reference == "unbiased"
    assert report.paired_diff_se is not None and report.unpaired_diff_se is not None
    # -400 E[1/χ²₁₀²] = -400/((p - 2)(p - 4))
    assert report.paired_diff_mean == pytest.approx(-400.0 / 48.0, abs=5 * report.paired_diff_se)
    assert report.dominates(4.0)

    threaded = mc_risk_difference(
        EXPANDED, UNBIASED, JS, sampler, n=20_000, seed=3, block_size=2048, threads=2
    )
    assert threaded.paired_diff_mean == report.paired_diff_mean
    assert threaded.mean == report.mean


@pytest.mark.parametrize(
    "spec, second_moment",
    [
        (Square1DSpec(), 1.0),
        (Square1DSpec(scale=2.0), 4.0),
        (Square1DSpec(density="student_t", dof=10.0), 1.25),
    ],
)
def test_square_risk_difference(spec: Square1DSpec, second_moment: float) -> None:
    report = mc_square_risk_difference(spec, 1.0, n=40_000, seed=5)
    assert report.paired_diff_se is not None
    # per draw the difference is 4 m (X² - θ²), whose mean is 4 m²
    assert report.paired_diff_mean == pytest.approx(
        4.0 * second_moment**2, abs=5 * report.paired_diff_se
    )
    assert report.paired_diff_mean > 0
    assert report.reference == "unbiased"


def test_theta_sweep() -> None:
    config = ExperimentConfig(
        sampler=SamplerSpec(p=10),
        estimator=JS,
        loss_estimators=[UNBIASED, EXPANDED],
        theta_radii=[0.0, 3.0],
    )
    run = ResolvedRun(n=8000, seed=2, threads=1, block_size=1024, tolerance_se=4.0, output_dir=".")
    reports = theta_sweep(config, run)
    assert len(reports) == 4
    assert [r.reference for r in reports] == [None, "unbiased", None, "unbiased"]
    assert [r.theta_norm for r in reports] == pytest.approx([0.0, 0.0, 3.0, 3.0])
    assert reports[1].paired_diff_mean is not None and reports[1].paired_diff_mean < 0
    with pytest.raises(ValueError):
        theta_sweep(config, run, radii=[])


def test_finiteness_warnings() -> None:
    with pytest.warns(FinitenessWarning):
        messages = finiteness_warnings(JS, UNBIASED, SamplerSpec(p=3))
    assert len(messages) == 1
    assert "unbiased loss estimate of james_stein" in messages[0]

    heavy = SamplerSpec(kind="scale_mixture", p=10, mixing=MixingSpec.student_t(4.0))
    with pytest.warns(FinitenessWarning):
        messages = finiteness_warnings(EstimatorSpec(), None, heavy)
    assert any("precision^-2" in message for message in messages)

    assert finiteness_warnings(JS, [UNBIASED, EXPANDED], SamplerSpec(p=10)) == []


def test_stein_identity_and_negative_control() -> None:
    theta = [2.0, 0.0, 0.0, 0.0, 0.0]
    report = verify_stein_identity(JamesSteinField(), theta, sigma2=2.0, n=50_000, seed=4)
    assert report.passed
    assert report.name is IdentityName.STEIN
    assert report.case == "js_shrinkage"

    control = verify_stein_identity(
        JamesSteinField(), [0.0] * 5, n=50_000, seed=4, negative_control=True
    )
    # flipping g moves the left side from -(p - 2) to p - 2
    assert control.lhs_mean == pytest.approx(3.0, abs=0.2)
    assert not control.passed
    assert control.negative_control


def test_variance_statistic_identity() -> None:
    theta = [1.0, 0.0, 0.0]
    report = verify_lemma_a1(theta, 1.0, 3, n=50_000, seed=6, h=SPowerField(1.0))
    # E[S/σ²] = k and the right side is the constant 2 + (k - 2)
    np.testing.assert_allclose(report.rhs_mean, 3.0)
    assert report.passed
    assert not verify_lemma_a1(
        theta, 1.0, 3, n=50_000, seed=6, h=SPowerField(1.0), negative_control=True
    ).passed
    with pytest.raises(ValueError):
        verify_lemma_a1(theta, 1.0, 3, n=10)


def test_spherical_identities() -> None:
    origin = np.zeros(6)
    linear = verify_lemma_a5(LinearField(center=origin), 0.0, 2.0, origin, 4, n=40_000, seed=8)
    # E||X||² = R² p / (p + k)
    assert linear.lhs_mean == pytest.approx(2.4, abs=0.05)
    assert linear.passed

    constant = verify_corollary_a(ConstantField(1.0), 0.0, 2.0, origin, 4, n=40_000, seed=8)
    assert constant.passed
    assert not verify_corollary_a(
        ConstantField(1.0), 0.0, 2.0, origin, 4, n=40_000, seed=8, negative_control=True
    ).passed


@pytest.mark.slow
def test_identity_suite() -> None:
    reports = identity_suite(n=200_000, seed=42)
    assert len(reports) == 12
    assert all(report.passed for report in reports)

    controls = identity_suite(n=200_000, seed=42, negative_control=True)
    assert not any(report.passed for report in controls)


def _at_radius(sampler: SamplerSpec, radius: float) -> SamplerSpec:
    theta = np.zeros(sampler.p)
    theta[0] = radius
    return located(sampler, theta)


UNBIASED_SETTINGS = [
    pytest.param(SamplerSpec(p=5), JS, UNBIASED, id="known-variance"),
    pytest.param(
        SamplerSpec(p=5, k=3),
        EstimatorSpec(kind="js_unknown_var", k=3),
        LossEstimatorSpec(base="unbiased_unknown_var"),
        id="unknown-variance",
    ),
    pytest.param(
        SamplerSpec(kind="scale_mixture", p=6, mixing=MixingSpec.student_t(6.0)),
        EstimatorSpec(),
        LossEstimatorSpec(base="constant_spherical"),
        id="student-t",
    ),
    pytest.param(
        SamplerSpec(
            kind="spherical_residual", p=6, k=4, radial=RadialSpec.fixed(math.sqrt(10.0))
        ),
        EstimatorSpec(kind="residual_shrinkage", k=4),
        LossEstimatorSpec(base="residual_shrinkage"),
        id="residual-fixed-radius",
    ),
    pytest.param(
        SamplerSpec(kind="spherical_residual", p=6, k=4, radial=RadialSpec.chi()),
        EstimatorSpec(kind="residual_shrinkage", k=4),
        LossEstimatorSpec(base="residual_shrinkage"),
        id="residual-normal",
    ),
]


@pytest.mark.slow
@pytest.mark.parametrize("radius", [0.0, 2.0, 5.0])
@pytest.mark.parametrize(("sampler", "est", "delta"), UNBIASED_SETTINGS)
def test_unbiased_loss_estimates(
    sampler: SamplerSpec, est: EstimatorSpec, delta: LossEstimatorSpec, radius: float
) -> None:
    spec = _at_radius(sampler, radius)
    loss_estimator = build_loss_estimator(delta, est, spec)
    loss = loss_of(build_estimator(est), spec)

    def evaluate(draws: Draws) -> Dict[str, np.ndarray]:
        return {"gap": loss_estimator(draws.x, draws.s, draws.u) - loss(draws)}

    table = mc_columns(spec, evaluate, 200_000, seed=21)
    assert abs(table.mean("gap")) <= 4.0 * table.se("gap")


# Paired gap against -factor E[1/||X||⁴]: 4(p - 4)² for the MLE, 4p² for James-Stein.
# The per-draw gap has a finite variance only for p > 8, so p = 5 runs far from the origin.
@pytest.mark.slow
@pytest.mark.parametrize(
    ("builder", "p", "radius", "factor"),
    [
        (johnstone_mle, 5, 5.0, 4.0),
        (johnstone_js, 5, 5.0, 100.0),
        *[(johnstone_mle, 12, radius, 256.0) for radius in (0.0, 2.0, 5.0)],
        *[(johnstone_js, 12, radius, 576.0) for radius in (0.0, 2.0, 5.0)],
    ],
)
def test_johnstone_risk_gap(
    builder: Callable[[int], ExperimentConfig], p: int, radius: float, factor: float
) -> None:
    config = builder(p)
    assert config.sampler is not None
    spec = _at_radius(config.sampler, radius)
    unbiased, corrected = (
        build_loss_estimator(delta, config.estimator, spec) for delta in config.loss_estimators
    )
    loss = loss_of(build_estimator(config.estimator), spec)

    def evaluate(draws: Draws) -> Dict[str, np.ndarray]:
        value = loss(draws)
        diff = np.square(corrected(draws.x) - value) - np.square(unbiased(draws.x) - value)
        target = -factor / np.square(np.sum(draws.x**2, axis=1))
        return {"diff": diff, "gap": diff - target}

    table = mc_columns(spec, evaluate, 200_000, seed=22)
    assert table.mean("diff") < 0
    assert abs(table.mean("gap")) <= 4.0 * table.se("gap")


def test_heavy_paired_tails_are_flagged() -> None:
    config = johnstone_mle(5)
    assert config.sampler is not None
    with pytest.warns(FinitenessWarning):
        messages = finiteness_warnings(config.estimator, config.loss_estimators, config.sampler)
    assert len(messages) == 1
    assert "fourth moment of correction" in messages[0]

    wide = johnstone_mle(12)
    assert wide.sampler is not None
    assert finiteness_warnings(wide.estimator, wide.loss_estimators, wide.sampler) == []


@pytest.mark.slow
def test_positive_part_never_increases_the_error() -> None:
    config = get_preset("residual-js")
    assert config.sampler is not None
    spec = config.sampler
    unbiased, positive = (
        build_loss_estimator(delta, config.estimator, spec) for delta in config.loss_estimators
    )
    loss = loss_of(build_estimator(config.estimator), spec)

    def evaluate(draws: Draws) -> Dict[str, np.ndarray]:
        value = loss(draws)
        excess = np.square(positive(draws.x, u=draws.u) - value) - np.square(
            unbiased(draws.x, u=draws.u) - value
        )
        return {"worse": (excess > 0).astype(float), "better": (excess < 0).astype(float)}

    table = mc_columns(spec, evaluate, 1_000_000, seed=23)
    assert table.n == 1_000_000
    assert table.mean("worse") == 0.0
    assert table.mean("better") > 0.0

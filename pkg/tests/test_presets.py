"""Tests for the named experiment presets."""

from __future__ import annotations

import numpy as np
import pytest

from steinloss.config import get_settings
from steinloss.domination import run_conditions
from steinloss.enums import ExperimentKind, IdentityName
from steinloss.exceptions import ConfigError
from steinloss.fields import build_field
from steinloss.models import GridSpec
from steinloss.presets import (
    get_preset,
    johnstone_mle,
    list_presets,
    mixture_t,
    preset_names,
    wan_zou,
)
from steinloss.risk_engine import theta_sweep

GRID = GridSpec(radii=[0.3, 1.0, 3.0, 10.0], directions_per_radius=3, s_values=[0.5, 2.0])


@pytest.mark.parametrize("name", preset_names())
def test_every_preset_builds(name: str) -> None:
    config = get_preset(name)
    assert config.name == name
    assert config.description


@pytest.mark.parametrize(
    "name", [name for name in preset_names() if get_preset(name).conditions]
)
def test_preset_conditions_hold(name: str) -> None:
    reports = run_conditions(get_preset(name).conditions, GRID)
    assert reports
    assert all(report.passed for report in reports)


def test_get_preset_normalizes_name() -> None:
    assert get_preset("  Wan-Zou ").name == "wan-zou"
    with pytest.raises(ConfigError, match="unknown preset"):
        get_preset("james-stein-2")


def test_list_presets() -> None:
    assert len(list_presets()) == len(preset_names())
    assert [name for name, _ in list_presets("residual")] == [
        "residual-ls",
        "residual-ls-fixed",
        "residual-js",
    ]
    assert list_presets("nothing-matches") == []


def test_preset_constants() -> None:
    mle = johnstone_mle(p=7)
    corrected = mle.loss_estimators[1].correction
    assert corrected is not None and corrected.alpha_or_d == pytest.approx(6.0)
    assert mle.assert_domination

    unknown = wan_zou()
    assert unknown.sigma2_values == [0.5, 1.0, 2.0]
    assert unknown.conditions[0].alpha_or_d == pytest.approx(-2.72)

    # k (p - 4) with k = 40/9 for the multivariate t with 6 dof in p = 6
    t_law = mixture_t()
    correction = t_law.loss_estimators[1].correction
    assert correction is not None and correction.alpha_or_d == pytest.approx(80.0 / 9.0)

    square = get_preset("bayes-paradox-1d-t")
    assert square.kind is ExperimentKind.SQUARE_1D
    assert square.expected_paired_diff == pytest.approx(6.25)
    assert get_preset("bayes-paradox-1d").expected_paired_diff == pytest.approx(4.0)

    assert get_preset("identities").identities == list(IdentityName)
    assert get_preset("ridge-fixture").model_select is not None


def test_prior_shifted_text_matches_its_field() -> None:
    config = get_preset("prior-shifted")
    assert config.description is not None and "||x||^2/2 + a" in config.description
    prior_spec = config.conditions[0].prior
    assert prior_spec is not None
    prior = build_field(prior_spec)
    # (||x||²/2 + a)^(-b) with a = b = 1 at ||x||² = 4
    assert prior(np.array([2.0] + [0.0] * 7)) == pytest.approx(1.0 / 3.0)


@pytest.mark.slow
@pytest.mark.parametrize(
    "name",
    ["johnstone-mle", "johnstone-js", "wan-zou", "mixture-t", "residual-ls", "residual-ls-fixed"],
)
def test_corrected_loss_estimate_dominates(name: str) -> None:
    config = get_preset(name).with_overrides(n=100_000, seed=31)
    run = config.resolved(get_settings())
    reports = theta_sweep(config, run)
    paired = [report for report in reports if report.is_paired]
    assert len(paired) == len(config.theta_radii) * max(1, len(config.sigma2_values))
    assert all(report.loss_estimator == "corrected" for report in paired)
    assert all(report.dominates(run.tolerance_se) for report in paired)

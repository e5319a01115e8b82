"""Named experiment presets."""

from __future__ import annotations

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

from .config import ConditionCheckSpec, ExperimentConfig, ModelSelectSpec, Square1DSpec
from .domination import mixture_k, residual_ls_bound, unknown_var_d_bound
from .enums import (
    ConditionName,
    CorrectionDirection,
    Density1D,
    EstimatorKind,
    ExperimentKind,
    FieldName,
    IdentityName,
    LossEstimatorBase,
    SamplerKind,
)
from .exceptions import ConfigError
from .models import (
    CorrectionSpec,
    EstimatorSpec,
    FieldSpec,
    LossEstimatorSpec,
    MixingSpec,
    RadialSpec,
    SamplerSpec,
)

_LOGGER = logging.getLogger(__name__)

INVERSE_SQUARE = FieldSpec(name=FieldName.NORM_POWER, params={"a": 2.0})


def _unbiased_and_corrected(
    base: LossEstimatorBase, constant: float, direction: CorrectionDirection
) -> List[LossEstimatorSpec]:
    correction = CorrectionSpec(gamma=INVERSE_SQUARE, alpha_or_d=constant, direction=direction)
    return [
        LossEstimatorSpec(name="unbiased", base=base),
        LossEstimatorSpec(name="corrected", base=base, correction=correction),
    ]


def _known_var_check(p: int, constant: float, g: Optional[FieldSpec] = None) -> ConditionCheckSpec:
    return ConditionCheckSpec(
        condition=ConditionName.KNOWN_VAR,
        label="corrected",
        p=p,
        gamma=INVERSE_SQUARE,
        alpha_or_d=constant,
        g=g,
    )


def johnstone_mle(p: int = 5) -> ExperimentConfig:
    """p - 2(p - 4)/||x||² against the constant p for the MLE, p >= 5."""
    constant = 2.0 * (p - 4)
    return ExperimentConfig(
        name="johnstone-mle",
        description="MLE, known variance: p - 2(p-4)/||x||^2 dominates p",
        sampler=SamplerSpec(p=p),
        estimator=EstimatorSpec(kind=EstimatorKind.MLE, p=p),
        loss_estimators=_unbiased_and_corrected(
            LossEstimatorBase.SURE_KNOWN_VAR, constant, CorrectionDirection.SHRINK
        ),
        assert_domination=True,
        conditions=[_known_var_check(p, constant)],
    )


def johnstone_js(p: int = 5) -> ExperimentConfig:
    """The unbiased estimate of the James-Stein loss raised by 2p/||x||²."""
    constant = 2.0 * p
    return ExperimentConfig(
        name="johnstone-js",
        description="James-Stein, known variance: adding 2p/||x||^2 dominates the SURE",
        sampler=SamplerSpec(p=p),
        estimator=EstimatorSpec(kind=EstimatorKind.JAMES_STEIN, p=p),
        loss_estimators=_unbiased_and_corrected(
            LossEstimatorBase.SURE_KNOWN_VAR, constant, CorrectionDirection.EXPAND
        ),
        assert_domination=True,
        conditions=[
            _known_var_check(p, -constant, FieldSpec(name=FieldName.JS_SHRINKAGE)),
            ConditionCheckSpec(
                condition=ConditionName.SIGN_LAPLACIAN,
                label="sign-of-laplacian",
                p=p,
                alpha_or_d=constant,
                m=FieldSpec(name=FieldName.FUNDAMENTAL_HARMONIC),
                xi=FieldSpec(name=FieldName.NORM_POWER, params={"a": float(p)}),
            ),
        ],
    )


def wan_zou(p: int = 5, k: int = 3) -> ExperimentConfig:
    """Unknown variance James-Stein with the loss estimate raised by d S/||x||²."""
    constant = unknown_var_d_bound(p, k) / 2.0
    return ExperimentConfig(
        name="wan-zou",
        description="James-Stein, unknown variance: the corrected estimate dominates",
        sampler=SamplerSpec(p=p, k=k),
        estimator=EstimatorSpec(kind=EstimatorKind.JS_UNKNOWN_VAR, p=p, k=k),
        loss_estimators=_unbiased_and_corrected(
            LossEstimatorBase.UNBIASED_UNKNOWN_VAR, constant, CorrectionDirection.EXPAND
        ),
        sigma2_values=[0.5, 1.0, 2.0],
        assert_domination=True,
        conditions=[
            ConditionCheckSpec(
                condition=ConditionName.UNKNOWN_VAR,
                label="corrected",
                p=p,
                k=k,
                gamma=INVERSE_SQUARE,
                alpha_or_d=-constant,
                g=FieldSpec(name=FieldName.JS_UNKNOWN_VAR, params={"k": k}),
            )
        ],
    )


def mixture_t(p: int = 6, dof: float = 6.0) -> ExperimentConfig:
    """Multivariate t: E[R²] - c/||x||² against E[R²] for the MLE."""
    mixing = MixingSpec.student_t(dof)
    constant = mixture_k(mixing, p) * (p - 4)
    sampler = SamplerSpec(kind=SamplerKind.SCALE_MIXTURE, p=p, mixing=mixing)
    return ExperimentConfig(
        name="mixture-t",
        description="Multivariate t (gamma mixing): the corrected constant dominates E[R^2]",
        sampler=sampler,
        estimator=EstimatorSpec(kind=EstimatorKind.MLE, p=p),
        loss_estimators=_unbiased_and_corrected(
            LossEstimatorBase.CONSTANT_SPHERICAL, constant, CorrectionDirection.SHRINK
        ),
        assert_domination=True,
        conditions=[
            ConditionCheckSpec(
                condition=ConditionName.MIXTURE,
                label="corrected",
                p=p,
                gamma=INVERSE_SQUARE,
                alpha_or_d=constant,
                mixing=mixing,
            )
        ],
    )


def _residual_ls(name: str, radial: RadialSpec, p: int, k: int) -> ExperimentConfig:
    constant = residual_ls_bound(p, k) / 2.0
    return ExperimentConfig(
        name=name,
        description="Residual setting, MLE: p||U||^2/k - d||U||^4/||x||^2 dominates",
        sampler=SamplerSpec(kind=SamplerKind.SPHERICAL_RESIDUAL, p=p, k=k, radial=radial),
        estimator=EstimatorSpec(kind=EstimatorKind.MLE, p=p),
        loss_estimators=_unbiased_and_corrected(
            LossEstimatorBase.RESIDUAL_LS, constant, CorrectionDirection.SHRINK
        ),
        assert_domination=True,
        conditions=[
            ConditionCheckSpec(
                condition=ConditionName.RESIDUAL_LS,
                label="corrected",
                p=p,
                k=k,
                gamma=INVERSE_SQUARE,
                alpha_or_d=constant,
            ),
            ConditionCheckSpec(
                condition=ConditionName.RESIDUAL_SHRINK,
                label="corrected, g = 0",
                p=p,
                k=k,
                gamma=INVERSE_SQUARE,
                alpha_or_d=constant,
                g=FieldSpec(name=FieldName.ZERO),
            ),
        ],
    )


def residual_ls(p: int = 6, k: int = 4) -> ExperimentConfig:
    """Residual-setting correction under the normal radial law."""
    return _residual_ls("residual-ls", RadialSpec.chi(), p, k)


def residual_ls_fixed(p: int = 6, k: int = 4) -> ExperimentConfig:
    """Residual-setting correction when (X - θ, U) lies on a sphere of fixed radius."""
    return _residual_ls("residual-ls-fixed", RadialSpec.fixed(math.sqrt(p + k)), p, k)


def residual_js(p: int = 6, k: int = 4) -> ExperimentConfig:
    """Residual James-Stein: its unbiased loss estimate against the positive part."""
    return ExperimentConfig(
        name="residual-js",
        description="Residual James-Stein: the positive part of the unbiased estimate dominates",
        sampler=SamplerSpec(
            kind=SamplerKind.SPHERICAL_RESIDUAL, p=p, k=k, radial=RadialSpec.chi()
        ),
        estimator=EstimatorSpec(kind=EstimatorKind.RESIDUAL_SHRINKAGE, p=p, k=k),
        loss_estimators=[
            LossEstimatorSpec(name="unbiased", base=LossEstimatorBase.RESIDUAL_SHRINKAGE),
            LossEstimatorSpec(
                name="positive-part",
                base=LossEstimatorBase.RESIDUAL_SHRINKAGE,
                positive_part=True,
            ),
        ],
        assert_domination=True,
    )


def bayes_paradox_1d(
    density: Density1D = Density1D.NORMAL, dof: Optional[float] = None
) -> ExperimentConfig:
    """X² + E₀[X²] against X² - E₀[X²] as estimates of θ².

    The paired risk gap is the constant 4 E₀[X²]².
    """
    square = Square1DSpec(density=density, dof=dof)
    second_moment = 1.0 if dof is None else dof / (dof - 2.0)
    suffix = "" if density is Density1D.NORMAL else "-t"
    return ExperimentConfig(
        name=f"bayes-paradox-1d{suffix}",
        kind=ExperimentKind.SQUARE_1D,
        description="One-dimensional square: generalized Bayes vs unbiased, constant gap",
        square=square,
        expected_paired_diff=4.0 * second_moment**2,
    )


def thm21_js(p: int = 5) -> ExperimentConfig:
    """Sign-of-Laplacian correction for m = ||x||^(2-p), ξ = ||x||^(-p); K0 = 2p."""
    return ExperimentConfig(
        name="thm21-js",
        kind=ExperimentKind.CHECK_CONDITIONS,
        description="Sign-of-Laplacian correction of the James-Stein estimator",
        conditions=[
            ConditionCheckSpec(
                condition=ConditionName.SIGN_LAPLACIAN,
                label="js",
                p=p,
                alpha_or_d=2.0 * p,
                m=FieldSpec(name=FieldName.FUNDAMENTAL_HARMONIC),
                xi=FieldSpec(name=FieldName.NORM_POWER, params={"a": float(p)}),
            )
        ],
    )


def thm21_mle(p: int = 5) -> ExperimentConfig:
    """Sign-of-Laplacian correction for m ≡ 1, ξ = ||x||^(-2); K0 = 2(p - 4)."""
    return ExperimentConfig(
        name="thm21-mle",
        kind=ExperimentKind.CHECK_CONDITIONS,
        description="Sign-of-Laplacian correction of the MLE",
        conditions=[
            ConditionCheckSpec(
                condition=ConditionName.SIGN_LAPLACIAN,
                label="mle",
                p=p,
                alpha_or_d=2.0 * (p - 4),
                m=FieldSpec(name=FieldName.CONSTANT),
                xi=INVERSE_SQUARE,
            )
        ],
    )


def prior_shifted(p: int = 8, a: float = 1.0, b: float = 1.0) -> ExperimentConfig:
    """Prior condition (Δπ/π)² - 2Δ²π/π <= 0 for π = (||x||²/2 + a)^(-b)."""
    return ExperimentConfig(
        name="prior-shifted",
        kind=ExperimentKind.CHECK_CONDITIONS,
        description="Prior (||x||^2/2 + a)^(-b) satisfies the bi-Laplacian condition (p = 8)",
        conditions=[
            ConditionCheckSpec(
                condition=ConditionName.PRIOR,
                label=f"a={a:g},b={b:g}",
                p=p,
                prior=FieldSpec(name=FieldName.PRIOR_SHIFTED_POWER, params={"a": a, "b": b}),
            )
        ],
    )


def ridge_fixture() -> ExperimentConfig:
    """Cp* selection of the ridge penalty on the bundled regression fixture."""
    return ExperimentConfig(
        name="ridge-fixture",
        kind=ExperimentKind.MODEL_SELECT,
        description="Ridge penalty chosen by Cp* on the bundled synthetic data",
        model_select=ModelSelectSpec(),
    )


def identities() -> ExperimentConfig:
    """Every expectation identity with its three positive cases."""
    return ExperimentConfig(
        name="identities",
        kind=ExperimentKind.VERIFY_IDENTITIES,
        description="Stein identity and the spherical integration-by-parts identities",
        identities=list(IdentityName),
    )


_PRESETS: Dict[str, Callable[[], ExperimentConfig]] = {
    "johnstone-mle": johnstone_mle,
    "johnstone-js": johnstone_js,
    "wan-zou": wan_zou,
    "mixture-t": mixture_t,
    "residual-ls": residual_ls,
    "residual-ls-fixed": residual_ls_fixed,
    "residual-js": residual_js,
    "bayes-paradox-1d": bayes_paradox_1d,
    "bayes-paradox-1d-t": lambda: bayes_paradox_1d(Density1D.STUDENT_T, dof=10.0),
    "thm21-js": thm21_js,
    "thm21-mle": thm21_mle,
    "prior-shifted": prior_shifted,
    "identities": identities,
    "ridge-fixture": ridge_fixture,
}


def preset_names() -> List[str]:
    """Return every preset name."""
    return list(_PRESETS)


def get_preset(name: str) -> ExperimentConfig:
    """Return the experiment of preset ``name``."""
    try:
        builder = _PRESETS[name.strip().lower()]
    except KeyError as exc:
        raise ConfigError(f"unknown preset: {name}") from exc
    _LOGGER.debug("Loaded preset %s", name)
    return builder()


def list_presets(pattern: Optional[str] = None) -> List[Tuple[str, str]]:
    """Return (name, description) of the presets whose name contains ``pattern``."""
    needle = (pattern or "").strip().lower()
    return [
        (name, get_preset(name).description or "")
        for name in _PRESETS
        if needle in name
    ]

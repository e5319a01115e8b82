"""Module that defines various enums."""

from __future__ import annotations

import logging
from enum import Enum, unique
from typing import Any

_LOGGER = logging.getLogger(__name__)


class _NamedKind(str, Enum):
    """String enum that accepts case and hyphen variations of its values."""

    @classmethod
    def _missing_(cls, value: Any) -> Any:
        if isinstance(value, str):
            normalized = value.strip().lower().replace("-", "_").replace(" ", "_")
            for member in cls:
                if member.value == normalized:
                    return member
        _LOGGER.debug("Unknown %s value: %s", cls.__name__, value)
        return None


@unique
class FieldName(_NamedKind):
    """Field library entries."""

    CONSTANT = "constant"
    FUNDAMENTAL_HARMONIC = "fundamental_harmonic"
    NORM_POWER = "norm_power"
    SHIFTED_NORM_POWER = "shifted_norm_power"
    PRIOR_SHIFTED_POWER = "prior_shifted_power"
    JS_SHRINKAGE = "js_shrinkage"
    ZERO = "zero"
    LINEAR = "linear"
    PSEUDO_BAYES_SHIFT = "pseudo_bayes_shift"
    GAUSSIAN = "gaussian"
    GRADIENT = "gradient"
    JS_UNKNOWN_VAR = "js_unknown_var"
    SCALED_LINEAR_S = "scaled_linear_s"
    S_POWER = "s_power"


@unique
class SamplerKind(_NamedKind):
    """Distributional settings."""

    NORMAL = "normal"
    SCALE_MIXTURE = "scale_mixture"
    RADIAL_SPHERICAL = "radial_spherical"
    SPHERICAL_RESIDUAL = "spherical_residual"


@unique
class MixingKind(_NamedKind):
    """Mixing laws G of the precision ς."""

    POINT_MASS = "point_mass"
    TWO_POINT = "two_point"
    GAMMA = "gamma"


@unique
class RadialKind(_NamedKind):
    """Radial laws of R = ||X - θ||."""

    FIXED = "fixed"
    CHI = "chi"
    MIXTURE_INDUCED = "mixture_induced"


@unique
class EstimatorKind(_NamedKind):
    """Point estimators of θ."""

    MLE = "mle"
    JAMES_STEIN = "james_stein"
    PSEUDO_BAYES = "pseudo_bayes"
    JS_UNKNOWN_VAR = "js_unknown_var"
    RESIDUAL_SHRINKAGE = "residual_shrinkage"


@unique
class LossEstimatorBase(_NamedKind):
    """Base (uncorrected) loss estimators."""

    SURE_KNOWN_VAR = "sure_known_var"
    UNBIASED_UNKNOWN_VAR = "unbiased_unknown_var"
    CONSTANT_SPHERICAL = "constant_spherical"
    RESIDUAL_LS = "residual_ls"
    RESIDUAL_SHRINKAGE = "residual_shrinkage"
    POSTERIOR_RISK = "posterior_risk"
    CONSTANT = "constant"


@unique
class SignMode(_NamedKind):
    """How the sign of a correction is determined."""

    FIXED = "fixed"
    SGN_LAPLACIAN = "sgn_laplacian"


@unique
class CorrectionDirection(_NamedKind):
    """Whether a fixed-sign correction lowers or raises the base estimate."""

    SHRINK = "shrink"
    EXPAND = "expand"


@unique
class Density1D(_NamedKind):
    """Location densities of the one-dimensional square-estimation example."""

    NORMAL = "normal"
    STUDENT_T = "student_t"


@unique
class IdentityName(_NamedKind):
    """Identity verifiers."""

    STEIN = "stein"
    LEMMA_A1 = "lemma_a1"
    LEMMA_A5 = "lemma_a5"
    COROLLARY_A = "corollary_a"


@unique
class ExperimentKind(_NamedKind):
    """Experiments run by the command line."""

    RISK_COMPARE = "risk_compare"
    SQUARE_1D = "square_1d"
    VERIFY_IDENTITIES = "verify_identities"
    CHECK_CONDITIONS = "check_conditions"
    MODEL_SELECT = "model_select"


@unique
class ConditionName(_NamedKind):
    """Differential inequality checks."""

    KNOWN_VAR = "known_var"
    UNKNOWN_VAR = "unknown_var"
    MIXTURE = "mixture"
    GENERAL_SPHERICAL = "general_spherical"
    RESIDUAL_LS = "residual_ls"
    RESIDUAL_SHRINK = "residual_shrink"
    PRIOR = "prior"
    SIGN_LAPLACIAN = "sign_laplacian"

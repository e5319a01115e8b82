"""The exceptions and warnings used by the steinloss library."""


class SteinLossError(Exception):
    """General steinloss exception occurred."""


class CalculusError(SteinLossError):
    """Differential operator related exception occurred."""


class StencilOnSingularityError(CalculusError):
    """A finite-difference stencil touched a declared singularity of a field."""


class UnknownFieldError(CalculusError):
    """A field name is not present in the field library."""


class SamplerError(SteinLossError):
    """Sampler related exception occurred."""


class UnsupportedDistributionError(SamplerError):
    """The requested operation is not available for this distribution."""


class EstimatorError(SteinLossError):
    """Point estimator related exception occurred."""


class ShrinkageSingularityError(EstimatorError):
    """A shrinkage estimator was evaluated at its singularity (x = 0)."""


class MissingStatisticError(EstimatorError):
    """An observation lacks the statistic (s or u) the estimator needs."""


class InvalidMarginalError(EstimatorError):
    """A pseudo-marginal m was nonpositive where it had to be positive."""


class SteinDomainError(SteinLossError):
    """An argument lies outside the mathematical domain of an operation."""


class ModelSelectionError(SteinLossError):
    """Linear model / model selection related exception occurred."""


class RankDeficientError(ModelSelectionError):
    """The design matrix does not have full column rank."""


class InvalidPenaltyError(ModelSelectionError):
    """A ridge penalty was negative."""


class DegenerateResidualError(ModelSelectionError):
    """No residual degrees of freedom are left (n = p)."""


class DataFormatError(ModelSelectionError):
    """Input data could not be parsed into a linear model."""


class ConfigError(SteinLossError):
    """An experiment configuration is inconsistent."""


class SteinLossWarning(UserWarning):
    """Base class of advisory warnings."""


class FinitenessWarning(SteinLossWarning):
    """A risk or moment the theory requires may be infinite."""


class CorrectionRangeWarning(SteinLossWarning):
    """A correction constant lies outside its domination range."""


class MonteCarloPrecisionWarning(SteinLossWarning):
    """A Monte Carlo estimate has a large relative standard error."""


class Sigma2DependenceWarning(SteinLossWarning):
    """A smoother depending on the variance estimate was plugged into Cp*."""

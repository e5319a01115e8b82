"""Module that defines various constants used across steinloss."""

DEFAULT_SEED = 42
DEFAULT_THREADS = 1
DEFAULT_BLOCK_SIZE = 8192
DEFAULT_RISK_REPLICATIONS = 200_000
DEFAULT_IDENTITY_REPLICATIONS = 1_000_000
DEFAULT_TOLERANCE_SE = 4.0

# Inequality checks pass when LHS <= PASS_TOLERANCE.
PASS_TOLERANCE = 1e-9
# Reports flag Monte Carlo estimates whose SE exceeds this fraction of |mean|.
RELATIVE_SE_FLAG = 0.2
# Stencil points closer than this many steps to a singularity are rejected.
SINGULARITY_GUARD_STEPS = 10.0
# Draws with a norm below this are treated as hitting a shrinkage singularity.
SINGULAR_NORM = 1e-12

GRID_RADII_MIN = 0.1
GRID_RADII_MAX = 50.0
GRID_RADII_COUNT = 40
GRID_DIRECTIONS = 64

QUAD_RELATIVE_TOLERANCE = 1e-8
QUAD_TRUNCATION_RATIO = 1e-15

CSV_FLOAT_FORMAT = "%.17g"

EVIDENCE_NOTE = "grid evaluation is evidence, not proof"
REFUTE_ONLY_NOTE = (
    "global conditions can only be refuted on a grid, never confirmed"
)


class RiskColumn:
    """Risk comparison CSV columns."""

    THETA_NORM = "theta_norm"
    ESTIMATOR = "estimator"
    LOSS_ESTIMATOR = "loss_estimator"
    MEAN = "mean"
    SE = "se"
    N = "n"
    SEED = "seed"
    PAIRED_DIFF_MEAN = "paired_diff_mean"
    PAIRED_DIFF_SE = "paired_diff_se"
    SIGMA2 = "sigma2"
    REDRAWS = "redraws"

    ALL = (
        THETA_NORM,
        ESTIMATOR,
        LOSS_ESTIMATOR,
        MEAN,
        SE,
        N,
        SEED,
        PAIRED_DIFF_MEAN,
        PAIRED_DIFF_SE,
        SIGMA2,
        REDRAWS,
    )


class ConditionColumn:
    """Per-point condition CSV columns."""

    CONDITION = "condition"
    RADIUS = "radius"
    S = "s"
    LHS = "lhs"
    PASSED = "passed"

    ALL = (CONDITION, RADIUS, S, LHS, PASSED)


class IdentityColumn:
    """Identity verification CSV columns."""

    IDENTITY = "identity"
    CASE = "case"
    LHS_MEAN = "lhs_mean"
    RHS_MEAN = "rhs_mean"
    DIFF_MEAN = "diff_mean"
    DIFF_SE = "diff_se"
    N = "n"
    SEED = "seed"
    PASSED = "passed"

    ALL = (IDENTITY, CASE, LHS_MEAN, RHS_MEAN, DIFF_MEAN, DIFF_SE, N, SEED, PASSED)


class CpColumn:
    """Cp* table CSV columns."""

    LAMBDA = "lambda"
    RSS = "rss"
    DF = "df"
    CP_STAR = "cp_star"

    ALL = (LAMBDA, RSS, DF, CP_STAR)

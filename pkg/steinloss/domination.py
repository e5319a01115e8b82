"""Grid evaluation of the differential domination inequalities.

Every check evaluates the left-hand side of an inequality ``LHS(x) <= 0`` on a
radial x random-direction grid and passes when all values are below the grid
tolerance. A passing grid is evidence, not proof.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from . import calculus
from .const import (
    QUAD_RELATIVE_TOLERANCE,
    QUAD_TRUNCATION_RATIO,
    REFUTE_ONLY_NOTE,
    SINGULAR_NORM,
)
from .config import ConditionCheckSpec
from .enums import ConditionName
from .exceptions import (
    CalculusError,
    FinitenessWarning,
    StencilOnSingularityError,
    UnsupportedDistributionError,
)
from .fields import JointVectorField, ScalarField, VectorField, build_field
from .fields.corrections import ScaledField, SignLaplacianCorrection
from .fields.shrinkage import PseudoBayesShift, ZeroField, as_joint
from .models import ConditionReport, GridSpec, MixingSpec, SamplerSpec
from .samplers import expected_squared_radius, generating_function, mixing_moment
from .utils import send_warning

_LOGGER = logging.getLogger(__name__)

Generator = Callable[[np.ndarray], np.ndarray]


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, x)


def grid_points(grid: GridSpec, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Return the grid points (n, p) and the radius of each point.

    The first direction is e1; the others are uniform on the sphere, drawn from
    ``grid.seed`` so that the grid is reproducible.
    """
    rng = np.random.default_rng(grid.seed)
    directions = np.zeros((grid.directions_per_radius, p))
    directions[0, 0] = 1.0
    if grid.directions_per_radius > 1:
        extra = rng.standard_normal((grid.directions_per_radius - 1, p))
        directions[1:] = extra / np.linalg.norm(extra, axis=1, keepdims=True)
    radii = np.asarray(grid.radii, dtype=float)
    points = (radii[:, np.newaxis, np.newaxis] * directions[np.newaxis, :, :]).reshape(-1, p)
    point_radii = np.repeat(radii, grid.directions_per_radius)
    _LOGGER.debug("Built grid of %s points in R^%s", points.shape[0], p)
    return points, point_radii


def _guard_singularities(points: np.ndarray, *fields: Any) -> None:
    p = points.shape[-1]
    for field in fields:
        singular = field.singular_points(p)
        if singular.shape[0] == 0:
            continue
        distance = np.linalg.norm(points[:, np.newaxis, :] - singular, axis=-1).min(axis=1)
        if np.any(distance <= SINGULAR_NORM):
            raise StencilOnSingularityError(f"grid point on the singular set of {field.name}")


def _report(
    name: ConditionName,
    lhs: np.ndarray,
    radii: np.ndarray,
    tolerance: float,
    s_values: Optional[np.ndarray] = None,
    constants: Optional[dict] = None,
    note: Optional[str] = None,
) -> ConditionReport:
    values = np.asarray(lhs, dtype=float)
    if not np.all(np.isfinite(values)):
        raise CalculusError(f"{name.value} produced non-finite values on the grid")
    extra = {} if note is None else {"note": note}
    report = ConditionReport(
        name=name,
        passed=bool(np.all(values <= tolerance)),
        max_lhs=float(values.max()),
        tolerance=tolerance,
        radii=radii.tolist(),
        s_values=[] if s_values is None else np.asarray(s_values, dtype=float).tolist(),
        values=values.tolist(),
        constants=constants or {},
        **extra,
    )
    _LOGGER.debug(
        "%s: max LHS %.6g over %s points, passed=%s",
        name.value,
        report.max_lhs,
        report.n_points,
        report.passed,
    )
    return report


# ---- known variance ----


def known_var_lhs(gamma: ScalarField, g: VectorField, x: np.ndarray) -> np.ndarray:
    """Return γ² + 4 ∇γᵗ g + 2 Δγ at x."""
    grad = calculus.gradient(gamma, x)
    return (
        gamma.value(x) ** 2
        + 4.0 * np.einsum("...i,...i->...", grad, g.value(x))
        + 2.0 * calculus.laplacian(gamma, x)
    )


def check_known_var(gamma: ScalarField, g: VectorField, grid: GridSpec, p: int) -> ConditionReport:
    """Check γ² + 4 ∇γᵗ g + 2 Δγ <= 0, the known-variance domination condition."""
    points, radii = grid_points(grid, p)
    _guard_singularities(points, gamma, g)
    return _report(ConditionName.KNOWN_VAR, known_var_lhs(gamma, g, points), radii, grid.tolerance)


def compute_K0(m: ScalarField, xi: ScalarField, grid: GridSpec, p: int) -> float:
    """Return the grid infimum of m |Δξ| / ξ².

    The true constant is an infimum over R^p; the grid value is an upper bound
    and only decreases as the grid is refined.
    """
    points, _ = grid_points(grid, p)
    _guard_singularities(points, m, xi)
    ratio = m.value(points) * np.abs(calculus.laplacian(xi, points)) / xi.value(points) ** 2
    k0 = float(np.min(ratio))
    _LOGGER.debug("K0 grid infimum %.12g", k0)
    return k0


def alpha_range_thm21(
    m: ScalarField, xi: ScalarField, grid: GridSpec, p: int
) -> Tuple[float, float]:
    """Return the open interval (0, 2 K0) of admissible correction constants α."""
    return 0.0, 2.0 * compute_K0(m, xi, grid, p)


def check_sign_laplacian(
    m: ScalarField, xi: ScalarField, alpha: float, grid: GridSpec, p: int
) -> ConditionReport:
    """Check the known-variance condition for γ = -α sgn(Δξ) ξ/m and g = ∇m/m."""
    k0 = compute_K0(m, xi, grid, p)
    gamma = SignLaplacianCorrection(m, xi, alpha)
    points, radii = grid_points(grid, p)
    _guard_singularities(points, gamma)
    lhs = known_var_lhs(gamma, PseudoBayesShift(m), points)
    constants = {"K0": k0, "alpha": alpha, "alpha_max": 2.0 * k0}
    return _report(
        ConditionName.SIGN_LAPLACIAN,
        lhs,
        radii,
        grid.tolerance,
        constants=constants,
        note=REFUTE_ONLY_NOTE,
    )


# ---- unknown variance ----


def unknown_var_lhs(
    gamma: ScalarField, g: JointVectorField, k: int, x: np.ndarray, s: np.ndarray
) -> np.ndarray:
    """Return γ² + (2/(k + 2)) Δγ + 4 gᵗ∇γ + 4 γ ||g||² at (x, s)."""
    values = gamma.value(x)
    shrink = g.value(x, s)
    grad = calculus.gradient(gamma, x)
    return (
        values**2
        + 2.0 / (k + 2) * calculus.laplacian(gamma, x)
        + 4.0 * np.einsum("...i,...i->...", shrink, grad)
        + 4.0 * values * _squared_norm(shrink)
    )


def check_unknown_var(
    gamma: ScalarField,
    g: Union[JointVectorField, VectorField],
    k: int,
    grid: GridSpec,
    p: int,
) -> ConditionReport:
    """Check the unknown-variance condition at every grid point and every s value."""
    joint = as_joint(g)
    points, radii = grid_points(grid, p)
    _guard_singularities(points, gamma, joint)
    lhs_parts, radius_parts, s_parts = [], [], []
    for s_value in grid.s_values:
        s = np.full(points.shape[0], float(s_value))
        lhs_parts.append(unknown_var_lhs(gamma, joint, k, points, s))
        radius_parts.append(radii)
        s_parts.append(s)
    return _report(
        ConditionName.UNKNOWN_VAR,
        np.concatenate(lhs_parts),
        np.concatenate(radius_parts),
        grid.tolerance,
        s_values=np.concatenate(s_parts),
    )


def unknown_var_d_bound(p: int, k: int) -> float:
    """Return (4/(k + 2)) [p + (p - 2)²/(k + 2)], the largest d for γ = -d/||x||²."""
    return 4.0 / (k + 2) * (p + (p - 2) ** 2 / (k + 2))


# ---- scale mixtures ----


def mixture_k(mixing: MixingSpec, p: int) -> float:
    """Return k = 2 E[ς^(p/2)] / E[ς^(p/2 - 2)] for the mixing law."""
    upper = mixing_moment(mixing, p / 2.0)
    lower = mixing_moment(mixing, p / 2.0 - 2.0)
    if not (math.isfinite(upper) and math.isfinite(lower)):
        raise UnsupportedDistributionError(
            f"mixing law lacks the moments of order {p / 2.0:g} and {p / 2.0 - 2.0:g}"
        )
    if not math.isfinite(mixing_moment(mixing, -2.0)):
        send_warning(
            "E[precision^-2] is infinite under the mixing law; corrected risks may diverge",
            FinitenessWarning,
        )
    return 2.0 * upper / lower


def mixture_lhs(gamma: ScalarField, k_const: float, x: np.ndarray) -> np.ndarray:
    """Return k Δγ + γ² at x."""
    return k_const * calculus.laplacian(gamma, x) + gamma.value(x) ** 2


def check_mixture(gamma: ScalarField, k_const: float, grid: GridSpec, p: int) -> ConditionReport:
    """Check k Δγ + γ² <= 0 for a scale mixture of normals."""
    points, radii = grid_points(grid, p)
    _guard_singularities(points, gamma)
    return _report(
        ConditionName.MIXTURE,
        mixture_lhs(gamma, k_const, points),
        radii,
        grid.tolerance,
        constants={"k_const": k_const},
    )


# ---- general spherical laws ----


def _truncation_point(gen: Generator, s: float) -> float:
    peak = float(gen(np.asarray(s)))
    step = max(1.0, s)
    upper = s + step
    for _ in range(200):
        value = float(gen(np.asarray(upper)))
        peak = max(peak, value)
        if value <= QUAD_TRUNCATION_RATIO * peak:
            return upper
        step *= 2.0
        upper = s + step
    raise UnsupportedDistributionError("generating function tail does not decay")


def _tail_integral(func: Callable[[float], float], s: float, upper: float) -> float:
    value, _ = integrate.quad(func, s, upper, epsrel=QUAD_RELATIVE_TOLERANCE, limit=200)
    return float(value)


def spherical_tail_ratios(gen: Generator, s: float) -> Tuple[float, float]:
    """Return ∫_s^∞ g / (2 g(s)) and (∫_s^∞ z g - s ∫_s^∞ g) / (2 g(s))."""
    density = float(gen(np.asarray(s)))
    if density <= 0:
        raise UnsupportedDistributionError(f"generating function vanishes at s={s:g}")
    upper = _truncation_point(gen, s)
    mass = _tail_integral(lambda z: float(gen(np.asarray(z))), s, upper)
    first = _tail_integral(lambda z: z * float(gen(np.asarray(z))), s, upper)
    return mass / (2.0 * density), (first - s * mass) / (2.0 * density)


def check_general_spherical(
    gen: Union[Generator, SamplerSpec],
    delta0: Optional[float],
    p: int,
    s_values: Optional[Sequence[float]] = None,
    tolerance: Optional[float] = None,
) -> Tuple[ConditionReport, float]:
    """Check both tail conditions of a spherical density generator on an s grid.

    Condition one, ∫_s^∞ g / (2 g(s)) <= δ0/p, is reported per s; the returned
    constant is the grid infimum of (∫_s^∞ z g - s ∫_s^∞ g)/(2 g(s)). ``gen`` may
    be a sampler spec, whose generating function and E||X - θ||² are then used.
    """
    if isinstance(gen, SamplerSpec):
        if delta0 is None:
            delta0 = expected_squared_radius(gen)
        gen = generating_function(gen)
    if delta0 is None:
        raise ValueError("delta0 is required with a bare generating function")
    if s_values is None:
        s_values = np.square(GridSpec().radii)
    s_grid = np.asarray(s_values, dtype=float)
    if s_grid.size == 0 or np.any(s_grid < 0):
        raise ValueError("s grid must be a non-empty list of values >= 0")
    ratios = np.array([spherical_tail_ratios(gen, float(s)) for s in s_grid])
    lhs = ratios[:, 0] - delta0 / p
    k_const = float(ratios[:, 1].min())
    limit = max(tolerance if tolerance is not None else 0.0, 10.0 * QUAD_RELATIVE_TOLERANCE)
    report = _report(
        ConditionName.GENERAL_SPHERICAL,
        lhs,
        np.sqrt(s_grid),
        limit,
        s_values=s_grid,
        constants={"k_const": k_const, "delta0": float(delta0)},
    )
    return report, k_const


# ---- residual setting ----


def residual_ls_lhs(gamma: ScalarField, k: int, x: np.ndarray) -> np.ndarray:
    """Return γ² + (2/((k + 4)(k + 6))) Δγ at x."""
    return gamma.value(x) ** 2 + 2.0 / ((k + 4) * (k + 6)) * calculus.laplacian(gamma, x)


def check_residual_ls(gamma: ScalarField, k: int, grid: GridSpec, p: int) -> ConditionReport:
    """Check the residual-setting condition for improving δ0 = p||U||²/k."""
    points, radii = grid_points(grid, p)
    _guard_singularities(points, gamma)
    lhs = residual_ls_lhs(gamma, k, points)
    return _report(ConditionName.RESIDUAL_LS, lhs, radii, grid.tolerance)


def residual_ls_bound(p: int, k: int) -> float:
    """Return 4(p - 4)/((k + 4)(k + 6)), the largest d for γ = d/||x||²."""
    return 4.0 * (p - 4) / ((k + 4) * (k + 6))


def residual_shrink_lhs(gamma: ScalarField, g: VectorField, k: int, x: np.ndarray) -> np.ndarray:
    """Return γ² - (4/(k+2)) γ div g + (4/(k+6)) div(γ g) + (2/((k+4)(k+6))) Δγ at x."""
    values = gamma.value(x)
    div_g = calculus.divergence(g, x)
    grad = calculus.gradient(gamma, x)
    div_product = np.einsum("...i,...i->...", grad, g.value(x)) + values * div_g
    return (
        values**2
        - 4.0 / (k + 2) * values * div_g
        + 4.0 / (k + 6) * div_product
        + 2.0 / ((k + 4) * (k + 6)) * calculus.laplacian(gamma, x)
    )


def check_residual_shrink(
    gamma: ScalarField, g: VectorField, k: int, grid: GridSpec, p: int
) -> ConditionReport:
    """Check the residual-setting condition for improving δ0^g of X + ||U||² g(X)."""
    points, radii = grid_points(grid, p)
    _guard_singularities(points, gamma, g)
    return _report(
        ConditionName.RESIDUAL_SHRINK,
        residual_shrink_lhs(gamma, g, k, points),
        radii,
        grid.tolerance,
    )


# ---- priors and marginals ----


def prior_lhs(pi: ScalarField, x: np.ndarray) -> np.ndarray:
    """Return (Δπ/π)² - 2 Δ²π/π at x."""
    values = pi.value(x)
    return (calculus.laplacian(pi, x) / values) ** 2 - 2.0 * calculus.bilaplacian(pi, x) / values


def check_prior_condition(pi: ScalarField, grid: GridSpec, p: int) -> ConditionReport:
    """Check (Δπ/π)² - 2 Δ²π/π <= 0 for a prior (or, identically, a marginal)."""
    points, radii = grid_points(grid, p)
    _guard_singularities(points, pi)
    return _report(ConditionName.PRIOR, prior_lhs(pi, points), radii, grid.tolerance)


check_marginal_condition = check_prior_condition


# ---- configured checks ----


def _scalar(spec: Any) -> ScalarField:
    field = build_field(spec)
    if not isinstance(field, ScalarField):
        raise CalculusError(f"{spec.name.value} is not a scalar field")
    return field


def _vector(spec: Any) -> Union[VectorField, JointVectorField]:
    field = build_field(spec)
    if not isinstance(field, (VectorField, JointVectorField)):
        raise CalculusError(f"{spec.name.value} is not a vector field")
    return field


def _correction(spec: ConditionCheckSpec) -> ScalarField:
    if spec.gamma is not None:
        return ScaledField(_scalar(spec.gamma), spec.alpha_or_d)
    assert spec.m is not None and spec.xi is not None
    return SignLaplacianCorrection(_scalar(spec.m), _scalar(spec.xi), spec.alpha_or_d)


def _shrinkage(spec: ConditionCheckSpec) -> Union[VectorField, JointVectorField]:
    if spec.g is not None:
        return _vector(spec.g)
    if spec.m is not None:
        return PseudoBayesShift(_scalar(spec.m))
    return ZeroField()


def run_condition(spec: ConditionCheckSpec, grid: GridSpec) -> ConditionReport:
    """Evaluate one configured condition and attach the closed-form constants of its family."""
    p, name = spec.p, spec.condition
    _LOGGER.debug("Checking %s (p=%s, k=%s)", spec.display_name, p, spec.k)
    if name is ConditionName.KNOWN_VAR:
        g = _shrinkage(spec)
        if isinstance(g, JointVectorField):
            raise CalculusError("known_var condition needs a vector field g(x)")
        return check_known_var(_correction(spec), g, grid, p)
    if name is ConditionName.SIGN_LAPLACIAN:
        assert spec.m is not None and spec.xi is not None
        return check_sign_laplacian(_scalar(spec.m), _scalar(spec.xi), spec.alpha_or_d, grid, p)
    if name is ConditionName.UNKNOWN_VAR:
        assert spec.k is not None
        report = check_unknown_var(_correction(spec), _shrinkage(spec), spec.k, grid, p)
        bound = unknown_var_d_bound(p, spec.k)
        return _with_constants(report, {"d_bound": bound, "d_opt": bound / 2.0})
    if name is ConditionName.MIXTURE:
        assert spec.mixing is not None
        k_const = mixture_k(spec.mixing, p)
        report = check_mixture(_correction(spec), k_const, grid, p)
        c_opt = k_const * (p - 4)
        return _with_constants(report, {"c_opt": c_opt, "c_bound": 2.0 * c_opt})
    if name is ConditionName.GENERAL_SPHERICAL:
        assert spec.sampler is not None
        report, _ = check_general_spherical(
            spec.sampler, None, p, np.square(grid.radii), grid.tolerance
        )
        return report
    if name is ConditionName.PRIOR:
        assert spec.prior is not None
        return check_prior_condition(_scalar(spec.prior), grid, p)
    assert spec.k is not None
    bound = residual_ls_bound(p, spec.k)
    constants = {"d_bound": bound, "d_opt": bound / 2.0}
    if name is ConditionName.RESIDUAL_LS:
        return _with_constants(check_residual_ls(_correction(spec), spec.k, grid, p), constants)
    g = _shrinkage(spec)
    if isinstance(g, JointVectorField):
        raise CalculusError("residual_shrink condition needs a vector field g(x)")
    return _with_constants(check_residual_shrink(_correction(spec), g, spec.k, grid, p), constants)


def _with_constants(report: ConditionReport, constants: dict) -> ConditionReport:
    return report.model_copy(update={"constants": {**report.constants, **constants}})


def run_conditions(specs: Sequence[ConditionCheckSpec], grid: GridSpec) -> List[ConditionReport]:
    """Evaluate every configured condition on the same grid."""
    return [run_condition(spec, grid) for spec in specs]

"""
Potential - Replica-Symmetric Potential and Thresholds

i_RS(E; Δ) = ((v−E)² + v²)/(4Δ) − E_{S,Z}[ln Σ_x P₀(x) e^{−x²snr/2 + x(S·snr + √snr·Z)}]

with snr = (v−E)/Δ. Its global minimum over [0, v] is the asymptotic mutual
information per variable and its minimizer the asymptotic vector MMSE.
This module provides:
- i_RS, its derivative and its stationary points (= SE fixed points)
- the potential gap between the good minimum and the rest of the landscape
- Δ_AMP (SE from v reaches the good fixed point) and Δ_RS (gap > 0)
- the asymptotic MMSE formulas and threshold reports
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import AssumptionViolation, AtTransition, NoBracket
from .model import ScalarModel
from .prior import DiscretePrior, channel_average, expected_log_normalizer
from .state_evolution import e_good, run_se, same_fixed_point, t_u

logger = logging.getLogger(__name__)

GRID_SIZE = 512
ROOT_XTOL = 1e-12
MAX_STATIONARY_POINTS = 3
TIE_TOL = 1e-10
TRANSITION_WINDOW = 1e-6
THRESHOLD_RTOL = 1e-6


@dataclass(frozen=True)
class StationaryPoint:
    """Root of E = T_u(E) with its nature as a point of i_RS."""

    error: float
    kind: str  # "min", "max" or "inflection"
    value: float


@dataclass(frozen=True)
class Branch:
    """Asymptotic MMSE values carried by one minimum of i_RS."""

    error: float
    mmmse: float
    vmmse: float


@dataclass
class PotentialReport:
    """Landscape of i_RS at one (P₀, Δ)."""

    delta: float
    stationary_points: List[float]
    kinds: List[str]
    values: List[float]
    global_min_E: float
    global_min_value: float
    mmmse: float
    vmmse: float
    potential_gap: float
    assumption_violated: bool = False
    at_transition: bool = False
    competing: Optional[Branch] = None


@dataclass
class ProbeSummary:
    delta: float
    e_good: float
    stationary_points: List[float]


@dataclass
class ThresholdReport:
    """Algorithmic and information-theoretic thresholds of one prior."""

    delta_amp: float
    delta_rs: float
    amp_bracket: Tuple[float, float]
    rs_bracket: Tuple[float, float]
    delta_spectral: float
    probes: List[ProbeSummary] = field(default_factory=list)

    @property
    def delta_opt(self) -> float:
        """Optimal threshold; equals Δ_RS."""
        return self.delta_rs

    @property
    def amp_bracket_width(self) -> float:
        return self.amp_bracket[1] - self.amp_bracket[0]

    @property
    def rs_bracket_width(self) -> float:
        return self.rs_bracket[1] - self.rs_bracket[0]


def i_rs(model: ScalarModel, error):
    """
    Replica-symmetric potential i_RS(E; Δ).

    Args:
        model: Prior and noise variance
        error: E ∈ [0, v], scalar or array

    Returns:
        Potential value(s)
    """
    error = model.check_error(error)
    v, delta = model.v, model.delta
    snr = np.maximum(model.snr(error), 0.0)
    return ((v - error) ** 2 + v**2) / (4.0 * delta) - expected_log_normalizer(model.prior, snr)


def i_rs_derivative(model: ScalarModel, error):
    """
    d i_RS / dE = (E − T_u(E))/(2Δ).

    Follows from the scalar I-MMSE relation dI/dsnr = mmse/2, so it vanishes
    exactly at the fixed points of state evolution.
    """
    error = model.check_error(error)
    return (error - t_u(model, error)) / (2.0 * model.delta)


def scalar_mutual_information(prior: DiscretePrior, snr: float):
    """
    I(S; √snr·S + Z) in nats.

    Evaluated relative to the true atom so that no snr·v/2 term cancels:
    I = −E_{S,Z} ln Σ_x P₀(x) exp(−snr(x−S)²/2 + (x−S)·√snr·Z).
    """
    x = prior.values

    def centered_log_normalizer(h, s, snr_b):
        noise = h - s * snr_b  # √snr·Z
        diff = x - s[..., None]
        logits = prior.log_probs + diff * noise[..., None] - 0.5 * snr_b[..., None] * diff**2
        return logsumexp(logits, axis=-1)

    return -channel_average(prior, snr, centered_log_normalizer)


def _fixed_point_residual(model: ScalarModel, error):
    return error - t_u(model, error)


def stationary_points_detailed(model: ScalarModel, grid_size: int = GRID_SIZE) -> List[StationaryPoint]:
    """
    Roots of E = T_u(E) on [0, v] with their classification.

    A sign-change scan of E − T_u(E) on a uniform grid is refined by Brent's
    bracketing method to 1e-12. Grid points where the residual vanishes
    (E = v for a zero-mean prior, E = 0 for a Dirac) count as roots. A root
    is a minimum of i_RS where the residual increases through it.

    Warns:
        AssumptionViolation: more than three roots
    """
    v = model.v
    if v == 0.0:
        return [StationaryPoint(0.0, "min", float(i_rs(model, 0.0)))]

    grid = np.linspace(0.0, v, grid_size)
    residual = _fixed_point_residual(model, grid)
    zero_tol = 1e-14 * v
    roots: List[float] = []

    for i in range(grid_size):
        if abs(residual[i]) <= zero_tol:
            roots.append(float(grid[i]))
        elif i + 1 < grid_size and abs(residual[i + 1]) > zero_tol and residual[i] * residual[i + 1] < 0:
            roots.append(brentq(
                lambda e: float(_fixed_point_residual(model, e)),
                grid[i], grid[i + 1], xtol=ROOT_XTOL,
            ))

    roots = sorted(roots)
    deduped: List[float] = []
    for r in roots:
        if not deduped or r - deduped[-1] > 1e-10 * v:
            deduped.append(r)

    step = 1e-4 * v
    points = []
    for r in deduped:
        lo, hi = max(r - step, 0.0), min(r + step, v)
        # Second difference of i_RS through its derivative: sign of the residual slope.
        slope = (float(_fixed_point_residual(model, hi)) - float(_fixed_point_residual(model, lo))) / (hi - lo)
        kind = "min" if slope > 0 else "max" if slope < 0 else "inflection"
        points.append(StationaryPoint(float(r), kind, float(i_rs(model, r))))

    if len(points) > MAX_STATIONARY_POINTS:
        warnings.warn(
            f"{len(points)} stationary points at Δ={model.delta:.6g} (at most 3 expected)",
            AssumptionViolation,
            stacklevel=2,
        )
    return points


def stationary_points(model: ScalarModel, grid_size: int = GRID_SIZE) -> List[float]:
    """Sorted list of stationary points of i_RS in [0, v]."""
    return [p.error for p in stationary_points_detailed(model, grid_size)]


def is_uninformative_branch(model: ScalarModel, error: float) -> bool:
    """
    Whether a fixed point continues the uninformative solution.

    Above Δ = Var(S)² the linearization of T_u around E = v has the fixed
    point v − m²Δ/(Δ − Var²). A fixed point whose distance to v lies within
    half of that value is the uninformative branch; for m = 0 this is E = v.
    """
    var = model.prior.variance
    if model.delta <= var**2:
        return False
    linear = model.prior.mean**2 * model.delta / (model.delta - var**2)
    distance = model.v - error
    return abs(distance - linear) <= 0.5 * linear + 1e-12 * max(model.v, 1.0)


def _gap(model: ScalarModel, points: Sequence[StationaryPoint], good: float) -> float:
    above = [p.error for p in points if p.error > good and not same_fixed_point(model, p.error, good)]
    if not above:
        return -math.inf if is_uninformative_branch(model, good) else math.inf

    boundary = min(above)
    candidates = [p.value for p in points if p.error >= boundary]
    candidates.append(float(i_rs(model, model.v)))
    return min(candidates) - float(i_rs(model, good))


def potential_gap(model: ScalarModel) -> float:
    """
    Potential gap δf = inf over E outside the basin of E_good of
    f(E) − f(E_good), with f = i_RS − v²/(4Δ).

    Returns:
        +∞ when the basin of E_good is all of [0, v]; −∞ when the only fixed
        point is the uninformative branch (no good branch exists)
    """
    return _gap(model, stationary_points_detailed(model), e_good(model))


def potential_report(model: ScalarModel, grid_size: int = GRID_SIZE) -> PotentialReport:
    """
    Full landscape of i_RS: stationary points, global minimum, MMSE and gap.

    Degenerate minima (values within 1e-10) resolve to the smaller E with
    at_transition set and the other branch reported in `competing`.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AssumptionViolation)
        points = stationary_points_detailed(model, grid_size)
    violated = any(issubclass(w.category, AssumptionViolation) for w in caught)
    if violated:
        warnings.warn(
            f"{len(points)} stationary points at Δ={model.delta:.6g} (at most 3 expected)",
            AssumptionViolation,
            stacklevel=2,
        )

    minima = [p for p in points if p.kind == "min"] or list(points)
    ordered = sorted(minima, key=lambda p: (p.value, p.error))
    best = ordered[0]
    at_transition = False
    competing = None
    if len(ordered) > 1 and abs(ordered[1].value - best.value) < TIE_TOL:
        at_transition = True
        first, second = sorted(ordered[:2], key=lambda p: p.error)
        best, other = first, second
        competing = _branch(model, other.error)

    v = model.v
    good = e_good(model)
    return PotentialReport(
        delta=model.delta,
        stationary_points=[p.error for p in points],
        kinds=[p.kind for p in points],
        values=[p.value for p in points],
        global_min_E=best.error,
        global_min_value=best.value,
        mmmse=v**2 - (v - best.error) ** 2,
        vmmse=best.error,
        potential_gap=_gap(model, points, good),
        assumption_violated=violated,
        at_transition=at_transition,
        competing=competing,
    )


def _branch(model: ScalarModel, error: float) -> Branch:
    v = model.v
    return Branch(error=error, mmmse=v**2 - (v - error) ** 2, vmmse=error)


def asymptotic_mmse(model: ScalarModel, delta_rs: Optional[float] = None) -> Tuple[float, float]:
    """
    Asymptotic matrix and vector MMSE.

    Args:
        model: Prior and noise variance
        delta_rs: Known Δ_RS of the prior; warns when Δ is within 1e-6 of it

    Returns:
        (mmmse, vmmse) = (v² − (v − E*)², E*) with E* = argmin i_RS

    Warns:
        AtTransition: the minimizer is degenerate or Δ sits at Δ_RS
    """
    report = potential_report(model)
    near = delta_rs is not None and abs(model.delta - delta_rs) <= TRANSITION_WINDOW
    if report.at_transition or near:
        warnings.warn(
            f"Δ={model.delta:.9g} is at the information-theoretic transition; "
            "the MMSE is discontinuous here",
            AtTransition,
            stacklevel=2,
        )
    return report.mmmse, report.vmmse


def asymptotic_mutual_information(model: ScalarModel) -> float:
    """min_E i_RS, the limit of I(S; W)/n."""
    return potential_report(model).global_min_value


def asymptotic_free_energy(model: ScalarModel) -> float:
    """Limit of −E[ln 𝒵]/n: min_E i_RS − v²/(4Δ)."""
    return asymptotic_mutual_information(model) - model.v**2 / (4.0 * model.delta)


def amp_reaches_good(model: ScalarModel) -> bool:
    """
    AMP indicator: SE from E^(0) = v converges to the good fixed point.

    Models whose only fixed point is the uninformative branch count as
    failures, as do SE runs that hit the iteration cap.
    """
    good = e_good(model)
    trace = run_se(model)
    if not trace.converged:
        return False
    if not same_fixed_point(model, trace.fixed_point, good):
        return False
    return not is_uninformative_branch(model, good)


def rs_good_is_global(model: ScalarModel) -> bool:
    """RS indicator: potential_gap > 0."""
    return potential_gap(model) > 0


def bisect_threshold(
    indicator: Callable[[float], bool],
    interval: Tuple[float, float],
    rtol: float = THRESHOLD_RTOL,
    name: str = "threshold",
) -> Tuple[float, Tuple[float, float]]:
    """
    Bisection on a monotone indicator, True below the threshold.

    Args:
        indicator: Δ ↦ bool
        interval: (lo, hi) with indicator(lo) True and indicator(hi) False
        rtol: Stop when hi − lo ≤ rtol·hi
        name: Label used in messages

    Returns:
        (midpoint, (lo, hi)) of the final bracket

    Raises:
        NoBracket: the indicator does not go from True to False on interval
    """
    lo, hi = map(float, interval)
    if not 0 < lo < hi:
        raise NoBracket(f"{name}: invalid search interval ({lo}, {hi})")
    at_lo, at_hi = indicator(lo), indicator(hi)
    if at_lo == at_hi:
        raise NoBracket(f"{name}: indicator is {at_lo} at both ends of ({lo:.6g}, {hi:.6g})")
    if not at_lo:
        raise NoBracket(f"{name}: indicator is False at {lo:.6g} and True at {hi:.6g}")

    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if indicator(mid):
            lo = mid
        else:
            hi = mid
        logger.debug("%s bracket (%.12g, %.12g)", name, lo, hi)

    return 0.5 * (lo + hi), (lo, hi)


def delta_amp(prior: DiscretePrior, interval: Tuple[float, float], rtol: float = THRESHOLD_RTOL) -> float:
    """Algorithmic threshold Δ_AMP by bisection on the SE indicator."""
    value, _ = bisect_threshold(lambda d: amp_reaches_good(ScalarModel(prior, d)), interval, rtol, "Δ_AMP")
    return value


def delta_rs(prior: DiscretePrior, interval: Tuple[float, float], rtol: float = THRESHOLD_RTOL) -> float:
    """Information-theoretic threshold Δ_RS by bisection on potential_gap > 0."""
    value, _ = bisect_threshold(lambda d: rs_good_is_global(ScalarModel(prior, d)), interval, rtol, "Δ_RS")
    return value


def delta_spectral(prior: DiscretePrior) -> float:
    """Spectral (BBP) threshold v², i.e. ρ² for Ber(ρ) and 1 for the community prior."""
    return prior.second_moment**2


def find_bracket(
    indicator: Callable[[float], bool],
    scale: float,
    low: float = 1e-2,
    high: float = 1e2,
    points: int = 48,
    name: str = "threshold",
) -> Tuple[float, float]:
    """
    First True → False change of an indicator on a geometric Δ grid.

    Args:
        indicator: Δ ↦ bool
        scale: Natural noise scale (Var(S)² for the thresholds)
        low, high: Grid range relative to scale
        points: Grid size

    Returns:
        Adjacent grid points (lo, hi) bracketing the first change

    Raises:
        NoBracket: no True → False change on the grid
    """
    grid = scale * np.geomspace(low, high, points)
    previous, previous_delta = None, None
    for d in grid:
        state = indicator(float(d))
        if previous is not None and previous and not state:
            return previous_delta, float(d)
        if previous is None and not state:
            raise NoBracket(f"{name}: indicator already False at Δ={d:.6g}")
        previous, previous_delta = state, float(d)
    raise NoBracket(f"{name}: no change on Δ ∈ [{grid[0]:.6g}, {grid[-1]:.6g}]")


def threshold_report(
    prior: DiscretePrior,
    amp_interval: Optional[Tuple[float, float]] = None,
    rs_interval: Optional[Tuple[float, float]] = None,
    probes: Sequence[float] = (),
    rtol: float = THRESHOLD_RTOL,
) -> ThresholdReport:
    """
    Compute Δ_AMP and Δ_RS, locating brackets automatically when not given.

    Args:
        prior: Signal prior
        amp_interval: Bracket for Δ_AMP, or None to search one
        rs_interval: Bracket for Δ_RS, or None to search one
        probes: Noise values at which E_good and the stationary points are
            reported
        rtol: Relative bisection tolerance

    Returns:
        ThresholdReport
    """
    scale = max(prior.variance**2, 1e-12)
    amp_ind = lambda d: amp_reaches_good(ScalarModel(prior, d))  # noqa: E731
    rs_ind = lambda d: rs_good_is_global(ScalarModel(prior, d))  # noqa: E731

    if amp_interval is None:
        amp_interval = find_bracket(amp_ind, scale, name="Δ_AMP")
    if rs_interval is None:
        rs_interval = find_bracket(rs_ind, scale, name="Δ_RS")

    d_amp, amp_bracket = bisect_threshold(amp_ind, amp_interval, rtol, "Δ_AMP")
    d_rs, rs_bracket = bisect_threshold(rs_ind, rs_interval, rtol, "Δ_RS")
    if d_amp > d_rs * (1 + rtol):
        logger.warning("Δ_AMP=%.9g above Δ_RS=%.9g: check the brackets", d_amp, d_rs)
    logger.info("%s: Δ_AMP=%.9g Δ_RS=%.9g", prior.describe(), d_amp, d_rs)

    summaries = []
    for d in probes:
        model = ScalarModel(prior, float(d))
        summaries.append(ProbeSummary(float(d), e_good(model), stationary_points(model)))

    return ThresholdReport(
        delta_amp=d_amp,
        delta_rs=d_rs,
        amp_bracket=amp_bracket,
        rs_bracket=rs_bracket,
        delta_spectral=delta_spectral(prior),
        probes=summaries,
    )

"""
State Evolution - Uncoupled SE Recursion

E^(t+1) = T_u(E^(t)) = mmse((v − E^(t))/Δ)

T_u is monotone, so the sequence is nonincreasing from E^(0) = v and
nondecreasing from E^(0) = 0. Runs that hit the iteration cap are returned
with converged=False and the last Cauchy gap instead of a guessed limit.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ScalarModel
from .prior import mmse, mmse_derivative

logger = logging.getLogger(__name__)

SE_TOL = 1e-12
SE_MAX_ITERATIONS = 10_000
# Two SE limits closer than this (relative to v) are the same fixed point.
FIXED_POINT_MATCH = 1e-6


@dataclass
class SETrace:
    """Trajectory of the scalar SE recursion."""

    values: np.ndarray
    converged: bool
    fixed_point: float
    iterations: int
    cauchy_gap: float

    @property
    def initial(self) -> float:
        return float(self.values[0])


def t_u(model: ScalarModel, error):
    """
    SE operator of the underlying (uncoupled) system.

    Args:
        model: Prior and noise variance
        error: E ∈ [0, v], scalar or array

    Returns:
        mmse((v − E)/Δ)
    """
    error = model.check_error(error)
    return mmse(model.prior, np.maximum(model.snr(error), 0.0))


def _newton_polish(model: ScalarModel, estimate: float) -> float:
    """One safeguarded Newton step on E − T_u(E) = 0."""
    residual = estimate - t_u(model, estimate)
    slope = 1.0 + mmse_derivative(model.prior, max(model.snr(estimate), 0.0)) / model.delta
    if residual == 0.0 or slope <= 0.0:
        return estimate
    candidate = estimate - residual / slope
    if not 0.0 <= candidate <= model.v:
        return estimate
    if abs(candidate - t_u(model, candidate)) < abs(residual):
        return candidate
    return estimate


def run_se(
    model: ScalarModel,
    e0: Optional[float] = None,
    t_max: int = SE_MAX_ITERATIONS,
    tol: float = SE_TOL,
) -> SETrace:
    """
    Iterate the SE recursion until two successive values agree.

    Args:
        model: Prior and noise variance
        e0: Initial error, defaults to v (prior-only knowledge)
        t_max: Iteration cap
        tol: Absolute stopping tolerance on |E^(t+1) − E^(t)|

    Returns:
        SETrace holding every iterate; fixed_point is polished by one Newton
        step when the run converged
    """
    current = model.v if e0 is None else model.check_error(e0)
    values = [current]
    gap = np.inf
    converged = False

    for _ in range(t_max):
        nxt = float(t_u(model, current))
        values.append(nxt)
        gap = abs(nxt - current)
        current = nxt
        if gap < tol:
            converged = True
            break

    if converged:
        fixed_point = _newton_polish(model, current)
    else:
        fixed_point = current
        logger.warning(
            "SE from E0=%.6g did not converge in %d iterations (Δ=%.6g, gap %.3e)",
            values[0], t_max, model.delta, gap,
        )

    return SETrace(
        values=np.array(values),
        converged=converged,
        fixed_point=float(fixed_point),
        iterations=len(values) - 1,
        cauchy_gap=float(gap),
    )


def e_good(model: ScalarModel) -> float:
    """Fixed point reached by SE from E^(0) = 0 (the smallest fixed point)."""
    return run_se(model, 0.0).fixed_point


def same_fixed_point(model: ScalarModel, a: float, b: float) -> bool:
    return abs(a - b) <= FIXED_POINT_MATCH * model.v


def in_basin(model: ScalarModel, error: float) -> bool:
    """
    Whether SE started at E reaches the good fixed point.

    Args:
        model: Prior and noise variance
        error: Starting error E ∈ [0, v]

    Returns:
        True when the SE from E converges to e_good(model)
    """
    trace = run_se(model, error)
    return trace.converged and same_fixed_point(model, trace.fixed_point, e_good(model))

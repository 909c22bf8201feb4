"""
Channel - Effective Gaussian Noise of an Output Channel

An element-wise channel P_out(w | y), y = s_i s_j/√n, behaves like the
Gaussian channel with

    Δ⁻¹ = ∫ dw P_out(w | 0) (∂_y log P_out(w | y) at y = 0)²

provided log P_out is smooth in y at 0. Built-ins:

- awgn(Δ): w = y + √Δ z
- graph_edge(p, μ): w ∈ {0, 1}, P(w = 1 | y) = p + μ y
- gaussian_dropout(p, Δ): w erased (atom) with probability p, else y + √Δ z
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import norm

from .errors import DomainError, NotDifferentiable
from .quadrature import adaptive_expectation

logger = logging.getLogger(__name__)

DERIVATIVE_STEP = 1e-5
AGREEMENT_RTOL = 1e-6
ERASED = "erased"

LogLikelihood = Callable[[object, float], object]


@dataclass(frozen=True)
class OutputChannel:
    """
    Built-in output channel.

    Discrete outputs are listed in `atoms`; a Gaussian-shaped continuous
    part (scale `density_scale` at y = 0) is integrated by quadrature.
    """

    kind: str
    delta: Optional[float] = None
    p: Optional[float] = None
    mu: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("awgn", "graph_edge", "gaussian_dropout"):
            raise DomainError(f"unknown channel kind '{self.kind}'")
        if self.kind in ("awgn", "gaussian_dropout"):
            if self.delta is None or not 0 < self.delta < np.inf:
                raise DomainError(f"{self.kind}: Δ must be positive and finite, got {self.delta}")
        if self.kind in ("graph_edge", "gaussian_dropout"):
            if self.p is None or not 0 < self.p < 1:
                raise DomainError(f"{self.kind}: p must be in (0, 1), got {self.p}")
        if self.kind == "graph_edge" and (self.mu is None or not 0 < self.mu < np.inf):
            raise DomainError(f"graph_edge: μ must be positive and finite, got {self.mu}")

    @property
    def atoms(self) -> Sequence:
        if self.kind == "graph_edge":
            return (0.0, 1.0)
        if self.kind == "gaussian_dropout":
            return (ERASED,)
        return ()

    @property
    def density_scale(self) -> Optional[float]:
        return np.sqrt(self.delta) if self.kind in ("awgn", "gaussian_dropout") else None

    def atom_log_likelihood(self, w, y: float) -> float:
        """log P_out(w | y) of a discrete output."""
        if self.kind == "graph_edge":
            prob = self.p + self.mu * y
            return float(np.log(prob if w == 1.0 else 1.0 - prob))
        if self.kind == "gaussian_dropout" and w == ERASED:
            return float(np.log(self.p))
        raise DomainError(f"{self.kind} has no discrete output {w!r}")

    def density_log_likelihood(self, w: np.ndarray, y: float) -> np.ndarray:
        """log density of the continuous part at w."""
        if self.kind == "awgn":
            return norm.logpdf(w, loc=y, scale=np.sqrt(self.delta))
        if self.kind == "gaussian_dropout":
            return np.log1p(-self.p) + norm.logpdf(w, loc=y, scale=np.sqrt(self.delta))
        raise DomainError(f"{self.kind} has no continuous output")

    def describe(self) -> str:
        params = {"delta": self.delta, "p": self.p, "mu": self.mu}
        shown = ", ".join(f"{k}={v:g}" for k, v in params.items() if v is not None)
        return f"{self.kind}({shown})"


def awgn(delta: float) -> OutputChannel:
    return OutputChannel("awgn", delta=delta)


def graph_edge(p: float, mu: float) -> OutputChannel:
    return OutputChannel("graph_edge", p=p, mu=mu)


def gaussian_dropout(p: float, delta: float) -> OutputChannel:
    return OutputChannel("gaussian_dropout", delta=delta, p=p)


def _score(log_likelihood: Callable[[float], np.ndarray], step: float) -> np.ndarray:
    """
    Central-difference ∂_y log P at y = 0, checked for smoothness.

    A kink shows up as a forward/backward mismatch that does not shrink
    with the step.

    Raises:
        NotDifferentiable: non-finite values or a kink at y = 0
    """
    values = {k: np.asarray(log_likelihood(k * step), dtype=float) for k in (-2, -1, 0, 1, 2)}
    if not all(np.all(np.isfinite(v)) for v in values.values()):
        raise NotDifferentiable("log-likelihood is not finite around y = 0")

    central = (values[1] - values[-1]) / (2.0 * step)
    mismatch = (values[1] - 2.0 * values[0] + values[-1]) / step
    wide_mismatch = (values[2] - 2.0 * values[0] + values[-2]) / step
    # Smooth: wide ≈ 4·mismatch (second derivative). Kink: wide ≈ 2·mismatch.
    visible = np.abs(mismatch) > 1e-6 * (1.0 + np.abs(central))
    kinked = np.abs(wide_mismatch - 4.0 * mismatch) > 0.5 * np.abs(mismatch)
    if np.any(visible & kinked):
        raise NotDifferentiable("log-likelihood has a kink at y = 0")
    return central


def fisher_information(
    atom_log_likelihood: Optional[Callable[[object, float], float]] = None,
    atoms: Sequence = (),
    density_log_likelihood: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
    density_scale: Optional[float] = None,
    step: float = DERIVATIVE_STEP,
) -> float:
    """
    Fisher information about y at y = 0 by numeric differentiation.

    Args:
        atom_log_likelihood: log P(w | y) for discrete outputs
        atoms: Discrete outputs, summed over
        density_log_likelihood: log density of the continuous part
        density_scale: Spread of the continuous part at y = 0; nodes are
            placed at w = scale·z
        step: Finite-difference step in y

    Returns:
        Σ_w P(w|0) score² + ∫ dw p(w|0) score²

    Raises:
        NotDifferentiable: the log-likelihood is not smooth at y = 0
    """
    total = 0.0
    for w in atoms:
        score = _score(lambda y: atom_log_likelihood(w, y), step)
        total += float(np.exp(atom_log_likelihood(w, 0.0)) * score**2)

    if density_log_likelihood is not None:
        scale = float(density_scale)

        def evaluate(nodes: np.ndarray, weights: np.ndarray) -> float:
            w = scale * nodes
            score = _score(lambda y: density_log_likelihood(w, y), step)
            # p(w)·scale/φ(z) turns the standard-normal rule into ∫ dw p(w)
            ratio = np.exp(density_log_likelihood(w, 0.0) - norm.logpdf(nodes)) * scale
            return float(weights @ (ratio * score**2))

        total += float(adaptive_expectation(evaluate, tol=1e-12 * max(1.0, 1.0 / scale**2)))
    return total


def closed_form_delta(channel: OutputChannel) -> float:
    if channel.kind == "awgn":
        return channel.delta
    if channel.kind == "graph_edge":
        return channel.p * (1.0 - channel.p) / channel.mu**2
    return channel.delta / (1.0 - channel.p)


def numeric_delta(channel: OutputChannel, step: float = DERIVATIVE_STEP) -> float:
    has_density = channel.density_scale is not None
    information = fisher_information(
        channel.atom_log_likelihood if channel.atoms else None,
        channel.atoms,
        channel.density_log_likelihood if has_density else None,
        channel.density_scale,
        step,
    )
    if not information > 0:
        raise NotDifferentiable(f"{channel.describe()} carries no information about y at 0")
    return 1.0 / information


def effective_delta(channel: OutputChannel, method: str = "closed") -> float:
    """
    Effective AWGN variance Δ = 1/Fisher information at y = 0.

    Args:
        channel: Output channel
        method: "closed" (formula), "numeric" (derivative step 1e-5 plus
            summation/quadrature) or "both" (numeric, checked against the
            formula to 1e-6 relative)

    Raises:
        NotDifferentiable: smoothness precondition fails
    """
    if method == "closed":
        return closed_form_delta(channel)
    if method == "numeric":
        return numeric_delta(channel)
    if method == "both":
        exact = closed_form_delta(channel)
        numeric = numeric_delta(channel)
        if abs(numeric - exact) > AGREEMENT_RTOL * exact:
            logger.warning(
                "%s: numeric Δ %.12g differs from closed form %.12g", channel.describe(), numeric, exact
            )
        return numeric
    raise DomainError(f"unknown method '{method}' (expected closed, numeric or both)")

"""
Prior - Discrete Bounded Priors and the Scalar Gaussian Channel

Everything downstream consumes the scalar channel Y = S + Σ·Z through its
natural field h = S·snr + √snr·Z (snr = Σ⁻²):
- posterior mean / variance (the AMP denoiser and its derivative)
- mmse(snr) and its derivative, by Gauss-Hermite quadrature over Z and an
  exact sum over the atoms of S
- the expected log normalizer used by the replica-symmetric potential

All posterior computations are normalized with log-sum-exp.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, List, Tuple, Union

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DomainError, EmptySupport, NegativeProb, NonFiniteValue
from .quadrature import ABS_TOL, adaptive_expectation

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_BIAS = 1e-4


@dataclass(frozen=True, eq=False)
class DiscretePrior:
    """Finite list of atoms (value, probability) with cached moments."""

    values: np.ndarray
    probs: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        self.values.setflags(write=False)
        self.probs.setflags(write=False)

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return [(float(x), float(p)) for x, p in zip(self.values, self.probs)]

    @cached_property
    def log_probs(self) -> np.ndarray:
        return np.log(self.probs)

    @cached_property
    def mean(self) -> float:
        return float(self.probs @ self.values)

    @cached_property
    def second_moment(self) -> float:
        """v = E[S²]."""
        return float(self.probs @ self.values**2)

    @cached_property
    def fourth_moment(self) -> float:
        return float(self.probs @ self.values**4)

    @cached_property
    def variance(self) -> float:
        return float(self.probs @ (self.values - self.mean) ** 2)

    @cached_property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def size(self) -> int:
        return int(self.values.size)

    def describe(self) -> str:
        atoms = ", ".join(f"{x:.6g}@{p:.6g}" for x, p in self.atoms)
        return f"DiscretePrior[{atoms}]"

    def __repr__(self) -> str:
        return self.describe()


@dataclass(frozen=True)
class EffectiveNoise:
    """Effective scalar channel Y = S + Σ·Z of a state-evolution step."""

    sigma2: float
    snr: float = field(init=False)

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "snr", 0.0 if math.isinf(self.sigma2) else 1.0 / self.sigma2)

    @classmethod
    def from_snr(cls, snr: float) -> "EffectiveNoise":
        if snr < 0:
            raise DomainError(f"snr must be nonnegative, got {snr}")
        return cls(math.inf if snr == 0 else 1.0 / snr)

    @classmethod
    def from_error(cls, error: float, delta: float, v: float) -> "EffectiveNoise":
        """Σ⁻² = (v − E)/Δ for a mean-square error E ∈ [0, v]."""
        if not 0.0 <= error <= v:
            raise DomainError(f"E = {error} outside [0, {v}]")
        return cls.from_snr((v - error) / delta)


def make_prior(atoms: Iterable[Tuple[float, float]], bias: float = 0.0) -> DiscretePrior:
    """
    Build a normalized discrete prior.

    Duplicate values are merged, zero-mass atoms dropped and the masses
    divided by their total.

    Args:
        atoms: Iterable of (value, probability) pairs
        bias: Bias already applied to the atoms (recorded, not applied)

    Returns:
        DiscretePrior sorted by atom value
    """
    pairs = list(atoms)
    if not pairs:
        raise EmptySupport("prior needs at least one atom")

    merged = {}
    for value, prob in pairs:
        value, prob = float(value), float(prob)
        if not (math.isfinite(value) and math.isfinite(prob)):
            raise NonFiniteValue(f"atom ({value}, {prob}) is not finite")
        if prob < 0:
            raise NegativeProb(f"atom {value} has negative probability {prob}")
        if prob > 0:
            merged[value] = merged.get(value, 0.0) + prob

    total = math.fsum(merged.values())
    if not merged or total <= 0:
        raise EmptySupport("prior has no atom with positive probability")

    values = np.array(sorted(merged), dtype=float)
    probs = np.array([merged[x] for x in values], dtype=float) / total
    return DiscretePrior(values=values, probs=probs, bias=float(bias))


def bernoulli(rho: float) -> DiscretePrior:
    """Ber(ρ): 1 with probability ρ, 0 otherwise."""
    if not 0 < rho <= 1:
        raise DomainError(f"rho must be in (0, 1], got {rho}")
    return make_prior([(1.0, rho), (0.0, 1.0 - rho)])


def community(rho: float) -> DiscretePrior:
    """
    Zero-mean, unit-power two-community prior.

    √((1−ρ)/ρ) with probability ρ and −√(ρ/(1−ρ)) with probability 1−ρ.
    """
    if not 0 < rho < 1:
        raise DomainError(f"rho must be in (0, 1), got {rho}")
    return make_prior([
        (math.sqrt((1.0 - rho) / rho), rho),
        (-math.sqrt(rho / (1.0 - rho)), 1.0 - rho),
    ])


def rademacher() -> DiscretePrior:
    return make_prior([(1.0, 0.5), (-1.0, 0.5)])


def dirac(a: float) -> DiscretePrior:
    return make_prior([(a, 1.0)])


def biased(prior: DiscretePrior, epsilon: float = DEFAULT_BIAS) -> DiscretePrior:
    """
    Bias a zero-mean prior by moving ε of mass from its most negative atom
    to its most positive one.

    A zero-mean prior makes E = v a fixed point of state evolution; the
    bias removes it so that AMP and SE can leave the uninformative point.

    Args:
        prior: Zero-mean prior with at least two atoms
        epsilon: Mass to move, 0 ≤ ε < P₀(min atom)

    Returns:
        New prior with `bias` set to ε
    """
    if epsilon == 0:
        return prior
    if abs(prior.mean) > 1e-12:
        raise DomainError(f"bias applies to zero-mean priors, mean is {prior.mean:.3e}")
    if prior.size < 2:
        raise DomainError("bias needs a negative and a positive atom")
    if not 0 < epsilon < prior.probs[0]:
        raise DomainError(f"epsilon must be in (0, {prior.probs[0]}), got {epsilon}")

    probs = prior.probs.copy()
    probs[0] -= epsilon
    probs[-1] += epsilon
    return make_prior(zip(prior.values, probs), bias=epsilon)


def entropy(prior: DiscretePrior) -> float:
    """Shannon entropy H(S) in nats."""
    p = prior.probs
    return float(-np.sum(p * np.log(p)))


def _check_snr(snr: np.ndarray) -> None:
    if np.any(~np.isfinite(snr)) or np.any(snr < 0):
        raise DomainError(f"snr must be finite and nonnegative, got {snr}")


def _posterior_logits(prior: DiscretePrior, h: np.ndarray, snr: np.ndarray) -> np.ndarray:
    # Shape h.shape + (K,)
    x = prior.values
    return prior.log_probs + h[..., None] * x - 0.5 * snr[..., None] * x**2


def _unwrap(result: np.ndarray, scalar: bool) -> ArrayLike:
    return float(result) if scalar else result


def posterior_moments(prior: DiscretePrior, h: ArrayLike, snr: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance of S given the field h (broadcast with snr)."""
    h, snr = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(snr, dtype=float))
    weights = softmax(_posterior_logits(prior, h, snr), axis=-1)
    x = prior.values
    mean = weights @ x
    var = np.maximum(weights @ x**2 - mean**2, 0.0)
    return mean, var


def posterior_mean(prior: DiscretePrior, h: ArrayLike, snr: ArrayLike) -> ArrayLike:
    """
    Denoiser η(h; snr) = Σ x P₀(x) e^{−x²snr/2 + xh} / Σ P₀(x) e^{−x²snr/2 + xh}.

    Args:
        prior: Signal prior
        h: Natural field S·snr + √snr·Z (scalar or array)
        snr: Effective signal-to-noise ratio Σ⁻² ≥ 0

    Returns:
        Posterior mean, in [min support, max support]
    """
    scalar = np.ndim(h) == 0 and np.ndim(snr) == 0
    _check_field(h)
    _check_snr(np.asarray(snr, dtype=float))
    mean, _ = posterior_moments(prior, h, snr)
    return _unwrap(np.clip(mean, prior.values[0], prior.values[-1]), scalar)


def posterior_var(prior: DiscretePrior, h: ArrayLike, snr: ArrayLike) -> ArrayLike:
    """Posterior variance, equal to ∂η/∂h."""
    scalar = np.ndim(h) == 0 and np.ndim(snr) == 0
    _check_field(h)
    _check_snr(np.asarray(snr, dtype=float))
    _, var = posterior_moments(prior, h, snr)
    return _unwrap(var, scalar)


def _check_field(h: ArrayLike) -> None:
    if not np.all(np.isfinite(h)):
        raise DomainError("field h must be finite")


def log_normalizer(prior: DiscretePrior, h: ArrayLike, snr: ArrayLike) -> np.ndarray:
    """ln Σ_x P₀(x) exp(−x²snr/2 + xh)."""
    h, snr = np.broadcast_arrays(np.asarray(h, dtype=float), np.asarray(snr, dtype=float))
    return logsumexp(_posterior_logits(prior, h, snr), axis=-1)


def channel_average(
    prior: DiscretePrior,
    snr: ArrayLike,
    integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    tol: float = ABS_TOL,
) -> ArrayLike:
    """
    E_{S,Z}[g(h, S, snr)] with h = S·snr + √snr·Z.

    The expectation over S is an exact sum over atoms; the one over Z is an
    adaptive Gauss-Hermite rule shared by every entry of an snr array.

    Args:
        prior: Signal prior
        snr: Scalar or array of snr values (≥ 0)
        integrand: g(h, s, snr) evaluated on arrays of shape
            snr.shape + (K, nodes)
        tol: Absolute tolerance of the node doubling

    Returns:
        Expectation with the shape of snr (float for scalar input)
    """
    scalar = np.ndim(snr) == 0
    snr = np.asarray(snr, dtype=float)
    _check_snr(snr)
    s = prior.values[:, None]
    snr_b = snr[..., None, None]

    def evaluate(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
        h = s * snr_b + np.sqrt(snr_b) * nodes
        values = integrand(h, s, snr_b)
        return (values @ weights) @ prior.probs

    return _unwrap(adaptive_expectation(evaluate, tol=tol), scalar)


def mmse(prior: DiscretePrior, snr: ArrayLike) -> ArrayLike:
    """
    Minimum mean-square error of the scalar channel at the given snr.

    Args:
        prior: Signal prior
        snr: Σ⁻² ≥ 0 (scalar or array)

    Returns:
        E[(S − η(h; snr))²], in [0, Var(S)]
    """
    def squared_error(h, s, snr_b):
        mean, _ = posterior_moments(prior, h, np.broadcast_to(snr_b, h.shape))
        return (s - mean) ** 2

    result = channel_average(prior, snr, squared_error)
    return np.clip(result, 0.0, prior.variance) if np.ndim(result) else min(max(result, 0.0), prior.variance)


def mmse_derivative(prior: DiscretePrior, snr: ArrayLike) -> ArrayLike:
    """
    d mmse / d snr = −E[Var[S|Y]²].

    By the Nishimori identity this equals −E[(S − E[S|Y])² Var[S|Y]].
    """
    def squared_variance(h, s, snr_b):
        _, var = posterior_moments(prior, h, np.broadcast_to(snr_b, h.shape))
        return var**2

    result = channel_average(prior, snr, squared_variance)
    return -result


def expected_log_normalizer(prior: DiscretePrior, snr: ArrayLike) -> ArrayLike:
    """E_{S,Z}[ln Σ_x P₀(x) exp(−x²snr/2 + x(S·snr + √snr·Z))]."""
    def log_norm(h, s, snr_b):
        return log_normalizer(prior, h, np.broadcast_to(snr_b, h.shape))

    return channel_average(prior, snr, log_norm)

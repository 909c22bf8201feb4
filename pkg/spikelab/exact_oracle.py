"""
Exact Oracle - Posterior of Small Instances by Exhaustive Enumeration

For n ≤ 14 and a discrete prior, the posterior

    P(x | W) ∝ Π_i P₀(x_i) exp(−ℋ(x)),
    −ℋ(x) = Σ_{i≤j} [x_i x_j w_ij/(√n Δ) − x_i² x_j²/(2nΔ)]

is summed over every configuration of support^n with a streaming
log-sum-exp. Disorder averages over (s, Z) then check the Bayes-optimal
identities (Nishimori), the I-MMSE relation, the finite-n mutual
information and the matrix/vector MMSE inequality.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .amp import Instance, sample_instance
from .errors import DomainError, TooLarge
from .model import ScalarModel
from .potential import asymptotic_mutual_information
from .prior import DiscretePrior
from .workers import ordered_map, sub_seed

logger = logging.getLogger(__name__)

MAX_N = 14
MAX_CONFIGURATIONS = 2**24
CHUNK_SIZE = 2**16
STDERR_MULTIPLE = 3.0


@dataclass
class OracleResult:
    """Exact posterior statistics of one instance."""

    marginals: np.ndarray  # ⟨x_i⟩
    pair_means: np.ndarray  # ⟨x_i x_j⟩
    log_partition: float
    free_energy: float  # −ln𝒵/n
    vmmse: float
    mmmse: float
    overlap: float  # ⟨q⟩, q = x·s/n
    overlap_square: float  # ⟨q²⟩
    log_likelihood_ratio: float  # −ln𝒵 − ℋ(s)
    upper_matrix_error: float  # Σ_{i≤j}(s_i s_j − ⟨x_i x_j⟩)²/(2n²)


@dataclass
class Estimate:
    """Monte Carlo mean with its standard error."""

    value: float
    stderr: float

    def within(self, target: float = 0.0, k: float = STDERR_MULTIPLE, slack: float = 1e-12) -> bool:
        return abs(self.value - target) <= k * self.stderr + slack

    def as_dict(self) -> Dict[str, float]:
        return {"value": self.value, "stderr": self.stderr}


def _estimate(samples) -> Estimate:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return Estimate(float(samples.mean()), float("inf"))
    return Estimate(float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(samples.size)))


def check_budget(n: int, support_size: int) -> None:
    """
    Raises:
        TooLarge: n > 14 or |support|^n > 2^24
    """
    if n > MAX_N or support_size**n > MAX_CONFIGURATIONS:
        raise TooLarge(
            f"enumeration of {support_size}^{n} configurations exceeds the budget "
            f"(n ≤ {MAX_N}, at most {MAX_CONFIGURATIONS} configurations)"
        )


def _configurations(prior: DiscretePrior, n: int, start: int, stop: int):
    """Mixed-radix digits of configurations start … stop−1 (last digit slowest)."""
    index = np.arange(start, stop, dtype=np.int64)
    radix = prior.size ** np.arange(n, dtype=np.int64)
    digits = (index[:, None] // radix[None, :]) % prior.size
    return digits


def neg_hamiltonian(x: np.ndarray, observation: np.ndarray, delta: float) -> np.ndarray:
    """
    −ℋ(x) for a batch of configurations x (shape (..., n)).

    The i ≤ j sums are formed from full quadratic forms:
    Σ_{i≤j} w_ij x_i x_j = (xᵀWx + Σ_i w_ii x_i²)/2 and
    Σ_{i≤j} x_i²x_j² = ((Σ x²)² + Σ x⁴)/2.
    """
    n = x.shape[-1]
    x2 = x**2
    coupling = 0.5 * (np.einsum("...i,ij,...j->...", x, observation, x) + x2 @ np.diag(observation))
    square = 0.5 * (x2.sum(axis=-1) ** 2 + (x2**2).sum(axis=-1))
    return coupling / (np.sqrt(n) * delta) - square / (2.0 * n * delta)


def exact_posterior(instance: Instance, prior: DiscretePrior, chunk_size: int = CHUNK_SIZE) -> OracleResult:
    """
    Enumerate support^n and accumulate Gibbs weights.

    Args:
        instance: Small instance (Δ > 0)
        prior: Discrete signal prior
        chunk_size: Configurations per vectorized chunk

    Returns:
        OracleResult

    Raises:
        TooLarge: outside the enumeration budget
    """
    n = instance.n
    check_budget(n, prior.size)
    if not instance.delta > 0:
        raise DomainError("the oracle needs Δ > 0")
    w, delta = instance.observation, instance.delta
    total = prior.size**n

    running_max = -np.inf
    mass = 0.0
    first = np.zeros(n)
    second = np.zeros((n, n))

    for start in range(0, total, chunk_size):
        digits = _configurations(prior, n, start, min(start + chunk_size, total))
        x = prior.values[digits]
        log_weight = prior.log_probs[digits].sum(axis=1) + neg_hamiltonian(x, w, delta)

        chunk_max = float(log_weight.max())
        new_max = max(running_max, chunk_max)
        rescale = np.exp(running_max - new_max) if np.isfinite(running_max) else 0.0
        weight = np.exp(log_weight - new_max)

        mass = mass * rescale + weight.sum()
        first = first * rescale + weight @ x
        second = second * rescale + (x * weight[:, None]).T @ x
        running_max = new_max

    log_z = running_max + np.log(mass)
    marginals = first / mass
    pairs = second / mass

    s = instance.signal
    truth = np.outer(s, s)
    diff = truth - pairs
    upper = np.triu(np.ones((n, n), dtype=bool))

    return OracleResult(
        marginals=marginals,
        pair_means=pairs,
        log_partition=float(log_z),
        free_energy=float(-log_z / n),
        vmmse=float(np.sum((s - marginals) ** 2) / n),
        mmmse=float(np.sum(diff**2) / n**2),
        overlap=float(marginals @ s / n),
        overlap_square=float(s @ pairs @ s / n**2),
        log_likelihood_ratio=float(-log_z - (-neg_hamiltonian(s, w, delta))),
        upper_matrix_error=float(np.sum(diff[upper] ** 2) / (2.0 * n**2)),
    )


def log_partition(instance: Instance, prior: DiscretePrior) -> float:
    """ln𝒵 of one instance."""
    n = instance.n
    check_budget(n, prior.size)
    total = prior.size**n
    parts = []
    for start in range(0, total, CHUNK_SIZE):
        digits = _configurations(prior, n, start, min(start + CHUNK_SIZE, total))
        x = prior.values[digits]
        parts.append(logsumexp(prior.log_probs[digits].sum(axis=1) + neg_hamiltonian(x, instance.observation, instance.delta)))
    return float(logsumexp(parts))


@dataclass
class DisorderAverage:
    """Per-sample oracle statistics over independent (s, Z) draws."""

    prior: DiscretePrior
    n: int
    delta: float
    samples: pd.DataFrame

    def estimate(self, column: str) -> Estimate:
        return _estimate(self.samples[column])

    @property
    def num_samples(self) -> int:
        return len(self.samples)


def _sample_statistics(result: OracleResult, signal: np.ndarray) -> Dict[str, float]:
    s, m, pairs = signal, result.marginals, result.pair_means
    n = s.size
    return {
        "nishimori_first": float(np.mean(s * m - m**2)),
        "nishimori_second": float(np.sum(np.outer(s, s) * pairs - pairs**2) / n**2),
        "nishimori_power": float(np.mean(s**2 - np.diag(pairs))),
        "log_partition": result.log_partition,
        "log_likelihood_ratio": result.log_likelihood_ratio,
        "vmmse": result.vmmse,
        "mmmse": result.mmmse,
        "upper_matrix_error": result.upper_matrix_error,
        "overlap": result.overlap,
        "overlap_square": result.overlap_square,
    }


def disorder_average(
    prior: DiscretePrior,
    n: int,
    delta: float,
    samples: int,
    seed: int,
    workers: int = 1,
    progress: bool = False,
) -> DisorderAverage:
    """
    Run the oracle on `samples` instances drawn with sub-seeds seed XOR k.

    Raises:
        TooLarge: outside the enumeration budget
    """
    check_budget(n, prior.size)

    def one(k: int) -> Dict[str, float]:
        instance = sample_instance(prior, n, delta, sub_seed(seed, k))
        return _sample_statistics(exact_posterior(instance, prior), instance.signal)

    rows = ordered_map(one, range(samples), workers, progress=progress, desc=f"oracle n={n}")
    logger.info("oracle: %d disorder samples at n=%d, Δ=%.6g", samples, n, delta)
    return DisorderAverage(prior=prior, n=n, delta=float(delta), samples=pd.DataFrame(rows))


@dataclass
class NishimoriReport:
    """E[S⟨X⟩] − E[⟨X⟩²], E[S_iS_j⟨X_iX_j⟩] − E[⟨X_iX_j⟩²] and E[S²] − E[⟨X²⟩]."""

    first: Estimate
    second: Estimate
    power: Estimate
    num_samples: int

    def passes(self, k: float = STDERR_MULTIPLE) -> bool:
        return all(e.within(0.0, k) for e in (self.first, self.second, self.power))


def nishimori_check(
    prior: DiscretePrior,
    n: int,
    delta: float,
    num_disorder_samples: int,
    seed: int,
    workers: int = 1,
    average: Optional[DisorderAverage] = None,
) -> NishimoriReport:
    """Monte Carlo estimates of the Nishimori gaps, each ± standard error."""
    average = average or disorder_average(prior, n, delta, num_disorder_samples, seed, workers)
    return NishimoriReport(
        first=average.estimate("nishimori_first"),
        second=average.estimate("nishimori_second"),
        power=average.estimate("nishimori_power"),
        num_samples=average.num_samples,
    )


def _information_offset(prior: DiscretePrior, n: int, delta: float) -> float:
    v = prior.second_moment
    return v**2 / (4.0 * delta) + (2.0 * prior.fourth_moment - v**2) / (4.0 * delta * n)


def finite_n_mutual_information(
    prior: DiscretePrior,
    n: int,
    delta: float,
    num_disorder_samples: int,
    seed: int,
    workers: int = 1,
    average: Optional[DisorderAverage] = None,
    form: str = "ratio",
) -> Estimate:
    """
    I(S; W)/n = −E[ln𝒵]/n + v²/(4Δ) + (2E[S⁴] − v²)/(4Δn), averaged over disorder.

    Args:
        form: "ratio" averages the per-sample log-likelihood ratio
            ln P(W|s)/P(W), whose mean is the same quantity and whose variance
            stays small at low noise; "partition" averages −ln𝒵/n plus the
            offset
    """
    average = average or disorder_average(prior, n, delta, num_disorder_samples, seed, workers)
    if form == "ratio":
        return _estimate(average.samples["log_likelihood_ratio"].to_numpy() / n)
    if form == "partition":
        per_sample = -average.samples["log_partition"].to_numpy() / n + _information_offset(prior, n, delta)
        return _estimate(per_sample)
    raise DomainError(f"unknown form '{form}' (expected ratio or partition)")


@dataclass
class IMMSEReport:
    """Finite-difference dI/dΔ⁻¹ per variable against the matrix MMSE."""

    derivative: Estimate
    matrix_error: Estimate  # Σ_{i≤j} form, exact identity
    quarter_mmmse: Estimate  # Mmmse_n/4, equal up to O(1/n)
    residual: Estimate  # derivative − matrix_error (paired)
    quarter_residual: Estimate  # derivative − Mmmse_n/4 (paired)
    finite_difference_error: float
    size_correction: float  # C/n with C = 2E[S⁴]

    def passes(self, k: float = STDERR_MULTIPLE) -> bool:
        exact = abs(self.residual.value) <= self.finite_difference_error + k * self.residual.stderr + 1e-12
        quarter = abs(self.quarter_residual.value) <= (
            self.size_correction + self.finite_difference_error + k * self.quarter_residual.stderr + 1e-12
        )
        return exact and quarter and self.derivative.value >= -k * self.derivative.stderr - 1e-12


def immse_check(
    prior: DiscretePrior,
    n: int,
    delta: float,
    h: float,
    samples: int,
    seed: int,
    workers: int = 1,
) -> IMMSEReport:
    """
    Central difference of I_n in γ = 1/Δ with common random numbers.

    Every disorder sample reuses the same (s, Z) at γ − h, γ and γ + h, so
    the per-sample difference quotient is paired with the per-sample matrix
    error at γ. For i ≤ j observations the exact relation is
    dI_n/dγ /n = E Σ_{i≤j}(s_i s_j − ⟨x_i x_j⟩)²/(2n²).

    Args:
        prior: Signal prior
        n: System size
        delta: Noise variance Δ
        h: Step in Δ⁻¹ (must satisfy h < 1/Δ)
        samples: Disorder samples
        seed: Base seed
        workers: Thread count
    """
    gamma = 1.0 / delta
    if not 0 < h < gamma:
        raise DomainError(f"step h must be in (0, 1/Δ = {gamma}), got {h}")
    check_budget(n, prior.size)

    def one(k: int) -> Dict[str, float]:
        seed_k = sub_seed(seed, k)
        values = {}
        for label, g in (("minus", gamma - h), ("plus", gamma + h)):
            instance = sample_instance(prior, n, 1.0 / g, seed_k)
            values[label] = exact_posterior(instance, prior).log_likelihood_ratio / n
        centre = exact_posterior(sample_instance(prior, n, delta, seed_k), prior)
        derivative = (values["plus"] - values["minus"]) / (2.0 * h)
        return {
            "derivative": derivative,
            "matrix_error": centre.upper_matrix_error,
            "quarter_mmmse": centre.mmmse / 4.0,
        }

    rows = pd.DataFrame(ordered_map(one, range(samples), workers, desc="I-MMSE"))
    derivative = rows["derivative"].to_numpy()
    matrix_error = rows["matrix_error"].to_numpy()
    quarter = rows["quarter_mmmse"].to_numpy()

    # |d³(I_n/n)/dγ³| scales with max|S|⁸
    fd_error = h**2 * prior.max_abs**8
    report = IMMSEReport(
        derivative=_estimate(derivative),
        matrix_error=_estimate(matrix_error),
        quarter_mmmse=_estimate(quarter),
        residual=_estimate(derivative - matrix_error),
        quarter_residual=_estimate(derivative - quarter),
        finite_difference_error=float(fd_error),
        size_correction=2.0 * prior.fourth_moment / n,
    )
    logger.info(
        "I-MMSE at n=%d, Δ=%.6g: dI/dγ=%.6g ± %.2g, matrix error %.6g",
        n, delta, report.derivative.value, report.derivative.stderr, report.matrix_error.value,
    )
    return report


@dataclass
class InequalityReport:
    """Mmmse_n − (v² − (v − Vmmse_n)²) per n, with the fitted constant C."""

    table: pd.DataFrame
    fitted_c: float

    def passes(self, k: float = STDERR_MULTIPLE) -> bool:
        table = self.table
        return bool(np.all(table["excess"] <= table["bound"] + k * table["stderr"] + 1e-12))


def mmse_inequality_check(runs: Sequence[DisorderAverage]) -> InequalityReport:
    """
    Check Mmmse_n ≤ v² − (v − Vmmse_n)² + C/n over oracle runs.

    The slack is (E[S⁴] − v²)/n minus the overlap variance
    B_n = E⟨q²⟩ − E[⟨q⟩]², which is nonnegative; the reported bound is the
    first term. C is fitted as max_n n·excess (at least 0).
    """
    rows = []
    for run in runs:
        prior, n = run.prior, run.n
        v = prior.second_moment
        vmmse = run.samples["vmmse"].to_numpy()
        mmmse = run.samples["mmmse"].to_numpy()
        v_bar = float(vmmse.mean())
        rhs = v**2 - (v - v_bar) ** 2
        excess = float(mmmse.mean()) - rhs
        # Linearized per-sample excess for the standard error
        linear = mmmse - 2.0 * (v - v_bar) * vmmse
        stderr = _estimate(linear).stderr
        q = run.samples["overlap"].to_numpy()
        q2 = run.samples["overlap_square"].to_numpy()
        rows.append({
            "n": n,
            "mmmse": float(mmmse.mean()),
            "vmmse": v_bar,
            "rhs": rhs,
            "excess": excess,
            "bound": (prior.fourth_moment - v**2) / n,
            "stderr": stderr,
            "overlap_variance": float(q2.mean() - q.mean() ** 2),
        })

    table = pd.DataFrame(rows)
    fitted = float(max(0.0, (table["n"] * table["excess"]).max())) if len(table) else 0.0
    return InequalityReport(table=table, fitted_c=fitted)


@dataclass
class SuperadditivityReport:
    """(n₁+n₂)·i_{n₁+n₂} − n₁·i_{n₁} − n₂·i_{n₂}; reported, not asserted."""

    n1: int
    n2: int
    difference: Estimate

    @property
    def consistent(self) -> bool:
        return self.difference.value >= -STDERR_MULTIPLE * self.difference.stderr


def superadditivity_check(
    prior: DiscretePrior,
    n1: int,
    n2: int,
    delta: float,
    samples: int,
    seed: int,
    workers: int = 1,
) -> SuperadditivityReport:
    parts = {}
    for offset, size in enumerate(sorted({n1, n2, n1 + n2})):
        parts[size] = finite_n_mutual_information(prior, size, delta, samples, sub_seed(seed, offset << 32), workers)

    value = (n1 + n2) * parts[n1 + n2].value - n1 * parts[n1].value - n2 * parts[n2].value
    stderr = np.sqrt(
        ((n1 + n2) * parts[n1 + n2].stderr) ** 2 + (n1 * parts[n1].stderr) ** 2 + (n2 * parts[n2].stderr) ** 2
    )
    report = SuperadditivityReport(n1=n1, n2=n2, difference=Estimate(float(value), float(stderr)))
    if not report.consistent:
        logger.info("superadditivity trend not seen at n=%d+%d: %.4g ± %.2g", n1, n2, value, stderr)
    return report


def guerra_gap(
    prior: DiscretePrior,
    n: int,
    delta: float,
    samples: int,
    seed: int,
    workers: int = 1,
) -> Estimate:
    """I_n/n − min_E i_RS, a diagnostic of the finite-n replica bound."""
    finite = finite_n_mutual_information(prior, n, delta, samples, seed, workers)
    limit = asymptotic_mutual_information(ScalarModel(prior, delta))
    return Estimate(finite.value - limit, finite.stderr)


def oracle_sweep(
    prior: DiscretePrior,
    sizes: Sequence[int],
    delta: float,
    samples: int,
    seed: int,
    workers: int = 1,
) -> List[DisorderAverage]:
    """Disorder averages for every n in sizes, seeds offset per size."""
    return [
        disorder_average(prior, n, delta, samples, sub_seed(seed, n << 32), workers)
        for n in sizes
    ]

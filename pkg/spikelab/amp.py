"""
AMP - Spiked-Wigner Instances and Approximate Message Passing

Instances W = s sᵀ/√n + √Δ Z (Z symmetric, i.i.d. N(0,1) on i ≤ j) are
regenerated bit-exactly from their seed. AMP iterates

    h^t = W ŝ^(t−1)/(√n Δ) − b^(t−1) ŝ^(t−2)
    ŝ^t = η(h^t; snr_t),   b^t = Σ_j η′(h_j^t; snr_t)/(nΔ)

with snr_t = ‖ŝ^(t−1)‖²/(nΔ), and is compared with state evolution:
Vmse^(t) ≈ E^(t), Mmse^(t) ≈ v² − (v − E^(t))².

The coupled variant runs the same recursion on a ring of L+1 blocks of
size n with block weights √Λ_μν and clamped seed blocks.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.sparse.linalg import eigsh

from .errors import AmpDiverged, DomainError
from .model import ScalarModel
from .prior import DiscretePrior, posterior_moments
from .spatial_coupling import CouplingMatrix, default_pinned, t_c
from .state_evolution import t_u
from .workers import ordered_map

logger = logging.getLogger(__name__)

DEFAULT_T_MAX = 50
PERTURBATION = 1e-3
# Vmse beyond this multiple of v counts as divergence.
DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class Instance:
    """One draw of the spiked Wigner model."""

    signal: np.ndarray
    observation: np.ndarray
    delta: float
    seed: int

    @property
    def n(self) -> int:
        return self.signal.size


@dataclass
class AmpState:
    """AMP iterate: ŝ^t, ŝ^(t−1), b^t, t and the snr used at step t."""

    estimate: np.ndarray
    previous: np.ndarray
    onsager: float
    iteration: int
    snr: float


@dataclass
class AmpResult:
    """Per-iteration AMP errors (index t = 0 is the initialization)."""

    vmse: np.ndarray
    mmse: np.ndarray
    snr: np.ndarray
    onsager: np.ndarray
    state: AmpState
    seed: int
    se_driven: bool = False

    @property
    def iterations(self) -> int:
        return self.vmse.size - 1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": np.arange(self.vmse.size),
            "Vmse": self.vmse,
            "Mmse": self.mmse,
            "snr": self.snr,
            "onsager": self.onsager,
        })


@dataclass(frozen=True, eq=False)
class CoupledInstance:
    """
    Spatially coupled instance on a ring of L+1 blocks of n variables.

    Only in-window noise blocks are stored (float32), keyed (μ, d) for the
    block between μ and (μ + d) mod (L+1), d = 0 … w. The rank-one part
    s_μ s_νᵀ √(Λ_μν/n) is never materialized.
    """

    signal: np.ndarray  # (L+1, n)
    noise: Dict[Tuple[int, int], np.ndarray]
    coupling: CouplingMatrix
    delta: float
    seed: int
    pinned: np.ndarray

    @property
    def n(self) -> int:
        return self.signal.shape[1]

    @property
    def num_blocks(self) -> int:
        return self.signal.shape[0]

    def noise_block(self, mu: int, nu: int) -> Optional[np.ndarray]:
        """Z_μν, or None outside the coupling window."""
        size, w = self.num_blocks, self.coupling.window
        d = (nu - mu) % size
        if d <= w:
            return self.noise[(mu, d)]
        if size - d <= w:
            return self.noise[(nu, size - d)].T
        return None

    def block(self, mu: int, nu: int) -> np.ndarray:
        """Observed block W_μν = s_μ s_νᵀ √(Λ_μν/n) + √Δ Z_μν (zero outside the window)."""
        weight = self.coupling.matrix[mu, nu]
        z = self.noise_block(mu, nu)
        if z is None:
            return np.zeros((self.n, self.n))
        return np.outer(self.signal[mu], self.signal[nu]) * np.sqrt(weight / self.n) + np.sqrt(self.delta) * z.astype(float)


@dataclass
class CoupledAmpResult:
    """Per-block coupled AMP history, arrays of shape (t_max+1, L+1)."""

    vmse: np.ndarray
    snr: np.ndarray
    onsager: np.ndarray
    initial: np.ndarray
    estimate: np.ndarray
    pinned: np.ndarray
    seed: int

    def to_frame(self) -> pd.DataFrame:
        steps, blocks = self.vmse.shape
        return pd.DataFrame({
            "t": np.repeat(np.arange(steps), blocks),
            "mu": np.tile(np.arange(blocks), steps),
            "Vmse": self.vmse.ravel(),
        })


@dataclass
class SpectralResult:
    """Leading eigenpair of W/√n and its squared overlap with the signal."""

    eigenvalue: float
    vector: np.ndarray
    overlap: float


def _draw_signal(prior: DiscretePrior, rng: np.random.Generator, shape) -> np.ndarray:
    return rng.choice(prior.values, size=shape, p=prior.probs)


def _symmetric_noise(rng: np.random.Generator, n: int, dtype=np.float64) -> np.ndarray:
    g = rng.standard_normal((n, n), dtype=dtype)
    upper = np.triu(g)
    return upper + np.triu(upper, 1).T


def sample_instance(prior: DiscretePrior, n: int, delta: float, seed: int) -> Instance:
    """
    Draw s ~ P₀^n and W = s sᵀ/√n + √Δ Z.

    Args:
        prior: Signal prior
        n: Dimension (≥ 2)
        delta: Noise variance Δ ≥ 0
        seed: Seed of the numpy Generator; same seed, same W bit for bit

    Returns:
        Instance
    """
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if not delta >= 0 or not np.isfinite(delta):
        raise DomainError(f"delta must be finite and nonnegative, got {delta}")

    rng = np.random.default_rng(seed)
    signal = _draw_signal(prior, rng, n)
    z = _symmetric_noise(rng, n)
    observation = np.outer(signal, signal) / np.sqrt(n) + np.sqrt(delta) * z
    return Instance(signal=signal, observation=observation, delta=float(delta), seed=int(seed))


def sample_coupled_instance(
    prior: DiscretePrior,
    n: int,
    coupling: CouplingMatrix,
    delta: float,
    seed: int,
    pinned: Optional[Iterable[int]] = None,
) -> CoupledInstance:
    """
    Draw a coupled instance: L+1 signal blocks and the in-window noise blocks.

    Args:
        prior: Signal prior
        n: Variables per block
        coupling: Ring coupling matrix Λ
        delta: Noise variance Δ ≥ 0
        seed: Generator seed
        pinned: Seed blocks, default {0, …, w−1} ∪ {L−w, …, L}
    """
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if not delta >= 0 or not np.isfinite(delta):
        raise DomainError(f"delta must be finite and nonnegative, got {delta}")

    L, w = coupling.length, coupling.window
    if pinned is None:
        pinned = default_pinned(L, w)
    pinned = np.array(sorted(set(int(p) % (L + 1) for p in pinned)), dtype=int)

    rng = np.random.default_rng(seed)
    signal = _draw_signal(prior, rng, (L + 1, n))
    noise = {}
    for mu in range(L + 1):
        noise[(mu, 0)] = _symmetric_noise(rng, n, dtype=np.float32)
        for d in range(1, w + 1):
            noise[(mu, d)] = rng.standard_normal((n, n), dtype=np.float32)

    logger.debug("coupled instance: %d blocks of %d, %d stored noise blocks", L + 1, n, len(noise))
    return CoupledInstance(
        signal=signal, noise=noise, coupling=coupling,
        delta=float(delta), seed=int(seed), pinned=pinned,
    )


def initial_estimate(prior: DiscretePrior, shape, seed: int) -> np.ndarray:
    """ŝ^(0) = m + 1e-3·U(−1, 1), clipped to the support hull."""
    rng = np.random.default_rng([int(seed), 1])
    guess = prior.mean + PERTURBATION * rng.uniform(-1.0, 1.0, size=shape)
    return np.clip(guess, prior.values[0], prior.values[-1])


def vector_mse(estimate: np.ndarray, signal: np.ndarray) -> float:
    return float(np.sum((estimate - signal) ** 2) / signal.size)


def matrix_mse(estimate: np.ndarray, signal: np.ndarray) -> float:
    """‖ŝŝᵀ − ssᵀ‖_F²/n² from inner products only."""
    n = signal.size
    ee = float(estimate @ estimate)
    es = float(estimate @ signal)
    ss = float(signal @ signal)
    return (ee * ee - 2.0 * es * es + ss * ss) / n**2


def se_prediction(model: ScalarModel, t_max: int) -> np.ndarray:
    """
    SE trajectory aligned with AMP iterates.

    AMP starts from the prior mean, which is SE's E^(0) = Var(S); entry t
    predicts Vmse^(t).
    """
    values = [model.prior.variance]
    for _ in range(t_max):
        values.append(float(t_u(model, values[-1])))
    return np.array(values)


def matrix_se_prediction(model: ScalarModel, t_max: int) -> np.ndarray:
    """Matrix MSE predicted by SE: v² − (v − E^(t))²."""
    errors = se_prediction(model, t_max)
    return model.v**2 - (model.v - errors) ** 2


def run_amp(
    instance: Instance,
    prior: DiscretePrior,
    t_max: int = DEFAULT_T_MAX,
    se_driven: bool = False,
    init: Optional[np.ndarray] = None,
) -> AmpResult:
    """
    Run AMP with the Onsager correction on a spiked Wigner instance.

    Args:
        instance: Observation and planted signal (used for the errors only)
        prior: Signal prior of the denoiser
        t_max: Number of iterations
        se_driven: Take snr_t from SE instead of the empirical ‖ŝ‖²/(nΔ)
        init: ŝ^(0), default the perturbed prior mean

    Returns:
        AmpResult with t = 0 … t_max

    Raises:
        AmpDiverged: Vmse exceeds 10·v; the partial result is attached
    """
    if not instance.delta > 0:
        raise DomainError("AMP needs Δ > 0")
    n, delta = instance.n, instance.delta
    v = prior.second_moment
    s = instance.signal
    w = instance.observation
    scale = 1.0 / (np.sqrt(n) * delta)

    prediction = se_prediction(ScalarModel(prior, delta), t_max) if se_driven else None

    current = initial_estimate(prior, n, instance.seed) if init is None else np.array(init, dtype=float)
    previous = np.zeros(n)
    onsager = 0.0
    snr = 0.0

    vmse = [vector_mse(current, s)]
    mmse = [matrix_mse(current, s)]
    snrs = [0.0]
    onsagers = [0.0]

    def partial(t: int) -> AmpResult:
        return AmpResult(
            vmse=np.array(vmse), mmse=np.array(mmse), snr=np.array(snrs), onsager=np.array(onsagers),
            state=AmpState(current, previous, onsager, t, snr), seed=instance.seed, se_driven=se_driven,
        )

    for t in range(1, t_max + 1):
        if se_driven:
            snr = max((v - prediction[t - 1]) / delta, 0.0)
        else:
            snr = float(current @ current) / (n * delta)
        h = scale * (w @ current) - onsager * previous
        estimate, variance = posterior_moments(prior, h, snr)
        estimate = np.clip(estimate, prior.values[0], prior.values[-1])

        previous, current = current, estimate
        onsager = float(variance.sum()) / (n * delta)

        vmse.append(vector_mse(current, s))
        mmse.append(matrix_mse(current, s))
        snrs.append(snr)
        onsagers.append(onsager)
        logger.debug("AMP t=%d Vmse=%.6g snr=%.6g b=%.6g", t, vmse[-1], snr, onsager)

        if not np.isfinite(vmse[-1]) or vmse[-1] > DIVERGENCE_FACTOR * v:
            raise AmpDiverged(f"AMP diverged at t={t}: Vmse={vmse[-1]:.4g} > {DIVERGENCE_FACTOR}·v", partial(t))

    return partial(t_max)


def amp_experiment(
    prior: DiscretePrior,
    n: int,
    delta: float,
    seeds: Sequence[int],
    t_max: int = DEFAULT_T_MAX,
    se_driven: bool = False,
    workers: int = 1,
    progress: bool = False,
) -> List[AmpResult]:
    """Sample one instance per seed and run AMP on each, results in seed order."""

    def one(seed: int) -> AmpResult:
        return run_amp(sample_instance(prior, n, delta, seed), prior, t_max, se_driven)

    return ordered_map(one, seeds, workers, progress=progress, desc="AMP seeds")


def spectral_estimate(instance: Instance) -> SpectralResult:
    """
    Principal-eigenvector baseline.

    Returns:
        Top eigenvalue of W/√n, its unit eigenvector and (u·s)²/‖s‖²
    """
    matrix = instance.observation / np.sqrt(instance.n)
    values, vectors = eigsh(matrix, k=1, which="LA")
    u = vectors[:, 0]
    norm = float(instance.signal @ instance.signal)
    overlap = float((u @ instance.signal) ** 2 / norm) if norm > 0 else 0.0
    return SpectralResult(eigenvalue=float(values[0]), vector=u, overlap=overlap)


def _coupled_fields(instance: CoupledInstance, estimates: np.ndarray) -> np.ndarray:
    """Σ_ν √Λ_μν W_μν ŝ_ν/(√n Δ) for every block μ."""
    n, delta = instance.n, instance.delta
    lam = instance.coupling.matrix
    size, w = instance.num_blocks, instance.coupling.window

    overlaps = np.einsum("ij,ij->i", instance.signal, estimates)  # s_ν·ŝ_ν per block
    signal_strength = lam @ overlaps / (n * delta)
    fields = instance.signal * signal_strength[:, None]

    noise_scale = np.sqrt(delta) / (np.sqrt(n) * delta)
    cast = estimates.astype(np.float32)
    for mu in range(size):
        for d in range(w + 1):
            nu = (mu + d) % size
            weight = np.sqrt(lam[mu, nu]) * noise_scale
            z = instance.noise[(mu, d)]
            fields[mu] += weight * (z @ cast[nu]).astype(float)
            if d > 0:
                fields[nu] += weight * (z.T @ cast[mu]).astype(float)
    return fields


def run_coupled_amp(
    instance: CoupledInstance,
    prior: DiscretePrior,
    t_max: int = DEFAULT_T_MAX,
    init: Optional[np.ndarray] = None,
) -> CoupledAmpResult:
    """
    Coupled AMP with pinned seed blocks.

    Pinned blocks hold the true signal with zero variance at every step.
    Block snrs are Σ_ν Λ_μν ‖ŝ_ν‖²/(nΔ) and Onsager terms Σ_ν Λ_μν b_ν.

    Args:
        instance: Coupled instance
        prior: Signal prior
        t_max: Number of iterations
        init: (L+1, n) initial estimate, default the perturbed prior mean

    Raises:
        AmpDiverged: some block's Vmse exceeds 10·v
    """
    if not instance.delta > 0:
        raise DomainError("AMP needs Δ > 0")
    n, delta = instance.n, instance.delta
    lam = instance.coupling.matrix
    size = instance.num_blocks
    s = instance.signal
    pinned = instance.pinned
    free = np.ones(size, dtype=bool)
    free[pinned] = False
    v = prior.second_moment

    if init is None:
        current = initial_estimate(prior, s.shape, instance.seed)
    else:
        current = np.array(init, dtype=float).reshape(s.shape)
    current[pinned] = s[pinned]
    initial = current.copy()
    previous = np.zeros_like(current)
    b = np.zeros(size)

    def block_vmse(est):
        return np.sum((est - s) ** 2, axis=1) / n

    vmse = [block_vmse(current)]
    snrs = [np.zeros(size)]
    onsagers = [np.zeros(size)]

    for t in range(1, t_max + 1):
        snr = lam @ (np.sum(current**2, axis=1) / (n * delta))
        onsager = lam @ b
        fields = _coupled_fields(instance, current) - onsager[:, None] * previous

        nxt = s.copy()
        b = np.zeros(size)
        mean, variance = posterior_moments(prior, fields[free], snr[free][:, None])
        nxt[free] = np.clip(mean, prior.values[0], prior.values[-1])
        b[free] = variance.sum(axis=1) / (n * delta)

        previous, current = current, nxt
        vmse.append(block_vmse(current))
        snrs.append(snr)
        onsagers.append(onsager)
        logger.debug("coupled AMP t=%d max Vmse=%.6g", t, vmse[-1].max())

        if not np.all(np.isfinite(vmse[-1])) or vmse[-1].max() > DIVERGENCE_FACTOR * v:
            raise AmpDiverged(
                f"coupled AMP diverged at t={t}: max Vmse={vmse[-1].max():.4g}",
                np.array(vmse),
            )

    return CoupledAmpResult(
        vmse=np.array(vmse), snr=np.array(snrs), onsager=np.array(onsagers),
        initial=initial, estimate=current, pinned=pinned, seed=instance.seed,
    )


def coupled_se_prediction(
    model: ScalarModel,
    coupling: CouplingMatrix,
    t_max: int,
    pinned: Optional[Iterable[int]] = None,
) -> np.ndarray:
    """
    Coupled SE aligned with coupled AMP: E_μ^(0) = Var(S) on free blocks,
    0 on pinned ones. Returns shape (t_max+1, L+1).
    """
    L, w = coupling.length, coupling.window
    pinned = default_pinned(L, w) if pinned is None else np.array(list(pinned), dtype=int)
    current = np.full(L + 1, model.prior.variance)
    current[pinned] = 0.0
    history = [current]
    for _ in range(t_max):
        current = t_c(current, coupling, model, pinned)
        history.append(current)
    return np.array(history)

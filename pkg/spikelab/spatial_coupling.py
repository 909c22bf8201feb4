"""
Spatial Coupling - Coupled State Evolution and Threshold Saturation

A ring of L+1 blocks coupled over a window w by a doubly stochastic,
circulant matrix Λ. Seed blocks 𝓑 = {0, …, w−1} ∪ {L−w, …, L} are pinned
to E = 0 (perfectly known signal) and nucleate a reconstruction wave:

    Σ_μ⁻² = (v − Σ_ν Λ_μν E_ν)/Δ,    E_μ^(t+1) = mmse(Σ_μ⁻²)  (μ ∉ 𝓑)

Also provides the coupled potential f_c, the shift-difference diagnostic
on saturated profiles and the coupled algorithmic threshold Δ_AMP,w,L.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.linalg import circulant

from .errors import BadWindow, DomainError, NegativeSnr
from .model import ScalarModel
from .potential import bisect_threshold, is_uninformative_branch
from .prior import DiscretePrior, expected_log_normalizer, mmse
from .state_evolution import e_good

logger = logging.getLogger(__name__)

COUPLED_TOL = 1e-10
COUPLED_MAX_SWEEPS = 100_000
SUCCESS_MARGIN = 1e-6
COUPLED_RTOL = 1e-4


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Banded circulant coupling Λ of a ring of L+1 blocks."""

    matrix: np.ndarray
    window: int
    kernel: np.ndarray  # Λ(d) for offsets d = −w … w
    name: str = "triangle"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def length(self) -> int:
        """L (the ring has L+1 blocks)."""
        return self.size - 1

    @property
    def sup_entry(self) -> float:
        return float(self.matrix.max())

    def open_matrix(self) -> np.ndarray:
        """Λ without wrap-around: blocks outside the chain are dropped."""
        idx = np.arange(self.size)
        return np.where(np.abs(idx[:, None] - idx[None, :]) <= self.window, self.matrix, 0.0)

    def check(self) -> Dict[str, bool]:
        """Which of the five coupling requirements hold."""
        m, w, n = self.matrix, self.window, self.size
        idx = np.arange(n)
        dist = np.abs(idx[:, None] - idx[None, :])
        dist = np.minimum(dist, n - dist)
        row = m[0]
        spectrum = np.fft.fft(row)
        return {
            "doubly_stochastic": bool(
                np.allclose(m.sum(axis=0), 1.0, atol=1e-12) and np.allclose(m.sum(axis=1), 1.0, atol=1e-12)
            ),
            "circulant": bool(all(np.allclose(np.roll(row, k), m[k], atol=1e-15) for k in range(n))),
            "banded": bool(np.all(m[dist > w] == 0.0)),
            "sup_entry": self.sup_entry <= 2.0 / (w + 1) + 1e-15,
            "nonnegative_fourier": bool(
                np.all(np.abs(spectrum.imag) <= 1e-10) and np.all(spectrum.real >= -1e-10)
            ),
        }


def _ring(L: int, w: int, kernel: np.ndarray, name: str) -> CouplingMatrix:
    column = np.zeros(L + 1)
    for d in range(-w, w + 1):
        column[d % (L + 1)] = kernel[d + w]
    matrix = circulant(column)
    matrix.setflags(write=False)
    return CouplingMatrix(matrix=matrix, window=w, kernel=kernel, name=name)


def _check_window(L: int, w: int) -> None:
    if int(L) != L or int(w) != w or L < 0:
        raise BadWindow(f"L and w must be integers with L ≥ 0, got L={L}, w={w}")
    if not 0 <= 2 * w <= L:
        raise BadWindow(f"window w={w} must satisfy 0 ≤ w ≤ L/2 with L={L}")


def triangle_coupling(L: int, w: int) -> CouplingMatrix:
    """
    Triangular kernel Λ_μν = (1/(w+1))(1 − |μ−ν|/(w+1)), indices mod L+1.

    The kernel is the convolution of two rectangular windows of width w+1,
    so its discrete Fourier transform is nonnegative.

    Raises:
        BadWindow: w outside [0, L/2]
    """
    _check_window(L, w)
    offsets = np.arange(-w, w + 1)
    kernel = (1.0 - np.abs(offsets) / (w + 1)) / (w + 1)
    return _ring(int(L), int(w), kernel, "triangle")


def uniform_coupling(L: int, w: int) -> CouplingMatrix:
    """Rectangular kernel 1/(2w+1) on the window (fails the Fourier requirement)."""
    _check_window(L, w)
    kernel = np.full(2 * w + 1, 1.0 / (2 * w + 1))
    return _ring(int(L), int(w), kernel, "uniform")


def default_pinned(L: int, w: int) -> np.ndarray:
    """Seed blocks {0, …, w−1} ∪ {L−w, …, L}."""
    return np.array(sorted(set(range(0, w)) | set(range(L - w, L + 1))), dtype=int)


@dataclass
class CoupledProfile:
    """Per-block MSE profile E_μ with its pinned set."""

    values: np.ndarray
    pinned: np.ndarray
    converged: bool = False

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.values.size, dtype=bool)
        mask[self.pinned] = False
        return mask


@dataclass
class CoupledSETrace:
    """Result of a coupled SE run."""

    profile: CoupledProfile
    history: Optional[np.ndarray]  # (sweeps+1, L+1) or None
    sweeps: int
    converged: bool
    stopped_early: bool
    sup_change: float

    @property
    def values(self) -> np.ndarray:
        return self.profile.values

    def reached(self, level: float) -> bool:
        return float(self.profile.values.max()) <= level


def _coupling_matrix(coupling: CouplingMatrix, boundary: str) -> np.ndarray:
    if boundary == "ring":
        return coupling.matrix
    if boundary == "open":
        return coupling.open_matrix()
    raise DomainError(f"unknown boundary '{boundary}' (expected 'ring' or 'open')")


def block_snrs(values: np.ndarray, coupling: CouplingMatrix, model: ScalarModel, boundary: str = "ring") -> np.ndarray:
    """
    Σ_μ⁻² = (v − Σ_ν Λ_μν E_ν)/Δ for every block.

    Raises:
        NegativeSnr: a profile value exceeds v enough to make an snr negative
    """
    snr = (model.v - _coupling_matrix(coupling, boundary) @ values) / model.delta
    floor = -1e-12 * max(model.v / model.delta, 1.0)
    if np.any(snr < floor):
        raise NegativeSnr(f"negative effective snr {snr.min():.3e}: profile leaves [0, v]")
    return np.maximum(snr, 0.0)


def sigma_mu(profile, coupling: CouplingMatrix, model: ScalarModel, mu: int, boundary: str = "ring") -> float:
    """Inverse effective noise Σ_μ⁻² of block μ."""
    values = profile.values if isinstance(profile, CoupledProfile) else np.asarray(profile, dtype=float)
    return float(block_snrs(values, coupling, model, boundary)[mu])


def t_c(values: np.ndarray, coupling: CouplingMatrix, model: ScalarModel,
        pinned: Iterable[int] = (), boundary: str = "ring") -> np.ndarray:
    """Coupled SE operator: mmse of every block, pinned blocks kept at 0."""
    result = np.asarray(mmse(model.prior, block_snrs(values, coupling, model, boundary)), dtype=float)
    result[np.asarray(list(pinned), dtype=int)] = 0.0
    return result


def run_coupled_se(
    model: ScalarModel,
    coupling: CouplingMatrix,
    t_max: int = COUPLED_MAX_SWEEPS,
    tol: float = COUPLED_TOL,
    pinned: Optional[Iterable[int]] = None,
    init: Optional[np.ndarray] = None,
    boundary: str = "ring",
    stop_below: Optional[float] = None,
    keep_history: bool = True,
) -> CoupledSETrace:
    """
    Synchronous (Jacobi) sweeps of the coupled SE.

    Args:
        model: Prior and noise variance
        coupling: Coupling matrix
        t_max: Sweep cap
        tol: Sup-norm stopping tolerance between sweeps
        pinned: Pinned blocks; None means the seed (ring) or no block (open),
            an empty iterable disables pinning
        init: Initial profile, default v on free blocks and 0 on pinned ones
        boundary: "ring" or "open" (outside the chain E = 0)
        stop_below: Stop as soon as every block is at or below this level
        keep_history: Store every sweep (memory (sweeps+1)·(L+1))

    Returns:
        CoupledSETrace
    """
    L, w = coupling.length, coupling.window
    if pinned is None:
        pinned = default_pinned(L, w) if boundary == "ring" else np.array([], dtype=int)
    pinned = np.array(sorted(set(int(p) % (L + 1) for p in pinned)), dtype=int)

    if init is None:
        current = np.full(L + 1, model.v)
    else:
        current = np.array(model.check_error(np.asarray(init, dtype=float)), dtype=float).reshape(L + 1)
    current[pinned] = 0.0

    history = [current.copy()] if keep_history else None
    converged = stopped_early = False
    change = np.inf
    sweeps = 0

    for sweeps in range(1, t_max + 1):
        nxt = t_c(current, coupling, model, pinned, boundary)
        change = float(np.max(np.abs(nxt - current)))
        current = nxt
        if keep_history:
            history.append(current.copy())
        if stop_below is not None and current.max() <= stop_below:
            stopped_early = True
            break
        if change < tol:
            converged = True
            break
        if sweeps % 1000 == 0:
            logger.debug("coupled SE sweep %d: max E %.6g, change %.3e", sweeps, current.max(), change)
    else:
        logger.warning("coupled SE hit %d sweeps (Δ=%.6g, change %.3e)", t_max, model.delta, change)

    return CoupledSETrace(
        profile=CoupledProfile(values=current, pinned=pinned, converged=converged),
        history=np.array(history) if keep_history else None,
        sweeps=sweeps,
        converged=converged,
        stopped_early=stopped_early,
        sup_change=change,
    )


def coupled_se_succeeds(model: ScalarModel, coupling: CouplingMatrix, t_max: int = COUPLED_MAX_SWEEPS) -> bool:
    """Coupled-SE success: max_μ E_μ^(∞) ≤ E_good + 1e-6."""
    good = e_good(model)
    if is_uninformative_branch(model, good):
        return False
    level = good + SUCCESS_MARGIN
    trace = run_coupled_se(model, coupling, t_max=t_max, stop_below=level, keep_history=False)
    return trace.reached(level)


def delta_amp_coupled(
    prior: DiscretePrior,
    w: int,
    L: int,
    interval: Tuple[float, float],
    rtol: float = COUPLED_RTOL,
    coupling_kind: str = "triangle",
) -> float:
    """
    Coupled algorithmic threshold Δ_AMP,w,L by bisection on coupled SE.

    Raises:
        NoBracket: the success indicator does not change on interval
        DomainError: unknown coupling_kind
    """
    builders = {"triangle": triangle_coupling, "uniform": uniform_coupling}
    if coupling_kind not in builders:
        raise DomainError(f"unknown coupling '{coupling_kind}' (expected 'triangle' or 'uniform')")
    coupling = builders[coupling_kind](L, w)
    value, bracket = bisect_threshold(
        lambda d: coupled_se_succeeds(ScalarModel(prior, d), coupling),
        interval, rtol, f"Δ_AMP,w={w},L={L}",
    )
    logger.info("Δ_AMP,w=%d,L=%d = %.9g (bracket %s)", w, L, value, bracket)
    return value


def _extend(values: np.ndarray, pad: int) -> np.ndarray:
    """Continue the chain beyond both ends with its end values."""
    return np.concatenate([np.full(pad, values[0]), values, np.full(pad, values[-1])])


def _local_terms(chains, coupling: CouplingMatrix, model: ScalarModel):
    """
    Local terms F_μ = (v − E_μ) Σ_d Λ(d)(v − E_{μ+d})/(4Δ) − 𝓘(Σ_μ⁻²).

    `chains` is a list of (extended profile, centers); all terms share one
    quadrature call so equal inputs give bitwise equal terms.
    """
    w, v, delta = coupling.window, model.v, model.delta
    averaged, own = [], []
    for extended, centers in chains:
        windows = np.stack([extended[centers + d] for d in range(-w, w + 1)], axis=-1)
        averaged.append(windows @ coupling.kernel)
        own.append(extended[centers])
    flat = np.concatenate(averaged)
    snr = np.maximum((v - flat) / delta, 0.0)
    terms = (v - np.concatenate(own)) * (v - flat) / (4.0 * delta) - np.asarray(
        expected_log_normalizer(model.prior, snr)
    )
    return np.split(terms, np.cumsum([len(a) for a in averaged])[:-1])


def coupled_potential(profile, coupling: CouplingMatrix, model: ScalarModel, boundary: str = "ring") -> float:
    """
    Coupled potential f_c(E) = Σ_μν Λ_μν (v−E_μ)(v−E_ν)/(4Δ) − Σ_μ 𝓘(Σ_μ⁻²),
    with 𝓘(snr) the expected log normalizer of the scalar channel.

    Args:
        profile: CoupledProfile or array of L+1 values
        boundary: "ring" (indices mod L+1) or "saturated" (the chain is
            continued beyond its ends by its end values)

    Returns:
        f_c; a constant profile E gives (L+1)·(i_RS(E) − v²/(4Δ))
    """
    values = np.asarray(profile.values if isinstance(profile, CoupledProfile) else profile, dtype=float)
    model.check_error(values)
    if boundary == "ring":
        snr = block_snrs(values, coupling, model)
        quadratic = (model.v - values) @ coupling.matrix @ (model.v - values) / (4.0 * model.delta)
        return float(quadratic - np.sum(expected_log_normalizer(model.prior, snr)))
    if boundary == "saturated":
        pad = coupling.window + 1
        extended = _extend(values, pad)
        centers = np.arange(values.size) + pad
        (terms,) = _local_terms([(extended, centers)], coupling, model)
        return float(np.sum(terms))
    raise DomainError(f"unknown boundary '{boundary}' (expected 'ring' or 'saturated')")


def shift(values: np.ndarray) -> np.ndarray:
    """[S(E)]_0 = E_0 and [S(E)]_μ = E_{μ−1}."""
    values = np.asarray(values, dtype=float)
    return np.concatenate([values[:1], values[:-1]])


def shift_difference(profile, coupling: CouplingMatrix, model: ScalarModel) -> float:
    """
    f_c(S(E)) − f_c(E) on the saturated chain.

    The shifted chain is continued on the right by E_L (the end value of the
    unshifted chain), i.e. the shift acts on the continued sequence.
    """
    values = np.asarray(profile.values if isinstance(profile, CoupledProfile) else profile, dtype=float)
    model.check_error(values)
    pad = coupling.window + 2
    extended = _extend(values, pad)
    shifted = shift(extended)
    centers = np.arange(values.size) + pad
    terms_shifted, terms = _local_terms([(shifted, centers), (extended, centers)], coupling, model)
    return float(np.sum(terms_shifted) - np.sum(terms))


def boundary_shift_difference(profile, coupling: CouplingMatrix, model: ScalarModel) -> float:
    """
    Telescoped form of shift_difference: only the two boundary blocks remain,
    F_{−1}(E) − F_L(E), with F_μ the local term of block μ on the continued
    chain.
    """
    values = np.asarray(profile.values if isinstance(profile, CoupledProfile) else profile, dtype=float)
    model.check_error(values)
    pad = coupling.window + 2
    extended = _extend(values, pad)
    centers = np.array([pad - 1, pad + values.size - 1])
    (terms,) = _local_terms([(extended, centers)], coupling, model)
    left, right = terms
    return float(left - right)


def coupled_gradient(profile, coupling: CouplingMatrix, model: ScalarModel) -> np.ndarray:
    """∂f_c/∂E_μ = [Λ (E − T_c(E))]_μ/(2Δ) on the ring (no pinning)."""
    values = np.asarray(profile.values if isinstance(profile, CoupledProfile) else profile, dtype=float)
    residual = values - t_c(values, coupling, model)
    return coupling.matrix @ residual / (2.0 * model.delta)


@dataclass
class SaturatedProfile:
    values: np.ndarray
    mu_star: int
    mu_max: int
    e_max: float


def saturated_profile(profile, good: float) -> SaturatedProfile:
    """
    Diagnostic profile built from a (fixed-point) profile E*.

    E_good on μ ≤ μ*, E* on μ* < μ < μ_max, E_max on μ ≥ μ_max, where μ_max
    is the first maximizer and μ* the last block before μ_max with
    E*_μ ≤ E_good (−1 if there is none).
    """
    values = np.asarray(profile.values if isinstance(profile, CoupledProfile) else profile, dtype=float)
    mu_max = int(np.argmax(values))
    below = np.nonzero(values[: mu_max + 1] <= good)[0]
    mu_star = int(below[-1]) if below.size else -1
    out = values.copy()
    out[: mu_star + 1] = good
    out[mu_max:] = values[mu_max]
    return SaturatedProfile(values=out, mu_star=mu_star, mu_max=mu_max, e_max=float(values[mu_max]))


def wave_front(history: np.ndarray, level: float) -> np.ndarray:
    """Number of blocks at or below `level` after each sweep."""
    return np.sum(np.asarray(history) <= level, axis=1)

"""
Model - The Scalar Model (P₀, Δ) Shared by Potential and State Evolution
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .prior import DiscretePrior


@dataclass(frozen=True, eq=False)
class ScalarModel:
    """Spiked Wigner model parameters: signal prior and noise variance Δ."""

    prior: DiscretePrior
    delta: float

    def __post_init__(self):
        if not self.delta > 0 or self.delta == float("inf"):
            raise DomainError(f"delta must be positive and finite, got {self.delta}")

    @property
    def v(self) -> float:
        return self.prior.second_moment

    def snr(self, error):
        """Σ⁻² = (v − E)/Δ, elementwise for arrays."""
        return (self.v - error) / self.delta

    def check_error(self, error):
        """
        Validate a mean-square error E ∈ [0, v].

        Values outside by rounding noise (1e-12·v) are clipped back in.

        Raises:
            DomainError: E is outside [0, v] or not finite
        """
        arr = np.asarray(error, dtype=float)
        slack = 1e-12 * max(self.v, 1e-300)
        if not np.all(np.isfinite(arr)) or np.any(arr < -slack) or np.any(arr > self.v + slack):
            raise DomainError(f"E = {error} outside [0, v = {self.v}]")
        arr = np.clip(arr, 0.0, self.v)
        return float(arr) if arr.ndim == 0 else arr

"""
spikelab - Rank-One Spiked Wigner Estimation

This package contains:
- prior: discrete priors and the scalar Gaussian-channel denoiser
- potential: the replica-symmetric potential and the thresholds Δ_AMP, Δ_RS
- state_evolution / spatial_coupling: uncoupled and coupled SE
- amp: instance sampling and AMP (uncoupled and coupled)
- exact_oracle: exhaustive small-n posterior and its identities
- channel: effective noise of general output channels
"""

from .amp import (
    CoupledInstance,
    Instance,
    run_amp,
    run_coupled_amp,
    sample_coupled_instance,
    sample_instance,
    se_prediction,
)
from .channel import OutputChannel, awgn, effective_delta, gaussian_dropout, graph_edge
from .errors import (
    AmpDiverged,
    AssumptionViolation,
    AtTransition,
    ConfigError,
    DomainError,
    NoBracket,
    QuadratureNotConverged,
    SpikelabError,
    TooLarge,
)
from .exact_oracle import exact_posterior, finite_n_mutual_information, immse_check, nishimori_check
from .model import ScalarModel
from .potential import (
    delta_amp,
    delta_rs,
    i_rs,
    potential_gap,
    potential_report,
    stationary_points,
    threshold_report,
)
from .prior import (
    DiscretePrior,
    bernoulli,
    biased,
    community,
    dirac,
    make_prior,
    mmse,
    posterior_mean,
    rademacher,
)
from .spatial_coupling import delta_amp_coupled, run_coupled_se, triangle_coupling
from .state_evolution import e_good, run_se, t_u

__all__ = [
    "AmpDiverged",
    "AssumptionViolation",
    "AtTransition",
    "ConfigError",
    "CoupledInstance",
    "DiscretePrior",
    "DomainError",
    "Instance",
    "NoBracket",
    "OutputChannel",
    "QuadratureNotConverged",
    "ScalarModel",
    "SpikelabError",
    "TooLarge",
    "awgn",
    "bernoulli",
    "biased",
    "community",
    "delta_amp",
    "delta_amp_coupled",
    "delta_rs",
    "dirac",
    "e_good",
    "effective_delta",
    "exact_posterior",
    "finite_n_mutual_information",
    "gaussian_dropout",
    "graph_edge",
    "i_rs",
    "immse_check",
    "make_prior",
    "mmse",
    "nishimori_check",
    "posterior_mean",
    "potential_gap",
    "potential_report",
    "rademacher",
    "run_amp",
    "run_coupled_amp",
    "run_coupled_se",
    "run_se",
    "sample_coupled_instance",
    "sample_instance",
    "se_prediction",
    "stationary_points",
    "t_u",
    "threshold_report",
    "triangle_coupling",
]

__version__ = "0.1.0"

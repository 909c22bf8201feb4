"""Shared fixtures: repository root on sys.path and the priors used across tests."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spikelab.prior import bernoulli, biased, community, dirac, rademacher  # noqa: E402


@pytest.fixture
def sparse_prior():
    """Ber(0.02): first-order transition between Δ_AMP and Δ_RS."""
    return bernoulli(0.02)


@pytest.fixture
def ber03():
    return bernoulli(0.3)


@pytest.fixture
def biased_community():
    """Community prior at ρ = 0.3 with the default bias."""
    return biased(community(0.3))


@pytest.fixture
def point_mass():
    return dirac(1.0)


@pytest.fixture
def signs():
    return rademacher()

"""Gauss-Hermite rules rescaled to the standard normal, with node doubling."""

import logging

import numpy as np
import pytest

from spikelab.errors import QuadratureNotConverged
from spikelab.quadrature import INITIAL_NODES, adaptive_expectation, standard_normal_rule


class TestStandardNormalRule:

    def test_weights_sum_to_one(self):
        _, weights = standard_normal_rule(INITIAL_NODES)
        assert weights.sum() == pytest.approx(1.0, abs=1e-14)

    def test_even_moments(self):
        nodes, weights = standard_normal_rule(INITIAL_NODES)
        assert weights @ nodes**2 == pytest.approx(1.0, abs=1e-12)
        assert weights @ nodes**4 == pytest.approx(3.0, abs=1e-11)
        assert weights @ nodes**3 == pytest.approx(0.0, abs=1e-12)

    def test_rule_is_read_only(self):
        nodes, _ = standard_normal_rule(INITIAL_NODES)
        with pytest.raises(ValueError):
            nodes[0] = 0.0


class TestAdaptiveExpectation:

    def test_smooth_integrand(self):
        # E[cos Z] = e^{-1/2}
        value = adaptive_expectation(lambda z, w: w @ np.cos(z))
        assert float(value) == pytest.approx(np.exp(-0.5), abs=1e-12)

    def test_vector_valued(self):
        shifts = np.array([0.0, 0.5, 1.0])
        value = adaptive_expectation(lambda z, w: np.exp(shifts[:, None] * z) @ w)
        np.testing.assert_allclose(value, np.exp(shifts**2 / 2), rtol=1e-12)

    def test_raises_when_result_keeps_moving(self):
        with pytest.raises(QuadratureNotConverged):
            adaptive_expectation(lambda z, w: float(z.size))

    def test_accepts_small_change_at_cap_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="spikelab.quadrature"):
            value = adaptive_expectation(lambda z, w: 1e-6 / z.size)
        assert float(value) > 0
        assert "accepted" in caplog.text

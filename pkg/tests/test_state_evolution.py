"""Scalar state evolution E ↦ mmse((v − E)/Δ)."""

import logging

import numpy as np
import pytest

from spikelab.errors import DomainError
from spikelab.model import ScalarModel
from spikelab.potential import stationary_points
from spikelab.state_evolution import e_good, in_basin, run_se, same_fixed_point, t_u


class TestOperator:

    def test_endpoints(self, ber03):
        model = ScalarModel(ber03, 0.05)
        assert t_u(model, ber03.second_moment) == pytest.approx(ber03.variance, abs=1e-14)
        assert t_u(model, 0.0) < t_u(model, 0.2)

    def test_rejects_error_outside_range(self, ber03):
        model = ScalarModel(ber03, 0.05)
        with pytest.raises(DomainError):
            t_u(model, 0.31)
        with pytest.raises(DomainError):
            t_u(model, -0.01)

    def test_preserves_order_on_random_pairs(self, sparse_prior):
        model = ScalarModel(sparse_prior, 0.0011)
        rng = np.random.default_rng(3)
        pairs = np.sort(rng.uniform(0.0, sparse_prior.second_moment, size=(40, 2)), axis=1)
        low, high = t_u(model, pairs[:, 0]), t_u(model, pairs[:, 1])
        assert np.all(high >= low - 1e-9)

    def test_model_rejects_bad_delta(self, ber03):
        with pytest.raises(DomainError):
            ScalarModel(ber03, 0.0)
        with pytest.raises(DomainError):
            ScalarModel(ber03, float("inf"))


class TestRunSE:

    def test_monotone_from_both_ends(self, ber03):
        model = ScalarModel(ber03, 0.05)
        down = run_se(model).values
        up = run_se(model, 0.0).values
        assert np.all(np.diff(down) <= 1e-12)
        assert np.all(np.diff(up) >= -1e-12)

    def test_converges_to_good_fixed_point(self, ber03):
        model = ScalarModel(ber03, 0.05)
        trace = run_se(model)
        assert trace.converged
        assert trace.initial == pytest.approx(ber03.second_moment)
        assert same_fixed_point(model, trace.fixed_point, e_good(model))
        assert abs(trace.fixed_point - t_u(model, trace.fixed_point)) < 1e-10

    def test_unbiased_symmetric_prior_stays_uninformative(self, signs):
        trace = run_se(ScalarModel(signs, 0.5))
        assert trace.converged
        assert trace.fixed_point == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_is_known(self, point_mass):
        assert e_good(ScalarModel(point_mass, 1.0)) == 0.0

    def test_cap_reports_not_converged(self, sparse_prior, caplog):
        model = ScalarModel(sparse_prior, 0.0011)
        with caplog.at_level(logging.WARNING, logger="spikelab.state_evolution"):
            trace = run_se(model, t_max=2)
        assert not trace.converged
        assert trace.iterations == 2
        assert trace.cauchy_gap > 0
        assert "did not converge" in caplog.text


class TestBasin:

    def test_everything_flows_to_good_point_at_low_noise(self, ber03):
        model = ScalarModel(ber03, 0.02)
        assert in_basin(model, ber03.second_moment)
        assert in_basin(model, 0.1)

    def test_middle_point_separates_basins(self, sparse_prior):
        model = ScalarModel(sparse_prior, 0.00122)
        good, middle, bad = stationary_points(model)
        offset = 1e-3 * (bad - good)
        assert in_basin(model, middle - offset)
        assert not in_basin(model, middle + offset)

    def test_bad_point_outside_basin_between_thresholds(self, sparse_prior):
        model = ScalarModel(sparse_prior, 0.00122)
        assert not in_basin(model, sparse_prior.second_moment)
        assert in_basin(model, 0.0)

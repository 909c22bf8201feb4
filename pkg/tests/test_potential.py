"""Replica-symmetric potential, its landscape and the thresholds Δ_AMP, Δ_RS."""

import math

import numpy as np
import pytest

from spikelab.errors import NoBracket
from spikelab.model import ScalarModel
from spikelab.potential import (
    amp_reaches_good,
    asymptotic_free_energy,
    asymptotic_mmse,
    asymptotic_mutual_information,
    bisect_threshold,
    delta_spectral,
    find_bracket,
    i_rs,
    i_rs_derivative,
    potential_gap,
    potential_report,
    rs_good_is_global,
    scalar_mutual_information,
    stationary_points,
    stationary_points_detailed,
    threshold_report,
)
from spikelab.prior import bernoulli, biased, community, entropy
from spikelab.state_evolution import t_u


class TestPotentialValues:

    @pytest.mark.parametrize("delta", [0.1, 0.5, 2.0])
    def test_decomposition_into_scalar_information(self, ber03, delta):
        # i_RS(E) = I(S; snr(E)) + E²/(4Δ)
        model = ScalarModel(ber03, delta)
        errors = np.linspace(0.0, ber03.second_moment, 25)
        info = scalar_mutual_information(ber03, model.snr(errors))
        np.testing.assert_allclose(i_rs(model, errors) - info - errors**2 / (4 * delta), 0.0, atol=1e-9)

    def test_derivative_matches_finite_difference(self, ber03):
        model = ScalarModel(ber03, 0.1)
        step = 1e-4
        for e in (0.05, 0.15, 0.25):
            numeric = (i_rs(model, e + step) - i_rs(model, e - step)) / (2 * step)
            assert i_rs_derivative(model, e) == pytest.approx(numeric, abs=1e-5)

    def test_stationary_points_are_fixed_points(self, sparse_prior):
        model = ScalarModel(sparse_prior, 0.00122)
        for e in stationary_points(model):
            assert abs(e - t_u(model, e)) < 1e-10

    @pytest.mark.parametrize("prior", [bernoulli(0.3), bernoulli(0.1), biased(community(0.3))], ids=lambda p: p.describe())
    def test_vanishing_noise_gives_entropy(self, prior):
        assert asymptotic_mutual_information(ScalarModel(prior, 1e-6)) == pytest.approx(entropy(prior), abs=1e-3)

    def test_free_energy_offset(self, ber03):
        model = ScalarModel(ber03, 0.5)
        offset = ber03.second_moment**2 / 2.0
        assert asymptotic_free_energy(model) == pytest.approx(asymptotic_mutual_information(model) - offset)



class TestStationarity:

    @staticmethod
    def _random_models(count, seed):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            rho = rng.uniform(0.1, 0.5)
            prior = bernoulli(rho) if rng.random() < 0.5 else biased(community(rho))
            yield ScalarModel(prior, prior.second_moment**2 * rng.uniform(0.5, 2.0))

    def test_fixed_points_and_flat_potential_coincide(self):
        for model in self._random_models(40, seed=2024):
            v = model.v
            step = 1e-5 * v
            points = stationary_points(model)
            for e in points:
                if step < e < v - step:
                    slope = (i_rs(model, e + step) - i_rs(model, e - step)) / (2 * step)
                    assert abs(slope) <= 1e-6
            grid = np.linspace(0.01 * v, 0.99 * v, 99)
            slopes = (i_rs(model, grid + step) - i_rs(model, grid - step)) / (2 * step)
            for k in np.nonzero(np.sign(slopes[:-1]) != np.sign(slopes[1:]))[0]:
                assert any(grid[k] <= e <= grid[k + 1] for e in points)


class TestLandscape:

    def test_three_points_between_thresholds(self, sparse_prior):
        points = stationary_points_detailed(ScalarModel(sparse_prior, 0.00122))
        assert [p.kind for p in points] == ["min", "max", "min"]

    def test_gap_changes_sign_across_rs_threshold(self, sparse_prior):
        assert potential_gap(ScalarModel(sparse_prior, 0.0011)) > 0
        assert potential_gap(ScalarModel(sparse_prior, 0.0013)) < 0

    def test_single_good_point_gives_infinite_gap(self, ber03):
        assert potential_gap(ScalarModel(ber03, 0.01)) == math.inf

    def test_uninformative_only_gives_negative_infinite_gap(self):
        prior = biased(community(0.3))
        assert potential_gap(ScalarModel(prior, 2.0)) == -math.inf

    def test_report_mmse_consistent_with_minimizer(self, sparse_prior):
        model = ScalarModel(sparse_prior, 0.0011)
        report = potential_report(model)
        v = sparse_prior.second_moment
        assert report.vmmse == report.global_min_E
        assert report.mmmse == pytest.approx(v**2 - (v - report.global_min_E) ** 2)
        assert report.global_min_value == pytest.approx(min(report.values))
        assert not report.assumption_violated

    def test_asymptotic_mmse_jumps_across_rs_threshold(self, sparse_prior):
        _, below = asymptotic_mmse(ScalarModel(sparse_prior, 0.0011))
        _, above = asymptotic_mmse(ScalarModel(sparse_prior, 0.0013))
        assert below < 0.25 * sparse_prior.second_moment
        assert above > 0.5 * sparse_prior.second_moment


class TestIndicators:

    def test_amp_indicator(self, sparse_prior):
        assert amp_reaches_good(ScalarModel(sparse_prior, 0.0007))
        assert not amp_reaches_good(ScalarModel(sparse_prior, 0.00122))

    def test_rs_indicator(self, sparse_prior):
        assert rs_good_is_global(ScalarModel(sparse_prior, 0.0011))
        assert not rs_good_is_global(ScalarModel(sparse_prior, 0.0013))


class TestBisection:

    def test_finds_step(self):
        value, (lo, hi) = bisect_threshold(lambda d: d < 0.37, (0.1, 1.0), rtol=1e-8)
        assert value == pytest.approx(0.37, rel=1e-7)
        assert lo < 0.37 <= hi

    def test_no_sign_change(self):
        with pytest.raises(NoBracket):
            bisect_threshold(lambda d: True, (0.1, 1.0))

    def test_reversed_indicator(self):
        with pytest.raises(NoBracket):
            bisect_threshold(lambda d: d > 0.5, (0.1, 1.0))

    def test_invalid_interval(self):
        with pytest.raises(NoBracket):
            bisect_threshold(lambda d: d < 0.5, (1.0, 0.1))

    def test_find_bracket_on_geometric_grid(self):
        lo, hi = find_bracket(lambda d: d < 3.0, scale=1.0)
        assert lo < 3.0 <= hi
        assert hi / lo == pytest.approx(1e4 ** (1 / 47))

    def test_find_bracket_without_change(self):
        with pytest.raises(NoBracket):
            find_bracket(lambda d: True, scale=1.0)


class TestSpectral:

    def test_square_of_power(self, ber03):
        assert delta_spectral(ber03) == pytest.approx(0.09)
        assert delta_spectral(community(0.2)) == pytest.approx(1.0)


@pytest.mark.slow
class TestThresholdValues:

    def test_sparse_bernoulli(self, sparse_prior):
        report = threshold_report(
            sparse_prior, amp_interval=(0.0008, 0.0012), rs_interval=(0.0012, 0.00125),
            probes=[0.0011], rtol=1e-6,
        )
        assert 0.0008 < report.delta_amp < 0.0012
        assert 0.0012 < report.delta_rs < 0.00125
        assert report.delta_amp < report.delta_rs
        assert report.amp_bracket_width <= 1e-6 * report.amp_bracket[1]
        assert report.delta_spectral == pytest.approx(0.02**2)
        assert report.probes[0].e_good < 0.25 * 0.02

    def test_automatic_brackets_agree(self, sparse_prior):
        report = threshold_report(sparse_prior, rtol=1e-5)
        assert 0.0008 < report.delta_amp < 0.0012
        assert 0.0012 < report.delta_rs < 0.00125

    def test_balanced_community(self, biased_community):
        report = threshold_report(biased_community, rs_interval=(0.9, 1.1), amp_interval=(0.9, 1.1), rtol=1e-5)
        assert report.delta_rs == pytest.approx(1.0, abs=1e-2)

    def test_unbalanced_community_has_hard_phase(self):
        prior = biased(community(0.05))
        report = threshold_report(prior, amp_interval=(0.9, 1.05), rtol=1e-5)
        assert report.delta_amp == pytest.approx(1.0, abs=2e-2)
        assert report.delta_rs > 1.0

    def test_bernoulli_rho_sweep_ordering(self):
        for rho in (0.02, 0.05, 0.1):
            report = threshold_report(bernoulli(rho), rtol=1e-4)
            assert report.delta_amp <= report.delta_rs * (1 + 1e-4)

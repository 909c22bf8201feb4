"""Instance sampling, AMP against state evolution, coupled AMP and the spectral baseline."""

import numpy as np
import pytest

from spikelab.amp import (
    Instance,
    _coupled_fields,
    amp_experiment,
    coupled_se_prediction,
    initial_estimate,
    matrix_mse,
    matrix_se_prediction,
    run_amp,
    run_coupled_amp,
    sample_coupled_instance,
    sample_instance,
    se_prediction,
    spectral_estimate,
    vector_mse,
)
from spikelab.errors import AmpDiverged, DomainError
from spikelab.model import ScalarModel
from spikelab.prior import bernoulli, make_prior
from spikelab.spatial_coupling import triangle_coupling


class TestSampling:

    def test_same_seed_same_instance(self, ber03):
        a = sample_instance(ber03, 50, 0.1, seed=11)
        b = sample_instance(ber03, 50, 0.1, seed=11)
        np.testing.assert_array_equal(a.observation, b.observation)
        np.testing.assert_array_equal(a.signal, b.signal)

    def test_observation_is_symmetric(self, ber03):
        instance = sample_instance(ber03, 40, 0.1, seed=3)
        np.testing.assert_array_equal(instance.observation, instance.observation.T)

    def test_noiseless_observation_is_rank_one(self, ber03):
        instance = sample_instance(ber03, 30, 0.0, seed=5)
        s = instance.signal
        np.testing.assert_array_equal(instance.observation, np.outer(s, s) / np.sqrt(30))

    def test_signal_mean_within_clt_band(self, ber03):
        instance = sample_instance(ber03, 2000, 0.1, seed=2024)
        band = 5 * np.sqrt(ber03.variance / 2000)
        assert abs(instance.signal.mean() - ber03.mean) < band

    def test_rejects_bad_arguments(self, ber03):
        with pytest.raises(DomainError):
            sample_instance(ber03, 1, 0.1, seed=0)
        with pytest.raises(DomainError):
            sample_instance(ber03, 10, -0.1, seed=0)

    def test_initial_estimate_near_prior_mean(self, ber03):
        guess = initial_estimate(ber03, 100, seed=9)
        assert np.all(np.abs(guess - 0.3) <= 1e-3)
        np.testing.assert_array_equal(guess, initial_estimate(ber03, 100, seed=9))


class TestErrors:

    def test_matrix_mse_from_inner_products(self):
        rng = np.random.default_rng(1)
        s = rng.normal(size=50)
        est = rng.normal(size=50)
        direct = np.sum((np.outer(est, est) - np.outer(s, s)) ** 2) / 50**2
        assert matrix_mse(est, s) == pytest.approx(direct, rel=1e-12)

    def test_vector_mse(self):
        assert vector_mse(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 0.5


class TestSEPrediction:

    def test_starts_from_prior_variance(self, ber03):
        model = ScalarModel(ber03, 0.03)
        prediction = se_prediction(model, 5)
        assert prediction.shape == (6,)
        assert prediction[0] == pytest.approx(ber03.variance)
        assert np.all(np.diff(prediction) <= 1e-12)

    def test_matrix_prediction(self, ber03):
        model = ScalarModel(ber03, 0.03)
        errors = se_prediction(model, 3)
        np.testing.assert_allclose(matrix_se_prediction(model, 3), 0.09 - (0.3 - errors) ** 2)


class TestRunAmp:

    def test_recovers_signal_at_low_noise(self, ber03):
        instance = sample_instance(ber03, 500, 1e-4, seed=4)
        result = run_amp(instance, ber03, t_max=20)
        assert result.iterations == 20
        assert result.vmse[-1] <= 1e-3 * ber03.second_moment

    def test_tracks_state_evolution(self, ber03):
        delta, n, t_max = 0.03, 1500, 15
        results = amp_experiment(ber03, n, delta, seeds=[1, 2, 3], t_max=t_max)
        mean_vmse = np.mean([r.vmse for r in results], axis=0)
        prediction = se_prediction(ScalarModel(ber03, delta), t_max)
        np.testing.assert_allclose(mean_vmse[1:], prediction[1:], atol=0.03)

    def test_se_driven_variant(self, ber03):
        instance = sample_instance(ber03, 800, 0.03, seed=6)
        result = run_amp(instance, ber03, t_max=10, se_driven=True)
        assert result.se_driven
        expected = (0.3 - se_prediction(ScalarModel(ber03, 0.03), 10)[:-1]) / 0.03
        np.testing.assert_allclose(result.snr[1:], np.maximum(expected, 0.0))

    def test_frame_columns(self, ber03):
        result = run_amp(sample_instance(ber03, 100, 0.05, seed=0), ber03, t_max=3)
        frame = result.to_frame()
        assert list(frame.columns) == ["t", "Vmse", "Mmse", "snr", "onsager"]
        assert len(frame) == 4

    def test_divergence_keeps_partial_trace(self):
        truth = bernoulli(0.9)
        denoiser = make_prior([(0.0, 0.99), (1.0, 0.01)])
        instance = sample_instance(truth, 200, 1.0, seed=8)
        with pytest.raises(AmpDiverged) as info:
            run_amp(instance, denoiser, t_max=10)
        assert info.value.trace.vmse.size == 2

    def test_needs_positive_noise(self, ber03):
        instance = sample_instance(ber03, 20, 0.0, seed=0)
        with pytest.raises(DomainError):
            run_amp(instance, ber03)

    @pytest.mark.slow
    def test_sparse_prior_tracks_state_evolution(self, sparse_prior):
        delta, n, t_max = 0.0008, 4000, 20
        results = amp_experiment(sparse_prior, n, delta, seeds=range(10), t_max=t_max, workers=4)
        mean_vmse = np.mean([r.vmse for r in results], axis=0)
        mean_mmse = np.mean([r.mmse for r in results], axis=0)
        model = ScalarModel(sparse_prior, delta)
        assert np.max(np.abs(mean_vmse - se_prediction(model, t_max))) <= 4 / np.sqrt(n)
        assert np.max(np.abs(mean_mmse - matrix_se_prediction(model, t_max))) <= 4 / np.sqrt(n)


class TestSpectral:

    def test_overlap_above_spectral_threshold(self, ber03):
        instance = sample_instance(ber03, 400, 0.01, seed=12)
        result = spectral_estimate(instance)
        assert result.overlap > 0.7
        assert np.linalg.norm(result.vector) == pytest.approx(1.0)


class TestCoupledAmp:

    def test_blocks_are_consistent_with_transpose(self, ber03):
        coupling = triangle_coupling(6, 2)
        instance = sample_coupled_instance(ber03, 20, coupling, 0.1, seed=1)
        np.testing.assert_allclose(instance.block(1, 3), instance.block(3, 1).T)
        np.testing.assert_allclose(instance.block(0, 6), instance.block(6, 0).T)
        assert instance.noise_block(0, 3) is None
        assert not instance.block(0, 3).any()

    def test_zero_window_matches_independent_runs(self, ber03):
        coupling = triangle_coupling(2, 0)
        delta = 0.05
        instance = sample_coupled_instance(ber03, 200, coupling, delta, seed=21)
        coupled = run_coupled_amp(instance, ber03, t_max=10)
        for mu in (0, 1):
            single = Instance(
                signal=instance.signal[mu], observation=instance.block(mu, mu), delta=delta, seed=21,
            )
            alone = run_amp(single, ber03, t_max=10, init=coupled.initial[mu])
            np.testing.assert_allclose(coupled.vmse[:, mu], alone.vmse, atol=1e-4)

    def test_pinned_blocks_hold_the_signal(self, ber03):
        coupling = triangle_coupling(8, 2)
        instance = sample_coupled_instance(ber03, 50, coupling, 0.05, seed=2)
        result = run_coupled_amp(instance, ber03, t_max=5)
        assert result.vmse.shape == (6, 9)
        np.testing.assert_array_equal(result.vmse[:, instance.pinned], 0.0)
        frame = result.to_frame()
        assert list(frame.columns) == ["t", "mu", "Vmse"]

    def test_coupled_prediction_shape(self, ber03):
        coupling = triangle_coupling(8, 2)
        prediction = coupled_se_prediction(ScalarModel(ber03, 0.05), coupling, 4)
        assert prediction.shape == (5, 9)
        np.testing.assert_array_equal(prediction[:, [0, 1, 6, 7, 8]], 0.0)
        assert prediction[0, 4] == pytest.approx(ber03.variance)

    @pytest.mark.slow
    def test_coupled_amp_tracks_coupled_se(self, sparse_prior):
        L, w, n, t_max, delta = 32, 4, 1000, 30, 0.00122
        coupling = triangle_coupling(L, w)
        prediction = coupled_se_prediction(ScalarModel(sparse_prior, delta), coupling, t_max)
        runs = [
            run_coupled_amp(sample_coupled_instance(sparse_prior, n, coupling, delta, seed), sparse_prior, t_max).vmse
            for seed in range(5)
        ]
        assert np.max(np.abs(np.mean(runs, axis=0) - prediction)) <= 6 / np.sqrt(n)

    @pytest.mark.parametrize("use_signal", [True, False])
    def test_fields_match_explicit_block_sum(self, ber03, use_signal):
        L, w, n, delta = 6, 2, 50, 0.1
        coupling = triangle_coupling(L, w)
        instance = sample_coupled_instance(ber03, n, coupling, delta, seed=3)
        if use_signal:
            estimates = instance.signal.copy()
        else:
            estimates = np.random.default_rng(4).uniform(0.0, 1.0, size=instance.signal.shape)
        expected = np.zeros_like(estimates)
        for mu in range(L + 1):
            for nu in range(L + 1):
                weight = np.sqrt(coupling.matrix[mu, nu])
                expected[mu] += weight * instance.block(mu, nu) @ estimates[nu]
        expected /= np.sqrt(n) * delta
        np.testing.assert_allclose(_coupled_fields(instance, estimates), expected, rtol=1e-5, atol=1e-4)

    def test_block_profiles_follow_coupled_se(self, ber03):
        L, w, n, t_max, delta = 10, 2, 1000, 8, 0.03
        coupling = triangle_coupling(L, w)
        prediction = coupled_se_prediction(ScalarModel(ber03, delta), coupling, t_max)
        runs = [
            run_coupled_amp(sample_coupled_instance(ber03, n, coupling, delta, seed), ber03, t_max).vmse
            for seed in (1, 2, 3)
        ]
        mean_vmse = np.mean(runs, axis=0)
        np.testing.assert_allclose(mean_vmse[1:], prediction[1:], atol=0.1 * ber03.second_moment)

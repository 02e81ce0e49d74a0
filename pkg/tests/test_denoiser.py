import numpy as np
import pytest

from noisescope.denoiser import GmmOracle, denoise_loss, edm_loss_weight, gmm_denoise
from noisescope.diffusion import score
from noisescope.errors import InvalidArgumentError
from noisescope.schedule import NoiseRange, TrainingNoiseDensity, training_density_from_range


def single_gaussian(mu=0.0, s=1.0, dim=1):
    return GmmOracle(weights=[1.0], means=[[mu] * dim], stds=[s])


def two_gaussian_2d():
    return GmmOracle(weights=[0.4, 0.6], means=[[-1.5, -0.5], [1.5, 1.0]], stds=[0.4, 0.4])


class TestGmmDenoise:
    def test_small_sigma_limit(self):
        oracle = single_gaussian()
        x = np.array([0.7])
        assert gmm_denoise(oracle, x, 1e-6) == pytest.approx(x, abs=1e-5)

    def test_large_sigma_limit(self):
        oracle = single_gaussian()
        x = np.array([0.7])
        assert gmm_denoise(oracle, x, 1e4) == pytest.approx(0.0, abs=1e-3)

    def test_posterior_mean_closed_form(self):
        oracle = single_gaussian(mu=0.0, s=1.0)
        out = gmm_denoise(oracle, np.array([2.0]), 1.0)
        assert out == pytest.approx((1.0 * 2.0 + 1.0 * 0.0) / 2.0, rel=1e-12)

    def test_responsibilities_sum_to_one(self):
        oracle = two_gaussian_2d()
        rng = np.random.default_rng(0)
        x = rng.normal(0, 3, (500, 2))
        gamma = oracle.responsibilities(x, 0.8)
        assert np.allclose(gamma.sum(axis=-1), 1.0, atol=1e-12)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidArgumentError):
            GmmOracle(weights=[0.5, 0.6], means=[[0.0], [1.0]], stds=[1.0, 1.0])

    def test_batch_shapes(self):
        oracle = two_gaussian_2d()
        out = oracle.evaluate(np.zeros((7, 3, 2)), 1.0)
        assert out.shape == (7, 3, 2)


class TestOracleScore:
    def test_single_gaussian_reference(self):
        oracle = single_gaussian(mu=0.0, s=1.0)
        val = score(oracle, np.array([2.0]), 1.0)
        assert val == pytest.approx(-1.0, rel=1e-12)

    def test_matches_direct_mixture_score(self):
        # Independent formulation: gradient of the smoothed log density.
        oracle = two_gaussian_2d()
        rng = np.random.default_rng(1)
        x = rng.normal(0, 2, (100, 2))
        for sigma in (0.3, 1.0, 4.0):
            var = oracle.stds ** 2 + sigma ** 2
            d2 = np.sum((x[:, None, :] - oracle.means) ** 2, axis=-1)
            logw = np.log(oracle.weights) - 0.5 * 2 * np.log(2 * np.pi * var) - d2 / (2 * var)
            logw -= logw.max(axis=1, keepdims=True)
            w = np.exp(logw)
            w /= w.sum(axis=1, keepdims=True)
            direct = np.sum(w[:, :, None] * (oracle.means - x[:, None, :]) / var[:, None], axis=1)
            ours = score(oracle, x, sigma)
            assert np.max(np.abs(ours - direct) / (np.abs(direct) + 1e-8)) < 1e-10

    def test_matches_finite_difference_log_density(self):
        oracle = two_gaussian_2d()
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1.5, (20, 2))
        sigma, h = 0.9, 1e-5
        fd = np.empty_like(x)
        for a in range(2):
            dx = np.zeros(2)
            dx[a] = h
            fd[:, a] = (oracle.log_density(x + dx, sigma)
                        - oracle.log_density(x - dx, sigma)) / (2 * h)
        assert np.allclose(score(oracle, x, sigma), fd, atol=1e-6)

    def test_high_dimension_exactness(self):
        rng = np.random.default_rng(5)
        oracle = GmmOracle(weights=[0.3, 0.3, 0.4],
                           means=rng.normal(0, 1, (3, 8)),
                           stds=[0.5, 0.8, 1.2])
        x = rng.normal(0, 2, (50, 8))
        duality = oracle.evaluate(x, 0.7) - x - 0.7 ** 2 * score(oracle, x, 0.7)
        assert np.max(np.abs(duality)) < 1e-12


class TestDenoiseLoss:
    def test_oracle_achieves_posterior_variance_bound(self):
        s, dim = 1.0, 2
        oracle = single_gaussian(mu=0.3, s=s, dim=dim)
        density = training_density_from_range(NoiseRange(0.6, 5.3))
        rng = np.random.default_rng(0)
        batch = oracle.draw(10_000, rng)
        loss, grad = denoise_loss(oracle, batch, density, 0.5, np.random.default_rng(1))
        assert grad is None
        # Expected: E[lambda(sigma) * dim * sigma^2 s^2 / (sigma^2 + s^2)].
        sig = np.exp(density.mu + density.zeta * np.random.default_rng(42).standard_normal(200_000))
        expected = np.mean(edm_loss_weight(sig, 0.5) * dim * sig ** 2 * s ** 2 / (sig ** 2 + s ** 2))
        assert loss == pytest.approx(expected, rel=0.05)

    def test_identity_denoiser_unweighted_noise_energy(self):
        class Identity:
            data_shape = (3,)

            def evaluate(self, x, sigma):
                return np.asarray(x, dtype=float)

        density = TrainingNoiseDensity(mu=0.0, zeta=0.5)
        rng = np.random.default_rng(2)
        batch = np.zeros((20_000, 3))
        loss, _ = denoise_loss(Identity(), batch, density, 0.5, rng, weighted=False)
        sig = np.exp(0.5 * np.random.default_rng(7).standard_normal(500_000))
        assert loss == pytest.approx(np.mean(sig ** 2) * 3, rel=0.05)

    def test_empty_batch_rejected(self):
        oracle = single_gaussian()
        with pytest.raises(InvalidArgumentError):
            denoise_loss(oracle, np.empty((0, 1)), TrainingNoiseDensity(0.0, 1.0),
                         0.5, np.random.default_rng(0))

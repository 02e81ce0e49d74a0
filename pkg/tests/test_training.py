import numpy as np
import pytest

from noisescope.denoiser import GmmOracle, denoise_loss
from noisescope.errors import CorruptFileError, TrainingDivergedError
from noisescope.schedule import NoiseRange, TrainingNoiseDensity, training_density_from_range
from noisescope.seeding import child_rng
from noisescope.training import (
    TrainableDenoiser,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)


def toy_data(n=512, seed=0):
    oracle = GmmOracle(weights=[0.5, 0.5], means=[[-1.0, 0.0], [1.0, 0.5]], stds=[0.4, 0.4])
    return oracle.draw(n, child_rng(seed, 9))


class TestEvaluateContract:
    def test_shapes_and_finiteness(self):
        den = TrainableDenoiser.vector(2, width=32, emb_dim=16, init_seed=0)
        out = den.evaluate(np.zeros((5, 2)), 1.0)
        assert out.shape == (5, 2)
        for sigma in (1e-3, 1.0, 240.0):
            assert np.all(np.isfinite(den.evaluate(np.ones((3, 2)), sigma)))

    def test_single_item_shape(self):
        den = TrainableDenoiser.vector(2, width=32, emb_dim=16)
        assert den.evaluate(np.zeros(2), 0.5).shape == (2,)

    def test_conv_shapes(self):
        den = TrainableDenoiser.conv(16, channels=8, emb_dim=16)
        out = den.evaluate(np.zeros((2, 16, 16)), 0.7)
        assert out.shape == (2, 16, 16)
        assert den.n_params > 0


class TestGradient:
    def test_matches_central_finite_differences(self):
        den = TrainableDenoiser.vector(2, width=24, emb_dim=16, init_seed=1)
        rng = np.random.default_rng(5)
        x = rng.standard_normal((8, 2))
        sig = np.exp(rng.normal(0, 1, 8))
        eps = rng.standard_normal((8, 2))
        _, grad = den.loss_and_grad(x, sig, eps, 0.5, True)
        p0 = den.get_params()
        h = 1e-6
        for j in rng.choice(p0.size, 10, replace=False):
            plus = p0.copy()
            plus[j] += h
            den.set_params(plus)
            lp, _ = den.loss_and_grad(x, sig, eps, 0.5, True)
            minus = p0.copy()
            minus[j] -= h
            den.set_params(minus)
            lm, _ = den.loss_and_grad(x, sig, eps, 0.5, True)
            fd = (lp - lm) / (2 * h)
            assert abs(fd - grad[j]) / max(abs(fd), 1e-10) < 1e-4
        den.set_params(p0)

    def test_loss_matches_generic_path(self):
        # The torch loss and the numpy oracle-path loss share one formula.
        den = TrainableDenoiser.vector(2, width=24, emb_dim=16, init_seed=1)
        density = TrainingNoiseDensity(mu=0.0, zeta=0.8)
        batch = toy_data(64)
        loss_t, grad = denoise_loss(den, batch, density, 0.5, np.random.default_rng(3))
        assert grad is not None and grad.shape == (den.n_params,)

        class Wrap:
            data_shape = den.data_shape

            def evaluate(self, x, sigma):
                return den.evaluate(x, sigma)

        loss_n, none = denoise_loss(Wrap(), batch, density, 0.5, np.random.default_rng(3))
        assert none is None
        assert loss_t == pytest.approx(loss_n, rel=1e-9)


class TestTrainLoop:
    def test_zero_steps_returns_unchanged(self):
        den = TrainableDenoiser.vector(2, width=24, emb_dim=16, init_seed=0)
        before = den.get_params()
        den2, curve = train(den, toy_data(), TrainConfig(
            density=TrainingNoiseDensity(0.0, 1.0), n_steps=0))
        assert den2 is den
        assert curve.size == 0
        assert np.array_equal(den.get_params(), before)

    def test_same_seed_identical_curves(self):
        density = training_density_from_range(NoiseRange(0.6, 5.3))
        cfg = TrainConfig(density=density, batch_size=16, n_steps=60, lr=3e-4, seed=7)
        curves = []
        for _ in range(2):
            den = TrainableDenoiser.vector(2, width=24, emb_dim=16, init_seed=2)
            _, curve = train(den, toy_data(), cfg)
            curves.append(curve)
        assert np.array_equal(curves[0], curves[1])

    def test_loss_decreases_on_toy_task(self):
        density = training_density_from_range(NoiseRange(0.6, 5.3))
        den = TrainableDenoiser.vector(2, width=64, emb_dim=16, init_seed=0)
        _, curve = train(den, toy_data(4096), TrainConfig(
            density=density, sigma_data=1.5, batch_size=32, n_steps=1200, lr=5e-4, seed=0))
        assert curve[-100:].mean() < curve[:100].mean()

    def test_divergence_detected(self):
        den = TrainableDenoiser.vector(2, width=24, emb_dim=16, init_seed=0)
        with pytest.raises(TrainingDivergedError):
            train(den, toy_data(), TrainConfig(
                density=TrainingNoiseDensity(-5.0, 0.3), n_steps=4000, lr=5e3, seed=0))


class TestTrainedToySampling:
    def test_sample_moments_within_ten_percent(self):
        # Trained on the two-Gaussian task and plugged into the sampler; the
        # sampling top stays inside the well-trained band (the far bound is
        # exactly where extrapolation error would creep in).
        from noisescope.diffusion import SamplerConfig, sample
        from noisescope.schedule import make_schedule, sampling_bounds_from_range

        oracle = GmmOracle(weights=[0.4, 0.6], means=[[-1.5, -0.5], [1.5, 1.0]],
                           stds=[0.4, 0.4])
        truth = oracle.draw(400_000, child_rng(2, 9))
        target_mean, target_std = truth.mean(axis=0), truth.std(axis=0)
        noise_range = NoiseRange(0.6, 5.3)
        density = training_density_from_range(noise_range)
        lo, _ = sampling_bounds_from_range(noise_range)
        sched = make_schedule(lo, 20.0, 7.0, 64)
        for seed in (0, 1, 2):
            data = oracle.draw(50_000, child_rng(seed, 9))
            den = TrainableDenoiser.vector(2, width=128, emb_dim=32, init_seed=seed)
            den, _ = train(den, data, TrainConfig(
                density=density, sigma_data=1.5, batch_size=64, n_steps=20_000,
                lr=5e-4, seed=seed, trailing_window=500))
            xs = sample(den, SamplerConfig(schedule=sched, seed=seed + 100), 10_000)
            mean_err = np.abs(xs.mean(axis=0) - target_mean) / target_std
            std_err = np.abs(xs.std(axis=0) - target_std) / target_std
            assert np.all(mean_err <= 0.10), (seed, mean_err)
            assert np.all(std_err <= 0.10), (seed, std_err)


class TestCheckpoints:
    def test_round_trip(self, tmp_path):
        den = TrainableDenoiser.vector(3, width=24, emb_dim=16, init_seed=4)
        path = tmp_path / "d.ckpt"
        save_checkpoint(den, path)
        loaded = load_checkpoint(path)
        assert loaded.arch == den.arch
        # Parameters survive as float32.
        assert np.allclose(loaded.get_params(),
                           den.get_params().astype(np.float32).astype(np.float64))
        x = np.random.default_rng(0).standard_normal((4, 3))
        assert np.allclose(loaded.evaluate(x, 1.0), den.evaluate(x, 1.0), atol=1e-5)

    def test_magic_bytes(self, tmp_path):
        den = TrainableDenoiser.vector(2, width=8, emb_dim=8)
        path = tmp_path / "d.ckpt"
        save_checkpoint(den, path)
        blob = path.read_bytes()
        assert blob[:4] == b"NSCK"

    def test_corrupt_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(CorruptFileError):
            load_checkpoint(path)

    def test_truncated_rejected(self, tmp_path):
        den = TrainableDenoiser.vector(2, width=8, emb_dim=8)
        path = tmp_path / "d.ckpt"
        save_checkpoint(den, path)
        (tmp_path / "t.ckpt").write_bytes(path.read_bytes()[:40])
        with pytest.raises(CorruptFileError):
            load_checkpoint(tmp_path / "t.ckpt")

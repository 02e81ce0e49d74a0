"""Denoiser interface and the analytic Gaussian-mixture oracle.

A denoiser estimates the clean data point from a noisy observation at a known
noise level.  The oracle computes the exact posterior mean under an isotropic
Gaussian mixture, which makes every sampler and training routine verifiable
against closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import InvalidArgumentError
from .schedule import TrainingNoiseDensity, sample_training_sigma


@runtime_checkable
class Denoiser(Protocol):
    """D(x; sigma): same-shape denoised estimate of x at noise level sigma."""

    @property
    def data_shape(self) -> tuple[int, ...]: ...

    def evaluate(self, x: np.ndarray, sigma: float) -> np.ndarray: ...


def _check_batch(x: np.ndarray, data_shape: tuple[int, ...]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    nd = len(data_shape)
    if x.shape[-nd:] != data_shape:
        raise InvalidArgumentError(f"trailing dimensions must be {data_shape}, got {x.shape}")
    return x


@dataclass(frozen=True)
class GmmOracle:
    """Isotropic Gaussian-mixture denoiser with exact posterior means.

    Components are (weight, mean vector, std); weights must sum to one.
    """

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    _shape: tuple[int, ...] = field(default=None, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        s = np.asarray(self.stds, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        if w.ndim != 1 or mu.ndim != 2 or s.shape != w.shape or mu.shape[0] != w.shape[0]:
            raise InvalidArgumentError("need per-component weights, means and stds")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise InvalidArgumentError("component weights must sum to 1")
        if np.any(w <= 0) or np.any(s <= 0):
            raise InvalidArgumentError("weights and stds must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", s)
        object.__setattr__(self, "_shape", (mu.shape[1],))

    @property
    def data_shape(self) -> tuple[int, ...]:
        return self._shape

    @property
    def dim(self) -> int:
        return self._shape[0]

    def responsibilities(self, x: np.ndarray, sigma: float) -> np.ndarray:
        """Posterior component probabilities under N(mean_k, (std_k^2 + sigma^2) I)."""
        x = _check_batch(x, self._shape)
        var = self.stds ** 2 + sigma ** 2                                # (K,)
        d2 = np.sum((x[..., None, :] - self.means) ** 2, axis=-1)        # (..., K)
        log_g = (np.log(self.weights) - 0.5 * self.dim * np.log(2.0 * np.pi * var)
                 - d2 / (2.0 * var))
        log_g -= log_g.max(axis=-1, keepdims=True)
        g = np.exp(log_g)
        return g / g.sum(axis=-1, keepdims=True)

    def evaluate(self, x: np.ndarray, sigma: float) -> np.ndarray:
        """Exact posterior mean E[x0 | x] at noise level sigma."""
        if not sigma > 0.0:
            raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
        x = _check_batch(x, self._shape)
        gamma = self.responsibilities(x, sigma)                          # (..., K)
        var = self.stds ** 2 + sigma ** 2
        pull = (self.means - x[..., None, :]) / var[:, None]             # (..., K, d)
        return x + sigma ** 2 * np.sum(gamma[..., None] * pull, axis=-2)

    def log_density(self, x: np.ndarray, sigma: float) -> np.ndarray:
        """log p_sigma(x), the mixture density smoothed to noise level sigma."""
        x = _check_batch(x, self._shape)
        var = self.stds ** 2 + sigma ** 2
        d2 = np.sum((x[..., None, :] - self.means) ** 2, axis=-1)
        log_g = (np.log(self.weights) - 0.5 * self.dim * np.log(2.0 * np.pi * var)
                 - d2 / (2.0 * var))
        peak = log_g.max(axis=-1, keepdims=True)
        return np.squeeze(peak, -1) + np.log(np.exp(log_g - peak).sum(axis=-1))

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Sample n points from the clean mixture."""
        comp = rng.choice(self.weights.size, size=n, p=self.weights)
        return self.means[comp] + self.stds[comp, None] * rng.standard_normal((n, self.dim))

    def conditional_moments(self, known_axis: int, known_value: float) -> tuple[np.ndarray, np.ndarray]:
        """Mean and std of the remaining coordinates given one observed coordinate.

        Valid because components are isotropic: conditioning reweights the
        components without moving their means.
        """
        log_w = (np.log(self.weights)
                 - 0.5 * np.log(2.0 * np.pi * self.stds ** 2)
                 - (known_value - self.means[:, known_axis]) ** 2 / (2.0 * self.stds ** 2))
        log_w -= log_w.max()
        w = np.exp(log_w)
        w /= w.sum()
        free = [a for a in range(self.dim) if a != known_axis]
        mu = self.means[:, free]
        mean = w @ mu
        second = w @ (self.stds[:, None] ** 2 + mu ** 2)
        return mean, np.sqrt(second - mean ** 2)


def gmm_denoise(oracle: GmmOracle, x: np.ndarray, sigma: float) -> np.ndarray:
    """Functional form of the oracle's posterior-mean denoiser."""
    return oracle.evaluate(x, sigma)


def edm_loss_weight(sigma: np.ndarray | float, sigma_data: float) -> np.ndarray | float:
    """Standard weighting (sigma^2 + sigma_data^2) / (sigma * sigma_data)^2."""
    return (np.asarray(sigma) ** 2 + sigma_data ** 2) / (np.asarray(sigma) * sigma_data) ** 2


def denoise_loss(denoiser, clean_batch: np.ndarray, density: TrainingNoiseDensity,
                 sigma_data: float, rng: np.random.Generator,
                 weighted: bool = True):
    """Denoising objective on one batch.

    Per item, a noise level is drawn from the density, the item perturbed, and
    the (optionally weighted) squared error of the denoised estimate summed
    over components.  Returns (batch mean loss, gradient); the gradient is a
    flat parameter-order vector for trainable denoisers and None otherwise.
    """
    x = _check_batch(np.asarray(clean_batch, dtype=float), denoiser.data_shape)
    if x.shape == denoiser.data_shape:
        x = x[None]
    n = x.shape[0]
    if n == 0:
        raise InvalidArgumentError("batch must be non-empty")
    sigmas = sample_training_sigma(density, rng, size=n)
    eps = rng.standard_normal(x.shape)

    if hasattr(denoiser, "loss_and_grad"):
        return denoiser.loss_and_grad(x, sigmas, eps, sigma_data, weighted)

    expand = (slice(None),) + (None,) * len(denoiser.data_shape)
    noisy = x + sigmas[expand] * eps
    per_item = np.empty(n)
    for i in range(n):
        d = denoiser.evaluate(noisy[i], float(sigmas[i]))
        per_item[i] = float(np.sum((d - x[i]) ** 2))
    if weighted:
        per_item = per_item * edm_loss_weight(sigmas, sigma_data)
    return float(per_item.mean()), None

"""Score evaluation and probability-flow sampling.

The sampler integrates dx/dsigma = (x - D(x; sigma)) / sigma down a descending
noise schedule with Heun (trapezoidal) steps, falling back to a plain Euler
step into sigma = 0.  Stochasticity enters only through per-step churn: the
noise level is raised slightly and matching Gaussian noise injected before the
step.  Encoding runs the same integrator up an ascending schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .denoiser import Denoiser
from .errors import InvalidArgumentError, NonFiniteStateError
from .rangefinder import perturb as forward_perturb  # noqa: F401  (shared contract)
from .schedule import CHURN_NONE, ChurnParams, SamplingSchedule, churned_sigma, make_schedule
from .seeding import sample_rngs

__all__ = [
    "SamplerConfig", "score", "sample", "decode", "encode", "forward_perturb",
    "heun_step", "apply_churn", "BatchNoise",
]


@dataclass(frozen=True)
class SamplerConfig:
    schedule: SamplingSchedule
    churn: ChurnParams = CHURN_NONE
    seed: int = 0
    heun: bool = True


def score(denoiser: Denoiser, x: np.ndarray, sigma: float) -> np.ndarray:
    """Score of the smoothed density at level sigma: (D(x; sigma) - x) / sigma^2."""
    if not sigma > 0.0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    return (denoiser.evaluate(x, sigma) - x) / sigma ** 2


class BatchNoise:
    """Per-sample Gaussian noise, one independent stream per batch element.

    Streams derive from (seed, sample index), so sample i receives the same
    noise regardless of batch size, and draws happen only when requested.
    """

    def __init__(self, seed: int, n: int, data_shape: tuple[int, ...]):
        self._gens = sample_rngs(seed, n)
        self._shape = tuple(data_shape)

    def draw(self) -> np.ndarray:
        return np.stack([g.standard_normal(self._shape) for g in self._gens])


def heun_step(denoiser: Denoiser, x: np.ndarray, sigma_from: float, sigma_to: float,
              heun: bool = True) -> np.ndarray:
    """One integrator step from sigma_from to sigma_to (either direction).

    Applies the second-order correction unless disabled or sigma_to = 0.
    """
    d = (x - denoiser.evaluate(x, sigma_from)) / sigma_from
    x_euler = x + (sigma_to - sigma_from) * d
    if heun and sigma_to > 0.0:
        d2 = (x_euler - denoiser.evaluate(x_euler, sigma_to)) / sigma_to
        return x + (sigma_to - sigma_from) * 0.5 * (d + d2)
    return x_euler


def apply_churn(x: np.ndarray, sigma: float, churn: ChurnParams, n_steps: int,
                noise_draw) -> tuple[np.ndarray, float]:
    """Raise the noise level per the churn rule and inject matching noise.

    ``noise_draw`` is called only when the level actually increases, keeping
    random streams identical between churned and unchurned configurations.
    """
    sigma_hat = churned_sigma(sigma, churn, n_steps)
    if sigma_hat > sigma:
        bump = np.sqrt(sigma_hat ** 2 - sigma ** 2)
        x = x + bump * churn.s_noise * noise_draw()
    return x, sigma_hat


def _check_finite(x: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(f"non-finite state at step {step}", step=step)


def decode(denoiser: Denoiser, x: np.ndarray, config: SamplerConfig,
           noise: BatchNoise | None = None) -> np.ndarray:
    """Integrate a state at sigma_max down the schedule to sigma = 0.

    Deterministic unless the config carries churn, in which case ``noise``
    must supply the per-step injections.  Churn is skipped on the final step
    into zero.
    """
    sig = config.schedule.sigmas
    n = config.schedule.n_steps
    for i in range(n):
        s_i, s_next = float(sig[i]), float(sig[i + 1])
        if s_next > 0.0 and noise is not None:
            x, s_hat = apply_churn(x, s_i, config.churn, n, noise.draw)
        else:
            s_hat = s_i
        x = heun_step(denoiser, x, s_hat, s_next, config.heun)
        _check_finite(x, i)
    return x


def sample(denoiser: Denoiser, config: SamplerConfig, n_samples: int,
           seed: int | None = None) -> np.ndarray:
    """Draw n_samples from the model: init x ~ N(0, sigma_max^2 I), then decode.

    Bit-reproducible for a fixed (seed, churn) configuration; sample i does
    not depend on n_samples.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be positive")
    noise = BatchNoise(config.seed if seed is None else seed, n_samples, denoiser.data_shape)
    x = config.schedule.sigma_max * noise.draw()
    return decode(denoiser, x, config, noise=noise)


def encode(denoiser: Denoiser, x0: np.ndarray, sigma_target: float, n_steps: int,
           sigma_lo: float = 0.002, rho: float = 7.0) -> np.ndarray:
    """Deterministically integrate clean data up to the latent at sigma_target.

    The clean input is taken as the state at the first positive level
    sigma_lo; when sigma_target equals it the input is returned unchanged.
    """
    x = np.asarray(x0, dtype=float).copy()
    if sigma_target < sigma_lo:
        raise InvalidArgumentError("sigma_target must be at least the starting level")
    if sigma_target == sigma_lo:
        return x
    ascending = make_schedule(sigma_lo, sigma_target, rho, n_steps).nonzero_sigmas[::-1]
    for i in range(ascending.size - 1):
        x = heun_step(denoiser, x, float(ascending[i]), float(ascending[i + 1]), heun=True)
        _check_finite(x, i)
    return x

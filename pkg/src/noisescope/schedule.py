"""Noise-level mathematics.

Sampling schedules (power-law interpolation between sigma_max and sigma_min),
log-normal training noise densities, derivation of a density and sampling
bounds from a measured plausibility-relevant noise range, per-step churn, and
the prioritization density of a schedule with respect to a range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class NoiseRange:
    """Plausibility-relevant noise interval [sigma_end, sigma_start]."""

    sigma_end: float
    sigma_start: float

    def __post_init__(self):
        if not (0.0 < self.sigma_end < self.sigma_start):
            raise InvalidArgumentError(
                f"noise range requires 0 < sigma_end < sigma_start, "
                f"got ({self.sigma_end}, {self.sigma_start})"
            )

    def contains(self, sigma: float) -> bool:
        """Inclusive membership test."""
        return self.sigma_end <= sigma <= self.sigma_start


@dataclass(frozen=True)
class TrainingNoiseDensity:
    """Log-normal law for training noise levels: ln(sigma) ~ N(mu, zeta^2)."""

    mu: float
    zeta: float

    def __post_init__(self):
        if not (self.zeta > 0.0 and math.isfinite(self.zeta) and math.isfinite(self.mu)):
            raise InvalidArgumentError(f"invalid density parameters (mu={self.mu}, zeta={self.zeta})")


@dataclass(frozen=True)
class ChurnParams:
    """Stochastic-sampling controls: churn amount, active window, noise inflation."""

    s_churn: float = 0.0
    s_min: float = 0.0
    s_max: float = math.inf
    s_noise: float = 1.0

    def __post_init__(self):
        if self.s_churn < 0.0 or self.s_min < 0.0:
            raise InvalidArgumentError("s_churn and s_min must be non-negative")
        if not self.s_max > 0.0:
            raise InvalidArgumentError("s_max must be positive (may be inf)")
        if self.s_min > self.s_max:
            raise InvalidArgumentError("require s_min <= s_max")
        if not self.s_noise > 0.0:
            raise InvalidArgumentError("s_noise must be positive")


# Widely used defaults for this sampler family.
EDM_TRAINING_DENSITY = TrainingNoiseDensity(mu=-1.2, zeta=1.2)
EDM_SIGMA_MIN = 0.002
EDM_SIGMA_MAX = 80.0
EDM_RHO = 7.0

CHURN_NONE = ChurnParams()
# Light churn over all levels; the configuration used for the schedule comparison.
CHURN_LIGHT = ChurnParams(s_churn=5.0, s_min=0.0, s_max=math.inf, s_noise=1.003)
# Classic stochastic-sampler defaults.
CHURN_EDM = ChurnParams(s_churn=40.0, s_min=0.05, s_max=50.0, s_noise=1.003)


@dataclass(frozen=True)
class SamplingSchedule:
    """Descending noise levels sigma_0 > ... > sigma_{N-1} > sigma_N = 0.

    ``sigmas`` has N+1 entries; the first equals ``sigma_max``, the entry at
    index N-1 equals ``sigma_min`` and the trailing entry is exactly zero.
    """

    sigmas: np.ndarray = field(repr=False)
    rho: float
    n_steps: int
    sigma_min: float
    sigma_max: float

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=float)
        object.__setattr__(self, "sigmas", sig)
        if sig.ndim != 1 or sig.shape[0] != self.n_steps + 1:
            raise InvalidArgumentError("schedule must hold n_steps + 1 levels")
        if not np.all(np.isfinite(sig)):
            raise InvalidArgumentError("schedule contains non-finite levels")
        if sig[0] != self.sigma_max or sig[self.n_steps - 1] != self.sigma_min or sig[-1] != 0.0:
            raise InvalidArgumentError("schedule endpoints must be exact")
        if not np.all(np.diff(sig) < 0.0):
            raise InvalidArgumentError("schedule must be strictly decreasing")

    @property
    def nonzero_sigmas(self) -> np.ndarray:
        """The N levels at which the denoiser is evaluated."""
        return self.sigmas[:-1]


def make_schedule(sigma_min: float, sigma_max: float, rho: float, n_steps: int) -> SamplingSchedule:
    """Build the power-law sampling schedule.

    Interior levels interpolate sigma_max^(1/rho) -> sigma_min^(1/rho) linearly
    in the index and are raised back to the rho-th power.  The two endpoints
    and the trailing zero are assigned by substitution so they are exact.
    """
    if not (0.0 < sigma_min < sigma_max) or not math.isfinite(sigma_max):
        raise InvalidArgumentError(f"require 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})")
    if n_steps < 2:
        raise InvalidArgumentError(f"n_steps must be >= 2, got {n_steps}")
    if not rho > 0.0:
        raise InvalidArgumentError(f"rho must be positive, got {rho}")

    n = int(n_steps)
    lo = sigma_min ** (1.0 / rho)
    hi = sigma_max ** (1.0 / rho)
    i = np.arange(1, n - 1, dtype=float)
    interior = (hi + i / (n - 1) * (lo - hi)) ** rho
    sigmas = np.concatenate(([sigma_max], interior, [sigma_min], [0.0]))
    return SamplingSchedule(sigmas=sigmas, rho=float(rho), n_steps=n,
                            sigma_min=float(sigma_min), sigma_max=float(sigma_max))


def training_density_from_range(noise_range: NoiseRange) -> TrainingNoiseDensity:
    """Log-normal density centered on the range.

    mu is the midpoint of ln(sigma_end) and ln(sigma_start) and zeta the
    half-width, so the one-zeta interval [mu - zeta, mu + zeta] maps exactly
    onto [ln sigma_end, ln sigma_start] and about 68% of the drawn noise
    levels land inside the range.
    """
    log_end = math.log(noise_range.sigma_end)
    log_start = math.log(noise_range.sigma_start)
    return TrainingNoiseDensity(mu=0.5 * (log_start + log_end), zeta=0.5 * (log_start - log_end))


def sample_training_sigma(density: TrainingNoiseDensity, rng: np.random.Generator,
                          size: int | tuple[int, ...] | None = None) -> float | np.ndarray:
    """Draw sigma = exp(mu + zeta * z) with z standard normal."""
    z = rng.standard_normal(size)
    out = np.exp(density.mu + density.zeta * z)
    return float(out) if size is None else out


def sampling_bounds_from_range(noise_range: NoiseRange) -> tuple[float, float]:
    """Sampling bounds covering the three-zeta support of the range density.

    In log space the bounds are mu -+ 3*zeta, which reduces to
    sigma_min = sigma_end^2 / sigma_start and sigma_max = sigma_start^2 / sigma_end.
    """
    lo = noise_range.sigma_end ** 2 / noise_range.sigma_start
    hi = noise_range.sigma_start ** 2 / noise_range.sigma_end
    return lo, hi


def churned_sigma(sigma_i: float, params: ChurnParams, n_steps: int) -> float:
    """Per-step raised noise level.

    sigma_hat = sigma_i * (1 + gamma) with gamma = min(s_churn / N, sqrt(2) - 1)
    when sigma_i lies in [s_min, s_max], else gamma = 0.  Never below sigma_i.
    """
    if n_steps < 1:
        raise InvalidArgumentError("n_steps must be >= 1")
    if sigma_i < 0.0:
        raise InvalidArgumentError("sigma_i must be non-negative")
    if params.s_min <= sigma_i <= params.s_max:
        gamma = min(params.s_churn / n_steps, math.sqrt(2.0) - 1.0)
    else:
        gamma = 0.0
    return sigma_i * (1.0 + gamma)


def prioritization_density(schedule: SamplingSchedule, noise_range: NoiseRange) -> float:
    """Fraction of the schedule's N nonzero levels inside the range (inclusive)."""
    levels = schedule.nonzero_sigmas
    inside = (levels >= noise_range.sigma_end) & (levels <= noise_range.sigma_start)
    return float(np.count_nonzero(inside)) / schedule.n_steps


# ---------------------------------------------------------------------------
# Plain-text serialization.
#
# Format: one "key=value" pair per line, "#" starts a comment, a "kind=" line
# identifies the record type.  Floats are written with repr precision so a
# dump/parse round trip is exact.


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def kv_dumps(kind: str, fields: dict[str, float | int]) -> str:
    lines = [f"kind={kind}"]
    for key, value in fields.items():
        lines.append(f"{key}={_fmt(value) if isinstance(value, float) else value}")
    return "\n".join(lines) + "\n"


def kv_loads(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"malformed key-value line: {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _expect_kind(pairs: dict[str, str], kind: str) -> None:
    if pairs.get("kind") != kind:
        raise InvalidArgumentError(f"expected kind={kind}, got kind={pairs.get('kind')!r}")


def schedule_to_kv(schedule: SamplingSchedule) -> str:
    return kv_dumps("schedule", {
        "sigma_min": schedule.sigma_min, "sigma_max": schedule.sigma_max,
        "rho": schedule.rho, "n_steps": schedule.n_steps,
    })


def schedule_from_kv(text: str) -> SamplingSchedule:
    pairs = kv_loads(text)
    _expect_kind(pairs, "schedule")
    return make_schedule(float(pairs["sigma_min"]), float(pairs["sigma_max"]),
                         float(pairs["rho"]), int(pairs["n_steps"]))


def density_to_kv(density: TrainingNoiseDensity) -> str:
    return kv_dumps("density", {"mu": density.mu, "zeta": density.zeta})


def density_from_kv(text: str) -> TrainingNoiseDensity:
    pairs = kv_loads(text)
    _expect_kind(pairs, "density")
    return TrainingNoiseDensity(mu=float(pairs["mu"]), zeta=float(pairs["zeta"]))


def range_to_kv(noise_range: NoiseRange) -> str:
    return kv_dumps("range", {"sigma_end": noise_range.sigma_end,
                              "sigma_start": noise_range.sigma_start})


def range_from_kv(text: str) -> NoiseRange:
    pairs = kv_loads(text)
    _expect_kind(pairs, "range")
    return NoiseRange(sigma_end=float(pairs["sigma_end"]), sigma_start=float(pairs["sigma_start"]))


def schedule_to_csv(schedule: SamplingSchedule) -> str:
    """CSV dump with columns (index, sigma), one row per level."""
    lines = ["index,sigma"]
    for i, s in enumerate(schedule.sigmas):
        lines.append(f"{i},{_fmt(float(s))}")
    return "\n".join(lines) + "\n"

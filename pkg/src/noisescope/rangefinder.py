"""Determination of the plausibility-relevant noise range from an image corpus.

A perturbation sweep adds Gaussian noise of increasing level to each image and
tracks, per noise level, the object and background pixel statistics, a
Shapiro-Wilk p-value on the object pixels, and the KL divergence between
Gaussian fits of the two classes.  sigma_end is read off the p-value curve
(largest level still failing normality), sigma_start off the KL curve
(smallest level from which the classes stay indistinguishable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    DegenerateMaskError,
    InvalidArgumentError,
    InvertedRangeError,
    NoConvergenceError,
    NoCrossingError,
)
from .schedule import NoiseRange
from .seeding import STREAM_SWEEP, child_rng
from .shapiro import shapiro_wilk

__all__ = [
    "PerturbationTrace", "RangeFinderConfig", "RangeReport",
    "perturb", "gaussian_kl", "segment_object", "validate_mask", "run_sweep",
    "estimate_sigma_end", "estimate_sigma_start", "find_range",
    "shapiro_wilk", "smooth_curve", "default_sigma_grid", "trace_to_csv",
]


def default_sigma_grid(sigma_max: float = 10.0, step: float = 0.1) -> np.ndarray:
    """Evenly spaced sweep grid from 0 to sigma_max inclusive."""
    n = int(round(sigma_max / step))
    return np.linspace(0.0, n * step, n + 1)


def perturb(image: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add isotropic Gaussian noise of standard deviation sigma.

    Callers hand in data standardized to [-1, 1]; the output is not clipped.
    """
    x = np.asarray(image, dtype=float)
    if sigma < 0.0:
        raise InvalidArgumentError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0.0:
        return x.copy()
    return x + sigma * rng.standard_normal(x.shape)


def gaussian_kl(m_o: float, s_o: float, m_b: float, s_b: float) -> float:
    """KL divergence between N(m_o, s_o^2) and N(m_b, s_b^2).

    Zero iff the two Gaussians coincide (the -1/2 normalization term is
    included; see also PerturbationTrace.kl_raw for the variant without it).
    """
    if not (s_o > 0.0 and s_b > 0.0):
        raise InvalidArgumentError(f"standard deviations must be positive, got ({s_o}, {s_b})")
    return math.log(s_b / s_o) + (s_o ** 2 + (m_o - m_b) ** 2) / (2.0 * s_b ** 2) - 0.5


def validate_mask(mask: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Check a boolean object mask: image-shaped, both classes non-empty."""
    m = np.asarray(mask)
    if m.dtype != bool or m.shape != tuple(shape):
        raise InvalidArgumentError("mask must be boolean and image-shaped")
    if not m.any() or m.all():
        raise DegenerateMaskError("mask must contain object and background pixels")
    return m


def segment_object(image: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Object mask of a clean image: pixels strictly below the threshold.

    Intended for dark strokes on a light background.  Raises
    DegenerateMaskError when either class is empty.
    """
    x = np.asarray(image, dtype=float)
    mask = x < threshold
    return validate_mask(mask, x.shape)


@dataclass
class PerturbationTrace:
    """Per-level, per-image sweep records.  All value arrays have shape (G, M)."""

    sigma_grid: np.ndarray
    obj_mean: np.ndarray
    obj_std: np.ndarray
    bg_mean: np.ndarray
    bg_std: np.ndarray
    sw_p: np.ndarray
    kl: np.ndarray
    # The same divergence without the -1/2 normalization, kept for reference.
    kl_raw: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.kl_raw is None:
            self.kl_raw = self.kl + 0.5
        g, m = self.sw_p.shape
        if self.sigma_grid.shape != (g,):
            raise InvalidArgumentError("sigma grid length must match trace rows")
        if np.any(self.sw_p < 0) or np.any(self.sw_p > 1):
            raise InvalidArgumentError("p-values must lie in [0, 1]")
        if np.any(self.kl < 0) or np.any(self.obj_std < 0) or np.any(self.bg_std < 0):
            raise InvalidArgumentError("stds and divergences must be non-negative")

    @property
    def n_images(self) -> int:
        return self.sw_p.shape[1]

    def mean_p(self) -> np.ndarray:
        return self.sw_p.mean(axis=1)

    def mean_kl(self) -> np.ndarray:
        return self.kl.mean(axis=1)


def run_sweep(images, masks, sigma_grid, subsample_n: int = 500, seed: int = 0) -> PerturbationTrace:
    """Perturbation sweep over a corpus sample.

    For each image and level: perturb with fresh noise, compute masked class
    statistics, the Shapiro-Wilk p-value on up to ``subsample_n`` object
    pixels, and the class KL divergence.  Noise and subsampling derive from
    (seed, image index, grid index), so results are independent of order.

    Degenerate cases at sigma = 0 are given defined values: a constant object
    sample records p = 0 (decisively non-normal), a zero-variance class
    records an infinite divergence.
    """
    grid = np.asarray(sigma_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("sigma grid must be ascending with at least 2 points")
    if len(images) != len(masks) or not images:
        raise InvalidArgumentError("need one mask per image and at least one image")
    if subsample_n < 3:
        raise InvalidArgumentError("subsample_n must be at least 3")

    n_img = len(images)
    shape = (grid.size, n_img)
    obj_mean = np.empty(shape)
    obj_std = np.empty(shape)
    bg_mean = np.empty(shape)
    bg_std = np.empty(shape)
    sw_p = np.empty(shape)
    kl = np.empty(shape)

    for j, (image, mask) in enumerate(zip(images, masks)):
        x0 = np.asarray(image, dtype=float)
        m = validate_mask(mask, x0.shape)
        obj_idx = np.flatnonzero(m.ravel())
        bg_idx = np.flatnonzero(~m.ravel())
        for i, sigma in enumerate(grid):
            rng = child_rng(seed, STREAM_SWEEP, j, i)
            x = perturb(x0, float(sigma), rng).ravel()
            obj = x[obj_idx]
            bg = x[bg_idx]
            mo, so = float(obj.mean()), float(obj.std())
            mb, sb = float(bg.mean()), float(bg.std())
            obj_mean[i, j], obj_std[i, j] = mo, so
            bg_mean[i, j], bg_std[i, j] = mb, sb

            if obj.size > subsample_n:
                sub = obj[rng.choice(obj.size, size=subsample_n, replace=False)]
            else:
                sub = obj
            try:
                _, p = shapiro_wilk(sub)
            except DegenerateInputError:
                p = 0.0
            sw_p[i, j] = p

            kl[i, j] = gaussian_kl(mo, so, mb, sb) if (so > 0.0 and sb > 0.0) else np.inf

    return PerturbationTrace(sigma_grid=grid, obj_mean=obj_mean, obj_std=obj_std,
                             bg_mean=bg_mean, bg_std=bg_std, sw_p=sw_p, kl=kl)


def _sigma_end_from_curve(grid: np.ndarray, p_curve: np.ndarray, significance: float) -> float:
    below = p_curve < significance
    if not below.any():
        raise NoCrossingError("p-values never fall below the significance level; "
                              "object pixels look normal at every level")
    if below[-1]:
        raise NoCrossingError("p-value curve never rises above the significance level")
    # Largest level below significance with every larger level passing.
    last_below = int(np.flatnonzero(below).max())
    sigma = float(grid[last_below])
    if sigma <= 0.0:
        raise NoCrossingError("object pixels already normal at the smallest positive level")
    return sigma


def _sigma_start_from_curve(grid: np.ndarray, kl_curve: np.ndarray, threshold: float) -> float:
    above = kl_curve > threshold
    if not above.any():
        raise NoConvergenceError("KL already below threshold everywhere; "
                                 "no structural signal to lose")
    last_above = int(np.flatnonzero(above).max())
    if last_above == grid.size - 1:
        raise NoConvergenceError("KL never stays below the threshold within the grid")
    return float(grid[last_above + 1])


def estimate_sigma_end(trace: PerturbationTrace, significance: float = 0.01) -> float:
    """Largest level at which the mean p-value curve still rejects normality,
    with every larger level passing."""
    return _sigma_end_from_curve(trace.sigma_grid, trace.mean_p(), significance)


def estimate_sigma_start(trace: PerturbationTrace, kl_threshold: float = 0.02) -> float:
    """Smallest level from which the mean KL curve stays at or below the threshold."""
    return _sigma_start_from_curve(trace.sigma_grid, trace.mean_kl(), kl_threshold)


@dataclass(frozen=True)
class RangeFinderConfig:
    sigma_grid: np.ndarray = field(default_factory=default_sigma_grid)
    subsample_n: int = 500
    significance: float = 0.01
    kl_threshold: float = 0.02
    seed: int = 0


@dataclass
class RangeReport:
    """Result of a range determination run."""

    range: NoiseRange
    sigma_grid: np.ndarray
    mean_p: np.ndarray
    mean_kl: np.ndarray
    significance: float
    kl_threshold: float
    per_image_sigma_end: np.ndarray
    per_image_sigma_start: np.ndarray

    def to_text(self) -> str:
        med_end = np.nanmedian(self.per_image_sigma_end)
        med_start = np.nanmedian(self.per_image_sigma_start)
        n_end = int(np.sum(np.isfinite(self.per_image_sigma_end)))
        n_start = int(np.sum(np.isfinite(self.per_image_sigma_start)))
        n = self.per_image_sigma_end.size
        lines = [
            "noise range report",
            f"sigma_end={self.range.sigma_end:.6g}",
            f"sigma_start={self.range.sigma_start:.6g}",
            f"significance={self.significance:.6g}",
            f"kl_threshold={self.kl_threshold:.6g}",
            f"grid=[{self.sigma_grid[0]:.6g}, {self.sigma_grid[-1]:.6g}] ({self.sigma_grid.size} points)",
            f"per_image_sigma_end_median={med_end:.6g} ({n_end}/{n} images with an estimate)",
            f"per_image_sigma_start_median={med_start:.6g} ({n_start}/{n} images with an estimate)",
        ]
        return "\n".join(lines) + "\n"


def find_range(images, masks, config: RangeFinderConfig | None = None) -> RangeReport:
    """Run the sweep and both estimators; assert sigma_end < sigma_start."""
    cfg = config or RangeFinderConfig()
    trace = run_sweep(images, masks, cfg.sigma_grid, cfg.subsample_n, cfg.seed)
    sigma_end = estimate_sigma_end(trace, cfg.significance)
    sigma_start = estimate_sigma_start(trace, cfg.kl_threshold)
    if not sigma_end < sigma_start:
        raise InvertedRangeError(
            f"estimated sigma_end {sigma_end} is not below sigma_start {sigma_start}")

    n_img = trace.n_images
    per_end = np.full(n_img, np.nan)
    per_start = np.full(n_img, np.nan)
    for j in range(n_img):
        try:
            per_end[j] = _sigma_end_from_curve(trace.sigma_grid, trace.sw_p[:, j], cfg.significance)
        except NoCrossingError:
            pass
        try:
            per_start[j] = _sigma_start_from_curve(trace.sigma_grid, trace.kl[:, j], cfg.kl_threshold)
        except NoConvergenceError:
            pass

    return RangeReport(
        range=NoiseRange(sigma_end=sigma_end, sigma_start=sigma_start),
        sigma_grid=trace.sigma_grid, mean_p=trace.mean_p(), mean_kl=trace.mean_kl(),
        significance=cfg.significance, kl_threshold=cfg.kl_threshold,
        per_image_sigma_end=per_end, per_image_sigma_start=per_start,
    )


def smooth_curve(y: np.ndarray, window: int = 3) -> np.ndarray:
    """Moving average used when checking curve trends."""
    if window < 1 or window > y.size:
        raise InvalidArgumentError("window must be between 1 and the curve length")
    kernel = np.ones(window) / window
    return np.convolve(np.asarray(y, dtype=float), kernel, mode="valid")


def trace_to_csv(trace: PerturbationTrace) -> str:
    """Mean curves per level as CSV for external plotting."""
    header = "sigma,mean_p,mean_kl,mean_obj_mean,mean_obj_std,mean_bg_mean,mean_bg_std"
    cols = [trace.sigma_grid, trace.mean_p(), trace.mean_kl(),
            trace.obj_mean.mean(axis=1), trace.obj_std.mean(axis=1),
            trace.bg_mean.mean(axis=1), trace.bg_std.mean(axis=1)]
    lines = [header]
    for row in zip(*cols):
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"

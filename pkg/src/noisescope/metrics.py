"""Desk-scale evaluation: plausibility rate, pixel-space Frechet distance, SSIM.

The Frechet distance operates on block-mean downscaled images (a feature-free
stand-in for embedding-based variants) with matrix square roots taken by
symmetric eigendecomposition.  SSIM uses a plain 8x8 sliding window with the
usual stabilizers and dynamic range 2.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dataset import plausibility_check
from .errors import InvalidArgumentError
from .schedule import NoiseRange, SamplingSchedule, prioritization_density

__all__ = ["EvalReport", "pdr_auto", "pixel_frechet", "ssim", "evaluate"]

_SSIM_WINDOW = 8
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_RANGE = 2.0


def pdr_auto(images) -> float:
    """Fraction of images passing the automated plausibility check."""
    images = list(images)
    if not images:
        raise InvalidArgumentError("need at least one image")
    flags = [plausibility_check(np.asarray(img)).plausible for img in images]
    return float(np.mean(flags))


def _block_mean(images: np.ndarray, downscale: int) -> np.ndarray:
    n, h, w = images.shape
    if h % downscale or w % downscale:
        raise InvalidArgumentError(f"image sides must be divisible by {downscale}")
    bh, bw = h // downscale, w // downscale
    return images.reshape(n, downscale, bh, downscale, bw).mean(axis=(2, 4)).reshape(n, -1)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def pixel_frechet(set_a, set_b, downscale: int = 8) -> float:
    """Frechet (Gaussian 2-Wasserstein) distance between block-mean features.

    Rank-deficient covariances are regularized by 1e-6 * I with a warning.
    """
    a = np.asarray(list(set_a), dtype=float)
    b = np.asarray(list(set_b), dtype=float)
    if a.size == 0 or b.size == 0:
        raise InvalidArgumentError("both image sets must be non-empty")
    if a.shape[1:] != b.shape[1:]:
        raise InvalidArgumentError("image sets must share an image shape")

    fa = _block_mean(a, downscale)
    fb = _block_mean(b, downscale)
    dim = fa.shape[1]
    mu_a, mu_b = fa.mean(axis=0), fb.mean(axis=0)
    # Population covariance: duplicating a set must leave its statistics,
    # and hence the distance, unchanged.
    cov_a = np.cov(fa, rowvar=False, bias=True).reshape(dim, dim)
    cov_b = np.cov(fb, rowvar=False, bias=True).reshape(dim, dim)

    tol = 1e-10
    if np.linalg.eigvalsh(cov_a).min() < tol or np.linalg.eigvalsh(cov_b).min() < tol:
        warnings.warn("rank-deficient covariance, regularizing by 1e-6 * I",
                      RuntimeWarning, stacklevel=2)
        cov_a = cov_a + 1e-6 * np.eye(dim)
        cov_b = cov_b + 1e-6 * np.eye(dim)

    sqrt_a = _psd_sqrt(cov_a)
    cross = _psd_sqrt(sqrt_a @ cov_b @ sqrt_a)
    dist2 = float(np.sum((mu_a - mu_b) ** 2)
                  + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(cross))
    return max(dist2, 0.0)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity over sliding 8x8 windows."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < _SSIM_WINDOW:
        raise InvalidArgumentError(f"images must be 2-D with sides >= {_SSIM_WINDOW}")

    wa = sliding_window_view(a, (_SSIM_WINDOW, _SSIM_WINDOW))
    wb = sliding_window_view(b, (_SSIM_WINDOW, _SSIM_WINDOW))
    mu_a = wa.mean(axis=(2, 3))
    mu_b = wb.mean(axis=(2, 3))
    var_a = (wa ** 2).mean(axis=(2, 3)) - mu_a ** 2
    var_b = (wb ** 2).mean(axis=(2, 3)) - mu_b ** 2
    cov = (wa * wb).mean(axis=(2, 3)) - mu_a * mu_b

    c1 = (_SSIM_K1 * _SSIM_RANGE) ** 2
    c2 = (_SSIM_K2 * _SSIM_RANGE) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float((num / den).mean())


@dataclass(frozen=True)
class EvalReport:
    pdr: float
    pixel_frechet: float
    ssim_mean: float
    r_p: float
    n_images: int
    config_digest: str

    def __post_init__(self):
        if not (0.0 <= self.pdr <= 1.0) or self.n_images < 1:
            raise InvalidArgumentError("invalid report fields")

    @staticmethod
    def csv_header() -> str:
        return "pdr,pixel_frechet,ssim_mean,r_p,n_images,config_digest"

    def to_csv_row(self) -> str:
        return (f"{self.pdr:.17g},{self.pixel_frechet:.17g},{self.ssim_mean:.17g},"
                f"{self.r_p:.17g},{self.n_images},{self.config_digest}")

    def to_text(self) -> str:
        return ("evaluation report\n"
                f"n_images={self.n_images}\n"
                f"pdr={self.pdr:.4f}\n"
                f"pixel_frechet={self.pixel_frechet:.6g}\n"
                f"ssim_mean={self.ssim_mean:.6g}\n"
                f"r_p={self.r_p:.6g}\n"
                f"config_digest={self.config_digest}\n")


def evaluate(images, reference_set, schedule: SamplingSchedule,
             noise_range: NoiseRange, downscale: int = 8) -> EvalReport:
    """Composite report: plausibility rate, Frechet distance to the reference,
    mean SSIM against each image's nearest reference, and the schedule's
    prioritization density."""
    gen = [np.asarray(img, dtype=float) for img in images]
    ref = [np.asarray(img, dtype=float) for img in reference_set]
    if not gen or not ref:
        raise InvalidArgumentError("image sets must be non-empty")

    ref_stack = np.stack(ref).reshape(len(ref), -1)
    ssims = []
    for img in gen:
        d2 = np.sum((ref_stack - img.ravel()) ** 2, axis=1)
        ssims.append(ssim(img, ref[int(np.argmin(d2))]))

    digest_src = (f"n={len(gen)};ref={len(ref)};down={downscale};"
                  f"rho={schedule.rho};steps={schedule.n_steps};"
                  f"smin={schedule.sigma_min};smax={schedule.sigma_max};"
                  f"range=({noise_range.sigma_end},{noise_range.sigma_start})")
    return EvalReport(
        pdr=pdr_auto(gen),
        pixel_frechet=pixel_frechet(gen, ref, downscale),
        ssim_mean=float(np.mean(ssims)),
        r_p=prioritization_density(schedule, noise_range),
        n_images=len(gen),
        config_digest=hashlib.sha256(digest_src.encode()).hexdigest()[:12],
    )

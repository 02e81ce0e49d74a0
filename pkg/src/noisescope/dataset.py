"""Synthetic structural images with ground-truth masks and plausibility rules.

The generator rasterizes randomized two-wheel structures (rings, frame tubes,
seat and handle marks) as dark antialiased strokes on a light background.
Rendered values keep a margin around the binarization threshold 0, so masks
and verdicts are stable under small pixel noise.  The plausibility checker
operationalizes structural soundness: two ring-like parts found by template
correlation, one connected stroke component, sane wheel separation, and some
frame material left once the wheels are removed.

Also: 8-bit grayscale PNG/PGM corpus I/O with [-1, 1] standardization, and
centered padding to square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage, signal

from .errors import (
    CorruptFileError,
    GenerationFailedError,
    InvalidArgumentError,
    UnsupportedFormatError,
)
from .seeding import STREAM_DATASET, child_rng

__all__ = [
    "StructureSpec", "GeneratorConfig", "PlausibilityVerdict",
    "generate_structure", "rasterize", "plausibility_check", "detect_wheels",
    "load_image", "save_image", "load_corpus", "pad_to_square",
    "MISSING_PART", "FLOATING_MATERIAL", "INCOMPLETE_PART", "DISCONNECTED",
    "IRRATIONAL_POSITION",
    "mutate_missing_wheel", "mutate_floating_blob", "mutate_disconnected",
    "mutate_incomplete", "mutate_irrational_position",
]

MISSING_PART = "missing-part"
FLOATING_MATERIAL = "floating-material"
INCOMPLETE_PART = "incomplete-part"
DISCONNECTED = "disconnected"
IRRATIONAL_POSITION = "irrational-position"

# Rendering and checking constants.  Rendered magnitudes stay >= _VALUE_MARGIN
# so binarization at 0 tolerates pixel noise up to half the margin.
_AA_WIDTH = 1.0
_VALUE_MARGIN = 0.2
_SPECK_PX = 3          # stroke components below this size are ignored as noise
_FLOATING_MAX_PX = 8   # small detached components count as floating material
_RING_HALFW = 1.5          # proposal band
_RING_VERIFY_HALFW = 1.0   # acceptance band; polygons span a wider radius profile
_SECTORS = 12
_SECTOR_FRAC = 0.9
_CAND_FRAC = 0.2
_RADIAL_STD_MAX = 0.8  # per-sector radius spread separating circles from polygons
_HUB_DIST = 1.2        # a wheel needs stroke evidence (hub/axle) at its center
_NMS_FACTOR = 0.9
_MIN_SEPARATION_RADII = 1.5


@dataclass(frozen=True)
class StructureSpec:
    """Geometry of one rendered structure, in pixel coordinates (x right, y down)."""

    canvas: int
    wheels: tuple  # ((cx, cy, r), (cx, cy, r))
    frame_segments: tuple  # ((x0, y0), (x1, y1)) pairs: tubes and spokes
    seat: tuple
    handle: tuple
    thickness: float
    part_shades: tuple  # per-part darkness: wheels, hubs, segments, seat, handle
    hubs: tuple = ()   # small (cx, cy, r) rings marking the axles
    stroke_value: float = -1.0
    background_value: float = 1.0

    def __post_init__(self):
        if len(self.wheels) != 2 or any(w[2] <= 0 for w in self.wheels):
            raise InvalidArgumentError("need two wheels with positive radii")
        lim = self.canvas - 1
        pts = [w[:2] for w in self.wheels]
        pts += [p for seg in self.frame_segments for p in seg]
        pts += [*self.seat, *self.handle]
        for x, y in pts:
            if not (0 <= x <= lim and 0 <= y <= lim):
                raise InvalidArgumentError("geometry outside the canvas")


@dataclass(frozen=True)
class GeneratorConfig:
    resolution: int = 32
    radius_rel: tuple[float, float] = (0.14, 0.19)
    wheel_y_rel: tuple[float, float] = (0.58, 0.68)
    left_x_rel: tuple[float, float] = (0.20, 0.27)
    right_x_rel: tuple[float, float] = (0.73, 0.80)
    node_x_rel: tuple[float, float] = (0.40, 0.52)
    node_y_rel: tuple[float, float] = (0.22, 0.34)
    halfwidth: tuple[float, float] = (0.80, 0.95)   # absolute pixels
    # Tires render dark, tubes light; the bimodal object values keep the
    # normality test discriminative under small perturbations.
    shade_wheel: tuple[float, float] = (0.90, 1.00)
    shade_frame: tuple[float, float] = (0.57, 0.66)
    spokes_per_wheel: int = 2
    max_retries: int = 50


@dataclass(frozen=True)
class PlausibilityVerdict:
    plausible: bool
    violations: tuple[str, ...]

    def __post_init__(self):
        if self.plausible != (len(self.violations) == 0):
            raise InvalidArgumentError("plausible must mean no violations")


# ---------------------------------------------------------------------------
# Rasterization


def _coverage_from_distance(dist: np.ndarray, halfw: float) -> np.ndarray:
    return np.clip(0.5 + (halfw - dist) / _AA_WIDTH, 0.0, 1.0)


def _segment_distance(xx, yy, p0, p1):
    vx, vy = p1[0] - p0[0], p1[1] - p0[1]
    len2 = vx * vx + vy * vy
    if len2 == 0.0:
        return np.hypot(xx - p0[0], yy - p0[1])
    t = np.clip(((xx - p0[0]) * vx + (yy - p0[1]) * vy) / len2, 0.0, 1.0)
    return np.hypot(xx - (p0[0] + t * vx), yy - (p0[1] + t * vy))


def rasterize(spec: StructureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render a spec to (image, object mask).

    Each part contributes shade * antialiased coverage; a pixel belongs to the
    mask exactly when its combined darkness exceeds one half, which coincides
    with a rendered value below zero.
    """
    n = spec.canvas
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    parts = []
    for cx, cy, r in spec.wheels + spec.hubs:
        parts.append(np.abs(np.hypot(xx - cx, yy - cy) - r))
    for p0, p1 in spec.frame_segments:
        parts.append(_segment_distance(xx, yy, p0, p1))
    parts.append(_segment_distance(xx, yy, *spec.seat))
    parts.append(_segment_distance(xx, yy, *spec.handle))
    if len(spec.part_shades) != len(parts):
        raise InvalidArgumentError("one shade per part required")

    darkness = np.zeros((n, n))
    for dist, shade in zip(parts, spec.part_shades):
        np.maximum(darkness, shade * _coverage_from_distance(dist, spec.thickness), out=darkness)

    span = spec.background_value - spec.stroke_value
    value = spec.background_value - span * darkness
    mid = 0.5 * (spec.background_value + spec.stroke_value)
    mask = darkness > 0.5
    # Keep a margin around the binarization threshold so noise cannot flip classes.
    value = np.where(mask, np.minimum(value, mid - _VALUE_MARGIN),
                     np.maximum(value, mid + _VALUE_MARGIN))
    return value, mask


def _draw_spec(rng: np.random.Generator, cfg: GeneratorConfig) -> StructureSpec:
    n = cfg.resolution

    def u(lo_hi):
        return rng.uniform(lo_hi[0], lo_hi[1])

    r1 = u(cfg.radius_rel) * n
    r2 = np.clip(r1 * rng.uniform(0.85, 1.15), cfg.radius_rel[0] * n, cfg.radius_rel[1] * n)
    cy = u(cfg.wheel_y_rel) * n
    cx1 = u(cfg.left_x_rel) * n
    cx2 = u(cfg.right_x_rel) * n
    node = (u(cfg.node_x_rel) * n, u(cfg.node_y_rel) * n)
    handle = (cx2 - rng.uniform(0.0, 0.06) * n, node[1] - rng.uniform(-0.02, 0.04) * n)

    c1, c2 = (cx1, cy), (cx2, cy)
    tubes = [(c1, node), (node, handle), (handle, c2), (c1, c2)]
    spokes = []
    for (cx, cyw, r) in ((cx1, cy, r1), (cx2, cy, r2)):
        base = rng.uniform(0.0, 2.0 * math.pi)
        for k in range(cfg.spokes_per_wheel):
            ang = base + k * (2.0 * math.pi / max(cfg.spokes_per_wheel, 1)) + rng.uniform(-0.3, 0.3)
            spokes.append(((cx, cyw), (cx + (r - 0.4) * math.cos(ang), cyw + (r - 0.4) * math.sin(ang))))

    seat_half = rng.uniform(0.045, 0.065) * n
    seat = ((node[0] - seat_half, node[1] - 0.9), (node[0] + seat_half, node[1] - 0.9))
    handle_tip = (handle[0] + rng.uniform(0.03, 0.06) * n, handle[1] - rng.uniform(0.03, 0.06) * n)
    handle_mark = (handle, handle_tip)

    segments = tuple(tubes + spokes)
    hubs = ((cx1, cy, 0.9), (cx2, cy, 0.9))
    n_frame = len(hubs) + len(segments) + 2
    shades = tuple(rng.uniform(cfg.shade_wheel[0], cfg.shade_wheel[1]) for _ in range(2)) + \
        tuple(rng.uniform(cfg.shade_frame[0], cfg.shade_frame[1]) for _ in range(n_frame))
    return StructureSpec(
        canvas=n,
        wheels=((cx1, cy, r1), (cx2, cy, r2)),
        frame_segments=segments,
        seat=seat,
        handle=handle_mark,
        thickness=rng.uniform(cfg.halfwidth[0], cfg.halfwidth[1]),
        part_shades=shades,
        hubs=hubs,
    )


def _fits_canvas(spec: StructureSpec, pad: float = 1.5) -> bool:
    lim = spec.canvas - 1 - pad
    for cx, cy, r in spec.wheels:
        if cx - r < pad or cx + r > lim or cy - r < pad or cy + r > lim:
            return False
    pts = [p for seg in spec.frame_segments for p in seg] + [*spec.seat, *spec.handle]
    return all(pad <= x <= lim and pad <= y <= lim for x, y in pts)


def generate_structure(rng: np.random.Generator,
                       config: GeneratorConfig | None = None
                       ) -> tuple[np.ndarray, np.ndarray, StructureSpec]:
    """Sample a plausible structure; returns (image, mask, spec).

    Rejection-samples geometry until the canvas constraints and the
    plausibility check hold; raises GenerationFailedError after the retry
    budget is spent.
    """
    cfg = config or GeneratorConfig()
    for _ in range(cfg.max_retries):
        try:
            spec = _draw_spec(rng, cfg)
        except InvalidArgumentError:
            continue
        if not _fits_canvas(spec):
            continue
        image, mask = rasterize(spec)
        if plausibility_check(image).plausible:
            return image, mask, spec
    raise GenerationFailedError(f"no valid structure in {cfg.max_retries} attempts")


# ---------------------------------------------------------------------------
# Plausibility


def binarize(image: np.ndarray) -> np.ndarray:
    """Stroke mask of a standardized image: values below 0."""
    return np.asarray(image, dtype=float) < 0.0


def _radius_grid(n: int) -> np.ndarray:
    lo = max(2.5, 0.10 * n)
    hi = 0.24 * n
    return np.arange(lo, hi + 0.25, 0.5)


def _has_hub(stroke: np.ndarray, cx: int, cy: int) -> bool:
    """Stroke presence near a candidate center (the spoke crossing)."""
    n_rows, n_cols = stroke.shape
    k = int(math.ceil(_HUB_DIST))
    y0, y1 = max(cy - k, 0), min(cy + k + 1, n_rows)
    x0, x1 = max(cx - k, 0), min(cx + k + 1, n_cols)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    close = np.hypot((xx - cx).astype(float), (yy - cy).astype(float)) <= _HUB_DIST
    return bool(np.any(stroke[y0:y1, x0:x1] & close))


def _verify_ring(stroke: np.ndarray, cx: int, cy: int, r: float, halfw: float):
    """Ring evidence around a candidate center.

    A genuine rim is one connected cycle inside the annulus band, so the
    angular coverage is credited to the single best-connected in-band
    component; disjoint fragments of other parts cannot pool their sectors.
    Returns (angular fraction, per-sector radius std, refined radius) for that
    component, or None when the band is empty.
    """
    n_rows, n_cols = stroke.shape
    k = int(math.ceil(r + halfw + 1.0))
    y0, y1 = max(cy - k, 0), min(cy + k + 1, n_rows)
    x0, x1 = max(cx - k, 0), min(cx + k + 1, n_cols)
    win = stroke[y0:y1, x0:x1]
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dy, dx = (yy - cy).astype(float), (xx - cx).astype(float)
    dist = np.hypot(dx, dy)
    band = win & (np.abs(dist - r) <= halfw)
    if not band.any():
        return None
    labels, n_comp = ndimage.label(band, structure=np.ones((3, 3), dtype=int))
    bins_all = ((np.arctan2(dy, dx) + np.pi) / (2.0 * np.pi) * _SECTORS).astype(int) % _SECTORS
    best = None
    for comp in range(1, n_comp + 1):
        sel = labels == comp
        bins = bins_all[sel]
        dists = dist[sel]
        sector_radius = np.full(_SECTORS, np.nan)
        for b in np.unique(bins):
            sector_radius[b] = dists[bins == b].mean()
        covered = np.isfinite(sector_radius)
        ang = covered.mean()
        if best is None or ang > best[0]:
            spread = float(np.std(sector_radius[covered]))
            refined = float(np.mean(sector_radius[covered]))
            best = (float(ang), spread, refined)
    return best


def detect_wheels(stroke: np.ndarray) -> list[tuple[float, float, float, float]]:
    """Find ring-like parts; returns (cx, cy, r, angular coverage) per wheel.

    Ring-template correlation proposes candidate centers; a candidate is kept
    when stroke pixels cover at least 11 of 12 angular sectors of its annulus
    at a near-constant radius.  Overlapping detections are suppressed,
    strongest first.
    """
    stroke_f = stroke.astype(float)
    n = stroke.shape[0]
    grid = _radius_grid(n)
    candidates = []
    for r in grid:
        k = int(math.ceil(r + _RING_HALFW))
        yy, xx = np.mgrid[-k:k + 1, -k:k + 1].astype(float)
        ring = (np.abs(np.hypot(xx, yy) - r) <= _RING_HALFW)
        counts = signal.fftconvolve(stroke_f, ring.astype(float), mode="same")
        frac = counts / ring.sum()
        local_max = (frac >= ndimage.maximum_filter(frac, size=3) - 1e-12) & (frac >= _CAND_FRAC)
        ys, xs = np.nonzero(local_max)
        if ys.size > 8:
            order = np.argsort(frac[ys, xs])[::-1][:8]
            ys, xs = ys[order], xs[order]
        for cy, cx in zip(ys, xs):
            if not _has_hub(stroke, int(cx), int(cy)):
                continue
            coarse = _verify_ring(stroke, int(cx), int(cy), float(r), _RING_HALFW)
            if coarse is None or coarse[0] < 0.75:
                continue
            # Re-verify with a tight band at the refined radius: a true rim
            # still covers the sectors, a polygon's radius profile does not.
            check = _verify_ring(stroke, int(cx), int(cy), coarse[2], _RING_VERIFY_HALFW)
            if check is None:
                continue
            ang, spread, refined = check
            if ang >= _SECTOR_FRAC and spread <= _RADIAL_STD_MAX and \
                    grid[0] - 0.5 <= refined <= grid[-1] + 0.5:
                candidates.append((float(cx), float(cy), refined, ang, spread,
                                   float(frac[cy, cx])))

    candidates.sort(key=lambda c: (c[3], -c[4], c[5]), reverse=True)
    kept: list[tuple[float, float, float, float]] = []
    for cx, cy, r, ang, _, _ in candidates:
        if all(math.hypot(cx - kx, cy - ky) >= _NMS_FACTOR * max(r, kr)
               for kx, ky, kr, _ in kept):
            kept.append((cx, cy, r, ang))
    return kept


def plausibility_check(image: np.ndarray) -> PlausibilityVerdict:
    """Structural soundness verdict on a standardized grayscale image."""
    stroke = binarize(image)
    violations: list[str] = []

    labels, n_comp = ndimage.label(stroke, structure=np.ones((3, 3), dtype=int))
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=np.arange(1, n_comp + 1))
    significant = sizes[sizes >= _SPECK_PX]
    if significant.size == 0:
        return PlausibilityVerdict(False, (MISSING_PART, INCOMPLETE_PART))
    if significant.size > 1:
        rest = np.sort(significant)[:-1]
        if np.any(rest < _FLOATING_MAX_PX):
            violations.append(FLOATING_MATERIAL)
        if np.any(rest >= _FLOATING_MAX_PX):
            violations.append(DISCONNECTED)

    wheels = detect_wheels(stroke)
    if len(wheels) != 2:
        violations.append(MISSING_PART)
    else:
        (x1, y1, r1, _), (x2, y2, r2, _) = wheels
        if abs(x1 - x2) < _MIN_SEPARATION_RADII * 0.5 * (r1 + r2):
            violations.append(IRRATIONAL_POSITION)
        # Frame presence: something substantial must remain off the wheels.
        nrow, ncol = stroke.shape
        yy, xx = np.mgrid[0:nrow, 0:ncol].astype(float)
        off_wheels = stroke.copy()
        for cx, cy, r, _ in wheels:
            off_wheels &= np.hypot(xx - cx, yy - cy) > r + 2.5
        lab2, n2 = ndimage.label(off_wheels, structure=np.ones((3, 3), dtype=int))
        sizes2 = ndimage.sum_labels(np.ones_like(lab2), lab2, index=np.arange(1, n2 + 1))
        if not np.any(sizes2 >= 4):
            violations.append(INCOMPLETE_PART)

    uniq = tuple(dict.fromkeys(violations))
    return PlausibilityVerdict(len(uniq) == 0, uniq)


# ---------------------------------------------------------------------------
# Mutations: construct images that violate exactly one rule family.  Used by
# the verification suite and handy for calibrating the checker.


def _part_roles(spec: StructureSpec) -> list[str]:
    """Role tag per part, in the shade order used by rasterize."""
    roles = ["wheel0", "wheel1"] + [f"hub{i}" for i in range(len(spec.hubs))]
    for seg in spec.frame_segments:
        spoke_of = None
        for w, (cx, cy, r) in enumerate(spec.wheels):
            if seg[0] == (cx, cy) and math.hypot(seg[1][0] - cx, seg[1][1] - cy) <= r + 0.5:
                spoke_of = w
                break
        roles.append(f"spoke{spoke_of}" if spoke_of is not None else "tube")
    roles += ["seat", "handle"]
    return roles


def _erase_parts(spec: StructureSpec, drop) -> np.ndarray:
    """Redraw the spec with the selected part roles blanked out."""
    roles = _part_roles(spec)
    shades = tuple(0.0 if drop(role) else s for role, s in zip(roles, spec.part_shades))
    image, _ = rasterize(replace(spec, part_shades=shades))
    return image


def mutate_missing_wheel(spec: StructureSpec) -> np.ndarray:
    """Redraw without the left wheel: ring, hub and spokes all vanish."""
    return _erase_parts(spec, lambda role: role in ("wheel0", "hub0", "spoke0"))


def mutate_floating_blob(image: np.ndarray, blob_px: int = 5, min_gap: float = 4.0) -> np.ndarray:
    """Add a compact dark blob well away from any stroke."""
    stroke = binarize(image)
    dist = ndimage.distance_transform_edt(~stroke)
    inner = np.zeros_like(stroke)
    inner[2:-2, 2:-2] = True
    spots = np.argwhere((dist >= min_gap + 2) & inner)
    if spots.size == 0:
        raise InvalidArgumentError("no background region far enough from strokes")
    y, x = spots[np.argmax(dist[spots[:, 0], spots[:, 1]])]
    out = np.asarray(image, dtype=float).copy()
    shape = [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2)][:blob_px]
    for dy, dx in shape:
        out[y + dy, x + dx] = -1.0
    return out


def mutate_disconnected(image: np.ndarray, spec: StructureSpec) -> np.ndarray:
    """Cut the tubes joining the upper frame to the wheels."""
    out = np.asarray(image, dtype=float).copy()
    n = spec.canvas
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    (c1, node), (_, handle), (h2, c2) = spec.frame_segments[0], spec.frame_segments[1], spec.frame_segments[2]
    for (p0, p1), t in (((c1, node), 0.62), ((h2, c2), 0.38)):
        cutx, cuty = p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])
        out[np.hypot(xx - cutx, yy - cuty) <= spec.thickness + 1.6] = spec.background_value
    return out


def mutate_incomplete(spec: StructureSpec) -> np.ndarray:
    """Keep only the wheels, hubs and spokes; every tube and mark vanishes."""
    return _erase_parts(spec, lambda role: role in ("tube", "seat", "handle"))


def mutate_irrational_position(rng: np.random.Generator, resolution: int = 32) -> np.ndarray:
    """Draw a connected structure whose wheels sit far too close together."""
    n = resolution
    r = 0.16 * n
    cy = 0.60 * n
    cx1 = 0.40 * n
    cx2 = cx1 + 1.15 * r
    node = (0.5 * n, 0.28 * n)
    handle = (cx2 + 0.10 * n, 0.26 * n)
    tubes = [((cx1, cy), node), (node, handle), (handle, (cx2, cy)), ((cx1, cy), (cx2, cy))]
    spokes = []
    for cx in (cx1, cx2):
        for ang in (0.4, 2.1):
            spokes.append(((cx, cy), (cx + (r - 0.4) * math.cos(ang), cy + (r - 0.4) * math.sin(ang))))
    seat = ((node[0] - 0.05 * n, node[1] - 1.0), (node[0] + 0.05 * n, node[1] - 1.0))
    hmark = (handle, (handle[0] + 0.04 * n, handle[1] - 0.04 * n))
    hubs = ((cx1, cy, 0.9), (cx2, cy, 0.9))
    n_parts = 2 + len(hubs) + len(tubes) + len(spokes) + 2
    shades = tuple(rng.uniform(0.68, 0.8) for _ in range(n_parts))
    spec = StructureSpec(canvas=n, wheels=((cx1, cy, r), (cx2, cy, r)),
                         frame_segments=tuple(tubes + spokes), seat=seat, handle=hmark,
                         thickness=0.9, part_shades=shades, hubs=hubs)
    image, _ = rasterize(spec)
    return image


# ---------------------------------------------------------------------------
# Image I/O and preprocessing


def save_image(image: np.ndarray, path) -> None:
    """Write a standardized image as 8-bit grayscale; format from the extension."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2:
        raise InvalidArgumentError("expected a 2-D grayscale image")
    q = np.rint((arr + 1.0) * (255.0 / 2.0))
    q = np.clip(q, 0, 255).astype(np.uint8)
    Image.fromarray(q, mode="L").save(path)


def load_image(path) -> np.ndarray:
    """Read an 8-bit grayscale PNG or PGM into [-1, 1]."""
    try:
        with Image.open(path) as img:
            fmt = img.format
            if fmt not in ("PNG", "PPM"):
                raise UnsupportedFormatError(f"{path}: expected PNG or PGM, got {fmt}")
            if img.mode != "L":
                raise UnsupportedFormatError(f"{path}: expected 8-bit grayscale, got mode {img.mode}")
            arr = np.asarray(img, dtype=float)
    except UnidentifiedImageError as exc:
        raise CorruptFileError(f"{path}: cannot decode image") from exc
    except OSError as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    return 2.0 * arr / 255.0 - 1.0


def load_corpus(path) -> list[np.ndarray]:
    """Load every .png/.pgm file under a directory, sorted by name."""
    from pathlib import Path

    root = Path(path)
    files = sorted(p for p in root.glob("*") if p.suffix.lower() in (".png", ".pgm"))
    if not files:
        raise CorruptFileError(f"{path}: empty corpus, no PNG or PGM files found")
    return [load_image(p) for p in files]


def pad_to_square(image: np.ndarray, fill: float = 1.0) -> np.ndarray:
    """Pad the shorter dimension to a centered square; odd rests go bottom/right."""
    arr = np.asarray(image)
    h, w = arr.shape
    side = max(h, w)
    top = (side - h) // 2
    left = (side - w) // 2
    return np.pad(arr, ((top, side - h - top), (left, side - w - left)),
                  mode="constant", constant_values=fill)

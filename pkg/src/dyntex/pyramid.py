"""Scale schedules and the per-scale downsampled training videos.

A video clip is a plain float32 array shaped (3, T, H, W) with values in
[-1, 1]. The schedule interpolates geometrically between a coarsest and a
finest spatial size, so the per-step growth factor is
r = (finest/coarsest)**(1/(N-1)) with both endpoints hit exactly.

Note on the growth factor: a nominal factor of about 1.39 is sometimes
quoted together with the 25px -> 150px, 8-scale setup, but the three numbers
are mutually inconsistent (25 * 1.39**7 is roughly 250, not 150). The
endpoints and the scale count are treated as authoritative here, which gives
r = 6**(1/7) ~= 1.2917.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

CHANNELS = 3


@dataclass(frozen=True)
class ScaleSchedule:
    """Spatial dims of every pyramid level, coarsest first, plus the ratio r."""

    dims: tuple[tuple[int, int], ...]
    r: float

    @property
    def num_scales(self) -> int:
        return len(self.dims)

    @property
    def finest(self) -> tuple[int, int]:
        return self.dims[-1]


def _geometric_axis(coarse: int, fine: int, num_scales: int) -> list[int]:
    ratio = fine / coarse
    sizes = [
        int(round(coarse * ratio ** (n / (num_scales - 1))))
        for n in range(num_scales)
    ]
    sizes[0], sizes[-1] = coarse, fine  # endpoints exact by construction
    return sizes


def build_scale_schedule(
    coarsest: int, finest: int, num_scales: int, aspect: float = 1.0
) -> ScaleSchedule:
    """Geometric size ladder from coarsest to finest pixels.

    `coarsest`/`finest` are heights; widths follow `aspect` (width/height),
    each axis interpolated between its own endpoints. Square by default.
    """
    if num_scales < 2:
        raise ValueError(f"need at least 2 scales, got {num_scales}")
    if coarsest >= finest:
        raise ValueError(
            f"coarsest size ({coarsest}) must be smaller than finest ({finest})"
        )
    if coarsest < 1:
        raise ValueError("coarsest size must be positive")
    heights = _geometric_axis(coarsest, finest, num_scales)
    if aspect == 1.0:
        widths = heights
    else:
        widths = _geometric_axis(
            max(1, int(round(coarsest * aspect))),
            max(1, int(round(finest * aspect))),
            num_scales,
        )
    dims = tuple(zip(heights, widths))
    for (h0, w0), (h1, w1) in zip(dims, dims[1:]):
        if h1 <= h0 or w1 <= w0:
            raise ValueError(
                f"schedule is not strictly increasing ({dims}); "
                "use fewer scales or a wider size range"
            )
    r = (finest / coarsest) ** (1.0 / (num_scales - 1))
    return ScaleSchedule(dims=dims, r=r)


def single_scale_schedule(height: int, width: int | None = None) -> ScaleSchedule:
    """Degenerate one-level schedule (used by single-scale training runs)."""
    if height < 1:
        raise ValueError("size must be positive")
    return ScaleSchedule(dims=((height, width or height),), r=1.0)


def validate_clip(clip: np.ndarray, name: str = "clip") -> np.ndarray:
    clip = np.asarray(clip)
    if clip.ndim != 4 or clip.shape[0] != CHANNELS:
        raise ShapeError(
            f"{name} must be shaped (3, T, H, W), got {clip.shape}"
        )
    if not np.all(np.isfinite(clip)):
        raise ValueError(f"{name} contains non-finite values")
    if np.abs(clip).max() > 1.0 + 1e-5:
        raise ValueError(f"{name} values must lie in [-1, 1]")
    return clip.astype(np.float32, copy=False)


def _area_matrix(src: int, dst: int) -> np.ndarray:
    """dst x src box-filter matrix: each target pixel averages the source
    pixels it covers, with fractional weights at the span edges."""
    m = np.zeros((dst, src), dtype=np.float64)
    span = src / dst
    for i in range(dst):
        lo, hi = i * span, (i + 1) * span
        j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(j0, min(j1, src)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                m[i, j] = overlap / span
        m[i] /= m[i].sum()
    return m.astype(np.float32)


def downsample_video(clip: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Per-frame area-averaged resampling down to (target_h, target_w)."""
    clip = validate_clip(clip)
    h, w = clip.shape[-2:]
    if target_h > h or target_w > w:
        raise ShapeError(
            f"downsample target ({target_h}, {target_w}) exceeds source ({h}, {w})"
        )
    if (target_h, target_w) == (h, w):
        return clip.copy()
    a = _area_matrix(h, target_h)
    bt = _area_matrix(w, target_w).T
    out = np.matmul(a, np.matmul(clip, bt))
    # area averaging is a convex combination; trim float32 rounding spill
    return np.clip(out, -1.0, 1.0).astype(np.float32)


def build_training_pyramid(
    video: np.ndarray, schedule: ScaleSchedule
) -> list[np.ndarray]:
    """One downsampled copy of `video` per scale, coarsest first."""
    video = validate_clip(video, "video")
    h, w = video.shape[-2:]
    fh, fw = schedule.finest
    if h < fh or w < fw:
        raise ShapeError(
            f"video is {h}x{w} but the finest scale needs at least {fh}x{fw}"
        )
    return [downsample_video(video, th, tw) for th, tw in schedule.dims]

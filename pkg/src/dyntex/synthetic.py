"""Procedural moving textures so the whole pipeline runs without any dataset.

Three kinds, all deterministic in their seed and all guaranteed to move:

- advected-noise: a smooth periodic noise field translated with subpixel
  (wrap-around) sampling, one independent field per channel.
- translating-grating: an oriented sine grating shifted cyclically by an
  integer velocity each frame, so frame t+1 is exactly np.roll(frame t).
- rotating-pattern: an asymmetric spoke/ring pattern rotated about the
  center by a fixed angle per frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "advected-noise"
    frames: int = 16
    size: int = 32
    velocity: tuple[float, float] = (1.0, 2.0)  # (vy, vx) pixels per frame
    seed: int = 0

    KINDS = ("advected-noise", "translating-grating", "rotating-pattern")


def _smooth_field(rng: np.random.Generator, size: int, cutoff: float = 0.10) -> np.ndarray:
    """Periodic smooth noise in [-0.9, 0.9] via low-passed white noise.

    The cutoff sets feature size relative to the frame; 0.10 gives the
    broad blobs characteristic of natural dynamic textures (clouds, water).
    """
    white = rng.standard_normal((size, size))
    f = np.fft.fft2(white)
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    f *= np.exp(-((fy**2 + fx**2) / (2 * cutoff**2)))
    field = np.fft.ifft2(f).real
    field -= field.mean()
    peak = np.abs(field).max()
    return 0.9 * field / (peak if peak > 0 else 1.0)


def _sample_wrapped(field: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Bilinear sample of a periodic field shifted by (dy, dx)."""
    size = field.shape[0]
    ys = (np.arange(size)[:, None] + dy) % size
    xs = (np.arange(size)[None, :] + dx) % size
    y0 = np.floor(ys).astype(int) % size
    x0 = np.floor(xs).astype(int) % size
    y1 = (y0 + 1) % size
    x1 = (x0 + 1) % size
    wy = ys - np.floor(ys)
    wx = xs - np.floor(xs)
    return (
        field[y0, x0] * (1 - wy) * (1 - wx)
        + field[y1, x0] * wy * (1 - wx)
        + field[y0, x1] * (1 - wy) * wx
        + field[y1, x1] * wy * wx
    )


def _advected_noise(spec: SyntheticSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 0xADE])
    vy, vx = spec.velocity
    clip = np.empty((3, spec.frames, spec.size, spec.size), dtype=np.float32)
    for c in range(3):
        field = _smooth_field(rng, spec.size)
        for t in range(spec.frames):
            clip[c, t] = _sample_wrapped(field, t * vy, t * vx)
    return clip


def _translating_grating(spec: SyntheticSpec) -> np.ndarray:
    vy, vx = int(round(spec.velocity[0])), int(round(spec.velocity[1]))
    if vy == 0 and vx == 0:
        vx = 1  # motion is part of the contract
    size = spec.size
    norm = np.hypot(vy, vx)
    wavelength = max(4.0, size / 5.0)
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    # integer cycle counts along each axis keep the pattern roll-periodic
    cy = int(round(size * (vy / norm) / wavelength))
    cx = int(round(size * (vx / norm) / wavelength))
    if cy == 0 and cx == 0:
        cx = 1
    phase = 2 * np.pi * (cy * yy + cx * xx) / size
    base = np.stack(
        [0.85 * np.sin(phase + k * 2 * np.pi / 3) for k in range(3)]
    ).astype(np.float32)
    clip = np.empty((3, spec.frames, size, size), dtype=np.float32)
    for t in range(spec.frames):
        clip[:, t] = np.roll(base, shift=(t * vy, t * vx), axis=(1, 2))
    return clip


def _rotating_pattern(spec: SyntheticSpec) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, 0x207])
    size = spec.size
    omega = 2 * np.pi / max(24, 2 * spec.frames)  # radians per frame
    c = (size - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(size) - c, np.arange(size) - c, indexing="ij")
    rr = np.hypot(yy, xx) / (size / 2.0)
    phases = rng.uniform(0, 2 * np.pi, size=3)
    spokes = rng.integers(3, 6)
    clip = np.empty((3, spec.frames, size, size), dtype=np.float32)
    for t in range(spec.frames):
        theta = np.arctan2(yy, xx) + t * omega
        for ch in range(3):
            pattern = np.sin(spokes * theta + phases[ch]) * np.cos(
                3 * np.pi * rr + phases[ch]
            )
            clip[ch, t] = 0.85 * pattern * np.exp(-0.5 * rr**2)
    return clip


def make_synthetic(spec: SyntheticSpec) -> np.ndarray:
    """Build the clip a spec describes; shape (3, frames, size, size)."""
    if spec.frames < 2:
        raise DataError("synthetic clips need at least 2 frames")
    if spec.size < 4:
        raise DataError("synthetic clips need size >= 4")
    if spec.kind == "advected-noise":
        clip = _advected_noise(spec)
    elif spec.kind == "translating-grating":
        clip = _translating_grating(spec)
    elif spec.kind == "rotating-pattern":
        clip = _rotating_pattern(spec)
    else:
        raise DataError(
            f"unknown synthetic kind {spec.kind!r}; expected one of {SyntheticSpec.KINDS}"
        )
    return np.clip(clip, -1.0, 1.0).astype(np.float32)


def concat_phases(clips: list[np.ndarray]) -> np.ndarray:
    """Join clips along time into one multi-phase source video (same spatial
    dims required): the later phases only ever appear to a model whose data
    window advances far enough to reach them."""
    if not clips:
        raise DataError("need at least one clip")
    base = clips[0].shape
    for c in clips[1:]:
        if c.shape[0] != base[0] or c.shape[2:] != base[2:]:
            raise DataError("phase clips must share channel and spatial dims")
    return np.concatenate(clips, axis=1)

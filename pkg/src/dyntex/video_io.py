"""Frame-directory video I/O.

A video on disk is a directory of 8-bit RGB PNGs named frame_00000.png,
frame_00001.png, ... with contiguous indices from zero and identical
dimensions. Pixel p maps to p/127.5 - 1 on load; saving inverts that with
round-half-up (so 0.0 becomes pixel 128), which makes a load/save cycle
bitwise stable.
"""

from __future__ import annotations

import os
import re

import numpy as np
from PIL import Image

from .errors import DataError
from .pyramid import validate_clip

_FRAME_RE = re.compile(r"^frame_(\d{5,})\.png$")


def frame_name(index: int) -> str:
    return f"frame_{index:05d}.png"


def load_video(path) -> np.ndarray:
    """Read a frame directory into a (3, T, H, W) float32 clip in [-1, 1]."""
    if not os.path.isdir(path):
        raise DataError(f"{path} is not a directory")
    found = {}
    for name in os.listdir(path):
        m = _FRAME_RE.match(name)
        if m:
            found[int(m.group(1))] = name
    if not found:
        raise DataError(f"{path} contains no frame_NNNNN.png files")
    count = max(found) + 1
    for i in range(count):
        if i not in found:
            raise DataError(f"missing frame {frame_name(i)} in {path}")
    frames = []
    dims = None
    for i in range(count):
        fpath = os.path.join(path, found[i])
        try:
            with Image.open(fpath) as img:
                rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
        except OSError as e:
            raise DataError(f"cannot read frame {found[i]}: {e}") from e
        if dims is None:
            dims = rgb.shape
        elif rgb.shape != dims:
            raise DataError(
                f"frame {found[i]} is {rgb.shape[1]}x{rgb.shape[0]}, "
                f"expected {dims[1]}x{dims[0]}"
            )
        frames.append(rgb / 127.5 - 1.0)
    clip = np.stack(frames).transpose(3, 0, 1, 2)  # (T,H,W,3) -> (3,T,H,W)
    return clip.astype(np.float32)


def save_video(clip: np.ndarray, path):
    """Write a clip as a frame directory; values must lie in [-1, 1]."""
    clip = validate_clip(clip)
    os.makedirs(path, exist_ok=True)
    pixels = np.floor((clip + 1.0) * 127.5 + 0.5)  # round half up
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    for t in range(clip.shape[1]):
        frame = pixels[:, t].transpose(1, 2, 0)  # (H,W,3)
        Image.fromarray(frame, mode="RGB").save(os.path.join(path, frame_name(t)))


def write_manifest(path, lines: list[str]):
    """Write the resolved-configuration echo every run leaves behind."""
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")

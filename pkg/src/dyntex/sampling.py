"""Inference: draw new clips through the trained pyramid, or replay the
fixed-noise reconstruction.

Sampling is a pure function of (model, seed, dims): fresh Gaussian noise at
every scale, each generator output upsampled into the next, and the finest
output clamped to [-1, 1]. The networks are fully convolutional, so an
optional spatial override rescales every level by the same factor
(experimental: quality away from the training size is not guaranteed).
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, no_grad, upsample_spatial
from .errors import DataError, ShapeError
from .models import generator_forward
from .training import TrainedModel


def _scaled_dims(model: TrainedModel, height: int | None, width: int | None):
    dims = model.schedule.dims
    if height is None and width is None:
        return dims
    fh, fw = dims[-1]
    th = height if height is not None else fh
    tw = width if width is not None else th * fw // fh
    fy, fx = th / fh, tw / fw
    scaled = [
        (max(1, int(round(h * fy))), max(1, int(round(w * fx)))) for h, w in dims
    ]
    scaled[-1] = (th, tw)
    return tuple(scaled)


def sample(
    model: TrainedModel,
    seed: int,
    height: int | None = None,
    width: int | None = None,
) -> np.ndarray:
    """Generate one new clip; deterministic per seed. Returns (3, T, H, W)."""
    if not model.scales:
        raise DataError("model has no trained scales")
    t = model.config.clip_len
    dims = _scaled_dims(model, height, width)
    rng = np.random.default_rng(seed)
    x = None
    for n, scale in enumerate(model.scales):
        h, w = dims[n]
        z = Tensor(rng.standard_normal((1, 3, t, h, w)).astype(np.float32))
        with no_grad():
            if n == 0:
                out = generator_forward(scale, z, None)
            else:
                src_h, src_w = x.shape[-2:]
                if src_h > h or src_w > w:
                    raise ShapeError(
                        f"override dims shrink between scales ({src_h}x{src_w} -> {h}x{w})"
                    )
                out = generator_forward(scale, z, upsample_spatial(Tensor(x), h, w))
        x = out.data
    return np.clip(x[0], -1.0, 1.0)


def reconstruct(model: TrainedModel) -> np.ndarray:
    """Replay the recorded fixed-noise path; bit-for-bit the computation the
    training loop logged as its final reconstruction, so the output is NOT
    clamped (clamp before writing frames). Returns (3, T, H, W)."""
    if not model.scales:
        raise DataError("model has no trained scales")
    if model.scales[0].rec_noise is None:
        raise DataError("model is missing its recorded reconstruction noise")
    t = model.config.clip_len
    x = None
    for n, scale in enumerate(model.scales):
        h, w = model.schedule.dims[n]
        with no_grad():
            if n == 0:
                out = generator_forward(scale, Tensor(scale.rec_noise), None)
            else:
                zeros = Tensor(np.zeros((1, 3, t, h, w), dtype=np.float32))
                out = generator_forward(scale, zeros, upsample_spatial(Tensor(x), h, w))
        x = out.data
    return x[0]

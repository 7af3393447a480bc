"""Evaluation metrics: MS-SSIM, Frechet feature distance, a perceptual
frame distance, motion smoothness, and pairwise sample diversity.

The perceptual distances normally run on pretrained feature networks; at
desk scale this package substitutes ProxyFeatureNet, a fixed-seed random
convolutional extractor (3 stride-2 stages, 16/32/64 channels, each stage
RMS-normalized per channel against a seeded calibration batch). Absolute
Frechet/perceptual values are therefore NOT comparable to numbers computed
on pretrained backbones; orderings and ablation directions are what the
proxy supports, and every MetricReport names the backbone it used.

All metrics run in float64 and are deterministic given their inputs and the
net seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DataError, DegenerateVideoError, ShapeError

# ---------------------------------------------------------------------------
# proxy feature extractor


class ProxyFeatureNet:
    """Fixed-seed random conv features standing in for a pretrained backbone."""

    WIDTHS = (16, 32, 64)

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        rng = np.random.default_rng([self.seed, 0xFEA7])
        self.kernels = []
        cin = 3
        for width in self.WIDTHS:
            fan_in = cin * 9
            k = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(width, cin, 3, 3))
            self.kernels.append(k)
            cin = width
        self.norms = self._calibrate(rng)

    @property
    def provenance(self) -> str:
        return f"proxy-random-conv(seed={self.seed})"

    def _calibrate(self, rng: np.random.Generator) -> list[np.ndarray]:
        """Per-stage, per-channel RMS over a seeded noise batch; dividing by
        it keeps activations O(1) at every depth."""
        batch = rng.standard_normal((8, 3, 32, 32))
        norms = []
        for stage, kernel in enumerate(self.kernels):
            outs = []
            for frame in batch:
                h = _conv2d_s2(frame, kernel)
                h = np.where(h > 0, h, 0.2 * h)
                outs.append(h)
            stacked = np.stack(outs)
            rms = np.sqrt(np.mean(stacked**2, axis=(0, 2, 3)))
            rms = np.maximum(rms, 1e-8)
            norms.append(rms)
            batch = stacked / rms[None, :, None, None]
        return norms

    def stages(self, frame: np.ndarray) -> list[np.ndarray]:
        """Normalized activations of each stage for one (3, H, W) frame."""
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 3 or frame.shape[0] != 3:
            raise ShapeError(f"expected a (3, H, W) frame, got {frame.shape}")
        h = frame
        out = []
        for kernel, rms in zip(self.kernels, self.norms):
            h = _conv2d_s2(h, kernel)
            h = np.where(h > 0, h, 0.2 * h)
            h = h / rms[:, None, None]
            out.append(h)
        return out

    def features(self, frame: np.ndarray) -> np.ndarray:
        """Pooled feature vector for one frame: final stage, global average."""
        return self.stages(frame)[-1].mean(axis=(1, 2))


def _conv2d_s2(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """3x3 conv, stride 2, zero pad 1, on a (C, H, W) array."""
    c, h, wd = x.shape
    xp = np.zeros((c, h + 2, wd + 2), dtype=x.dtype)
    xp[:, 1:-1, 1:-1] = x
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    win = win[:, ::2, ::2]  # (C, Ho, Wo, 3, 3)
    return np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4]))


def _frames_of(video_or_frames) -> list[np.ndarray]:
    if isinstance(video_or_frames, (list, tuple)):
        return [np.asarray(f, dtype=np.float64) for f in video_or_frames]
    arr = np.asarray(video_or_frames, dtype=np.float64)
    if arr.ndim == 4 and arr.shape[0] == 3:  # (3, T, H, W) clip
        return [arr[:, t] for t in range(arr.shape[1])]
    raise ShapeError(
        f"expected a (3, T, H, W) clip or a list of frames, got shape {arr.shape}"
    )


# ---------------------------------------------------------------------------
# MS-SSIM

_MSSSIM_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
# inputs live in [-1, 1], so the dynamic range is 2
_C1 = (0.01 * 2.0) ** 2
_C2 = (0.03 * 2.0) ** 2


def _gauss_valid_matrix(n: int) -> np.ndarray:
    taps = np.arange(_SSIM_WIN) - (_SSIM_WIN - 1) / 2
    g = np.exp(-(taps**2) / (2 * _SSIM_SIGMA**2))
    g /= g.sum()
    rows = n - _SSIM_WIN + 1
    m = np.zeros((rows, n))
    for i in range(rows):
        m[i, i : i + _SSIM_WIN] = g
    return m


def _ssim_level(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(mean luminance*cs, mean cs) of one channel at one level."""
    gh = _gauss_valid_matrix(x.shape[0])
    gw = _gauss_valid_matrix(x.shape[1]).T

    def blur(a):
        return gh @ a @ gw

    mx, my = blur(x), blur(y)
    sxx = blur(x * x) - mx * mx
    syy = blur(y * y) - my * my
    sxy = blur(x * y) - mx * my
    lum = (2 * mx * my + _C1) / (mx * mx + my * my + _C1)
    cs = (2 * sxy + _C2) / (sxx + syy + _C2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def _halve(a: np.ndarray) -> np.ndarray:
    h, w = a.shape[0] // 2 * 2, a.shape[1] // 2 * 2
    a = a[:h, :w]
    return (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2]) / 4.0


def ms_ssim_frame(a: np.ndarray, b: np.ndarray) -> float:
    """Multi-scale SSIM of two (3, H, W) frames, channels averaged.

    The level count shrinks to the largest k with min(H, W)/2**(k-1) >= 11;
    the per-level weights are renormalized over the levels kept.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"frame shapes differ: {a.shape} vs {b.shape}")
    mind = min(a.shape[-2:])
    levels = 0
    while levels < len(_MSSSIM_WEIGHTS) and mind / 2**levels >= _SSIM_WIN:
        levels += 1
    if levels == 0:
        raise DataError(
            f"frames of min dim {mind} are too small for the {_SSIM_WIN}px window"
        )
    weights = _MSSSIM_WEIGHTS[:levels] / _MSSSIM_WEIGHTS[:levels].sum()
    per_channel = []
    for ch in range(a.shape[0]):
        x, y = a[ch], b[ch]
        val = 1.0
        for lev in range(levels):
            ssim_m, cs_m = _ssim_level(x, y)
            term = ssim_m if lev == levels - 1 else cs_m
            val *= max(term, 0.0) ** weights[lev]
            if lev < levels - 1:
                x, y = _halve(x), _halve(y)
        per_channel.append(val)
    return float(np.mean(per_channel))


def ms_ssim_video(a: np.ndarray, b: np.ndarray) -> float:
    """Frame-by-frame MS-SSIM between two equally shaped clips, averaged."""
    fa, fb = _frames_of(a), _frames_of(b)
    if len(fa) != len(fb) or fa[0].shape != fb[0].shape:
        raise ShapeError("clips must have identical shapes")
    return float(np.mean([ms_ssim_frame(x, y) for x, y in zip(fa, fb)]))


# ---------------------------------------------------------------------------
# Frechet feature distance


def _sqrtm_trace(sa: np.ndarray, sb: np.ndarray) -> float:
    """tr((sa sb)^(1/2)) via the symmetric form, eigenvalues clipped at 0."""
    va, ua = np.linalg.eigh((sa + sa.T) / 2)
    root = (ua * np.sqrt(np.clip(va, 0, None))) @ ua.T
    m = root @ sb @ root
    vals = np.linalg.eigvalsh((m + m.T) / 2)
    return float(np.sum(np.sqrt(np.clip(vals, 0, None))))


def fid_from_features(fa: np.ndarray, fb: np.ndarray) -> float:
    """Frechet distance between Gaussians fit to two feature sets (n, d)."""
    fa = np.asarray(fa, dtype=np.float64)
    fb = np.asarray(fb, dtype=np.float64)
    if fa.ndim != 2 or fb.ndim != 2 or fa.shape[1] != fb.shape[1]:
        raise ShapeError(f"feature sets must be (n, d): {fa.shape} vs {fb.shape}")
    if len(fa) < 2 or len(fb) < 2:
        raise DataError("need at least 2 feature rows per set to fit a covariance")
    mu_a, mu_b = fa.mean(axis=0), fb.mean(axis=0)
    ca = np.cov(fa, rowvar=False)
    cb = np.cov(fb, rowvar=False)
    dist = float(np.sum((mu_a - mu_b) ** 2))
    dist += float(np.trace(ca) + np.trace(cb)) - 2.0 * _sqrtm_trace(ca, cb)
    return max(dist, 0.0)


def fid(frames_a, frames_b, net: ProxyFeatureNet) -> float:
    """Frechet distance between the pooled proxy features of two frame sets."""
    fa = np.stack([net.features(f) for f in _frames_of(frames_a)])
    fb = np.stack([net.features(f) for f in _frames_of(frames_b)])
    return fid_from_features(fa, fb)


# ---------------------------------------------------------------------------
# perceptual frame distance and the scores built on it


def _normalize_stage(feat: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(feat**2, axis=0, keepdims=True))
    return feat / np.maximum(norm, 1e-10)


def _frame_feats(frame: np.ndarray, net: ProxyFeatureNet) -> list[np.ndarray]:
    return [_normalize_stage(s) for s in net.stages(frame)]


def _dist_from_feats(fa: list[np.ndarray], fb: list[np.ndarray]) -> float:
    total = 0.0
    for a, b in zip(fa, fb):
        diff = a - b
        total += float(np.mean(np.sum(diff * diff, axis=0)))
    return total


def lpips_proxy(frame_a: np.ndarray, frame_b: np.ndarray, net: ProxyFeatureNet) -> float:
    """Perceptual distance: per-stage unit-normalized channel features,
    squared differences averaged over positions, summed over stages."""
    a = np.asarray(frame_a)
    b = np.asarray(frame_b)
    if a.shape != b.shape:
        raise ShapeError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return _dist_from_feats(_frame_feats(a, net), _frame_feats(b, net))


_DENOM_EPS = 1e-8


def delta_n_lpips(video: np.ndarray, net: ProxyFeatureNet, dist_fn=None) -> float:
    """Motion smoothness: the population standard deviation of consecutive
    frame distances normalized by the first-to-last frame distance. Lower is
    smoother. Raises DegenerateVideoError on (near-)static input."""
    frames = _frames_of(video)
    if len(frames) < 3:
        raise DataError(f"need at least 3 frames, got {len(frames)}")
    if dist_fn is None:
        feats = [_frame_feats(f, net) for f in frames]
        consec = [
            _dist_from_feats(feats[i], feats[i + 1]) for i in range(len(frames) - 1)
        ]
        denom = _dist_from_feats(feats[0], feats[-1])
    else:
        consec = [dist_fn(frames[i], frames[i + 1]) for i in range(len(frames) - 1)]
        denom = dist_fn(frames[0], frames[-1])
    if denom <= _DENOM_EPS:
        raise DegenerateVideoError(
            f"first-to-last frame distance {denom:.3g} is below {_DENOM_EPS:g}; "
            "the smoothness ratio is undefined on a static video"
        )
    ratios = np.asarray(consec, dtype=np.float64) / denom
    return float(np.std(ratios))


def diversity_lpips(videos: list[np.ndarray], net: ProxyFeatureNet) -> float:
    """Mean pairwise distance among sampled videos: for each unordered pair,
    the frame-wise perceptual distance averaged over corresponding frames;
    the score averages over all n(n-1)/2 pairs. Higher means more diverse."""
    if len(videos) < 2:
        raise DataError(f"need at least 2 videos, got {len(videos)}")
    frame_sets = [_frames_of(v) for v in videos]
    base = (len(frame_sets[0]), frame_sets[0][0].shape)
    for fs in frame_sets[1:]:
        if (len(fs), fs[0].shape) != base:
            raise ShapeError("all videos must have identical shapes")
    feats = [[_frame_feats(f, net) for f in fs] for fs in frame_sets]
    pair_scores = []
    for i, j in combinations(range(len(videos)), 2):
        per_frame = [
            _dist_from_feats(fa, fb) for fa, fb in zip(feats[i], feats[j])
        ]
        pair_scores.append(np.mean(per_frame))
    return float(np.mean(pair_scores))


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class MetricReport:
    """A labelled bundle of scores plus the feature backbone that made them."""

    provenance: str
    ms_ssim: float | None = None
    fid: float | None = None
    delta_n_lpips_a: float | None = None
    delta_n_lpips_b: float | None = None
    diversity: float | None = None

    def lines(self) -> list[str]:
        out = [f"backbone = {self.provenance}"]
        for name in ("ms_ssim", "fid", "delta_n_lpips_a", "delta_n_lpips_b", "diversity"):
            val = getattr(self, name)
            if val is not None:
                out.append(f"{name} = {val:.6f}")
        return out

    def tsv(self) -> str:
        names = [
            n
            for n in ("ms_ssim", "fid", "delta_n_lpips_a", "delta_n_lpips_b", "diversity")
            if getattr(self, n) is not None
        ]
        header = "\t".join(names)
        row = "\t".join(f"{getattr(self, n):.6f}" for n in names)
        return header + "\n" + row

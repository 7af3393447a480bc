"""Per-scale generator and patch critic.

Both networks are plain 3-D conv stacks: every layer but the last is
conv -> batchnorm -> leaky ReLU; the generator ends in a tanh-activated conv
back to 3 channels, the critic in a linear conv to a 1-channel patch map
whose mean is the adversarial score. Stride is 1 with "same" zero padding
everywhere, so with L layers of kernel k the critic sees a receptive field
of 1 + L*(k-1) per axis; the default 5 layers of 3x3x3 give exactly 11x11x11.

At scales above the coarsest the generator is residual: the conv stack runs
on (noise_amp * noise + upsampled_previous) and its tanh output is added back
onto upsampled_previous.

Normalization runs on each input's own batch statistics both during training
and during generation (the running-average mode exists and is exercised via
`training=False`, but generation sticks to batch statistics so a
reconstruction pass replays the training-time computation exactly).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    BatchNormState,
    Tensor,
    batchnorm3d,
    conv3d,
    leaky_relu,
    tanh,
)
from .config import TrainConfig
from .errors import ShapeError


@dataclass
class ConvLayer:
    weight: Tensor
    bias: Tensor
    gamma: Tensor | None = None
    beta: Tensor | None = None
    bn: BatchNormState | None = None

    @property
    def has_bn(self) -> bool:
        return self.gamma is not None


@dataclass
class ScaleModel:
    """Everything one pyramid level owns."""

    generator: list[ConvLayer]
    discriminator: list[ConvLayer]
    rec_noise: np.ndarray | None = None  # fixed noise map, coarsest scale only
    noise_amp: float = 1.0
    config: TrainConfig = field(default_factory=TrainConfig)


def receptive_field(num_layers: int, kernel: int) -> int:
    """Receptive field per axis of a stride-1 conv stack."""
    return 1 + num_layers * (kernel - 1)


def _init_stack(
    rng: np.random.Generator, cfg: TrainConfig, in_ch: int, out_ch: int
) -> list[ConvLayer]:
    k = cfg.kernel
    widths = [in_ch] + [cfg.hidden_channels] * (cfg.num_layers - 1) + [out_ch]
    layers = []
    for i in range(cfg.num_layers):
        ci, co = widths[i], widths[i + 1]
        w = Tensor(
            rng.normal(0.0, 0.02, size=(co, ci, k, k, k)).astype(np.float32),
            requires_grad=True,
        )
        b = Tensor(np.zeros(co, dtype=np.float32), requires_grad=True)
        if i < cfg.num_layers - 1:
            layers.append(
                ConvLayer(
                    weight=w,
                    bias=b,
                    gamma=Tensor(np.ones(co, dtype=np.float32), requires_grad=True),
                    beta=Tensor(np.zeros(co, dtype=np.float32), requires_grad=True),
                    bn=BatchNormState(co, momentum=cfg.bn_momentum),
                )
            )
        else:
            layers.append(ConvLayer(weight=w, bias=b))
    return layers


def init_scale_model(scale_index: int, config: TrainConfig, seed: int) -> ScaleModel:
    """Fresh parameters for one scale: N(0, 0.02) conv weights, unit gamma,
    zero bias/beta. Deterministic in (seed, scale_index)."""
    rf = receptive_field(config.num_layers, config.kernel)
    if rf != 11:
        raise ValueError(
            f"{config.num_layers} layers of kernel {config.kernel} give a "
            f"receptive field of {rf}, but the critic is defined at 11x11x11"
        )
    rng = np.random.default_rng([seed, scale_index, 0xD75])
    return ScaleModel(
        generator=_init_stack(rng, config, 3, 3),
        discriminator=_init_stack(rng, config, 3, 1),
        rec_noise=None,
        noise_amp=1.0,
        config=config,
    )


def stack_params(layers: list[ConvLayer]) -> list[Tensor]:
    out = []
    for layer in layers:
        out.append(layer.weight)
        out.append(layer.bias)
        if layer.has_bn:
            out.append(layer.gamma)
            out.append(layer.beta)
    return out


def _run_stack(
    layers: list[ConvLayer],
    x: Tensor,
    cfg: TrainConfig,
    training: bool,
    update_stats: bool,
) -> Tensor:
    h = x
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        h = conv3d(h, layer.weight, layer.bias)
        if i < last:
            h = batchnorm3d(
                h,
                layer.gamma,
                layer.beta,
                layer.bn,
                eps=cfg.bn_eps,
                training=training,
                update_stats=update_stats,
            )
            h = leaky_relu(h, cfg.lrelu_slope)
    return h


def generator_forward(
    model: ScaleModel,
    noise: Tensor,
    prev_up: Tensor | None,
    training: bool = True,
    update_stats: bool = False,
) -> Tensor:
    """One generator pass. At the coarsest scale (prev_up None) the stack maps
    the noise alone; above it the stack input is noise_amp*noise + prev_up and
    the tanh trunk output is added back onto prev_up."""
    if prev_up is not None and noise.shape != prev_up.shape:
        raise ShapeError(
            f"noise shape {noise.shape} does not match upsampled previous "
            f"scale {prev_up.shape}"
        )
    cfg = model.config
    if prev_up is None:
        x = noise * model.noise_amp if model.noise_amp != 1.0 else noise
    else:
        x = noise * model.noise_amp + prev_up
    out = tanh(_run_stack(model.generator, x, cfg, training, update_stats))
    if prev_up is not None:
        out = out + prev_up
    return out


def discriminator_map(
    model: ScaleModel,
    clip: Tensor,
    training: bool = True,
    update_stats: bool = False,
) -> Tensor:
    """The critic's 1-channel patch score map."""
    if clip.ndim != 5 or clip.shape[1] != 3:
        raise ShapeError(f"critic expects a (B, 3, T, H, W) clip, got {clip.shape}")
    return _run_stack(model.discriminator, clip, model.config, training, update_stats)


def discriminator_forward(
    model: ScaleModel,
    clip: Tensor,
    training: bool = True,
    update_stats: bool = False,
) -> Tensor:
    """Adversarial score: the mean of the patch map."""
    return discriminator_map(model, clip, training, update_stats).mean()

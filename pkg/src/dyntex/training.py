"""Coarse-to-fine training with the sliding-window data update.

Scales train strictly in order; once a scale finishes its parameters are
never touched again. The adversarial "real" example follows a cursor that
advances through the source video by `update_stride` frames every
`update_period` iterations, wrapping to the start when the window would run
off the end. The reconstruction target stays pinned to the first window's
pyramid for the whole run so the reconstruction objective is stable while
the adversarial data moves.

Everything is deterministic in config.seed: parameter init, noise draws,
interpolation coefficients and the data cursor each use their own seeded
stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, grad, no_grad, upsample_spatial
from .config import TrainConfig
from .errors import NumericError, ShapeError
from .losses import (
    LossReport,
    discriminator_loss,
    generator_loss,
    gradient_penalty,
    reconstruction_loss,
)
from .models import (
    ScaleModel,
    discriminator_forward,
    generator_forward,
    init_scale_model,
    stack_params,
)
from .pyramid import (
    ScaleSchedule,
    build_scale_schedule,
    build_training_pyramid,
    single_scale_schedule,
    validate_clip,
)


@dataclass(frozen=True)
class ClipCursor:
    """Position of the current training window in the source video."""

    start_frame: int
    source_len: int


def clip_start(step: int, source_len: int, cfg: TrainConfig) -> int:
    """Window start frame at a given iteration; a pure function of its inputs.

    Every update_period iterations the start advances by update_stride and
    wraps to 0 when the next window would overrun the source. update_period=0
    disables updates (the start stays 0).
    """
    t = cfg.clip_len
    if source_len < t:
        raise ShapeError(f"source has {source_len} frames but windows need {t}")
    if cfg.update_period == 0:
        return 0
    positions = (source_len - t) // cfg.update_stride + 1
    return cfg.update_stride * ((step // cfg.update_period) % positions)


def next_clip(cursor: ClipCursor, step: int, cfg: TrainConfig) -> ClipCursor:
    return ClipCursor(
        start_frame=clip_start(step, cursor.source_len, cfg),
        source_len=cursor.source_len,
    )


class Adam:
    """Standard Adam with bias correction; lr is mutable for step decay."""

    def __init__(self, params: list[Tensor], lr: float, beta1: float, beta2: float,
                 eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def step(self, grads: list[Tensor]):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            gd = g.data
            m *= b1
            m += (1 - b1) * gd
            v *= b2
            v += (1 - b2) * gd * gd
            p.data -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)


@dataclass
class ScaleSummary:
    scale: int
    final_rec_loss: float
    noise_amp: float


@dataclass
class TrainedModel:
    """A full pyramid of trained scales plus its schedule and provenance."""

    schedule: ScaleSchedule
    scales: list[ScaleModel]
    config: TrainConfig
    log: list[LossReport] = field(default_factory=list)
    summaries: list[ScaleSummary] = field(default_factory=list)

    @property
    def num_scales(self) -> int:
        return len(self.scales)


def _noise_rng(seed: int, scale: int) -> np.random.Generator:
    return np.random.default_rng([seed, scale, 0x7A1])


def _rec_noise(seed: int, shape) -> np.ndarray:
    rng = np.random.default_rng([seed, 0, 0x2EC])
    return rng.standard_normal(shape).astype(np.float32)


def _chain_reconstruction(
    scales: list[ScaleModel], schedule: ScaleSchedule, clip_len: int
) -> np.ndarray:
    """Replay the fixed-noise reconstruction through the trained scales;
    returns the last scale's output, batch axis included."""
    x = None
    for n, model in enumerate(scales):
        h, w = schedule.dims[n]
        with no_grad():
            if n == 0:
                out = generator_forward(model, Tensor(model.rec_noise), None)
            else:
                up = upsample_spatial(Tensor(x), h, w)
                zeros = Tensor(np.zeros((1, 3, clip_len, h, w), dtype=np.float32))
                out = generator_forward(model, zeros, up)
        x = out.data
    return x


def _chain_sample(
    scales: list[ScaleModel],
    schedule: ScaleSchedule,
    clip_len: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw fresh noise through the already-trained scales."""
    x = None
    for n, model in enumerate(scales):
        h, w = schedule.dims[n]
        z = rng.standard_normal((1, 3, clip_len, h, w)).astype(np.float32)
        with no_grad():
            if n == 0:
                out = generator_forward(model, Tensor(z), None)
            else:
                up = upsample_spatial(Tensor(x), h, w)
                out = generator_forward(model, Tensor(z), up)
        x = out.data
    return x


def schedule_from_config(cfg: TrainConfig, aspect: float = 1.0) -> ScaleSchedule:
    if cfg.num_scales == 1:
        width = max(1, int(round(cfg.finest * aspect)))
        return single_scale_schedule(cfg.finest, width)
    return build_scale_schedule(cfg.coarsest, cfg.finest, cfg.num_scales, aspect)


def train_scale(
    trained: list[ScaleModel],
    scale_index: int,
    schedule: ScaleSchedule,
    pyramid_full: list[np.ndarray],
    rec_targets: list[np.ndarray],
    cfg: TrainConfig,
    log: list[LossReport],
) -> tuple[ScaleModel, ScaleSummary]:
    """Train one scale with the coarser ones frozen. Appends one LossReport
    per iteration to `log` plus a final reconstruction evaluation."""
    n = scale_index
    h, w = schedule.dims[n]
    t = cfg.clip_len
    model = init_scale_model(n, cfg, cfg.seed)

    target = rec_targets[n][None]  # (1, 3, T, h, w)
    if n == 0:
        model.rec_noise = _rec_noise(cfg.seed, target.shape)
        prev_rec = None
        model.noise_amp = 1.0
    else:
        below = _chain_reconstruction(trained, schedule, t)
        with no_grad():
            prev_rec = upsample_spatial(Tensor(below), h, w).data
        model.noise_amp = float(
            np.sqrt(np.mean((prev_rec.astype(np.float64) - target) ** 2))
        )

    gparams = stack_params(model.generator)
    dparams = stack_params(model.discriminator)
    adam_g = Adam(gparams, cfg.lr, cfg.beta1, cfg.beta2)
    adam_d = Adam(dparams, cfg.lr, cfg.beta1, cfg.beta2)
    rng = _noise_rng(cfg.seed, n)
    source_len = pyramid_full[n].shape[1]
    decay_step = int(cfg.lr_decay_at * cfg.steps_per_scale)

    target_t = Tensor(target.astype(np.float32))
    prev_rec_t = Tensor(prev_rec) if prev_rec is not None else None
    rec_noise_t = (
        Tensor(model.rec_noise)
        if n == 0
        else Tensor(np.zeros((1, 3, t, h, w), dtype=np.float32))
    )

    def fresh_fake(track_gen: bool):
        """A generated clip at this scale; graph through G only if asked."""
        if n == 0:
            prev = None
        else:
            below = _chain_sample(trained, schedule, t, rng)
            with no_grad():
                prev = upsample_spatial(Tensor(below), h, w)
        z = Tensor(rng.standard_normal((1, 3, t, h, w)).astype(np.float32))
        if track_gen:
            return generator_forward(model, z, prev, update_stats=True)
        with no_grad():
            return generator_forward(model, z, prev)

    def critic(clip):
        return discriminator_forward(model, clip)

    for step in range(cfg.steps_per_scale):
        if step == decay_step and 0 < decay_step < cfg.steps_per_scale:
            adam_g.lr *= cfg.lr_decay
            adam_d.lr *= cfg.lr_decay

        start = clip_start(step, source_len, cfg)
        real = Tensor(pyramid_full[n][None, :, start : start + t])

        d_val = gp_val = adv_val = rec_val = tot_val = 0.0
        try:
            for _ in range(cfg.d_steps):
                fake = fresh_fake(track_gen=False)
                s_real = discriminator_forward(model, real, update_stats=True)
                s_fake = discriminator_forward(model, fake)
                gp = gradient_penalty(critic, real, fake, lam=cfg.lambda_gp, rng=rng)
                d_total = discriminator_loss(s_real, s_fake, gp)
                d_grads = grad(d_total, dparams)
                adam_d.step(d_grads)
                d_val, gp_val = d_total.item(), gp.item()

            for _ in range(cfg.g_steps):
                fake = fresh_fake(track_gen=True)
                s_fake = discriminator_forward(model, fake)
                rec_out = generator_forward(model, rec_noise_t, prev_rec_t)
                rec = reconstruction_loss(rec_out, target_t)
                g_total = generator_loss(s_fake, rec, cfg.eta_rec)
                g_grads = grad(g_total, gparams)
                adam_g.step(g_grads)
                adv_val, rec_val, tot_val = -s_fake.item(), rec.item(), g_total.item()
        except ValueError as e:
            if "non-finite" not in str(e):
                raise
            raise NumericError(
                f"non-finite values at scale {n} step {step}: d={d_val} "
                f"g_adv={adv_val} rec={rec_val} gp={gp_val} ({e})"
            ) from e

        report = LossReport(
            step=step,
            scale=n,
            d_loss=d_val,
            g_adv_loss=adv_val,
            rec_loss=rec_val,
            gp_term=gp_val,
            total=tot_val,
        )
        if not report.finite():
            raise NumericError(
                f"non-finite loss at scale {n} step {step}: d={d_val} "
                f"g_adv={adv_val} rec={rec_val} gp={gp_val}"
            )
        log.append(report)

    # post-update reconstruction so the logged value matches reconstruct()
    with no_grad():
        rec_out = generator_forward(model, rec_noise_t, prev_rec_t)
        final_rec = reconstruction_loss(rec_out, target_t).item()
    log.append(
        LossReport(
            step=cfg.steps_per_scale,
            scale=n,
            d_loss=d_val,
            g_adv_loss=adv_val,
            rec_loss=final_rec,
            gp_term=gp_val,
            total=adv_val + cfg.eta_rec * final_rec,
        )
    )
    return model, ScaleSummary(scale=n, final_rec_loss=final_rec, noise_amp=model.noise_amp)


def train_pyramid(video: np.ndarray, cfg: TrainConfig) -> TrainedModel:
    """Train every scale in coarse-to-fine order on a single source video."""
    cfg.validate()
    video = validate_clip(video, "video")
    src_t, src_h, src_w = video.shape[1:]
    if src_t < cfg.clip_len:
        raise ShapeError(
            f"source video has {src_t} frames; training needs {cfg.clip_len}"
        )
    aspect = src_w / src_h
    schedule = schedule_from_config(cfg, aspect)
    pyramid_full = build_training_pyramid(video, schedule)
    # the reconstruction target is the first window's pyramid, fixed for the
    # whole run (spatial downsampling commutes with taking the window)
    rec_targets = [p[:, : cfg.clip_len] for p in pyramid_full]

    trained: list[ScaleModel] = []
    log: list[LossReport] = []
    summaries: list[ScaleSummary] = []
    for n in range(schedule.num_scales):
        model, summary = train_scale(
            trained, n, schedule, pyramid_full, rec_targets, cfg, log
        )
        trained.append(model)
        summaries.append(summary)
    return TrainedModel(
        schedule=schedule, scales=trained, config=cfg, log=log, summaries=summaries
    )


def write_log(path, log: list[LossReport]):
    from .losses import LOG_HEADER

    with open(path, "w", encoding="utf-8") as f:
        f.write(LOG_HEADER + "\n")
        for row in log:
            f.write(row.row() + "\n")

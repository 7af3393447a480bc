"""Adversarial, gradient-penalty and reconstruction objectives.

Sign convention: the critic minimizes score_fake - score_real + penalty and
the generator minimizes -score_fake + eta * reconstruction, i.e. the usual
minimized form of the gradient-penalty Wasserstein objective with an added
mean-squared reconstruction term. Using the mean (not the sum) of squared
errors keeps eta independent of clip size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, grad
from .errors import ShapeError

# keeps the norm differentiable at zero critic gradient; shifts the penalty
# value by < 1e-6 relative
_NORM_EPS = 1e-12


@dataclass(frozen=True)
class LossReport:
    """Scalars logged once per training iteration. `total` is the generator
    objective, g_adv_loss + eta * rec_loss."""

    step: int
    scale: int
    d_loss: float
    g_adv_loss: float
    rec_loss: float
    gp_term: float
    total: float

    def row(self) -> str:
        return (
            f"{self.step}\t{self.scale}\t{self.d_loss:.6f}\t"
            f"{self.g_adv_loss:.6f}\t{self.rec_loss:.6f}\t{self.gp_term:.6f}"
        )

    def finite(self) -> bool:
        vals = (self.d_loss, self.g_adv_loss, self.rec_loss, self.gp_term, self.total)
        return all(np.isfinite(v) for v in vals)


LOG_HEADER = "step\tscale\td_loss\tg_adv\trec\tgp"


def gradient_penalty(
    critic_fn,
    real: Tensor,
    fake: Tensor,
    lam: float = 10.0,
    alpha: float | None = None,
    rng: np.random.Generator | None = None,
    create_graph: bool = True,
) -> Tensor:
    """lam * (||grad_x critic(x_mix)|| - 1)^2 at x_mix = a*real + (1-a)*fake.

    `a` is drawn uniformly from (0, 1) unless pinned via `alpha`. The result
    is differentiable with respect to the critic parameters (the gradient is
    taken with create_graph=True), which is the whole point of the term.
    """
    if real.shape != fake.shape:
        raise ShapeError(
            f"real {real.shape} and fake {fake.shape} clips must match"
        )
    if alpha is None:
        alpha = float((rng or np.random.default_rng()).uniform())
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    mix = Tensor(
        (alpha * real.data + (1.0 - alpha) * fake.data).astype(real.data.dtype),
        requires_grad=True,
    )
    score = critic_fn(mix)
    (gx,) = grad(score, [mix], create_graph=create_graph)
    norm = ((gx * gx).sum() + _NORM_EPS) ** 0.5
    return ((norm - 1.0) ** 2) * lam


def discriminator_loss(score_real, score_fake, gp):
    """What the critic minimizes: score_fake - score_real + penalty."""
    return score_fake - score_real + gp


def reconstruction_loss(generated: Tensor, target: Tensor) -> Tensor:
    """Mean squared error over all elements."""
    if generated.shape != target.shape:
        raise ShapeError(
            f"generated {generated.shape} and target {target.shape} must match"
        )
    diff = generated - target
    return (diff * diff).mean()


def generator_loss(score_fake, rec, eta: float):
    """What the generator minimizes: -score_fake + eta * rec."""
    return -score_fake + rec * eta

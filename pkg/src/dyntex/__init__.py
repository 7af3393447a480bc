"""dyntex: learn a moving texture from one short video and synthesize more.

A coarse-to-fine pyramid of small spatiotemporal patch GANs is trained on a
single clip, with the training window sliding through the source video on a
fixed schedule to keep sample diversity up. Everything runs on numpy; the
reverse-mode autodiff core, including the second-order path the critic's
gradient penalty needs, lives in dyntex.autodiff.
"""

from .autodiff import (
    BatchNormState,
    Tensor,
    batchnorm3d,
    clamp,
    conv3d,
    grad,
    grad_check,
    leaky_relu,
    no_grad,
    tanh,
    upsample_spatial,
)
from .config import TrainConfig, desk_config, full_config, resolve_config
from .errors import (
    DataError,
    DegenerateVideoError,
    DyntexError,
    NumericError,
    ShapeError,
)
from .losses import (
    LossReport,
    discriminator_loss,
    generator_loss,
    gradient_penalty,
    reconstruction_loss,
)
from .metrics import (
    MetricReport,
    ProxyFeatureNet,
    delta_n_lpips,
    diversity_lpips,
    fid,
    fid_from_features,
    lpips_proxy,
    ms_ssim_frame,
    ms_ssim_video,
)
from .model_io import load_model, save_model
from .models import (
    ScaleModel,
    discriminator_forward,
    discriminator_map,
    generator_forward,
    init_scale_model,
    receptive_field,
)
from .pyramid import (
    ScaleSchedule,
    build_scale_schedule,
    build_training_pyramid,
    downsample_video,
    single_scale_schedule,
    validate_clip,
)
from .sampling import reconstruct, sample
from .synthetic import SyntheticSpec, concat_phases, make_synthetic
from .training import (
    Adam,
    ClipCursor,
    TrainedModel,
    clip_start,
    next_clip,
    train_pyramid,
    train_scale,
    write_log,
)
from .video_io import load_video, save_video

__version__ = "0.1.0"

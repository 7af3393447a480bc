"""Train a small two-scale model on one synthetic clip, then sample new
clips and replay the fixed-noise reconstruction. Takes a few minutes on one
CPU core; shrink steps_per_scale for a faster look.

Run:  python demos/04_train_sample_reconstruct.py
"""

import time

import numpy as np

from dyntex import (
    SyntheticSpec,
    desk_config,
    make_synthetic,
    ms_ssim_video,
    reconstruct,
    sample,
    save_model,
    save_video,
    train_pyramid,
)
from dyntex.pyramid import downsample_video

cfg = desk_config(num_scales=2, coarsest=16, finest=32, steps_per_scale=200, seed=0)
clip = make_synthetic(SyntheticSpec(kind="advected-noise", frames=16, size=32, seed=5))

print(f"training {cfg.num_scales} scales x {cfg.steps_per_scale} steps ...")
t0 = time.time()
model = train_pyramid(clip, cfg)
print(f"done in {time.time() - t0:.0f}s")

for s in model.summaries:
    print(f"  scale {s.scale}: final rec loss {s.final_rec_loss:.4f}, "
          f"noise amplitude {s.noise_amp:.3f}")

rec = np.clip(reconstruct(model), -1, 1)
target = downsample_video(clip[:, : cfg.clip_len], *model.schedule.dims[-1])
print(f"reconstruction MS-SSIM vs training window: {ms_ssim_video(rec, target):.3f}")

a, b = sample(model, seed=1), sample(model, seed=2)
print(f"two samples differ by mean|diff| = {np.abs(a - b).mean():.4f}")

save_model(model, "demos/out/model")
save_video(a, "demos/out/sample_seed1")
save_video(rec, "demos/out/reconstruction")
print("wrote demos/out/model, demos/out/sample_seed1, demos/out/reconstruction")

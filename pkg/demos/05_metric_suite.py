"""The evaluation metrics, exercised on synthetic clips where the right
answers are obvious: identical clips, perturbed clips, unrelated clips.

Run:  python demos/05_metric_suite.py
"""

import numpy as np

from dyntex import (
    ProxyFeatureNet,
    SyntheticSpec,
    delta_n_lpips,
    diversity_lpips,
    fid,
    lpips_proxy,
    make_synthetic,
    ms_ssim_video,
)

net = ProxyFeatureNet(seed=0)
print(f"feature backbone: {net.provenance}")
print("(a fixed-seed random conv net; orderings are meaningful, absolute")
print(" values are not comparable to pretrained-backbone numbers)\n")

a = make_synthetic(SyntheticSpec(kind="advected-noise", frames=16, size=48, seed=0))
rng = np.random.default_rng(1)
noisy = np.clip(a + rng.normal(0, 0.15, a.shape).astype(np.float32), -1, 1)
other = make_synthetic(SyntheticSpec(kind="rotating-pattern", frames=16, size=48, seed=2))

print(f"{'pair':28s} {'MS-SSIM':>8s} {'FID':>8s}")
for name, b in [("self", a), ("self + noise", noisy), ("unrelated texture", other)]:
    print(f"{name:28s} {ms_ssim_video(a, b):8.4f} {fid(a, b, net):8.3f}")

print(f"\nperceptual frame distance self/noisy/other: "
      f"{lpips_proxy(a[:, 0], a[:, 0], net):.4f} / "
      f"{lpips_proxy(a[:, 0], noisy[:, 0], net):.4f} / "
      f"{lpips_proxy(a[:, 0], other[:, 0], net):.4f}")

smooth = delta_n_lpips(a, net)
shuffled = a[:, rng.permutation(16)]
print(f"\nmotion smoothness (lower = smoother): ordered {smooth:.4f} vs "
      f"shuffled frames {delta_n_lpips(shuffled, net):.4f}")

clips = [make_synthetic(SyntheticSpec(kind="advected-noise", frames=8, size=32, seed=s))
         for s in range(4)]
print(f"\ndiversity of 4 distinct clips: {diversity_lpips(clips, net):.4f}")
print(f"diversity of 4 copies:         {diversity_lpips([clips[0]] * 4, net):.4f}")

"""Command-line surface.

Subcommands: train, sample, reconstruct, metrics, diversity, synth, pyramid.
Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Every run is deterministic given --seed and echoes its full resolved
configuration into a manifest (a file next to the outputs, or stdout for the
read-only metric commands).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import model_io, sampling, video_io
from .config import config_lines, load_config_file, resolve_config
from .errors import DataError, DyntexError, NumericError
from .metrics import (
    MetricReport,
    ProxyFeatureNet,
    delta_n_lpips,
    diversity_lpips,
    fid,
    ms_ssim_video,
)
from .pyramid import build_training_pyramid
from .synthetic import SyntheticSpec, make_synthetic
from .training import schedule_from_config, train_pyramid, write_log


def _args_manifest(args, keys) -> list[str]:
    return [f"arg.{k} = {getattr(args, k)}" for k in keys if getattr(args, k) is not None]


def _cmd_train(args) -> int:
    overrides = load_config_file(args.config) if args.config else None
    cfg = resolve_config(args.profile, overrides, seed=args.seed)
    video = video_io.load_video(args.input)
    model = train_pyramid(video, cfg)
    model_io.save_model(model, args.out)
    write_log(os.path.join(args.out, "train_log.tsv"), model.log)
    lines = ["command = train", f"input = {args.input}"] + config_lines(cfg)
    lines += [
        "schedule_dims = " + ",".join(f"{h}x{w}" for h, w in model.schedule.dims),
        f"schedule_r = {model.schedule.r:.6f}",
    ]
    video_io.write_manifest(os.path.join(args.out, "run_manifest.txt"), lines)
    print(f"trained {model.num_scales} scales -> {args.out}")
    return 0


def _cmd_sample(args) -> int:
    model = model_io.load_model(args.model)
    clip = sampling.sample(model, args.seed, args.height, args.width)
    video_io.save_video(clip, args.out)
    lines = (
        ["command = sample", f"model = {args.model}", f"seed = {args.seed}"]
        + _args_manifest(args, ("height", "width"))
        + config_lines(model.config)
    )
    video_io.write_manifest(os.path.join(args.out, "run_manifest.txt"), lines)
    print(f"sampled {clip.shape[1]} frames of {clip.shape[2]}x{clip.shape[3]} -> {args.out}")
    return 0


def _cmd_reconstruct(args) -> int:
    model = model_io.load_model(args.model)
    clip = np.clip(sampling.reconstruct(model), -1.0, 1.0)
    video_io.save_video(clip, args.out)
    lines = ["command = reconstruct", f"model = {args.model}"] + config_lines(model.config)
    video_io.write_manifest(os.path.join(args.out, "run_manifest.txt"), lines)
    print(f"reconstructed -> {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    allowed = {"ms-ssim", "fid", "dnlpips"}
    bad = set(which) - allowed
    if bad:
        raise DataError(f"unknown metric(s) {sorted(bad)}; pick from {sorted(allowed)}")
    a = video_io.load_video(args.a)
    b = video_io.load_video(args.b)
    net = ProxyFeatureNet(args.net_seed)
    vals = {}
    if "ms-ssim" in which:
        vals["ms_ssim"] = ms_ssim_video(a, b)
    if "fid" in which:
        vals["fid"] = fid(a, b, net)
    if "dnlpips" in which:
        vals["delta_n_lpips_a"] = delta_n_lpips(a, net)
        vals["delta_n_lpips_b"] = delta_n_lpips(b, net)
    report = MetricReport(provenance=net.provenance, **vals)
    print(f"# a = {args.a}")
    print(f"# b = {args.b}")
    print(f"# net_seed = {args.net_seed}")
    for line in report.lines():
        print(line)
    print(report.tsv())
    return 0


def _cmd_diversity(args) -> int:
    dirs = [d.strip() for d in args.inputs.split(",") if d.strip()]
    videos = [video_io.load_video(d) for d in dirs]
    net = ProxyFeatureNet(args.net_seed)
    score = diversity_lpips(videos, net)
    report = MetricReport(provenance=net.provenance, diversity=score)
    print(f"# inputs = {','.join(dirs)}")
    print(f"# net_seed = {args.net_seed}")
    for line in report.lines():
        print(line)
    print(report.tsv())
    return 0


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        kind=args.kind,
        frames=args.frames,
        size=args.size,
        velocity=(args.vy, args.vx),
        seed=args.seed,
    )
    clip = make_synthetic(spec)
    video_io.save_video(clip, args.out)
    lines = ["command = synth"] + [
        f"arg.{k} = {getattr(args, k)}"
        for k in ("kind", "frames", "size", "vy", "vx", "seed")
    ]
    video_io.write_manifest(os.path.join(args.out, "run_manifest.txt"), lines)
    print(f"wrote {args.frames} frames of {args.kind} -> {args.out}")
    return 0


def _cmd_pyramid(args) -> int:
    overrides = load_config_file(args.config) if args.config else None
    cfg = resolve_config(args.profile, overrides, seed=args.seed)
    video = video_io.load_video(args.input)
    schedule = schedule_from_config(cfg, video.shape[3] / video.shape[2])
    levels = build_training_pyramid(video, schedule)
    os.makedirs(args.out, exist_ok=True)
    for n, level in enumerate(levels):
        video_io.save_video(level, os.path.join(args.out, f"scale_{n:02d}"))
    lines = (
        ["command = pyramid", f"input = {args.input}"]
        + config_lines(cfg)
        + [
            "schedule_dims = " + ",".join(f"{h}x{w}" for h, w in schedule.dims),
            f"schedule_r = {schedule.r:.6f}",
        ]
    )
    video_io.write_manifest(os.path.join(args.out, "run_manifest.txt"), lines)
    print(f"wrote {len(levels)} pyramid levels -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dyntex",
        description="Single-video dynamic texture synthesis and evaluation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model on a frame directory")
    t.add_argument("--input", required=True, help="frame directory (video)")
    t.add_argument("--out", required=True, help="model output directory")
    t.add_argument("--config", help="flat key=value config file")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--profile", choices=("full", "desk"), default="full")
    t.set_defaults(func=_cmd_train)

    s = sub.add_parser("sample", help="draw a new clip from a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--height", type=int, default=None)
    s.add_argument("--width", type=int, default=None)
    s.set_defaults(func=_cmd_sample)

    r = sub.add_parser("reconstruct", help="replay the fixed-noise reconstruction")
    r.add_argument("--model", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_reconstruct)

    m = sub.add_parser("metrics", help="score video b against video a")
    m.add_argument("--a", required=True)
    m.add_argument("--b", required=True)
    m.add_argument("--which", default="ms-ssim,fid,dnlpips")
    m.add_argument("--net-seed", type=int, default=0, dest="net_seed")
    m.set_defaults(func=_cmd_metrics)

    d = sub.add_parser("diversity", help="mean pairwise distance among videos")
    d.add_argument("--inputs", required=True, help="comma-separated frame dirs")
    d.add_argument("--net-seed", type=int, default=0, dest="net_seed")
    d.set_defaults(func=_cmd_diversity)

    y = sub.add_parser("synth", help="write a procedural moving texture")
    y.add_argument("--kind", choices=SyntheticSpec.KINDS, required=True)
    y.add_argument("--frames", type=int, default=16)
    y.add_argument("--size", type=int, default=48)
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--vy", type=float, default=1.0)
    y.add_argument("--vx", type=float, default=2.0)
    y.add_argument("--out", required=True)
    y.set_defaults(func=_cmd_synth)

    g = sub.add_parser("pyramid", help="dump every training scale of a video")
    g.add_argument("--input", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="flat key=value config file")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--profile", choices=("full", "desk"), default="full")
    g.set_defaults(func=_cmd_pyramid)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except DyntexError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

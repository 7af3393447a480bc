"""Model checkpoints: a text manifest plus one raw float32 blob per scale.

The manifest declares the schedule, per-scale noise amplitudes, the full
training configuration, and for every scale the ordered list of named arrays
with their shapes. Each scale's .bin file is the concatenation of those
arrays as little-endian float32 in declared order, so a save/load round trip
is bit-exact.
"""

from __future__ import annotations

import os

import numpy as np

from .autodiff import BatchNormState, Tensor
from .config import config_from_lines, config_lines
from .errors import DataError
from .models import ConvLayer, ScaleModel
from .pyramid import ScaleSchedule
from .training import TrainedModel

MANIFEST = "manifest.txt"
_FORMAT = "dyntex-model-1"


def _layer_arrays(prefix: str, layers: list[ConvLayer]):
    for i, layer in enumerate(layers):
        yield f"{prefix}{i}.weight", layer.weight.data
        yield f"{prefix}{i}.bias", layer.bias.data
        if layer.has_bn:
            yield f"{prefix}{i}.gamma", layer.gamma.data
            yield f"{prefix}{i}.beta", layer.beta.data
            yield f"{prefix}{i}.bn_mean", layer.bn.mean
            yield f"{prefix}{i}.bn_var", layer.bn.var


def _scale_arrays(model: ScaleModel):
    yield from _layer_arrays("gen", model.generator)
    yield from _layer_arrays("disc", model.discriminator)
    if model.rec_noise is not None:
        yield "rec_noise", model.rec_noise


def save_model(model: TrainedModel, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    lines = [
        f"format = {_FORMAT}",
        f"num_scales = {model.num_scales}",
        "schedule_dims = " + ",".join(f"{h}x{w}" for h, w in model.schedule.dims),
        f"schedule_r = {model.schedule.r!r}",
        "noise_amp = " + ",".join(repr(float(s.noise_amp)) for s in model.scales),
    ]
    lines.extend(config_lines(model.config))
    for n, scale in enumerate(model.scales):
        blob_name = f"scale_{n:02d}.bin"
        names = []
        chunks = []
        for name, arr in _scale_arrays(scale):
            arr = np.ascontiguousarray(arr, dtype="<f4")
            names.append(name + ":" + ",".join(str(d) for d in arr.shape))
            chunks.append(arr.tobytes())
        lines.append(f"scale{n:02d}.file = {blob_name}")
        lines.append(f"scale{n:02d}.arrays = " + ";".join(names))
        with open(os.path.join(out_dir, blob_name), "wb") as f:
            f.write(b"".join(chunks))
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def _parse_manifest(path) -> dict:
    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as e:
        raise DataError(f"cannot read model manifest {path}: {e}") from e
    entries = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or "=" not in line:
            continue
        key, _, val = line.partition("=")
        entries[key.strip()] = val.strip()
    if entries.get("format") != _FORMAT:
        raise DataError(
            f"{path} is not a {_FORMAT} manifest (format = {entries.get('format')!r})"
        )
    return entries


def load_model(model_dir) -> TrainedModel:
    """Rebuild a TrainedModel from save_model output, bit-exactly."""
    manifest_path = os.path.join(model_dir, MANIFEST)
    entries = _parse_manifest(manifest_path)
    cfg = config_from_lines(
        line for line in open(manifest_path, encoding="utf-8")
    )
    num_scales = int(entries["num_scales"])
    dims = tuple(
        tuple(int(d) for d in part.split("x"))
        for part in entries["schedule_dims"].split(",")
    )
    schedule = ScaleSchedule(dims=dims, r=float(entries["schedule_r"]))
    amps = [float(a) for a in entries["noise_amp"].split(",")]

    scales = []
    for n in range(num_scales):
        decls = entries.get(f"scale{n:02d}.arrays")
        blob_name = entries.get(f"scale{n:02d}.file")
        if decls is None or blob_name is None:
            raise DataError(f"manifest is missing scale {n}")
        try:
            blob = open(os.path.join(model_dir, blob_name), "rb").read()
        except OSError as e:
            raise DataError(f"cannot read {blob_name}: {e}") from e
        arrays = {}
        offset = 0
        for decl in decls.split(";"):
            name, _, shape_s = decl.partition(":")
            shape = tuple(int(d) for d in shape_s.split(","))
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            arrays[name] = arr.reshape(shape).copy()
            offset += count * 4
        if offset != len(blob):
            raise DataError(
                f"{blob_name} has {len(blob)} bytes but manifest declares {offset}"
            )
        scales.append(_build_scale(arrays, amps[n], cfg))
    return TrainedModel(schedule=schedule, scales=scales, config=cfg)


def _build_layers(prefix: str, arrays: dict, cfg) -> list[ConvLayer]:
    layers = []
    i = 0
    while f"{prefix}{i}.weight" in arrays:
        weight = Tensor(arrays[f"{prefix}{i}.weight"], requires_grad=True)
        bias = Tensor(arrays[f"{prefix}{i}.bias"], requires_grad=True)
        if f"{prefix}{i}.gamma" in arrays:
            bn = BatchNormState(len(arrays[f"{prefix}{i}.gamma"]), cfg.bn_momentum)
            bn.mean = arrays[f"{prefix}{i}.bn_mean"]
            bn.var = arrays[f"{prefix}{i}.bn_var"]
            layers.append(
                ConvLayer(
                    weight=weight,
                    bias=bias,
                    gamma=Tensor(arrays[f"{prefix}{i}.gamma"], requires_grad=True),
                    beta=Tensor(arrays[f"{prefix}{i}.beta"], requires_grad=True),
                    bn=bn,
                )
            )
        else:
            layers.append(ConvLayer(weight=weight, bias=bias))
        i += 1
    if not layers:
        raise DataError(f"model has no {prefix} layers")
    return layers


def _build_scale(arrays: dict, noise_amp: float, cfg) -> ScaleModel:
    return ScaleModel(
        generator=_build_layers("gen", arrays, cfg),
        discriminator=_build_layers("disc", arrays, cfg),
        rec_noise=arrays.get("rec_noise"),
        noise_amp=noise_amp,
        config=cfg,
    )

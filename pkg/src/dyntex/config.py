"""Training configuration: every knob the pipeline has, pinned to defaults.

Two profiles ship with the package. "full" is the production-sized setup
(32 hidden channels, 3 critic + 3 generator updates per iteration, 2000
iterations per scale, reconstruction weight 10). "desk" is the test profile
sized so a complete run finishes in minutes on one CPU core: 12 hidden
channels, 1+1 updates, 500 iterations, and a reconstruction weight of 50 --
with single updates the adversarial gradients otherwise swamp the
reconstruction term within the shortened budget. The trade is width, update
counts and loss balance for wall time, never architecture: depth, kernels
and the 11x11x11 critic receptive field are identical in both profiles.

Config files are flat ``key = value`` text; '#' starts a comment. Any CLI
flag overrides the file value, which overrides the profile default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import DataError


@dataclass
class TrainConfig:
    # data
    clip_len: int = 16            # frames per training window
    coarsest: int = 25            # coarsest scale height in px
    finest: int = 150             # finest scale height in px
    num_scales: int = 8
    # architecture (shared by generator and critic)
    hidden_channels: int = 32
    num_layers: int = 5
    kernel: int = 3
    lrelu_slope: float = 0.2
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1
    # optimization
    steps_per_scale: int = 2000
    d_steps: int = 3
    g_steps: int = 3
    lr: float = 5e-4
    lr_decay: float = 0.1
    lr_decay_at: float = 0.8      # fraction of steps_per_scale
    beta1: float = 0.5
    beta2: float = 0.999
    lambda_gp: float = 10.0
    eta_rec: float = 10.0
    # data update schedule; update_period = 0 disables updates entirely
    update_period: int = 100
    update_stride: int = 8
    seed: int = 0
    profile: str = "full"

    def validate(self) -> "TrainConfig":
        if self.clip_len < 1:
            raise ValueError("clip_len must be >= 1")
        if self.num_scales < 1:
            raise ValueError("num_scales must be >= 1")
        if self.num_scales > 1 and self.coarsest >= self.finest:
            raise ValueError("coarsest must be smaller than finest")
        if self.num_layers < 2:
            raise ValueError("num_layers must be >= 2")
        if self.kernel % 2 == 0 or self.kernel < 1:
            raise ValueError("kernel must be odd and positive")
        if self.update_period < 0 or self.update_stride < 1:
            raise ValueError("update_period must be >= 0 and update_stride >= 1")
        if self.d_steps < 1 or self.g_steps < 1 or self.steps_per_scale < 1:
            raise ValueError("step counts must be >= 1")
        return self


def full_config(**overrides) -> TrainConfig:
    return TrainConfig(profile="full", **overrides).validate()


def desk_config(**overrides) -> TrainConfig:
    base = dict(
        hidden_channels=12,
        steps_per_scale=500,
        d_steps=1,
        g_steps=1,
        eta_rec=50.0,
        coarsest=12,
        finest=48,
        num_scales=3,
        profile="desk",
    )
    base.update(overrides)
    return TrainConfig(**base).validate()


def config_from_profile(profile: str, **overrides) -> TrainConfig:
    if profile == "full":
        return full_config(**overrides)
    if profile == "desk":
        return desk_config(**overrides)
    raise DataError(f"unknown profile {profile!r}; expected 'full' or 'desk'")


_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _parse_value(key: str, raw: str):
    typ = _FIELD_TYPES[key]
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines into a TrainConfig override dict."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELD_TYPES:
            raise DataError(f"{source}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = _parse_value(key, raw)
        except ValueError as e:
            raise DataError(f"{source}:{lineno}: bad value for {key}: {e}") from e
    return out


def load_config_file(path) -> dict:
    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as e:
        raise DataError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text, source=str(path))


def resolve_config(
    profile: str = "full", file_overrides: dict | None = None, **cli_overrides
) -> TrainConfig:
    """Profile defaults, then config-file values, then explicit overrides."""
    merged = dict(file_overrides or {})
    merged.update({k: v for k, v in cli_overrides.items() if v is not None})
    merged.pop("profile", None)
    return config_from_profile(profile, **merged)


def config_lines(cfg: TrainConfig, prefix: str = "config.") -> list[str]:
    """The full resolved configuration as ``key = value`` lines."""
    return [
        f"{prefix}{f.name} = {getattr(cfg, f.name)}" for f in fields(TrainConfig)
    ]


def config_from_lines(lines, prefix: str = "config.") -> TrainConfig:
    overrides = {}
    for line in lines:
        line = line.strip()
        if not line.startswith(prefix) or "=" not in line:
            continue
        key, _, raw = line.partition("=")
        key = key.strip()[len(prefix):]
        if key in _FIELD_TYPES:
            if key == "profile":
                overrides[key] = raw.strip()
            else:
                overrides[key] = _parse_value(key, raw.strip())
    profile = overrides.pop("profile", "full")
    cfg = TrainConfig(profile=profile)
    return replace(cfg, **overrides).validate()

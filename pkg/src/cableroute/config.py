"""Dataclass configs for the simulator, networks, training and evaluation.

All knobs live here so that a single JSON file (see `load_config`) can
override any of them.  Config hashes feed dataset manifests and result
files, which keeps every reported number reproducible from
(seed, config hash, checkpoint hash).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field


@dataclass
class SimConfig:
    # workspace / time base
    workspace: float = 1.0            # square table side, meters
    dt: float = 0.2                   # 5 Hz control
    noise_sigma: float = 0.005        # actuation noise, m/s per twist component

    # cable
    n_nodes: int = 76
    rest_length: float = 0.0125
    bend_limit_factor: float = 1.8
    bend_stiffness: float = 0.1
    relax_iters: int = 30
    cable_radius: float = 0.003
    fixed_end: tuple = (0.10, 0.42)
    slip_stretch: float = 1.15        # local strain at the fingers that sheds the grasp

    # clips
    slot_width: float = 0.01
    wall_length: float = 0.04
    wall_thickness: float = 0.018   # > max segment span so cable cannot tunnel a wall
    retention_half: float = 0.01      # half-extent of the interior retention rect
    region_w: float = 0.125
    region_h: float = 0.15
    region_gap: float = 0.075
    region0_x: float = 0.25
    region_y: float = 0.35
    clip_yaw_max_deg: float = 45.0

    # gripper
    v_max: float = 0.1                # m/s per linear component
    wz_max: float = 0.5               # rad/s
    z_max: float = 0.08
    z_clear: float = 0.02             # below this the gripper engages the table plane
    z_grasp: float = 0.012            # must be this low to close on the cable
    z_stage: float = 0.035
    z_engage: float = 0.008
    grasp_radius: float = 0.02
    gripper_radius: float = 0.002
    lift_radius: float = 0.04         # lifted-cable exemption radius around a high gripper

    # task geometry
    init_box_half: float = 0.05       # half side of the reset-pose box
    init_box_front: float = 0.05      # box center distance in front of the slot mouth
    init_z_jitter: float = 0.01
    init_yaw_jitter_deg: float = 45.0
    marker_tail: float = 0.03         # grasp point arc margin past the clip exit
    marker_halfwidth: int = 2         # marker span = 2*halfwidth+1 nodes
    chain_slack: float = 1.10         # arc budget factor over straight-line chain
    perturb_pull: float = 0.08

    # budgets
    route_max_steps: int = 50
    primitive_budget_per_clip: int = 12

    @property
    def bend_limit(self) -> float:
        return self.bend_limit_factor * self.rest_length

    @property
    def cable_length(self) -> float:
        return (self.n_nodes - 1) * self.rest_length

    def region_box(self, i: int) -> tuple:
        """(xmin, ymin, xmax, ymax) of clip region i."""
        x0 = self.region0_x + i * (self.region_w + self.region_gap)
        return (x0, self.region_y, x0 + self.region_w, self.region_y + self.region_h)


@dataclass
class RenderConfig:
    wrist_size: int = 32
    wrist_window: float = 0.40        # meters on a side, centered at the gripper
    side_size: int = 64
    falloff_cells: float = 1.0        # anti-alias band width in cells
    gripper_footprint: float = 0.02   # disc radius drawn into the side clip channel


@dataclass
class NetConfig:
    conv_channels: tuple = (8, 16)
    wrist_embed: int = 64
    side_embed: int = 64
    z_embed: int = 16
    history_embed: int = 16
    trunk_width: int = 128
    embed_dim: int = 4                # word-embedding width for primitive tokens
    vocab: int = 5                    # pad + 4 primitives
    history_slots: int = 6
    log_std_min: float = -5.0
    log_std_max: float = 2.0


@dataclass
class TrainConfig:
    lr: float = 3e-4
    weight_decay: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.99
    batch_size: int = 128
    epochs: int = 50
    warmup_epochs: int = 0
    augment: bool = True
    augment_n_ops: int = 2
    augment_strength: int = 9
    seed: int = 0


def default_train_low() -> TrainConfig:
    return TrainConfig(batch_size=128, epochs=50, augment=True)


def default_train_high() -> TrainConfig:
    return TrainConfig(batch_size=64, epochs=60, augment=True)


def default_finetune() -> TrainConfig:
    return TrainConfig(batch_size=64, epochs=50, warmup_epochs=5, augment=False)


@dataclass
class DataConfig:
    n_low_demos: int = 600
    recovery_fraction: float = 0.42   # 600/1442 of the full-scale collection
    n_high_episodes: int = 120
    relabel_min: int = 3
    relabel_max: int = 5


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    decision_timeout: float = 300.0
    protocol_version: int = 1


@dataclass
class Config:
    sim: SimConfig = field(default_factory=SimConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    net: NetConfig = field(default_factory=NetConfig)
    train_low: TrainConfig = field(default_factory=default_train_low)
    train_high: TrainConfig = field(default_factory=default_train_high)
    finetune: TrainConfig = field(default_factory=default_finetune)
    data: DataConfig = field(default_factory=DataConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    seed: int = 0


class ConfigError(ValueError):
    """Raised for unknown keys or malformed config files (CLI exit code 2)."""


def _apply(obj, overrides: dict, path: str):
    names = {f.name for f in dataclasses.fields(obj)}
    for key, val in overrides.items():
        if key not in names:
            raise ConfigError(f"unknown config key: {path}{key}")
        cur = getattr(obj, key)
        if dataclasses.is_dataclass(cur):
            if not isinstance(val, dict):
                raise ConfigError(f"expected object for {path}{key}")
            _apply(cur, val, f"{path}{key}.")
        else:
            if isinstance(cur, tuple) and isinstance(val, list):
                val = tuple(val)
            setattr(obj, key, val)


def load_config(path=None, overrides: dict | None = None) -> Config:
    """Build a Config from defaults, an optional JSON file, then overrides."""
    cfg = Config()
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be an object: {path}")
        _apply(cfg, data, "")
    if overrides:
        _apply(cfg, overrides, "")
    validate(cfg)
    return cfg


def validate(cfg: Config):
    s = cfg.sim
    if s.slot_width <= 2 * s.cable_radius:
        raise ConfigError("slot_width must exceed cable diameter")
    if not (0 <= math.degrees(0.0) <= 360):  # pragma: no cover - sanity anchor
        raise ConfigError("bad math")
    if cfg.train_low.epochs <= 0 or cfg.train_low.batch_size <= 0:
        raise ConfigError("train_low epochs/batch must be positive")
    if cfg.train_high.epochs <= 0 or cfg.train_high.batch_size <= 0:
        raise ConfigError("train_high epochs/batch must be positive")


def to_dict(obj) -> dict:
    return dataclasses.asdict(obj)


def config_hash(obj) -> str:
    """Stable short hash of any config dataclass."""
    blob = json.dumps(dataclasses.asdict(obj), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]

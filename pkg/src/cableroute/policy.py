"""The two learned policies: low-level routing and high-level primitive selection.

Low level: wrist grid + relative height -> squashed Gaussian over the 4-D
twist (components in (-1,1), scaled to physical bounds at actuation).
High level: frozen wrist encoder + side encoder + embedded primitive
history + height -> categorical over the four primitives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetConfig, SimConfig
from .geometry import Twist4
from .nn.heads import clamp_log_std, softmax, tanh_gaussian_sample
from .nn.layers import Conv2d, Dense, Embedding, Flatten, ReLU

PAD, PICKUP, ROUTE, PERTURB, GO_NEXT = 0, 1, 2, 3, 4
PRIMITIVE_NAMES = {PICKUP: "pickup", ROUTE: "route", PERTURB: "perturb",
                   GO_NEXT: "go_next"}
N_PRIMITIVES = 4


class InvalidPrimitiveId(ValueError):
    pass


class EncoderShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class HistoryBuffer:
    """Six most recent primitive ids for the current clip, most recent first."""

    slots: tuple = (0, 0, 0, 0, 0, 0)

    def push(self, primitive_id: int) -> "HistoryBuffer":
        if primitive_id not in (PICKUP, ROUTE, PERTURB, GO_NEXT):
            raise InvalidPrimitiveId(primitive_id)
        return HistoryBuffer((primitive_id,) + self.slots[:5])

    def reset(self) -> "HistoryBuffer":
        return HistoryBuffer()

    def as_array(self) -> np.ndarray:
        return np.array(self.slots, dtype=np.int64)


def history_push(buffer: HistoryBuffer, primitive_id: int) -> HistoryBuffer:
    return buffer.push(primitive_id)


def history_reset(buffer: HistoryBuffer) -> HistoryBuffer:
    return buffer.reset()


class GridEncoder:
    """Two stride-2 convs then a dense embedding."""

    def __init__(self, in_size: int, net: NetConfig, embed: int,
                 rng: np.random.Generator):
        c1, c2 = net.conv_channels
        self.conv1 = Conv2d(2, c1, rng)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(c1, c2, rng)
        self.relu2 = ReLU()
        self.flat = Flatten()
        feat = c2 * (in_size // 4) * (in_size // 4)
        self.dense = Dense(feat, embed, rng)
        self.relu3 = ReLU()
        self.in_size = in_size
        self._layers = [self.conv1, self.relu1, self.conv2, self.relu2,
                        self.flat, self.dense, self.relu3]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self._layers:
            x = layer.forward(x)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self._layers):
            dy = layer.backward(dy)
        return dy

    def params(self, prefix: str) -> dict:
        out = {}
        for name, layer in (("conv1", self.conv1), ("conv2", self.conv2),
                            ("dense", self.dense)):
            for pname, p in layer.params().items():
                out[f"{prefix}.{name}.{pname}"] = p
        return out


def _assign(params_dict: dict, loaded: dict):
    for name, p in params_dict.items():
        if name not in loaded:
            raise EncoderShapeMismatch(f"missing tensor {name}")
        src = loaded[name]
        if src.value.shape != p.value.shape:
            raise EncoderShapeMismatch(
                f"{name}: {src.value.shape} != {p.value.shape}")
        p.value[...] = src.value
        p.trainable = src.trainable


class LowLevelPolicy:
    def __init__(self, net: NetConfig | None = None, sim: SimConfig | None = None,
                 seed: int = 0):
        self.net = net or NetConfig()
        self.sim = sim or SimConfig()
        rng = np.random.default_rng(seed)
        n = self.net
        self.encoder = GridEncoder(32, n, n.wrist_embed, rng)
        self.z_proj = Dense(1, n.z_embed, rng)
        self.trunk1 = Dense(n.wrist_embed + n.z_embed, n.trunk_width, rng)
        self.r1 = ReLU()
        self.trunk2 = Dense(n.trunk_width, n.trunk_width, rng)
        self.r2 = ReLU()
        self.head = Dense(n.trunk_width, 8, rng, zero_init=True)
        self._mask = None

    # -- batch forward/backward -------------------------------------------

    def forward(self, wrist: np.ndarray, z: np.ndarray):
        e = self.encoder.forward(wrist)
        zf = self.z_proj.forward(z.reshape(-1, 1))
        h = np.concatenate([e, zf], axis=1)
        t = self.r2.forward(self.trunk2.forward(
            self.r1.forward(self.trunk1.forward(h))))
        out = self.head.forward(t)
        mean = out[:, :4]
        log_std, self._mask = clamp_log_std(out[:, 4:], self.net.log_std_min,
                                            self.net.log_std_max)
        self._split = e.shape[1]
        return mean, log_std

    def backward(self, dmean: np.ndarray, dlogstd: np.ndarray):
        dout = np.concatenate([dmean, np.where(self._mask, dlogstd, 0.0)], axis=1)
        dt = self.head.backward(dout)
        dh = self.trunk1.backward(self.r1.backward(
            self.trunk2.backward(self.r2.backward(dt))))
        self.encoder.backward(dh[:, :self._split])
        self.z_proj.backward(dh[:, self._split:])

    def params(self) -> dict:
        out = self.encoder.params("wrist_enc")
        for name, layer in (("z_proj", self.z_proj), ("trunk1", self.trunk1),
                            ("trunk2", self.trunk2), ("head", self.head)):
            for pname, p in layer.params().items():
                out[f"{name}.{pname}"] = p
        return out

    def zero_grad(self):
        for p in self.params().values():
            p.grad[:] = 0.0

    # -- acting -------------------------------------------------------------

    def act(self, obs, rng: np.random.Generator | None = None,
            deterministic: bool = False) -> Twist4:
        mean, log_std = self.forward(obs.wrist[None], np.array([obs.z]))
        if deterministic:
            a = np.tanh(mean[0])
        else:
            a = tanh_gaussian_sample(mean, log_std, rng)[0]
        return denormalize_action(a, self.sim)

    def arch(self) -> dict:
        return {"kind": "low", "wrist_size": 32,
                "conv_channels": list(self.net.conv_channels),
                "trunk_width": self.net.trunk_width,
                "wrist_embed": self.net.wrist_embed, "z_embed": self.net.z_embed}

    def load_params(self, loaded: dict):
        _assign(self.params(), loaded)


class HighLevelPolicy:
    def __init__(self, net: NetConfig | None = None, seed: int = 0,
                 history_ablation: bool = False):
        self.net = net or NetConfig()
        self.history_ablation = history_ablation
        rng = np.random.default_rng(seed + 1)
        n = self.net
        self.wrist_enc = GridEncoder(32, n, n.wrist_embed, rng)
        self.side_enc = GridEncoder(64, n, n.side_embed, rng)
        self.embedding = Embedding(n.vocab, n.embed_dim, rng)
        self.hist_proj = Dense(n.history_slots * n.embed_dim, n.history_embed, rng)
        self.z_proj = Dense(1, n.z_embed, rng)
        width = n.wrist_embed + n.side_embed + n.history_embed + n.z_embed
        self.trunk1 = Dense(width, n.trunk_width, rng)
        self.r1 = ReLU()
        self.trunk2 = Dense(n.trunk_width, n.trunk_width, rng)
        self.r2 = ReLU()
        self.head = Dense(n.trunk_width, N_PRIMITIVES, rng, zero_init=True)

    @staticmethod
    def from_low(low: LowLevelPolicy, seed: int = 0,
                 history_ablation: bool = False) -> "HighLevelPolicy":
        """Reuse the routing policy's wrist encoder, frozen."""
        high = HighLevelPolicy(low.net, seed=seed, history_ablation=history_ablation)
        src = low.encoder.params("wrist_enc")
        dst = high.wrist_enc.params("wrist_enc")
        for name, p in dst.items():
            if src[name].value.shape != p.value.shape:
                raise EncoderShapeMismatch(name)
            p.value[...] = src[name].value
            p.trainable = False
        return high

    def forward(self, wrist, side, hist, z):
        e_w = self.wrist_enc.forward(wrist)
        e_s = self.side_enc.forward(side)
        emb = self.hist_proj.forward(self.embedding.forward(hist))
        if self.history_ablation:
            emb = emb * 0.0
        zf = self.z_proj.forward(np.asarray(z).reshape(-1, 1))
        h = np.concatenate([e_w, e_s, emb, zf], axis=1)
        self._splits = np.cumsum([e_w.shape[1], e_s.shape[1], emb.shape[1]])
        t = self.r2.forward(self.trunk2.forward(
            self.r1.forward(self.trunk1.forward(h))))
        return self.head.forward(t)

    def backward(self, dlogits: np.ndarray):
        dt = self.head.backward(dlogits)
        dh = self.trunk1.backward(self.r1.backward(
            self.trunk2.backward(self.r2.backward(dt))))
        s1, s2, s3 = self._splits
        self.wrist_enc.backward(dh[:, :s1])
        self.side_enc.backward(dh[:, s1:s2])
        demb = dh[:, s2:s3]
        if self.history_ablation:
            demb = demb * 0.0
        self.embedding.backward(self.hist_proj.backward(demb))
        self.z_proj.backward(dh[:, s3:])

    def params(self) -> dict:
        out = self.wrist_enc.params("wrist_enc")
        out.update(self.side_enc.params("side_enc"))
        out["embedding.table"] = self.embedding.table
        for name, layer in (("hist_proj", self.hist_proj), ("z_proj", self.z_proj),
                            ("trunk1", self.trunk1), ("trunk2", self.trunk2),
                            ("head", self.head)):
            for pname, p in layer.params().items():
                out[f"{name}.{pname}"] = p
        return out

    def zero_grad(self):
        for p in self.params().values():
            p.grad[:] = 0.0

    def select(self, obs, history: HistoryBuffer):
        """Argmax primitive id (1..4) plus the full distribution."""
        logits = self.forward(obs.wrist[None], obs.side[None],
                              history.as_array()[None], np.array([obs.z]))
        probs = softmax(logits)[0]
        return int(np.argmax(probs)) + 1, probs

    def arch(self) -> dict:
        return {"kind": "high", "wrist_size": 32, "side_size": 64,
                "conv_channels": list(self.net.conv_channels),
                "trunk_width": self.net.trunk_width,
                "history_ablation": self.history_ablation}

    def load_params(self, loaded: dict):
        _assign(self.params(), loaded)


def low_act(policy: LowLevelPolicy, obs, rng=None, deterministic=False) -> Twist4:
    return policy.act(obs, rng=rng, deterministic=deterministic)


def high_select(policy: HighLevelPolicy, obs, history: HistoryBuffer):
    return policy.select(obs, history)


def action_scale(sim: SimConfig) -> np.ndarray:
    return np.array([sim.v_max, sim.v_max, sim.v_max, sim.wz_max])


def normalize_action(twist: Twist4, sim: SimConfig, limit: float = 0.995) -> np.ndarray:
    """Physical twist -> (-1,1)^4 label, clipped inside the open interval."""
    return np.clip(twist.as_array() / action_scale(sim), -limit, limit)


def denormalize_action(a: np.ndarray, sim: SimConfig) -> Twist4:
    return Twist4.from_array(a * action_scale(sim))

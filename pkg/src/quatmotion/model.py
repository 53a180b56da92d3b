"""Music-conditioned motion prediction model.

Two self-attention encoders (motion and audio streams, rotary position
embedding inside the attention, learned absolute position tables at the
input) feed a cross-modal decoder whose attention is quaternion rotary:
decoder queries come from the encoded motion, keys and values from the
concatenation of encoded motion and audio along time. A readout head
maps the decoder state at the last seed frame to N future motion frames.

Inference is autoregressive at fixed window sizes: predict N frames, keep
the first, slide both windows by one frame.

Everything runs on the autodiff tape so a scalar loss differentiates
through the full stack; plain-array wrappers around single sequences
provide the inference surface.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import (AudioTooShort, ChannelMismatch, DimensionMismatch,
                     HeadDimNotQuaternion, MalformedFile)
from .features import AUDIO_DIMS, MOTION_DIMS, atomic_write_text
from .spe import RotarySchedule, angle_tables

CHECKPOINT_FORMAT = "qean-ckpt-v1"

TWO_PI = 2.0 * math.pi


@dataclass
class ModelConfig:
    """Architecture and window geometry. Defaults are the desk scale."""

    d_model: int = 64
    heads: int = 4
    encoder_layers: int = 2
    decoder_layers: int = 2
    periods: int = 2
    seed_motion_frames: int = 30
    audio_frames: int = 60
    future_frames: int = 5
    fps: int = 60
    ff_mult: int = 4
    use_learned_abs_pos: bool = True
    use_spe: bool = True
    use_qra: bool = True
    qra_keys_use_axis_i: bool = False
    rotary_base: float = 10000.0

    def __post_init__(self):
        if self.d_model < 1 or self.heads < 1 or self.d_model % self.heads != 0:
            raise DimensionMismatch(
                f"d_model {self.d_model} must be a positive multiple of heads {self.heads}")
        dh = self.d_model // self.heads
        if self.use_qra and dh % 4 != 0:
            raise HeadDimNotQuaternion(
                f"head dim {dh} must be divisible by 4 for quaternion attention")
        if self.use_spe and dh % 2 != 0:
            raise DimensionMismatch(f"head dim {dh} must be even for pair rotation")
        if self.audio_frames < self.seed_motion_frames:
            raise ValueError("audio window must be at least as long as the motion window")
        if min(self.encoder_layers, self.decoder_layers - 1, self.periods - 1,
               self.future_frames - 1, self.seed_motion_frames - 1, self.fps - 1,
               self.ff_mult - 1) < 0:
            raise ValueError("config counts out of range")

    @property
    def d_head(self) -> int:
        return self.d_model // self.heads

    @staticmethod
    def full_scale() -> "ModelConfig":
        # 800/16 gives 50-dim heads, which cannot be grouped into
        # quaternions, so the full-scale shape check runs the canonical
        # cross-attention fallback.
        return ModelConfig(d_model=800, heads=16, seed_motion_frames=120,
                           audio_frames=240, future_frames=20, use_qra=False)


_STREAM_DIMS = {"audio": AUDIO_DIMS, "motion": MOTION_DIMS}


def init_weights(config: ModelConfig, rng: np.random.Generator) -> dict:
    """Seeded weight collection; draw order is fixed by construction."""
    w = {}
    d = config.d_model
    ff = config.ff_mult * d

    def param(name, value):
        w[name] = Tensor(value, requires_grad=True)

    def linear(name, fan_in, fan_out, bias=True):
        param(name + ".w", rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        if bias:
            param(name + ".b", np.zeros(fan_out))

    def norm(name):
        param(name + ".gamma", np.ones(d))
        param(name + ".beta", np.zeros(d))

    linear("embed.audio", AUDIO_DIMS, d)
    linear("embed.motion", MOTION_DIMS, d)
    if config.use_learned_abs_pos:
        param("pos.motion", 0.02 * rng.standard_normal((config.seed_motion_frames, d)))
        param("pos.audio", 0.02 * rng.standard_normal((config.audio_frames, d)))

    for stream in ("motion", "audio"):
        for layer in range(config.encoder_layers):
            prefix = f"enc.{stream}.{layer}"
            norm(prefix + ".ln1")
            for proj in ("wq", "wk", "wv", "wo"):
                param(f"{prefix}.attn.{proj}", rng.standard_normal((d, d)) / np.sqrt(d))
            norm(prefix + ".ln2")
            linear(prefix + ".ff.fc1", d, ff)
            linear(prefix + ".ff.fc2", ff, d)
        if config.encoder_layers > 0:
            norm(f"enc.{stream}.norm")

    dh = config.d_head
    for layer in range(config.decoder_layers):
        prefix = f"dec.{layer}"
        norm(prefix + ".ln1")
        for proj in ("wq", "wk", "wv", "wo"):
            param(f"{prefix}.attn.{proj}", rng.standard_normal((d, d)) / np.sqrt(d))
        if config.use_qra:
            for kern in ("omega_q", "theta_q", "omega_k", "theta_k"):
                param(f"{prefix}.attn.{kern}.w",
                      0.05 * rng.standard_normal((config.heads, config.periods, dh, 3)))
                param(f"{prefix}.attn.{kern}.b",
                      np.zeros((config.heads, config.periods)))
        norm(prefix + ".ln2")
        linear(prefix + ".ff.fc1", d, ff)
        linear(prefix + ".ff.fc2", ff, d)

    linear("out", d, config.future_frames * MOTION_DIMS)
    return w


def _heads_split(t: Tensor, heads: int) -> Tensor:
    b, steps, d = t.shape
    return ag.transpose(ag.reshape(t, (b, steps, heads, d // heads)), (0, 2, 1, 3))


def _heads_merge(t: Tensor) -> Tensor:
    b, h, steps, dh = t.shape
    return ag.reshape(ag.transpose(t, (0, 2, 1, 3)), (b, steps, h * dh))


def _layer_norm(x: Tensor, name: str, weights: dict) -> Tensor:
    return ag.layer_norm(x, weights[name + ".gamma"], weights[name + ".beta"])


def _feed_forward(x: Tensor, prefix: str, weights: dict) -> Tensor:
    h = ag.relu(ag.matmul(x, weights[prefix + ".fc1.w"]) + weights[prefix + ".fc1.b"])
    return ag.matmul(h, weights[prefix + ".fc2.w"]) + weights[prefix + ".fc2.b"]


def _embed(x: Tensor, which: str, weights: dict, config: ModelConfig) -> Tensor:
    if x.shape[-1] != _STREAM_DIMS[which]:
        raise ChannelMismatch(
            f"{which} stream must have {_STREAM_DIMS[which]} channels, got {x.shape[-1]}")
    h = ag.matmul(x, weights[f"embed.{which}.w"]) + weights[f"embed.{which}.b"]
    if config.use_learned_abs_pos:
        table = weights[f"pos.{which}"]
        steps = h.shape[-2]
        if steps > table.shape[0]:
            raise DimensionMismatch(
                f"{which} window of {steps} frames exceeds the {table.shape[0]}-entry position table")
        h = h + table[:steps]
    return h


def _self_attention(h: Tensor, prefix: str, weights: dict, config: ModelConfig) -> Tensor:
    dh = config.d_head
    q = _heads_split(ag.matmul(h, weights[prefix + ".wq"]), config.heads)
    k = _heads_split(ag.matmul(h, weights[prefix + ".wk"]), config.heads)
    v = _heads_split(ag.matmul(h, weights[prefix + ".wv"]), config.heads)
    if config.use_spe:
        sched = RotarySchedule(dh, config.rotary_base)
        co, si = angle_tables(h.shape[-2], sched)
        q = ag.rope_apply(q, co, si)
        k = ag.rope_apply(k, co, si)
    logits = ag.mul(ag.matmul(q, ag.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    mixed = _heads_merge(ag.matmul(ag.softmax_rows(logits), v))
    return ag.matmul(mixed, weights[prefix + ".wo"])


def _encode(h: Tensor, which: str, weights: dict, config: ModelConfig) -> Tensor:
    for layer in range(config.encoder_layers):
        prefix = f"enc.{which}.{layer}"
        h = h + _self_attention(_layer_norm(h, prefix + ".ln1", weights),
                                prefix + ".attn", weights, config)
        h = h + _feed_forward(_layer_norm(h, prefix + ".ln2", weights),
                              prefix + ".ff", weights)
    if config.encoder_layers > 0:
        # a zero-depth encoder stays the identity, so the closing norm
        # only exists when there are layers to stabilize
        h = _layer_norm(h, f"enc.{which}.norm", weights)
    return h


def _cross_attention(m_norm: Tensor, memory: Tensor, prefix: str,
                     weights: dict, config: ModelConfig) -> Tensor:
    heads, dh, periods = config.heads, config.d_head, config.periods
    q = _heads_split(ag.matmul(m_norm, weights[prefix + ".wq"]), heads)
    k = _heads_split(ag.matmul(memory, weights[prefix + ".wk"]), heads)
    v = _heads_split(ag.matmul(memory, weights[prefix + ".wv"]), heads)
    b, _, n, _ = q.shape
    m = k.shape[2]

    if config.use_qra:
        omega_q = ag.relu(ag.conv1d(q, weights[prefix + ".omega_q.w"],
                                    weights[prefix + ".omega_q.b"]))
        theta_q = ag.pi_tanh(ag.conv1d(q, weights[prefix + ".theta_q.w"],
                                       weights[prefix + ".theta_q.b"]))
        omega_k = ag.relu(ag.conv1d(k, weights[prefix + ".omega_k.w"],
                                    weights[prefix + ".omega_k.b"]))
        theta_k = ag.pi_tanh(ag.conv1d(k, weights[prefix + ".theta_k.w"],
                                       weights[prefix + ".theta_k.b"]))
        pos_q = TWO_PI * np.arange(n, dtype=np.float64) / n
        pos_k = TWO_PI * np.arange(m, dtype=np.float64) / m
        key_axis = "i" if config.qra_keys_use_axis_i else "j"
        q_slots = ag.reshape(q, (b, heads, n, dh // 4, 4))
        k_slots = ag.reshape(k, (b, heads, m, dh // 4, 4))
        total = None
        for p in range(periods):
            ang_q = omega_q[:, :, :, p] * Tensor(pos_q) + theta_q[:, :, :, p]
            ang_k = omega_k[:, :, :, p] * Tensor(pos_k) + theta_k[:, :, :, p]
            phi = ag.reshape(ag.quat_rotate(q_slots, ang_q, "i"), (b, heads, n, dh))
            psi = ag.reshape(ag.quat_rotate(k_slots, ang_k, key_axis), (b, heads, m, dh))
            sim = ag.matmul(phi, ag.transpose(psi, (0, 1, 3, 2)))
            total = sim if total is None else total + sim
        logits = ag.mul(total, 1.0 / (periods * math.sqrt(dh)))
    else:
        logits = ag.mul(ag.matmul(q, ag.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))

    mixed = _heads_merge(ag.matmul(ag.softmax_rows(logits), v))
    return ag.matmul(mixed, weights[prefix + ".wo"])


def _decode(h_motion: Tensor, h_audio: Tensor, weights: dict, config: ModelConfig) -> Tensor:
    memory = ag.concat([h_motion, h_audio], axis=1)
    state = h_motion
    for layer in range(config.decoder_layers):
        prefix = f"dec.{layer}"
        state = state + _cross_attention(_layer_norm(state, prefix + ".ln1", weights),
                                         memory, prefix + ".attn", weights, config)
        state = state + _feed_forward(_layer_norm(state, prefix + ".ln2", weights),
                                      prefix + ".ff", weights)
    last = state[:, -1, :]
    flat = ag.matmul(last, weights["out.w"]) + weights["out.b"]
    return ag.reshape(flat, (last.shape[0], config.future_frames, MOTION_DIMS))


def forward(weights: dict, config: ModelConfig, motion, audio) -> Tensor:
    """Batched prediction: (B, Tm, 219) + (B, Ta, 35) -> (B, N, 219) Tensor."""
    motion = motion if isinstance(motion, Tensor) else Tensor(motion)
    audio = audio if isinstance(audio, Tensor) else Tensor(audio)
    h_motion = _encode(_embed(motion, "motion", weights, config), "motion", weights, config)
    h_audio = _encode(_embed(audio, "audio", weights, config), "audio", weights, config)
    return _decode(h_motion, h_audio, weights, config)


# single-sequence array wrappers

def embed_stream(frames, which: str, weights: dict, config: ModelConfig) -> np.ndarray:
    """Per-frame linear embedding (+ learned position table) of one sequence."""
    if which not in _STREAM_DIMS:
        raise ValueError(f"which must be 'audio' or 'motion', got {which!r}")
    frames = np.asarray(frames, dtype=np.float64)
    return _embed(Tensor(frames[None]), which, weights, config).data[0]


def encode(hidden, which: str, weights: dict, config: ModelConfig) -> np.ndarray:
    """Self-attention encoder stack over one embedded sequence."""
    hidden = np.asarray(hidden, dtype=np.float64)
    return _encode(Tensor(hidden[None]), which, weights, config).data[0]


def cross_modal_decode(h_motion, h_audio, weights: dict, config: ModelConfig) -> np.ndarray:
    """Decode N future frames from encoded motion and audio sequences."""
    h_motion = np.asarray(h_motion, dtype=np.float64)
    h_audio = np.asarray(h_audio, dtype=np.float64)
    return _decode(Tensor(h_motion[None]), Tensor(h_audio[None]), weights, config).data[0]


def predict_future(weights: dict, config: ModelConfig, seed_motion, audio_window) -> np.ndarray:
    """Full pipeline on one (seed window, audio window) pair -> (N, 219)."""
    seed_motion = np.asarray(seed_motion, dtype=np.float64)
    audio_window = np.asarray(audio_window, dtype=np.float64)
    return forward(weights, config, seed_motion[None], audio_window[None]).data[0]


def autoregressive_generate(seed_motion, audio_features, steps: int,
                            weights: dict, config: ModelConfig) -> np.ndarray:
    """Keep-first sliding-window generation of `steps` motion frames."""
    seed_motion = np.asarray(seed_motion, dtype=np.float64)
    audio_features = np.asarray(audio_features, dtype=np.float64)
    if seed_motion.shape != (config.seed_motion_frames, MOTION_DIMS):
        raise DimensionMismatch(
            f"seed motion must be ({config.seed_motion_frames}, {MOTION_DIMS}), "
            f"got {seed_motion.shape}")
    if audio_features.ndim != 2 or audio_features.shape[1] != AUDIO_DIMS:
        raise ChannelMismatch(f"audio must have {AUDIO_DIMS} channels")
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    if steps == 0:
        return np.zeros((0, MOTION_DIMS), dtype=np.float64)
    needed = config.audio_frames + steps - 1
    if audio_features.shape[0] < needed:
        raise AudioTooShort(
            f"{steps} steps with a {config.audio_frames}-frame window need "
            f"{needed} audio frames, got {audio_features.shape[0]}")

    window = seed_motion.copy()
    produced = []
    for s in range(steps):
        pred = predict_future(weights, config,
                              window, audio_features[s:s + config.audio_frames])
        first = pred[0]
        produced.append(first)
        window = np.vstack([window[1:], first[None]])
    return np.array(produced)


# checkpoint I/O

def config_to_dict(config: ModelConfig) -> dict:
    return asdict(config)


def config_from_dict(doc: dict) -> ModelConfig:
    known = {f.name for f in fields(ModelConfig)}
    unknown = set(doc) - known
    if unknown:
        raise MalformedFile(f"unknown config keys: {sorted(unknown)}")
    return ModelConfig(**doc)


def save_checkpoint(path: str, weights: dict, config: ModelConfig):
    tensors = {}
    for name in sorted(weights):
        data = weights[name].data
        tensors[name] = {"shape": list(data.shape),
                         "values": [float(v) for v in data.reshape(-1)]}
    doc = {"format": CHECKPOINT_FORMAT,
           "config": config_to_dict(config),
           "tensors": tensors}
    atomic_write_text(path, json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_checkpoint(path: str):
    """Read a checkpoint back into (weights, config)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFile(f"cannot parse checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise MalformedFile(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    config = config_from_dict(doc.get("config", {}))
    weights = {}
    for name, entry in doc.get("tensors", {}).items():
        values = np.array(entry["values"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if values.size != int(np.prod(shape, dtype=np.int64)):
            raise MalformedFile(f"tensor {name} length does not match its shape")
        arr = values.reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise MalformedFile(f"tensor {name} contains non-finite values")
        weights[name] = Tensor(arr, requires_grad=True)
    return weights, config

"""Command line entry points.

Subcommands: verify, synth, train, generate, eval. Every command is
deterministic given its flags; the QEAN_SEED environment variable, when
set, overrides any seed a command would otherwise use.

Exit codes:
    0  success
    1  a verification check failed
    2  usage or configuration problem (bad flags, malformed files)
    3  runtime precondition violated (short audio, shape mismatch)
    4  metric precondition violated (too few items, no beats)
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import features as feat
from . import metrics as met
from . import model as mod
from . import training as trn
from . import verification
from .errors import (
    EmptyMotionBeats,
    EmptyMusicBeats,
    MalformedFile,
    MetaMismatch,
    QuatMotionError,
    TooFewFrames,
    TooFewItems,
)

_USAGE_ERRORS = (MalformedFile, MetaMismatch, ValueError)
_METRIC_ERRORS = (TooFewItems, TooFewFrames, EmptyMotionBeats, EmptyMusicBeats)


def _env_seed(default: int) -> int:
    raw = os.environ.get("QEAN_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise MalformedFile(f"QEAN_SEED must be an integer, got {raw!r}")


# ---------------------------------------------------------------- configs

_MODEL_FIELDS = {f.name: f.type for f in dataclasses.fields(mod.ModelConfig)}
_TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(trn.TrainConfig)}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "decay_steps":
        # "2000:1e-5,4000:1e-6"
        pairs = []
        for part in raw.split(","):
            if ":" not in part:
                raise MalformedFile(f"decay_steps entries need step:lr, got {part!r}")
            step, lr = part.split(":", 1)
            pairs.append((int(step), float(lr)))
        return tuple(pairs)
    hint = _MODEL_FIELDS.get(key) or _TRAIN_FIELDS.get(key)
    if hint is None:
        raise MalformedFile(f"unknown config key {key!r}")
    hint = str(hint)
    if "bool" in hint:
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise MalformedFile(f"{key} expects a boolean, got {raw!r}")
    if "int" in hint:
        return int(raw)
    return float(raw)


def _read_config_file(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise MalformedFile(f"cannot read config {path}: {exc}")
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise MalformedFile(f"{path}:{lineno}: expected key = value")
        key, raw = body.split("=", 1)
        out[key.strip()] = raw.strip()
    return out


def _build_configs(pairs: dict):
    model_kw, train_kw = {}, {}
    for key, raw in pairs.items():
        value = _parse_value(key, raw)
        if key in _MODEL_FIELDS:
            model_kw[key] = value
        else:
            train_kw[key] = value
    return mod.ModelConfig(**model_kw), trn.TrainConfig(**train_kw)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(f"{s}:{lr:.17g}" for s, lr in value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _echo_config(path: str, *configs):
    lines = []
    for config in configs:
        for f in dataclasses.fields(config):
            lines.append(f"{f.name} = {_format_value(getattr(config, f.name))}")
    feat.atomic_write_text(path, "\n".join(lines) + "\n")


# ------------------------------------------------------------ pair layout

def _discover_pairs(root: str) -> list:
    """A pair directory holds audio.csv + motion.csv. The data root is
    either one pair or a directory of pair subdirectories (sorted)."""
    if os.path.isfile(os.path.join(root, "audio.csv")):
        return [("", root)]
    if not os.path.isdir(root):
        raise MalformedFile(f"data directory {root} does not exist")
    found = []
    for name in sorted(os.listdir(root)):
        sub = os.path.join(root, name)
        if os.path.isfile(os.path.join(sub, "audio.csv")):
            found.append((name, sub))
    if not found:
        raise MalformedFile(f"no audio.csv found under {root}")
    return found


def _load_pair(path: str):
    audio, _ = feat.load_stream(os.path.join(path, "audio.csv"))
    motion, _ = feat.load_stream(os.path.join(path, "motion.csv"))
    return audio, motion


# ------------------------------------------------------------ subcommands

def cmd_verify(args) -> int:
    checks = verification.run(args.suite)
    print(verification.render(checks))
    return 0 if verification.all_passed(checks) else 1


def cmd_synth(args) -> int:
    seed = _env_seed(args.seed)
    audio, motion = feat.synth_pair(seed, args.seconds,
                                    beat_period_frames=args.beat_period)
    os.makedirs(args.out, exist_ok=True)
    frames = audio.shape[0]
    feat.save_stream(os.path.join(args.out, "audio.csv"), audio,
                     feat.StreamMeta("audio", feat.FPS, frames, feat.AUDIO_DIMS))
    feat.save_stream(os.path.join(args.out, "motion.csv"), motion,
                     feat.StreamMeta("motion", feat.FPS, frames, feat.MOTION_DIMS))
    feat.atomic_write_text(
        os.path.join(args.out, "params.cfg"),
        f"seed = {seed}\nseconds = {args.seconds:.17g}\n"
        f"beat_period_frames = {args.beat_period}\nfps = {feat.FPS}\n")
    print(f"wrote {frames}-frame pair to {args.out}")
    return 0


def cmd_train(args) -> int:
    pairs = _read_config_file(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise MalformedFile(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        pairs[key.strip()] = raw.strip()
    model_config, train_config = _build_configs(pairs)
    if "QEAN_SEED" in os.environ:
        train_config = dataclasses.replace(train_config, rng_seed=_env_seed(0))

    dataset = [_load_pair(path) for _, path in _discover_pairs(args.data)]
    weights = mod.init_weights(model_config, np.random.default_rng(train_config.rng_seed))

    os.makedirs(args.out, exist_ok=True)
    _echo_config(os.path.join(args.out, "config_used.cfg"), model_config, train_config)
    trace = trn.train(weights, dataset, train_config, model_config,
                      loss_csv_path=os.path.join(args.out, "loss.csv"),
                      checkpoint_path=os.path.join(args.out, "checkpoint.json"))
    if trace:
        print(f"step 0 loss {trace[0][2]:.6g}; "
              f"step {trace[-1][0]} loss {trace[-1][2]:.6g}")
    print(f"wrote checkpoint and loss curve to {args.out}")
    return 0


def cmd_generate(args) -> int:
    weights, config = mod.load_checkpoint(args.ckpt)
    audio, audio_meta = feat.load_stream(args.music)
    if audio_meta.kind != "audio":
        raise MetaMismatch(f"{args.music} is a {audio_meta.kind} stream, need audio")
    seed_motion, motion_meta = feat.load_stream(args.seed_motion)
    if motion_meta.kind != "motion":
        raise MetaMismatch(f"{args.seed_motion} is a {motion_meta.kind} stream, need motion")

    generated = mod.autoregressive_generate(
        seed_motion[:config.seed_motion_frames], audio, args.frames, weights, config)
    os.makedirs(args.out, exist_ok=True)
    feat.save_stream(os.path.join(args.out, "motion.csv"), generated,
                     feat.StreamMeta("motion", config.fps, generated.shape[0],
                                     feat.MOTION_DIMS))
    feat.atomic_write_text(
        os.path.join(args.out, "params.cfg"),
        f"ckpt = {args.ckpt}\nmusic = {args.music}\n"
        f"seed_motion = {args.seed_motion}\nframes = {args.frames}\n")
    print(f"wrote {generated.shape[0]} generated frames to {args.out}")
    return 0


def _feature_sets(motions):
    dyn = met.FeatureSet(np.stack([met.dynamic_features(m) for m in motions]))
    geo = met.FeatureSet(np.stack([met.geometric_features(m) for m in motions]))
    return dyn, geo


def cmd_eval(args) -> int:
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = set(wanted) - {"fid", "diversity", "beat"}
    if unknown:
        raise MalformedFile(f"unknown metrics: {sorted(unknown)}")

    ref_pairs = _discover_pairs(args.ref)
    ref_motions = []
    ref_audio = {}
    for name, path in ref_pairs:
        audio, motion = _load_pair(path)
        ref_motions.append(motion)
        ref_audio[name] = audio

    gen_motions, gen_names = [], []
    gen_root = args.gen
    if os.path.isfile(os.path.join(gen_root, "motion.csv")):
        found = [("", gen_root)]
    else:
        found = [(name, os.path.join(gen_root, name))
                 for name in sorted(os.listdir(gen_root))
                 if os.path.isfile(os.path.join(gen_root, name, "motion.csv"))]
        if not found:
            raise MalformedFile(f"no motion.csv found under {gen_root}")
    for name, path in found:
        motion, _ = feat.load_stream(os.path.join(path, "motion.csv"))
        gen_motions.append(motion)
        gen_names.append(name)

    report = {"ref_items": len(ref_motions), "gen_items": len(gen_motions)}
    if "fid" in wanted:
        ref_dyn, ref_geo = _feature_sets(ref_motions)
        gen_dyn, gen_geo = _feature_sets(gen_motions)
        report["fid_k"] = report["fid_dynamic"] = met.fid(ref_dyn, gen_dyn)
        report["fid_g"] = report["fid_geometric"] = met.fid(ref_geo, gen_geo)
    if "diversity" in wanted:
        gen_dyn, gen_geo = _feature_sets(gen_motions)
        report["dist_k"] = report["diversity_dynamic"] = met.diversity(gen_dyn)
        report["dist_g"] = report["diversity_geometric"] = met.diversity(gen_geo)
    if "beat" in wanted:
        scores = []
        for name, motion in zip(gen_names, gen_motions):
            if name not in ref_audio:
                raise MalformedFile(f"generated pair {name!r} has no reference audio")
            scores.append(met.beat_align(met.motion_beats(motion),
                                         met.music_beats(ref_audio[name])))
        report["beat_align"] = float(np.mean(scores))

    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        feat.atomic_write_text(args.out, text + "\n")
    print(text)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quatmotion",
        description="quaternion rotary attention for music-conditioned motion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the invariant check suites")
    p.add_argument("--suite", default="all",
                   choices=("all",) + verification.PUBLIC_SUITES)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="write a synthetic beat-locked pair")
    p.add_argument("--out", required=True)
    p.add_argument("--seconds", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beat-period", type=int, default=30,
                   help="frames between beats")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train on a directory of pairs")
    p.add_argument("--config", default=None, help="flat key = value file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="roll out motion from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--music", required=True)
    p.add_argument("--seed-motion", required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score generated motion against references")
    p.add_argument("--ref", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--metrics", default="fid,diversity,beat")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)
    return parser


def entry(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _METRIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QuatMotionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(entry())


if __name__ == "__main__":
    main()

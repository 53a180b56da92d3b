"""Small end-to-end run: synthesize data, train, roll out, score.

Uses a reduced model so the whole loop finishes in well under a minute;
pass --steps to train longer and watch the beat alignment move.

Run: python3 demos/train_and_generate.py [--steps 400] [--seed 0]
"""

import argparse
import time

import numpy as np

from quatmotion import features as feat
from quatmotion import metrics as met
from quatmotion import model as mod
from quatmotion import training as trn


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    config = mod.ModelConfig(d_model=16, heads=2, encoder_layers=1,
                             decoder_layers=1, seed_motion_frames=12,
                             audio_frames=24, future_frames=3)
    train_config = trn.TrainConfig(
        batch_size=4, total_steps=args.steps, rng_seed=args.seed,
        decay_steps=((args.steps // 2, 1e-5), (args.steps, 1e-6)))

    periods = (12, 18, 24, 30)
    dataset = [feat.synth_pair(seed, 1.0, beat_period_frames=p)
               for seed, p in enumerate(periods)]
    print(f"{len(dataset)} pairs of {dataset[0][0].shape[0]} frames, "
          f"beat periods {periods}")

    weights = mod.init_weights(config, np.random.default_rng(args.seed))
    count = sum(t.data.size for t in weights.values())
    print(f"model: d_model={config.d_model}, {config.heads} heads, "
          f"{count} parameters")

    t0 = time.perf_counter()
    trace = trn.train(weights, dataset, train_config, config)
    print(f"\ntrained {args.steps} steps in {time.perf_counter() - t0:.1f}s")
    for step, lr, loss in trace[:: max(1, args.steps // 8)]:
        print(f"  step {step:5d}  lr {lr:.1e}  loss {loss:.4f}")
    print(f"  final loss {trace[-1][2]:.4f} "
          f"({trace[-1][2] / trace[0][2]:.1%} of initial)")

    start = config.seed_motion_frames
    horizon = 30
    print(f"\n{horizon}-frame rollouts, scored against their own music")
    for (audio, motion), period in zip(dataset, periods):
        rolled = mod.autoregressive_generate(
            motion[:start], audio, horizon, weights, config)
        score = met.beat_align(met.motion_beats(rolled),
                               met.music_beats(audio[start:start + horizon]))
        print(f"  period {period:2d}: beat alignment {score:.4f}")


if __name__ == "__main__":
    main()

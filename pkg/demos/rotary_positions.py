"""Why rotary position embedding encodes relative offsets.

Spins each (even, odd) coordinate pair of a vector by an angle
proportional to its sequence position. Dot products between spun
queries and keys then depend only on the position difference, which
this script checks by sliding both sequences along the timeline.

Run: python3 demos/rotary_positions.py
"""

import numpy as np

from quatmotion import spe


def main():
    sched = spe.RotarySchedule(dim=8)
    print(f"per-pair base angles (dim 8): {np.round(sched.angles, 6)}")

    rng = np.random.default_rng(3)
    v = rng.standard_normal(8)
    print("\none vector spun at increasing positions (norm never changes)")
    for pos in (0, 1, 4, 16):
        spun = spe.rope_rotate(v, pos, sched)
        print(f"  pos {pos:2d}: first pair ({spun[0]: .4f}, {spun[1]: .4f})"
              f"  |v| = {np.linalg.norm(spun):.12f}")

    q = rng.standard_normal((5, 8))
    k = rng.standard_normal((7, 8))
    base = spe.rope_logits(q, k, sched)
    print("\nlogit table, queries 0..4 vs keys 0..6")
    print(np.array_str(base, precision=3, suppress_small=True))

    print("\nslide everything by a shared offset; the table must not move")
    for delta in (3.0, 100.0, 1000.0):
        moved = spe.rope_logits(q, k, sched, q_offset=delta, k_offset=delta)
        print(f"  offset {delta:6.0f}: max change {np.abs(moved - base).max():.3e}")

    print("\nmatrix route vs complex-number route")
    worst = 0.0
    for pos in (0.5, 3.0, 250.0):
        worst = max(worst, np.abs(spe.rope_rotate(v, pos, sched)
                                  - spe.rope_rotate_complex(v, pos, sched)).max())
    print(f"  worst disagreement {worst:.3e}")


if __name__ == "__main__":
    main()

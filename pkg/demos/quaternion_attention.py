"""Quaternion rotary attention, step by step.

Features are grouped into 4-slot quaternions; learned per-period
frequencies and phases spin queries about axis i and keys about axis j,
and the similarity is the averaged real part of their Hamilton products.
With one period and silent kernels the whole mechanism collapses to
ordinary softmax attention, which this script demonstrates numerically.

Run: python3 demos/quaternion_attention.py
"""

import math

import numpy as np

from quatmotion import numerics as num
from quatmotion import qra


def main():
    rng = np.random.default_rng(11)
    d_model, d_attn, periods = 6, 8, 3
    x = rng.standard_normal((5, d_model))   # queries come from here
    y = rng.standard_normal((7, d_model))   # keys and values from here

    params = qra.QRAParams.random(rng, d_model, d_attn, periods)
    q = num.matmul(x, params.w_q)
    fp = qra.gen_freq_phase(q, params.omega_q, params.theta_q)
    print(f"latent frequencies (step x period), all >= 0:\n{np.round(fp.omega, 3)}")
    print(f"latent phases, all inside (-pi, pi):\n{np.round(fp.theta, 3)}")

    angles = qra.rotation_angles(fp, qra.position_vector(q.shape[0]))
    print(f"\nrotation angles of period 0 by step: {np.round(angles[:, 0], 3)}")

    out = qra.qra_attention(x, y, params)
    print(f"\nattention output shape {out.shape}, first row:\n{np.round(out[0], 4)}")

    # silence the kernels, keep one period: plain attention must reappear
    quiet = num.ConvKernel(weights=np.zeros((1, d_attn, 3)), bias=np.zeros(1))
    collapsed = qra.QRAParams(
        d_model=d_model, d_attn=d_attn, periods=1,
        w_q=params.w_q, w_k=params.w_k, w_v=params.w_v,
        omega_q=quiet, theta_q=quiet, omega_k=quiet, theta_k=quiet)
    got = qra.qra_attention(x, y, collapsed)

    logits = (x @ params.w_q) @ (y @ params.w_k).T / math.sqrt(d_attn)
    weights = np.exp(logits - logits.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    want = weights @ (y @ params.w_v)
    print(f"\ndegenerate case vs canonical attention: "
          f"max gap {np.abs(got - want).max():.3e}")


if __name__ == "__main__":
    main()

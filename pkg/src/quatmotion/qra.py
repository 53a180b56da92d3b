"""Quaternion rotary attention over plain arrays.

Rows of projected queries and keys are grouped into quaternion slots and
right-multiplied by unit axis exponentials whose angles are learned
per-step, per-period latent frequencies and phases (1D convolutions with
relu / pi*tanh activations). Similarity between two rotated rows is the
mean over periods of the summed real parts of slotwise Hamilton products
with the conjugated key, scaled by 1/(P*sqrt(d)). With one period and
zero angles this is exactly canonical scaled dot-product attention.

This module is the reference array path used by verification and tests;
the trainable batched path lives in the model module and is checked
against this one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DimensionMismatch, HeadDimNotQuaternion
from .numerics import ConvKernel
from .quaternion import QuaternionSeries, quaternionize_rows, right_multiply_unit

TWO_PI = 2.0 * np.pi


@dataclass
class FreqPhase:
    """Per-step, per-period rotation parameters.

    omega is nonnegative (relu) and theta lies in (-pi, pi) (pi*tanh),
    both of shape (steps, periods).
    """

    omega: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.omega.ndim != 2 or self.omega.shape != self.theta.shape:
            raise DimensionMismatch(
                f"omega shape {self.omega.shape} and theta shape {self.theta.shape} must match")

    @property
    def steps(self) -> int:
        return self.omega.shape[0]

    @property
    def periods(self) -> int:
        return self.omega.shape[1]


@dataclass
class QRAParams:
    """Projections and freq/phase kernels of one attention head."""

    d_model: int
    d_attn: int
    periods: int
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    omega_q: ConvKernel
    theta_q: ConvKernel
    omega_k: ConvKernel
    theta_k: ConvKernel

    def __post_init__(self):
        if self.d_attn % 4 != 0:
            raise HeadDimNotQuaternion(f"d_attn={self.d_attn} is not divisible by 4")
        if self.periods < 1:
            raise ValueError(f"periods must be >= 1, got {self.periods}")
        for name in ("w_q", "w_k", "w_v"):
            w = np.asarray(getattr(self, name), dtype=np.float64)
            if w.shape != (self.d_model, self.d_attn):
                raise DimensionMismatch(
                    f"{name} has shape {w.shape}, expected {(self.d_model, self.d_attn)}")
            setattr(self, name, w)
        for name in ("omega_q", "theta_q", "omega_k", "theta_k"):
            kern = getattr(self, name)
            if kern.in_channels != self.d_attn or kern.out_channels != self.periods:
                raise DimensionMismatch(
                    f"{name} maps {kern.in_channels}->{kern.out_channels}, "
                    f"expected {self.d_attn}->{self.periods}")

    @staticmethod
    def random(rng: np.random.Generator, d_model: int, d_attn: int, periods: int,
               width: int = 3, scale: float = 0.5) -> "QRAParams":
        def kern():
            return ConvKernel(
                weights=scale * rng.standard_normal((periods, d_attn, width)),
                bias=scale * rng.standard_normal(periods))

        return QRAParams(
            d_model=d_model, d_attn=d_attn, periods=periods,
            w_q=rng.standard_normal((d_model, d_attn)) / np.sqrt(d_model),
            w_k=rng.standard_normal((d_model, d_attn)) / np.sqrt(d_model),
            w_v=rng.standard_normal((d_model, d_attn)) / np.sqrt(d_model),
            omega_q=kern(), theta_q=kern(), omega_k=kern(), theta_k=kern())


def position_vector(length: int) -> np.ndarray:
    """Normalized positions [0, 1, ..., L-1] / L, all in [0, 1)."""
    if length < 1:
        raise DimensionMismatch(f"position vector needs length >= 1, got {length}")
    return np.arange(length, dtype=np.float64) / float(length)


def gen_freq_phase(z, omega_kernel: ConvKernel, theta_kernel: ConvKernel) -> FreqPhase:
    """Latent frequencies and phases of each step: relu / pi*tanh of conv1d."""
    z = numerics.as_matrix(z)
    omega = numerics.relu(numerics.conv1d(z, omega_kernel))
    theta = numerics.pi_tanh(numerics.conv1d(z, theta_kernel))
    return FreqPhase(omega=omega, theta=theta)


def rotation_angles(fp: FreqPhase, pos) -> np.ndarray:
    """Total rotation angle 2*pi*omega[n,p]*pos[n] + theta[n,p], shape (steps, P)."""
    pos = np.asarray(pos, dtype=np.float64).reshape(-1)
    if pos.size != fp.steps:
        raise DimensionMismatch(f"expected {fp.steps} positions, got {pos.size}")
    return TWO_PI * fp.omega * pos[:, None] + fp.theta


def series_rotate(z, fp: FreqPhase, pos, axis: str) -> list:
    """Rotate the quaternionized rows of z once per period.

    Returns P QuaternionSeries; slot s of step n in series p is the slot
    right-multiplied by unit_exp(axis, 2*pi*omega[n,p]*pos[n] + theta[n,p]).
    """
    z = numerics.as_matrix(z)
    if z.shape[0] != fp.steps:
        raise DimensionMismatch(f"z has {z.shape[0]} steps but freq/phase has {fp.steps}")
    slots = quaternionize_rows(z)
    angles = rotation_angles(fp, pos)
    out = []
    for p in range(fp.periods):
        out.append(QuaternionSeries(right_multiply_unit(slots, angles[:, p], axis)))
    return out


def rotary_similarity(phi: list, psi: list, d_attn: int) -> np.ndarray:
    """Mean rotated quaternion dot product, scaled by 1/(P*sqrt(d_attn)).

    Entry (n, m) sums Re[hamilton(phi_p[n, s], q_conj(psi_p[m, s]))] over
    periods p and slots s; the real part of q (x) conj(r) is the 4-vector
    dot product q.r, so each period contributes a flattened inner product.
    """
    if len(phi) != len(psi) or not phi:
        raise DimensionMismatch(f"period counts differ: {len(phi)} vs {len(psi)}")
    periods = len(phi)
    total = None
    for a, b in zip(phi, psi):
        if a.slots_per_step != b.slots_per_step:
            raise DimensionMismatch("slot counts differ between query and key series")
        term = np.einsum("nsc,msc->nm", a.values, b.values)
        total = term if total is None else total + term
    return total / (periods * np.sqrt(d_attn))


def qra_attention(x, y, params: QRAParams, key_axis: str = "j") -> np.ndarray:
    """Single-head quaternion rotary attention from x (N rows) onto y (M rows).

    Queries rotate about axis i, keys about key_axis (j unless the
    same-axis variant is requested).
    """
    x = numerics.as_matrix(x)
    y = numerics.as_matrix(y)
    q = numerics.matmul(x, params.w_q)
    k = numerics.matmul(y, params.w_k)
    v = numerics.matmul(y, params.w_v)
    fp_q = gen_freq_phase(q, params.omega_q, params.theta_q)
    fp_k = gen_freq_phase(k, params.omega_k, params.theta_k)
    phi = series_rotate(q, fp_q, position_vector(q.shape[0]), "i")
    psi = series_rotate(k, fp_k, position_vector(k.shape[0]), key_axis)
    s = numerics.softmax_rows(rotary_similarity(phi, psi, params.d_attn))
    return numerics.matmul(s, v)


def multi_head_qra(x, y, head_params: list, w_o, key_axis: str = "j") -> np.ndarray:
    """Concatenate per-head qra_attention outputs and project by w_o."""
    x = numerics.as_matrix(x)
    y = numerics.as_matrix(y)
    if not head_params:
        raise DimensionMismatch("need at least one head")
    for p in head_params:
        if p.d_attn % 4 != 0:
            raise HeadDimNotQuaternion(f"head dim {p.d_attn} is not divisible by 4")
    heads = [qra_attention(x, y, p, key_axis=key_axis) for p in head_params]
    return numerics.matmul(np.concatenate(heads, axis=1), w_o)

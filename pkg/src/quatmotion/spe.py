"""Spin position embedding: position encoded as rotation of feature pairs.

Each consecutive pair (x[2t], x[2t+1]) of a d-dim vector is treated as a
point in a plane and spun by pos * theta_t, with a geometric frequency
ladder theta_t = base**(-2t/d). A rotation by angle s composed with the
transpose of a rotation by angle t is a rotation by s - t, so logits
between spun queries and keys depend on positions only through their
offset. Values are left unrotated.

Two equivalent implementations exist: explicit 2x2 rotation blocks
(rope_rotate) and complex multiplication (rope_rotate_complex). They
agree to a few ulps and the verification suite cross-checks them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

DEFAULT_BASE = 10000.0


def theta_schedule(dim: int, base: float = DEFAULT_BASE) -> np.ndarray:
    """Per-pair rotation frequencies base**(-2*idx/dim), shape (dim // 2,)."""
    if dim % 2 != 0 or dim <= 0:
        raise DimensionMismatch(f"pair rotation needs a positive even dim, got {dim}")
    idx = np.arange(dim // 2, dtype=np.float64)
    return base ** (-2.0 * idx / dim)


@dataclass(frozen=True)
class RotarySchedule:
    """Even feature dim, frequency base, and the per-pair angle ladder.

    angles defaults to the geometric ladder; tests may inject custom
    ladders (zeros, a single pi/2) to probe degenerate behavior.
    """

    dim: int
    base: float = DEFAULT_BASE
    angles: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dim % 2 != 0 or self.dim <= 0:
            raise DimensionMismatch(f"RotarySchedule needs a positive even dim, got {self.dim}")
        angles = self.angles
        if angles is None:
            angles = theta_schedule(self.dim, self.base)
        angles = np.asarray(angles, dtype=np.float64).reshape(-1)
        if angles.size != self.dim // 2:
            raise DimensionMismatch(f"expected {self.dim // 2} pair angles, got {angles.size}")
        object.__setattr__(self, "angles", angles)


def _check_vector(x, sched: RotarySchedule) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != sched.dim:
        raise DimensionMismatch(f"vector length {x.size} does not match schedule dim {sched.dim}")
    return x


def rope_rotate(x, pos, sched: RotarySchedule) -> np.ndarray:
    """Spin each pair (x[2t], x[2t+1]) by pos * angles[t]; norm preserved."""
    x = _check_vector(x, sched)
    ang = float(pos) * sched.angles
    co, si = np.cos(ang), np.sin(ang)
    x0, x1 = x[0::2], x[1::2]
    out = np.empty_like(x)
    out[0::2] = x0 * co - x1 * si
    out[1::2] = x0 * si + x1 * co
    return out


def rope_rotate_complex(x, pos, sched: RotarySchedule) -> np.ndarray:
    """Same map with pairs read as complex numbers times e^(i*pos*theta)."""
    x = _check_vector(x, sched)
    z = (x[0::2] + 1j * x[1::2]) * np.exp(1j * float(pos) * sched.angles)
    out = np.empty_like(x)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def rotate_rows(x, sched: RotarySchedule, offset: float = 0.0) -> np.ndarray:
    """Spin every row of x (steps, dim) at position row_index + offset."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != sched.dim:
        raise DimensionMismatch(f"expected (steps, {sched.dim}), got shape {x.shape}")
    pos = np.arange(x.shape[0], dtype=np.float64) + float(offset)
    ang = pos[:, None] * sched.angles[None, :]
    co, si = np.cos(ang), np.sin(ang)
    x0, x1 = x[:, 0::2], x[:, 1::2]
    out = np.empty_like(x)
    out[:, 0::2] = x0 * co - x1 * si
    out[:, 1::2] = x0 * si + x1 * co
    return out


def rope_logits(q, k, sched: RotarySchedule, q_offset: float = 0.0, k_offset: float = 0.0) -> np.ndarray:
    """Unscaled attention logits between spun queries and keys.

    Entry (s, t) is the dot product of Q[s] spun at s + q_offset with
    K[t] spun at t + k_offset. No 1/sqrt(d) here; callers apply their
    own similarity scale.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or q.shape[1] != k.shape[1]:
        raise DimensionMismatch(f"incompatible query/key shapes {q.shape} and {k.shape}")
    return rotate_rows(q, sched, q_offset) @ rotate_rows(k, sched, k_offset).T


def angle_tables(steps: int, sched: RotarySchedule, offset: float = 0.0):
    """(cos, sin) tables of shape (steps, dim // 2) for the autodiff path."""
    pos = np.arange(steps, dtype=np.float64) + float(offset)
    ang = pos[:, None] * sched.angles[None, :]
    return np.cos(ang), np.sin(ang)

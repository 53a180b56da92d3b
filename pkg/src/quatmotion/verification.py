"""Executable invariant suites behind the `verify` command.

Each suite re-checks the properties its module promises, printing one
line per check with the measured error against its tolerance. Checks
resolve functions through module attributes (quaternion.hamilton, not a
local alias), so an injected defect in a primitive is caught by the
suite that owns the broken property.

Public suites: algebra, spe, qra, grad, metrics. Three internal groups
(numerics, model, training, features) run only under `all`; they cover
the remaining module invariants. Each group's check count is itself
asserted, keeping the enumerated checklist in the docs honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import features as feat
from . import metrics as met
from . import model as mod
from . import numerics as num
from . import qra
from . import quaternion as quat
from . import spe
from . import training as trn
from .autograd import Tensor
from . import autograd as ag
from .errors import DimensionMismatch, MetaMismatch, NonFiniteGradient

PUBLIC_SUITES = ("algebra", "spe", "qra", "grad", "metrics")
INTERNAL_GROUPS = ("numerics", "model", "training", "features")

EXPECTED_COUNTS = {
    "algebra": 8, "spe": 5, "qra": 8, "grad": 20, "metrics": 11,
    "numerics": 11, "model": 8, "training": 9, "features": 9,
}


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float


def _check(name: str, measured: float, tol: float) -> Check:
    measured = float(measured)
    return Check(name=name, passed=measured <= tol, measured=measured, tolerance=tol)


def _flag(name: str, ok: bool) -> Check:
    return Check(name=name, passed=bool(ok), measured=0.0 if ok else 1.0, tolerance=0.0)


def _rand_quats(rng, n):
    return [quat.Quaternion(*row) for row in rng.standard_normal((n, 4))]


# ---------------------------------------------------------------- algebra

def algebra_checks() -> list:
    rng = np.random.default_rng(11)
    checks = []

    basis = {"1": quat.ONE, "i": quat.UNIT_I, "j": quat.UNIT_J, "k": quat.UNIT_K}
    table = {
        ("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
        ("i", "j"): (1, "k"), ("j", "i"): (-1, "k"),
        ("j", "k"): (1, "i"), ("k", "j"): (-1, "i"),
        ("k", "i"): (1, "j"), ("i", "k"): (-1, "j"),
    }
    worst = 0.0
    for (a, b), (sign, c) in table.items():
        got = quat.hamilton(basis[a], basis[b]).as_array()
        want = sign * basis[c].as_array()
        worst = max(worst, float(np.abs(got - want).max()))
    checks.append(_check("algebra/basis_table", worst, 0.0))

    worst = 0.0
    for q in _rand_quats(rng, 10):
        left = quat.hamilton(quat.ONE, q).as_array()
        right = quat.hamilton(q, quat.ONE).as_array()
        worst = max(worst, float(np.abs(left - q.as_array()).max()),
                    float(np.abs(right - q.as_array()).max()))
    checks.append(_check("algebra/identity", worst, 0.0))

    worst = 0.0
    for _ in range(50):
        a, b, c = _rand_quats(rng, 3)
        lhs = quat.hamilton(quat.hamilton(a, b), c).as_array()
        rhs = quat.hamilton(a, quat.hamilton(b, c)).as_array()
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    checks.append(_check("algebra/associativity", worst, 1e-12))

    worst = 0.0
    for _ in range(50):
        a, b = _rand_quats(rng, 2)
        worst = max(worst, abs(quat.q_norm(quat.hamilton(a, b))
                               - quat.q_norm(a) * quat.q_norm(b)))
    checks.append(_check("algebra/norm_multiplicative", worst, 1e-10))

    worst = 0.0
    for _ in range(50):
        a, b = _rand_quats(rng, 2)
        lhs = quat.q_conj(quat.hamilton(a, b)).as_array()
        rhs = quat.hamilton(quat.q_conj(b), quat.q_conj(a)).as_array()
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    checks.append(_check("algebra/conjugate_antihomomorphism", worst, 1e-12))

    worst = 0.0
    for _ in range(50):
        a, b = _rand_quats(rng, 2)
        real = quat.hamilton(a, quat.q_conj(b)).e
        dot = float(a.as_array() @ b.as_array())
        worst = max(worst, abs(real - dot))
    checks.append(_check("algebra/real_part_dot_identity", worst, 1e-12))

    ij = quat.hamilton(quat.UNIT_I, quat.UNIT_J).as_array()
    ji = quat.hamilton(quat.UNIT_J, quat.UNIT_I).as_array()
    worst = float(np.abs(ij - quat.UNIT_K.as_array()).max()) + float(np.abs(ji + ij).max())
    checks.append(_check("algebra/noncommutativity_witness", worst, 0.0))

    v = rng.standard_normal(11)
    packed = quat.quaternionize(v)
    flat = np.concatenate([q.as_array() for q in packed])
    checks.append(_check("algebra/quaternionize_prefix", float(np.abs(flat - v[:8]).max()), 0.0))
    return checks


# -------------------------------------------------------------------- spe

def spe_checks() -> list:
    rng = np.random.default_rng(12)
    checks = []

    worst = 0.0
    for n, m, d in ((3, 5, 8), (16, 16, 32), (7, 2, 16)):
        sched = spe.RotarySchedule(d)
        q = rng.standard_normal((n, d))
        k = rng.standard_normal((m, d))
        base = spe.rope_logits(q, k, sched)
        for delta in (0, 7, 1000):
            shifted = spe.rope_logits(q, k, sched, q_offset=delta, k_offset=delta)
            worst = max(worst, float(np.abs(shifted - base).max()))
    checks.append(_check("spe/relative_shift_invariance", worst, 1e-10))

    sched = spe.RotarySchedule(16)
    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal(16)
        pos = int(rng.integers(0, 500))
        worst = max(worst, abs(np.linalg.norm(spe.rope_rotate(x, pos, sched))
                               - np.linalg.norm(x)))
    checks.append(_check("spe/isometry", worst, 1e-12))

    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal(16)
        pos = int(rng.integers(0, 500))
        worst = max(worst, float(np.abs(spe.rope_rotate(x, pos, sched)
                                        - spe.rope_rotate_complex(x, pos, sched)).max()))
    checks.append(_check("spe/formulation_agreement", worst, 1e-14))

    zero = spe.RotarySchedule(8, angles=np.zeros(4))
    q = rng.standard_normal((5, 8))
    k = rng.standard_normal((6, 8))
    checks.append(_check("spe/zero_angle_degeneracy",
                         float(np.abs(spe.rope_logits(q, k, zero) - q @ k.T).max()), 0.0))

    ladder = spe.theta_schedule(32)
    ok = bool(np.all(ladder > 0) and np.all(np.diff(ladder) < 0))
    checks.append(_flag("spe/schedule_positive_decreasing", ok))
    return checks


# -------------------------------------------------------------------- qra

def _reference_qra(x, y, params: qra.QRAParams, key_axis: str = "j"):
    """Straight-line scalar re-evaluation of the attention pipeline.

    Deliberately shares no array code with the package path: plain
    Python loops, its own Hamilton product, its own convolution, its own
    softmax.
    """
    def ham(a, b):
        return (a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0])

    def project(rows, w):
        out = []
        for row in rows:
            out.append([sum(row[i] * w[i][o] for i in range(len(row)))
                        for o in range(len(w[0]))])
        return out

    def conv(rows, kernel):
        steps, chans = len(rows), len(rows[0])
        width = kernel.width
        pad = width // 2
        out = []
        for t in range(steps):
            vals = []
            for o in range(kernel.out_channels):
                acc = float(kernel.bias[o])
                for u in range(width):
                    src = t - pad + u
                    if 0 <= src < steps:
                        for c in range(chans):
                            acc += rows[src][c] * float(kernel.weights[o][c][u])
                vals.append(acc)
            out.append(vals)
        return out

    def rotated(rows, omega, theta, axis):
        steps = len(rows)
        series = []
        for p in range(params.periods):
            per_step = []
            for n in range(steps):
                angle = 2.0 * math.pi * omega[n][p] * (n / steps) + theta[n][p]
                unit = {"i": (math.cos(angle), math.sin(angle), 0.0, 0.0),
                        "j": (math.cos(angle), 0.0, math.sin(angle), 0.0),
                        "k": (math.cos(angle), 0.0, 0.0, math.sin(angle))}[axis]
                slots = []
                for s in range(len(rows[n]) // 4):
                    q4 = tuple(rows[n][4 * s + c] for c in range(4))
                    slots.append(ham(q4, unit))
                per_step.append(slots)
            series.append(per_step)
        return series

    x = [list(map(float, row)) for row in np.asarray(x)]
    y = [list(map(float, row)) for row in np.asarray(y)]
    q_rows = project(x, params.w_q.tolist())
    k_rows = project(y, params.w_k.tolist())
    v_rows = project(y, params.w_v.tolist())

    def act_relu(rows):
        return [[max(0.0, v) for v in row] for row in rows]

    def act_pitanh(rows):
        return [[math.pi * math.tanh(v) for v in row] for row in rows]

    phi = rotated(q_rows, act_relu(conv(q_rows, params.omega_q)),
                  act_pitanh(conv(q_rows, params.theta_q)), "i")
    psi = rotated(k_rows, act_relu(conv(k_rows, params.omega_k)),
                  act_pitanh(conv(k_rows, params.theta_k)), key_axis)

    n_steps, m_steps = len(q_rows), len(k_rows)
    scale = 1.0 / (params.periods * math.sqrt(params.d_attn))
    out = []
    for n in range(n_steps):
        sims = []
        for m in range(m_steps):
            acc = 0.0
            for p in range(params.periods):
                for s in range(params.d_attn // 4):
                    a = phi[p][n][s]
                    b = psi[p][m][s]
                    conj = (b[0], -b[1], -b[2], -b[3])
                    acc += ham(a, conj)[0]
            sims.append(acc * scale)
        peak = max(sims)
        exps = [math.exp(v - peak) for v in sims]
        tot = sum(exps)
        weights = [e / tot for e in exps]
        out.append([sum(weights[m] * v_rows[m][c] for m in range(m_steps))
                    for c in range(params.d_attn)])
    return np.array(out)


def _canonical_attention(x, y, params: qra.QRAParams):
    q = x @ params.w_q
    k = y @ params.w_k
    v = y @ params.w_v
    s = num.softmax_rows(q @ k.T / np.sqrt(params.d_attn))
    return s @ v


def _zeroed_kernels(rng, d_model, d_attn, periods=1):
    p = qra.QRAParams.random(rng, d_model, d_attn, periods)
    for kern in (p.omega_q, p.theta_q, p.omega_k, p.theta_k):
        kern.weights[:] = 0.0
        kern.bias[:] = 0.0
    return p


def qra_checks() -> list:
    rng = np.random.default_rng(13)
    checks = []

    worst = 0.0
    for _ in range(25):
        p = _zeroed_kernels(rng, 6, 8)
        x = rng.standard_normal((4, 6))
        y = rng.standard_normal((5, 6))
        worst = max(worst, float(np.abs(qra.qra_attention(x, y, p)
                                        - _canonical_attention(x, y, p)).max()))
    checks.append(_check("qra/degeneracy_to_canonical", worst, 1e-10))

    p = qra.QRAParams.random(rng, 6, 8, 2)
    x = rng.standard_normal((4, 6))
    y = rng.standard_normal((5, 6))
    q = x @ p.w_q
    k = y @ p.w_k
    fp_q = qra.gen_freq_phase(q, p.omega_q, p.theta_q)
    fp_k = qra.gen_freq_phase(k, p.omega_k, p.theta_k)
    phi = qra.series_rotate(q, fp_q, qra.position_vector(4), "i")
    psi = qra.series_rotate(k, fp_k, qra.position_vector(5), "j")
    s = num.softmax_rows(qra.rotary_similarity(phi, psi, p.d_attn))
    checks.append(_check("qra/attention_rows_sum_to_one",
                         float(np.abs(s.sum(axis=1) - 1.0).max()), 1e-12))

    before = np.linalg.norm(q.reshape(4, 2, 4), axis=2)
    worst = 0.0
    for series in phi:
        after = np.linalg.norm(series.values, axis=2)
        worst = max(worst, float(np.abs(after - before).max()))
    checks.append(_check("qra/rotation_isometry", worst, 1e-12))

    worst = 0.0
    for trial in range(6):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        periods = int(rng.integers(1, 4))
        p = qra.QRAParams.random(rng, 5, 8, periods)
        x = rng.standard_normal((n, 5))
        y = rng.standard_normal((m, 5))
        worst = max(worst, float(np.abs(qra.qra_attention(x, y, p)
                                        - _reference_qra(x, y, p)).max()))
    checks.append(_check("qra/brute_force_equivalence", worst, 1e-10))

    report = _qra_grad_report()
    checks.append(_check("qra/gradient_correctness", report.max_error, report.tol))

    p = qra.QRAParams.random(rng, 6, 8, 2)
    x = rng.standard_normal((6, 6))
    y = rng.standard_normal((7, 6))
    h = qra.qra_attention(x, y, p)
    v = y @ p.w_v
    bound = np.linalg.norm(v, axis=1).max() + 1e-12
    checks.append(_check("qra/output_in_value_hull",
                         max(0.0, float(np.linalg.norm(h, axis=1).max() - bound)), 0.0))

    p1 = _zeroed_kernels(rng, 6, 8)
    q = rng.standard_normal((4, 6)) @ p1.w_q
    k = rng.standard_normal((5, 6)) @ p1.w_k
    fp_q = qra.gen_freq_phase(q, p1.omega_q, p1.theta_q)
    fp_k = qra.gen_freq_phase(k, p1.omega_k, p1.theta_k)
    phi = qra.series_rotate(q, fp_q, qra.position_vector(4), "i")
    psi = qra.series_rotate(k, fp_k, qra.position_vector(5), "j")
    sim = qra.rotary_similarity(phi, psi, 8)
    checks.append(_check("qra/similarity_matmul_identity",
                         float(np.abs(sim - q @ k.T / np.sqrt(8)).max()), 1e-12))

    reps = 3
    sim_rep = qra.rotary_similarity(phi * reps, psi * reps, 8)
    checks.append(_check("qra/period_duplication_invariance",
                         float(np.abs(sim_rep - sim).max()), 1e-12))
    return checks


# ------------------------------------------------------------------- grad

def _autograd_fn(build):
    def fn(arrays):
        tensors = [Tensor(a, requires_grad=True) for a in arrays]
        loss = build(tensors)
        loss.backward()
        return float(loss.data), [t.grad if t.grad is not None else np.zeros_like(t.data)
                                  for t in tensors]
    return fn


def _sq_sum(t: Tensor) -> Tensor:
    return ag.sum_(ag.mul(t, t))


def _qra_grad_report() -> num.GradReport:
    rng = np.random.default_rng(14)
    x = rng.standard_normal((4, 6))
    y = rng.standard_normal((5, 6))
    pos_q = 2.0 * np.pi * np.arange(4) / 4.0
    pos_k = 2.0 * np.pi * np.arange(5) / 5.0

    def build(ts):
        wq, wk, wv, ow, ob, tw, tb, kow, kob, ktw, ktb = ts
        q = ag.matmul(Tensor(x), wq)
        k = ag.matmul(Tensor(y), wk)
        v = ag.matmul(Tensor(y), wv)
        omega_q = ag.relu(ag.conv1d(q, ow, ob))
        theta_q = ag.pi_tanh(ag.conv1d(q, tw, tb))
        omega_k = ag.relu(ag.conv1d(k, kow, kob))
        theta_k = ag.pi_tanh(ag.conv1d(k, ktw, ktb))
        total = None
        for p in range(2):
            ang_q = omega_q[:, p] * Tensor(pos_q) + theta_q[:, p]
            ang_k = omega_k[:, p] * Tensor(pos_k) + theta_k[:, p]
            phi = ag.reshape(ag.quat_rotate(ag.reshape(q, (4, 2, 4)), ang_q, "i"), (4, 8))
            psi = ag.reshape(ag.quat_rotate(ag.reshape(k, (5, 2, 4)), ang_k, "j"), (5, 8))
            sim = ag.matmul(phi, ag.transpose(psi, (1, 0)))
            total = sim if total is None else total + sim
        logits = ag.mul(total, 1.0 / (2.0 * math.sqrt(8)))
        h = ag.matmul(ag.softmax_rows(logits), v)
        return ag.mean_(ag.mul(h, h))

    params = [rng.standard_normal((6, 8)) / np.sqrt(6) for _ in range(3)]
    for _ in range(2):  # q-side then k-side kernels
        params += [0.4 * rng.standard_normal((2, 8, 3)), 0.4 * rng.standard_normal(2),
                   0.4 * rng.standard_normal((2, 8, 3)), 0.4 * rng.standard_normal(2)]
    return num.grad_check(_autograd_fn(build), params, tol=1e-4)


def grad_checks() -> list:
    rng = np.random.default_rng(15)
    checks = []

    r = num.grad_check(_autograd_fn(lambda ts: _sq_sum(ts[0])), [np.array([3.0])])
    checks.append(_check("grad/quadratic_closed_form", r.max_error, 1e-9))

    r = num.grad_check(_autograd_fn(lambda ts: ag.sum_(ag.mul(ts[0], 0.0))),
                       [rng.standard_normal(4)])
    checks.append(_check("grad/constant_zero", r.max_error, 1e-12))

    cases = []

    a0 = rng.standard_normal((3, 4))
    b0 = rng.standard_normal((4, 2))
    cases.append(("matmul", lambda ts: _sq_sum(ag.matmul(ts[0], ts[1])), [a0, b0]))

    a1 = rng.standard_normal((2, 3, 4))
    b1 = rng.standard_normal((4, 5))
    cases.append(("matmul_batched", lambda ts: _sq_sum(ag.matmul(ts[0], ts[1])), [a1, b1]))

    a2 = rng.standard_normal((3, 1))
    b2 = rng.standard_normal((1, 4))
    cases.append(("add_broadcast",
                  lambda ts: _sq_sum(ag.add(ts[0], ts[1])), [a2, b2]))
    cases.append(("mul_broadcast",
                  lambda ts: _sq_sum(ag.mul(ts[0], ts[1])), [a2, b2]))
    cases.append(("sub_neg",
                  lambda ts: _sq_sum(ag.sub(ag.neg(ts[0]), ts[1])), [a2, b2]))

    # keep relu inputs away from the kink; central differences straddle it
    off = rng.standard_normal((3, 5))
    off = np.sign(off) * (np.abs(off) + 0.1)
    cases.append(("relu", lambda ts: _sq_sum(ag.relu(ts[0])), [off]))
    cases.append(("pi_tanh", lambda ts: _sq_sum(ag.pi_tanh(ts[0])), [rng.standard_normal((3, 5))]))
    sm_weights = rng.standard_normal((2, 5))  # fixed, so the loss is a function of x alone
    cases.append(("softmax_rows",
                  lambda ts: _sq_sum(ag.mul(ag.softmax_rows(ts[0]), Tensor(sm_weights))),
                  [rng.standard_normal((2, 5))]))

    xc = rng.standard_normal((2, 7, 3))
    wc = 0.5 * rng.standard_normal((2, 3, 3))
    bc = 0.5 * rng.standard_normal(2)
    cases.append(("conv1d", lambda ts: _sq_sum(ag.conv1d(ts[0], ts[1], ts[2])), [xc, wc, bc]))

    xh = rng.standard_normal((2, 4, 6, 3))
    wh = 0.5 * rng.standard_normal((4, 2, 3, 5))
    bh = 0.5 * rng.standard_normal((4, 2))
    cases.append(("conv1d_headed", lambda ts: _sq_sum(ag.conv1d(ts[0], ts[1], ts[2])), [xh, wh, bh]))

    xl = rng.standard_normal((2, 3, 6))
    cases.append(("layer_norm",
                  lambda ts: _sq_sum(ag.layer_norm(ts[0], ts[1], ts[2])),
                  [xl, 1.0 + 0.1 * rng.standard_normal(6), 0.1 * rng.standard_normal(6)]))

    co, si = spe.angle_tables(5, spe.RotarySchedule(8))
    cases.append(("rope_apply", lambda ts: _sq_sum(ag.rope_apply(ts[0], co, si)),
                  [rng.standard_normal((2, 5, 8))]))

    xq = rng.standard_normal((2, 3, 2, 4))
    aq = rng.standard_normal((2, 3))
    # weight the rotated slots: a bare sum of squares is rotation-invariant,
    # which would zero out the angle gradient and test nothing
    qw = rng.standard_normal((2, 3, 2, 4))
    for axis in ("i", "j", "k"):
        cases.append((f"quat_rotate_{axis}",
                      lambda ts, axis=axis: _sq_sum(ag.mul(ag.quat_rotate(ts[0], ts[1], axis),
                                                           Tensor(qw))),
                      [xq, aq]))

    xg = rng.standard_normal((4, 5))
    cases.append(("getitem_slice", lambda ts: _sq_sum(ts[0][1:3, ::2]), [xg]))
    cases.append(("concat_reshape",
                  lambda ts: _sq_sum(ag.reshape(ag.concat([ts[0], ts[1]], axis=1), (12,))),
                  [rng.standard_normal((2, 3)), rng.standard_normal((2, 3))]))
    cases.append(("mean_axis",
                  lambda ts: _sq_sum(ag.mean_(ts[0], axis=1, keepdims=True)),
                  [rng.standard_normal((3, 4))]))

    for name, build, params in cases:
        r = num.grad_check(_autograd_fn(build), params, tol=1e-4)
        checks.append(_check(f"grad/{name}", r.max_error, 1e-4))

    return checks


# ---------------------------------------------------------------- metrics

def metrics_checks() -> list:
    rng = np.random.default_rng(16)
    checks = []

    a = met.FeatureSet(rng.standard_normal((12, 5)))
    b = met.FeatureSet(rng.standard_normal((10, 5)) + 0.5)
    checks.append(_check("metrics/fid_self_zero", met.fid(a, a), 1e-8))
    checks.append(_check("metrics/fid_symmetry", abs(met.fid(a, b) - met.fid(b, a)), 1e-8))

    base = rng.standard_normal(40)
    base -= base.mean()
    m = 1.75
    one_a = met.FeatureSet(base[:, None])
    one_b = met.FeatureSet((base + m)[:, None])
    checks.append(_check("metrics/fid_1d_equal_variance",
                         abs(met.fid(one_a, one_b) - m * m), 1e-8))

    shift = rng.standard_normal(5)
    shifted_both = abs(met.fid(met.FeatureSet(a.vectors + shift),
                               met.FeatureSet(b.vectors + shift)) - met.fid(a, b))
    v = np.array([0.3, -1.2, 0.7, 0.0, 2.0])
    equal_cov = abs(met.fid(a, met.FeatureSet(a.vectors + v)) - float(v @ v))
    checks.append(_check("metrics/fid_translation", max(shifted_both, equal_cov), 1e-8))

    s = met.FeatureSet(rng.standard_normal((9, 6)))
    qmat, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    rotated = met.FeatureSet(s.vectors @ qmat + rng.standard_normal(6))
    checks.append(_check("metrics/diversity_invariance",
                         abs(met.diversity(s) - met.diversity(rotated)), 1e-10))

    closed = (math.exp(-4.0 / 18.0) + math.exp(-9.0 / 18.0)) / 2.0
    got = met.beat_align(met.BeatTimeline([10, 50]), met.BeatTimeline([12, 47]))
    checks.append(_check("metrics/beat_align_hand_case", abs(got - closed), 1e-5))

    sub = met.beat_align(met.BeatTimeline([5, 20]), met.BeatTimeline([0, 5, 10, 20]))
    checks.append(_check("metrics/beat_align_perfect", abs(sub - 1.0), 0.0))

    scores = [met.beat_align(met.BeatTimeline([10 + d]), met.BeatTimeline([10]))
              for d in range(6, -1, -1)]  # closing distance must not hurt
    checks.append(_flag("metrics/beat_align_monotone",
                        all(b >= a for a, b in zip(scores, scores[1:]))))

    ramp = np.cumsum(np.array([0.0, 3.0, 1.0, 2.0]))[:, None] * np.ones((1, 2))
    hits = met.motion_beats(ramp).frames
    ok_min = list(hits) == [1]
    plateau = np.cumsum(np.array([0.0, 3.0, 1.0, 1.0, 2.0]))[:, None] * np.ones((1, 2))
    ok_plateau = list(met.motion_beats(plateau).frames) == []
    checks.append(_flag("metrics/motion_beats_strictness", ok_min and ok_plateau))

    audio = np.zeros((4, feat.AUDIO_DIMS))
    audio[1, feat.BEAT_CHANNEL] = 0.5
    audio[2, feat.BEAT_CHANNEL] = 0.51
    checks.append(_flag("metrics/music_beats_threshold",
                        list(met.music_beats(audio).frames) == [2]))

    audio, motion = feat.synth_pair(7, 2.0, beat_period_frames=20)
    mb = met.motion_beats(motion)
    music = met.music_beats(audio)
    interior = [t for t in music.frames if 1 <= t <= motion.shape[0] - 3]
    exact = list(mb.frames) == interior
    align = met.beat_align(mb, music)
    checks.append(_flag("metrics/generator_contract", exact and abs(align - 1.0) <= 1e-9))
    return checks


# --------------------------------------------------------------- numerics

def numerics_checks() -> list:
    rng = np.random.default_rng(17)
    checks = []

    worst = 0.0
    for _ in range(10):
        a = rng.standard_normal((int(rng.integers(1, 8)), int(rng.integers(1, 8))))
        b = rng.standard_normal((a.shape[1], int(rng.integers(1, 8))))
        c = rng.standard_normal((b.shape[1], int(rng.integers(1, 8))))
        lhs = num.matmul(num.matmul(a, b), c)
        rhs = num.matmul(a, num.matmul(b, c))
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    checks.append(_check("numerics/matmul_associativity", worst, 1e-10))

    hand = num.matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[5.0, 6.0], [7.0, 8.0]]))
    checks.append(_check("numerics/matmul_hand_case",
                         float(np.abs(hand - np.array([[19.0, 22.0], [43.0, 50.0]])).max()), 0.0))

    m = rng.standard_normal((6, 9))
    s = num.softmax_rows(m)
    checks.append(_check("numerics/softmax_rows_sum", float(np.abs(s.sum(axis=1) - 1).max()), 1e-12))
    shifted = num.softmax_rows(m + rng.standard_normal((6, 1)))
    checks.append(_check("numerics/softmax_shift_invariance", float(np.abs(shifted - s).max()), 1e-12))
    two = num.softmax_rows(np.array([[4.2, 4.2 + math.log(3.0)]]))
    checks.append(_check("numerics/softmax_closed_form",
                         float(np.abs(two - np.array([[0.25, 0.75]])).max()), 1e-12))

    kern = num.ConvKernel(weights=rng.standard_normal((3, 2, 5)), bias=np.zeros(3))
    x1 = rng.standard_normal((9, 2))
    x2 = rng.standard_normal((9, 2))
    lin = num.conv1d(2.5 * x1 - 1.5 * x2, kern)
    combo = 2.5 * num.conv1d(x1, kern) - 1.5 * num.conv1d(x2, kern)
    checks.append(_check("numerics/conv1d_linearity", float(np.abs(lin - combo).max()), 1e-12))

    slide = num.conv1d(np.array([[1.0], [2.0], [3.0]]),
                       num.ConvKernel(weights=np.array([[[1.0, 0.0, -1.0]]]), bias=np.zeros(1)))
    checks.append(_check("numerics/conv1d_hand_case",
                         float(np.abs(slide - np.array([[-2.0], [-2.0], [2.0]])).max()), 0.0))

    ident = num.conv1d(x1, num.ConvKernel(
        weights=np.stack([np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
                          np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])]),
        bias=np.zeros(2)))
    checks.append(_check("numerics/conv1d_identity_kernel", float(np.abs(ident - x1).max()), 0.0))

    base = rng.standard_normal((6, 6))
    spd = base @ base.T + 0.5 * np.eye(6)
    root = num.sym_sqrt(spd)
    checks.append(_check("numerics/sym_sqrt_reconstruction",
                         float(np.abs(root @ root - spd).max()), 1e-8))
    diag = num.sym_sqrt(np.diag([4.0, 9.0]))
    checks.append(_check("numerics/sym_sqrt_closed_form",
                         float(np.abs(diag - np.diag([2.0, 3.0])).max()), 1e-12))

    val = float(num.pi_tanh(np.array(20.0)))
    checks.append(_flag("numerics/pi_tanh_strict_bound", 3.141592 < val < math.pi))
    return checks


# ------------------------------------------------------------------ model

def _reference_canonical_forward(weights, config: mod.ModelConfig, motion, audio):
    """Plain-numpy canonical transformer, no shared forward code."""
    w = {k: t.data for k, t in weights.items()}
    dh = config.d_head

    def ln(x, name):
        mu = x.mean(-1, keepdims=True)
        xc = x - mu
        return xc / np.sqrt((xc * xc).mean(-1, keepdims=True) + 1e-5) \
            * w[name + ".gamma"] + w[name + ".beta"]

    def softmax(x):
        e = np.exp(x - x.max(-1, keepdims=True))
        return e / e.sum(-1, keepdims=True)

    def attention(src, mem, prefix):
        q = src @ w[prefix + ".wq"]
        k = mem @ w[prefix + ".wk"]
        v = mem @ w[prefix + ".wv"]
        outs = []
        for h in range(config.heads):
            sl = slice(h * dh, (h + 1) * dh)
            s = softmax(q[:, sl] @ k[:, sl].T / math.sqrt(dh))
            outs.append(s @ v[:, sl])
        return np.concatenate(outs, axis=1) @ w[prefix + ".wo"]

    def ff(x, prefix):
        h = np.maximum(0.0, x @ w[prefix + ".fc1.w"] + w[prefix + ".fc1.b"])
        return h @ w[prefix + ".fc2.w"] + w[prefix + ".fc2.b"]

    def encode(x, which):
        h = x @ w[f"embed.{which}.w"] + w[f"embed.{which}.b"]
        if config.use_learned_abs_pos:
            h = h + w[f"pos.{which}"][:h.shape[0]]
        for layer in range(config.encoder_layers):
            prefix = f"enc.{which}.{layer}"
            h = h + attention(ln(h, prefix + ".ln1"), ln(h, prefix + ".ln1"), prefix + ".attn")
            h = h + ff(ln(h, prefix + ".ln2"), prefix + ".ff")
        if config.encoder_layers > 0:
            h = ln(h, f"enc.{which}.norm")
        return h

    hm = encode(motion, "motion")
    ha = encode(audio, "audio")
    mem = np.concatenate([hm, ha], axis=0)
    state = hm
    for layer in range(config.decoder_layers):
        prefix = f"dec.{layer}"
        state = state + attention(ln(state, prefix + ".ln1"), mem, prefix + ".attn")
        state = state + ff(ln(state, prefix + ".ln2"), prefix + ".ff")
    flat = state[-1] @ w["out.w"] + w["out.b"]
    return flat.reshape(config.future_frames, feat.MOTION_DIMS)


def _tiny_config(**kw) -> mod.ModelConfig:
    base = dict(d_model=8, heads=2, encoder_layers=1, decoder_layers=1, periods=2,
                seed_motion_frames=6, audio_frames=9, future_frames=2)
    base.update(kw)
    return mod.ModelConfig(**base)


def model_checks() -> list:
    rng = np.random.default_rng(18)
    checks = []

    config = _tiny_config()
    weights = mod.init_weights(config, np.random.default_rng(0))
    motion = rng.standard_normal((6, feat.MOTION_DIMS))
    audio = rng.standard_normal((9, feat.AUDIO_DIMS))

    one = mod.predict_future(weights, config, motion, audio)
    two = mod.predict_future(weights, config, motion, audio)
    checks.append(_check("model/forward_determinism", float(np.abs(one - two).max()), 0.0))

    desk = mod.ModelConfig()
    ok_shapes = one.shape == (2, feat.MOTION_DIMS)
    desk_w = mod.init_weights(desk, np.random.default_rng(1))
    dm = rng.standard_normal((desk.seed_motion_frames, feat.MOTION_DIMS))
    da = rng.standard_normal((desk.audio_frames, feat.AUDIO_DIMS))
    emb = mod.embed_stream(dm, "motion", desk_w, desk)
    enc = mod.encode(emb, "motion", desk_w, desk)
    dec = mod.predict_future(desk_w, desk, dm, da)
    ok_shapes = (ok_shapes and emb.shape == (30, 64) and enc.shape == (30, 64)
                 and dec.shape == (5, feat.MOTION_DIMS))
    checks.append(_flag("model/desk_shape_contract", ok_shapes))

    full = mod.ModelConfig(d_model=800, heads=16, encoder_layers=1, decoder_layers=1,
                           seed_motion_frames=120, audio_frames=240, future_frames=20,
                           use_qra=False)
    full_w = mod.init_weights(full, np.random.default_rng(2))
    pm = rng.standard_normal((120, feat.MOTION_DIMS))
    pa = rng.standard_normal((240, feat.AUDIO_DIMS))
    p_emb = mod.embed_stream(pa, "audio", full_w, full)
    p_out = mod.predict_future(full_w, full, pm, pa)
    checks.append(_flag("model/full_scale_shape_contract",
                        p_emb.shape == (240, 800) and p_out.shape == (20, feat.MOTION_DIMS)))

    plain = _tiny_config(use_spe=False, use_qra=False)
    plain_w = mod.init_weights(plain, np.random.default_rng(3))
    got = mod.predict_future(plain_w, plain, motion, audio)
    ref = _reference_canonical_forward(plain_w, plain, motion, audio)
    checks.append(_check("model/ablation_matches_reference", float(np.abs(got - ref).max()), 1e-10))

    zero_depth = _tiny_config(encoder_layers=0)
    zd_w = mod.init_weights(zero_depth, np.random.default_rng(4))
    hidden = rng.standard_normal((6, 8))
    checks.append(_check("model/zero_depth_encoder_identity",
                         float(np.abs(mod.encode(hidden, "motion", zd_w, zero_depth) - hidden).max()),
                         0.0))

    spe_on = mod.encode(mod.embed_stream(motion, "motion", weights, config), "motion",
                        weights, config)
    config_off = _tiny_config(use_spe=False)
    spe_off = mod.encode(mod.embed_stream(motion, "motion", weights, config_off), "motion",
                         weights, config_off)
    checks.append(_flag("model/spe_toggle_changes_encoding",
                        float(np.abs(spe_on - spe_off).max()) > 1e-8))

    gen0 = mod.autoregressive_generate(motion, audio, 0, weights, config)
    gen1 = mod.autoregressive_generate(motion, audio, 1, weights, config)
    first = mod.predict_future(weights, config, motion, audio[:config.audio_frames])[0]
    gen_long = mod.autoregressive_generate(
        motion, rng.standard_normal((9 + 11, feat.AUDIO_DIMS)), 12, weights, config)
    ok = (gen0.shape == (0, feat.MOTION_DIMS)
          and gen1.shape == (1, feat.MOTION_DIMS)
          and float(np.abs(gen1[0] - first).max()) == 0.0
          and gen_long.shape == (12, feat.MOTION_DIMS)
          and bool(np.all(np.isfinite(gen_long))))
    checks.append(_flag("model/autoregressive_keep_first", ok))

    report = _model_grad_report()
    checks.append(_check("model/end_to_end_gradients", report.max_error, report.tol))
    return checks


def _model_grad_report(probes: int = 2) -> num.GradReport:
    """Central-difference check through the full desk model.

    Every named tensor is probed at a seeded subset of coordinates; the
    analytic gradient comes from one tape backward pass.
    """
    rng = np.random.default_rng(19)
    config = mod.ModelConfig()
    weights = mod.init_weights(config, np.random.default_rng(5))
    names = sorted(weights)
    motion = rng.standard_normal((1, config.seed_motion_frames, feat.MOTION_DIMS))
    audio = rng.standard_normal((1, config.audio_frames, feat.AUDIO_DIMS))
    target = rng.standard_normal((1, config.future_frames, feat.MOTION_DIMS))

    def fn(arrays):
        local = {name: Tensor(a, requires_grad=True) for name, a in zip(names, arrays)}
        loss = trn.l2_loss(mod.forward(local, config, motion, audio), target)
        loss.backward()
        return float(loss.data), [local[n].grad if local[n].grad is not None
                                  else np.zeros_like(local[n].data) for n in names]

    return num.grad_check(fn, [weights[n].data for n in names], tol=1e-4,
                          names=names, max_probes_per_param=probes)


# --------------------------------------------------------------- training

def training_checks() -> list:
    rng = np.random.default_rng(20)
    checks = []

    full = trn.TrainConfig.full_scale()
    ok = (trn.lr_at(0, full) == 1e-4 and trn.lr_at(89999, full) == 1e-4
          and trn.lr_at(90000, full) == 1e-5 and trn.lr_at(149999, full) == 1e-5
          and trn.lr_at(150000, full) == 1e-6 and trn.lr_at(10 ** 7, full) == 1e-6)
    checks.append(_flag("training/lr_schedule_hand_values", ok))

    rates = [trn.lr_at(s, trn.TrainConfig()) for s in range(0, 6000, 7)]
    checks.append(_flag("training/lr_non_increasing",
                        all(b <= a for a, b in zip(rates, rates[1:]))))

    w = {"x": Tensor(np.array([0.0]), requires_grad=True)}
    state = trn.init_adam(w)
    trn.adam_step(w, {"x": np.array([1.0])}, state, 0.1, trn.TrainConfig())
    delta = float(w["x"].data[0])
    checks.append(_check("training/adam_first_step", abs(delta + 0.1), 1e-8))

    w = {"x": Tensor(np.array([2.0, -1.0]), requires_grad=True)}
    state = trn.init_adam(w)
    state.m["x"][:] = 0.5
    state.v["x"][:] = 0.25
    before = w["x"].data.copy()
    cfg = trn.TrainConfig()
    trn.adam_step(w, {"x": np.zeros(2)}, state, 0.0, cfg)
    ok = (float(np.abs(w["x"].data - before).max()) == 0.0
          and float(state.m["x"][0]) == 0.5 * cfg.beta1
          and float(state.v["x"][0]) == 0.25 * cfg.beta2)
    checks.append(_flag("training/adam_zero_grad_decay", ok))

    try:
        trn.adam_step(w, {"x": np.array([np.nan, 1.0])}, state, 0.1, cfg)
        ok = False
    except NonFiniteGradient:
        ok = True
    checks.append(_flag("training/non_finite_gradient_guard", ok))

    same = np.ones((3, 2))
    ok = (trn.l2_loss(same, same) == 0.0
          and trn.l2_loss(same + 2.0, same) == 4.0
          and trn.l2_loss(np.array([[3.0]]), np.array([[1.0]])) == 4.0)
    checks.append(_flag("training/l2_hand_values", ok))

    w = {"x": Tensor(rng.standard_normal(4), requires_grad=True)}
    state = trn.init_adam(w)
    before = w["x"].data.copy()
    for _ in range(3):
        trn.adam_step(w, {"x": rng.standard_normal(4)}, state, 0.0, cfg)
    checks.append(_check("training/zero_lr_freeze", float(np.abs(w["x"].data - before).max()), 0.0))

    config = _tiny_config()
    audio, motion = feat.synth_pair(3, 0.4, beat_period_frames=5)
    data = [(audio, motion)]
    tc = trn.TrainConfig(batch_size=2, total_steps=5, decay_steps=((3, 1e-5), (5, 1e-6)))
    w1 = mod.init_weights(config, np.random.default_rng(6))
    t1 = trn.train(w1, data, tc, config)
    w2 = mod.init_weights(config, np.random.default_rng(6))
    t2 = trn.train(w2, data, tc, config)
    same_trace = t1 == t2
    same_weights = all(np.array_equal(w1[n].data, w2[n].data) for n in w1)
    checks.append(_flag("training/determinism", same_trace and same_weights))

    checks.append(_flag("training/single_example_overfit", _overfit_reaches(1e-3)))
    return checks


def _overfit_reaches(threshold: float, steps: int = 2000) -> bool:
    """One synthetic window, desk model: loss must sink below threshold."""
    config = mod.ModelConfig()
    audio, motion = feat.synth_pair(9, (trn.window_span(config) + 1) / config.fps,
                                    beat_period_frames=12)
    weights = mod.init_weights(config, np.random.default_rng(7))
    span = trn.window_span(config)
    data = [(audio[:span], motion[:span])]
    tc = trn.TrainConfig(batch_size=1, total_steps=steps,
                         decay_steps=((10 ** 6, 1e-5), (2 * 10 ** 6, 1e-6)))
    trace = trn.train(weights, data, tc, config)
    return min(loss for _, _, loss in trace) < threshold


# --------------------------------------------------------------- features

def features_checks() -> list:
    import os
    import tempfile

    rng = np.random.default_rng(21)
    checks = []

    checks.append(_flag("features/channel_layout",
                        feat.AUDIO_DIMS == 35 and feat.MOTION_DIMS == 219
                        and feat.BEAT_CHANNEL == 34 and feat.PEAK_CHANNEL == 33
                        and feat.MFCC_CHANNELS == slice(1, 21)
                        and feat.CHROMA_CHANNELS == slice(21, 33)
                        and len(feat.JOINT_NAMES) == 24))

    audio, motion = feat.synth_pair(5, 2.0, beat_period_frames=30)
    beat = audio[:, feat.BEAT_CHANNEL]
    ok = (set(np.unique(beat)) <= {0.0, 1.0}
          and list(np.where(beat == 1.0)[0]) == [0, 30, 60, 90])
    checks.append(_flag("features/synth_beat_channel", ok))

    mb = met.motion_beats(motion)
    music = met.music_beats(audio)
    interior = [t for t in music.frames if 1 <= t <= motion.shape[0] - 3]
    checks.append(_flag("features/generator_beat_lock",
                        list(mb.frames) == interior
                        and abs(met.beat_align(mb, music) - 1.0) <= 1e-9))

    a2, m2 = feat.synth_pair(5, 2.0, beat_period_frames=30)
    checks.append(_flag("features/synth_determinism",
                        np.array_equal(audio, a2) and np.array_equal(motion, m2)))

    quats = []
    for _ in range(feat.JOINT_COUNT):
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        if q[0] < 0:
            q = -q
        quats.append(quat.Quaternion(*q))
    trans = rng.standard_normal(3)
    frame = feat.encode_motion_frame(quats, trans)
    back_q, back_t = feat.decode_motion_frame(frame)
    worst = max(min(float(np.abs(b.as_array() - a.as_array()).max()),
                    float(np.abs(b.as_array() + a.as_array()).max()))
                for b, a in zip(back_q, quats))  # quaternion double cover
    checks.append(_check("features/encode_decode_round_trip",
                         max(worst, float(np.abs(back_t - trans).max())), 1e-9))

    block = quat.quat_to_rotmat(quats[0]) + rng.uniform(-1e-2, 1e-2, (3, 3))
    proj = feat.nearest_rotation(block)
    checks.append(_check("features/polar_projection",
                         float(np.abs(proj.T @ proj - np.eye(3)).max()), 1e-9))

    try:
        feat.decode_motion_frame(np.zeros(218))
        ok = False
    except DimensionMismatch:
        ok = True
    checks.append(_flag("features/frame_length_guard", ok))

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "audio.csv")
        meta = feat.StreamMeta(kind="audio", fps=60, frames=audio.shape[0], dims=35)
        feat.save_stream(path, audio, meta)
        loaded, meta2 = feat.load_stream(path)
        checks.append(_flag("features/file_round_trip",
                            np.array_equal(loaded, audio) and meta2 == meta))

        try:
            feat.StreamMeta(kind="audio", fps=60, frames=3, dims=219)
            ok = False
        except MetaMismatch:
            ok = True
        checks.append(_flag("features/meta_kind_guard", ok))
    return checks


_GROUPS = {
    "algebra": algebra_checks,
    "spe": spe_checks,
    "qra": qra_checks,
    "grad": grad_checks,
    "metrics": metrics_checks,
    "numerics": numerics_checks,
    "model": model_checks,
    "training": training_checks,
    "features": features_checks,
}


def run(suite: str = "all") -> list:
    """Run one public suite, or every group for 'all'."""
    if suite == "all":
        groups = PUBLIC_SUITES + INTERNAL_GROUPS
    elif suite in PUBLIC_SUITES:
        groups = (suite,)
    else:
        raise ValueError(f"unknown suite {suite!r}")
    checks = []
    for group in groups:
        found = _GROUPS[group]()
        found.append(_check(f"{group}/check_count",
                            abs(len(found) - EXPECTED_COUNTS[group]), 0.0))
        checks.extend(found)
    return checks


def render(checks) -> str:
    lines = []
    for c in checks:
        mark = "pass" if c.passed else "FAIL"
        lines.append(f"[{mark}] {c.name}  measured={c.measured:.3e}  tol={c.tolerance:.3e}")
    good = sum(1 for c in checks if c.passed)
    lines.append(f"{good}/{len(checks)} checks passed")
    return "\n".join(lines)


def all_passed(checks) -> bool:
    return all(c.passed for c in checks)

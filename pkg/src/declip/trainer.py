"""Optimisation loop, evaluation, grid sweeps and checkpoint I/O."""

import csv
import io
import math
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import losses
from .datasets import SubspaceSpec, gen_subspace_dataset, split, substream
from .errors import (CheckpointError, CheckpointVersionError, InvalidArgumentError,
                     MissingGroundTruthError, TrainingDivergedError)
from .forward_ops import ClipSpec, clip
from .metrics import METRICS
from .network import MLPConfig, MLPParams, init_params, predict

SUPERVISED = "supervised"
SUPERVISED_PLUS_EI = "supervised_plus_ei"
SELF_MC_EI = "self_mc_ei"
MC_ONLY = "mc_only"
NMC_EI = "nmc_ei"
LOSS_MODES = (SUPERVISED, SUPERVISED_PLUS_EI, SELF_MC_EI, MC_ONLY, NMC_EI)
SELF_SUPERVISED_MODES = (SELF_MC_EI, MC_ONLY, NMC_EI)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 300
    batch_size: int = 100
    loss_mode: str = SELF_MC_EI
    loss_config: losses.LossConfig = field(default_factory=losses.LossConfig)
    seed: int = 0
    eval_every: int = 0

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.epochs > 0 and self.batch_size > 0):
            raise InvalidArgumentError("learning_rate, epochs and batch_size must be positive")
        if self.loss_mode not in LOSS_MODES:
            raise InvalidArgumentError(f"unknown loss_mode {self.loss_mode!r}")
        if self.eval_every < 0:
            raise InvalidArgumentError("eval_every must be >= 0")

    @classmethod
    def synthetic(cls, **kw):
        """Defaults for the random-subspace experiment."""
        base = dict(learning_rate=1e-4, epochs=300, batch_size=100,
                    loss_config=losses.LossConfig(lam=1.0, group=losses.GroupSampler(0.5, 1.5)))
        base.update(kw)
        return cls(**base)

    @classmethod
    def cone(cls, **kw):
        """Defaults for the scaled-copies (cone) experiment."""
        base = dict(learning_rate=5e-4, epochs=300, batch_size=50,
                    loss_config=losses.LossConfig(lam=1.0, group=losses.GroupSampler(0.1, 2.0)))
        base.update(kw)
        return cls(**base)


@dataclass
class OptState:
    m: list
    v: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, **kw):
        return cls([np.zeros_like(a) for a in params.arrays()],
                   [np.zeros_like(a) for a in params.arrays()], **kw)


@dataclass
class TrainReport:
    epochs: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def to_csv(self, include_timing=False):
        """CSV text with columns epoch, loss, sdr (and seconds if requested).

        Timing is excluded by default so that reruns are byte-identical.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "sdr"] + (["seconds"] if include_timing else []))
        for i, e in enumerate(self.epochs):
            row = [e, repr(self.losses[i]), repr(self.metrics[i])]
            if include_timing:
                row.append(repr(self.seconds[i]))
            w.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True)
class EvalSummary:
    mean: float
    std: float
    values: np.ndarray


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update; returns new ``(params, state)``."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return params.with_arrays(new_p), replace(state, m=new_m, v=new_v, step=t)


def _batch_loss(config, params, spec, y, x, rng):
    lc = config.loss_config
    mode = config.loss_mode
    if mode == SUPERVISED:
        return losses.loss_supervised(params, x, y)
    if mode == MC_ONLY:
        return losses.loss_mc(params, y, spec, lc.sat_tol)
    if mode == SELF_MC_EI:
        return losses.loss_combined(params, y, spec, lc, rng=rng)
    if mode == NMC_EI:
        base, grads = losses.loss_nmc(params, y, spec)
    else:
        base, grads = losses.loss_supervised(params, x, y)
    if lc.lam == 0:
        return base, grads
    ei, g_ei = losses.loss_ei(params, y, spec, lc.group, lc.ei_samples_per_item, rng)
    return base + lc.lam * ei, losses.add_grads(grads, g_ei, lc.lam)


def _finite_grads(grads):
    return all(np.all(np.isfinite(a)) for a in grads.arrays())


def fit(config, params, y, spec, x=None, eval_set=None, metric="sdr", log=None):
    """Train ``params`` on measurements ``y`` (and signals ``x`` for supervised modes).

    Self-supervised modes accept measurements only; passing ``x`` raises.
    ``eval_set`` is an optional ``(x_eval, y_eval)`` pair scored every
    ``config.eval_every`` epochs and after the last epoch.

    Returns ``(params, TrainReport)``.
    """
    y = np.asarray(y, dtype=np.float64)
    if config.loss_mode in SELF_SUPERVISED_MODES:
        if x is not None:
            raise InvalidArgumentError(
                f"{config.loss_mode} is self-supervised and must not receive ground truth")
    else:
        if x is None:
            raise MissingGroundTruthError(f"{config.loss_mode} training needs ground-truth signals")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != y.shape:
            raise InvalidArgumentError("signals and measurements differ in shape")
    N = len(y)
    if N == 0:
        raise InvalidArgumentError("empty training set")

    state = OptState.for_params(params)
    report = TrainReport()
    step = 0
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = substream(config.seed, 1, epoch).permutation(N)
        g_rng = substream(config.seed, 2, epoch)
        total = 0.0
        for b, start in enumerate(range(0, N, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb = None if x is None else x[idx]
            value, grads = _batch_loss(config, params, spec, y[idx], xb, g_rng)
            step += 1
            if not (math.isfinite(value) and _finite_grads(grads)):
                raise TrainingDivergedError(
                    f"non-finite loss at step {step} (epoch {epoch}, batch {b})",
                    step=step, batch=b)
            params, state = adam_step(params, grads, state, config.learning_rate)
            total += value
        report.epochs.append(epoch)
        report.losses.append(total / N)
        score = float("nan")
        if eval_set is not None and (
                epoch == config.epochs or (config.eval_every and epoch % config.eval_every == 0)):
            score = evaluate(params, eval_set[0], eval_set[1], metric).mean
        report.metrics.append(score)
        report.seconds.append(time.perf_counter() - t0)
        if log is not None:
            log(epoch, report.losses[-1], score)
    return params, report


def evaluate(params, x, y, metric="sdr"):
    """Mean and standard deviation of ``metric(x_i, f(y_i))`` over a test set.

    ``params=None`` scores the measurements themselves (identity baseline).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) == 0:
        raise InvalidArgumentError("empty test set")
    xhat = y if params is None else predict(params, y)
    fn = METRICS[metric]
    values = np.array([fn(xi, xh) for xi, xh in zip(x, xhat)])
    return EvalSummary(float(values.mean()), float(values.std()), values)


# ---------------------------------------------------------------------------
# grid sweep over subspace dimension k and clipped fraction v


@dataclass(frozen=True)
class SweepConfig:
    ambient_dim: int = 100
    count: int = 1000
    threshold: float = 1.0
    train_fraction: float = 0.9
    hidden: int = 100
    depth: int = 5
    skip_blend: bool = True
    train: TrainConfig = field(default_factory=TrainConfig.synthetic)
    seed: int = 0


def cell_seed(master, *keys):
    return int(np.random.SeedSequence([master, *keys]).generate_state(1)[0])


def sweep_cell(k, v, config, ki=0, vi=0):
    """Generate one ``(k, v)`` dataset, train both methods and score them.

    Returns a list of row dicts, one per method (identity, supervised,
    self_supervised).
    """
    data_seed = cell_seed(config.seed, ki, vi)
    spec = ClipSpec.symmetric(config.threshold)
    ds = SubspaceSpec(config.ambient_dim, k, v, config.threshold, config.count, data_seed)
    _, signals = gen_subspace_dataset(ds)
    measurements = clip(signals, spec)
    (x_tr, y_tr), (x_te, y_te) = split((signals, measurements), config.train_fraction, data_seed)

    mlp = MLPConfig.synthetic_default(config.ambient_dim, config.hidden, config.depth,
                                    skip_blend=config.skip_blend, clip_spec=spec)
    init = init_params(mlp, cell_seed(config.seed, ki, vi, 1))
    rows = [dict(method="identity", k=k, v=v, **_summary(evaluate(None, x_te, y_te)))]
    sup_cfg = replace(config.train, loss_mode=SUPERVISED)
    p_sup, _ = fit(sup_cfg, init, y_tr, spec, x=x_tr)
    rows.append(dict(method="supervised", k=k, v=v, **_summary(evaluate(p_sup, x_te, y_te))))
    self_cfg = replace(config.train, loss_mode=SELF_MC_EI)
    p_self, _ = fit(self_cfg, init, y_tr, spec)
    rows.append(dict(method="self_supervised", k=k, v=v, **_summary(evaluate(p_self, x_te, y_te))))
    return rows


def _summary(s):
    return dict(mean_sdr=s.mean, std_sdr=s.std)


def _run_cell(args):
    return sweep_cell(*args)


def grid_sweep(k_values, v_values, config, workers=1):
    """Mean test SDR for every ``(k, v)`` cell and every method.

    Rows are ordered by method, then k, then v, independent of ``workers``.
    """
    k_values, v_values = list(k_values), list(v_values)
    if not k_values or not v_values:
        raise InvalidArgumentError("k and v value lists must be nonempty")
    jobs = [(k, v, config, ki, vi) for ki, k in enumerate(k_values)
            for vi, v in enumerate(v_values)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    rows = [r for cell in results for r in cell]
    order = {"identity": 0, "supervised": 1, "self_supervised": 2}
    rows.sort(key=lambda r: (order[r["method"]], k_values.index(r["k"]), v_values.index(r["v"])))
    return rows


SWEEP_COLUMNS = ("method", "k", "v", "mean_sdr", "std_sdr")


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# checkpoints: b"DCLP", u32 version, u32 layer count, u32 widths, f64 weights

MAGIC = b"DCLP"
FORMAT_VERSION = 1


def save_checkpoint(params, path):
    if params.biases is not None:
        raise CheckpointError("checkpoint format stores bias-free networks only")
    widths = params.config.layer_widths
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(params.weights)))
        fh.write(struct.pack(f"<{len(widths)}I", *widths))
        for W in params.weights:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())


def load_checkpoint(path, skip_blend=False, clip_spec=None, sat_tol=0.0):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes")
    if len(data) < 12:
        raise CheckpointError(f"{path}: truncated header")
    version, layers = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}")
    off = 12
    need = off + 4 * (layers + 1)
    if layers < 1 or len(data) < need:
        raise CheckpointError(f"{path}: truncated or invalid layer table")
    widths = struct.unpack_from(f"<{layers + 1}I", data, off)
    off = need
    expected = off + 8 * sum(a * b for a, b in zip(widths[:-1], widths[1:]))
    if len(data) != expected:
        raise CheckpointError(f"{path}: expected {expected} bytes, found {len(data)}")
    weights = []
    for w_in, w_out in zip(widths[:-1], widths[1:]):
        count = w_in * w_out
        W = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(w_out, w_in)
        weights.append(W.astype(np.float64))
        off += 8 * count
    config = MLPConfig(widths, skip_blend=skip_blend, clip_spec=clip_spec, sat_tol=sat_tol)
    return MLPParams(config, weights)

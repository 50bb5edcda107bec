"""Dynamic-range experiment on a scale-invariant (cone) dataset.

Signals are scaled copies ``e_i x0`` of one nonnegative image and the
measurements are ``eta(A x)`` with ``A`` Haar-orthogonal. Because ``A`` is
orthogonal the networks are trained on ``z = A x`` with the plain clipping
losses and their outputs are mapped back with ``A^T``; every loss value is
unchanged by this change of variables.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import ConeSpec, cone_amplitudes, digit_fixture, gen_cone, haar_orthogonal, split
from .errors import InvalidArgumentError
from .forward_ops import ClipSpec, clip
from .metrics import dynamic_range
from .network import MLPConfig, init_params, predict
from .trainer import NMC_EI, SELF_MC_EI, TrainConfig, cell_seed, fit

DYNRANGE_COLUMNS = ("id", "amplitude", "dr_true", "dr_mc_ei", "dr_nmc_ei")


@dataclass(frozen=True)
class DynRangeConfig:
    count: int = 1000
    amplitude_mean: float = 2.0
    mu1: float = 0.0
    mu2: float = 0.4
    train_fraction: float = 0.8
    hidden: int = 256
    depth: int = 3
    train: TrainConfig = field(default_factory=TrainConfig.cone)
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1 or self.hidden < 1:
            raise InvalidArgumentError("depth and hidden must be >= 1")


@dataclass(frozen=True)
class DynRangeResult:
    rows: list
    median_error_mc: float
    median_error_nmc: float


def _train(args):
    mode, config, params, y, spec = args
    trained, _ = fit(replace(config, loss_mode=mode), params, y, spec)
    return trained


def dynamic_range_experiment(config, base_signal=None, workers=1):
    """Train MC+EI and NMC+EI networks and compare reconstructed dynamic ranges.

    Test items are restricted to amplitudes inside the range seen in
    training. Returns a :class:`DynRangeResult` whose rows follow
    ``DYNRANGE_COLUMNS`` in ascending amplitude order, and the median
    relative dynamic-range error of each model.
    """
    x0 = digit_fixture() if base_signal is None else np.asarray(base_signal, dtype=np.float64)
    n = x0.size
    spec = ClipSpec(config.mu1, config.mu2)
    cone = ConeSpec(x0, config.amplitude_mean, config.count, cell_seed(config.seed, 0))
    X = gen_cone(cone)
    amp = cone_amplitudes(cone)
    A = haar_orthogonal(n, cell_seed(config.seed, 1)).matrix
    Y = clip(X @ A.T, spec)

    tr, te = split(np.arange(config.count), config.train_fraction, cell_seed(config.seed, 2))
    lo, hi = amp[tr].min(), amp[tr].max()
    te = te[(amp[te] >= lo) & (amp[te] <= hi)]
    te = te[np.argsort(amp[te], kind="stable")]

    widths = (n,) + (config.hidden,) * (config.depth - 1) + (n,)
    mlp = MLPConfig(widths, skip_blend=False, clip_spec=spec)
    init = init_params(mlp, cell_seed(config.seed, 3))
    jobs = [(mode, config.train, init, Y[tr], spec) for mode in (SELF_MC_EI, NMC_EI)]
    if workers > 1:
        with ProcessPoolExecutor(min(workers, 2)) as pool:
            models = list(pool.map(_train, jobs))
    else:
        models = [_train(j) for j in jobs]

    dr_true = np.array([dynamic_range(x) for x in X[te]])
    dr_hat = [np.array([dynamic_range(x) for x in predict(p, Y[te]) @ A]) for p in models]
    rows = [dict(id=int(i), amplitude=float(amp[i]), dr_true=float(t),
                 dr_mc_ei=float(a), dr_nmc_ei=float(b))
            for i, t, a, b in zip(te, dr_true, dr_hat[0], dr_hat[1])]
    err = [float(np.median(np.abs(d - dr_true) / dr_true)) for d in dr_hat]
    return DynRangeResult(rows, err[0], err[1])

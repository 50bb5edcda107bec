"""Learning-free declipping by half-quadratic splitting.

Alternates the proximal step of the consistency penalty with
soft-thresholding in an orthonormal DCT-II basis.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct, idct

from .datasets import make_rng, rescale_to_fraction
from .errors import InvalidArgumentError, ShapeMismatchError
from .forward_ops import ClipSpec, blend, clip, rho, saturation_mask

Y_BASED = "y"
X_BASED = "x"


def geometric_schedule(initial, iterations, factor=0.8):
    return tuple(float(initial) * factor ** i for i in range(iterations))


@dataclass(frozen=True)
class HQSConfig:
    iterations: int = 50
    gamma: float = 10.0
    threshold_schedule: tuple = field(default_factory=lambda: geometric_schedule(1.0, 50))
    transform: str = "dct2"
    prox_condition: str = Y_BASED
    exact_saturated: bool = False
    sat_tol: float = 0.0

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be >= 1")
        if not self.gamma > 0:
            raise InvalidArgumentError("gamma must be > 0")
        sched = tuple(float(t) for t in self.threshold_schedule)
        if len(sched) != self.iterations:
            raise InvalidArgumentError("threshold schedule length must equal iterations")
        if any(t < 0 for t in sched) or any(b > a for a, b in zip(sched, sched[1:])):
            raise InvalidArgumentError("threshold schedule must be nonnegative and non-increasing")
        if self.transform != "dct2":
            raise InvalidArgumentError(f"unsupported transform {self.transform!r}")
        if self.prox_condition not in (Y_BASED, X_BASED):
            raise InvalidArgumentError("prox_condition must be 'y' or 'x'")
        object.__setattr__(self, "threshold_schedule", sched)

    @classmethod
    def geometric(cls, iterations=50, gamma=10.0, initial_threshold=1.0, factor=0.8, **kw):
        schedule = geometric_schedule(initial_threshold, iterations, factor)
        return cls(iterations, gamma, schedule, **kw)


def prox_mc(x, y, gamma, spec, condition=Y_BASED, tol=0.0, exact_saturated=False):
    """Proximal step of the consistency term.

    Averages ``x`` towards ``y`` with weight ``gamma`` on unsaturated
    entries and leaves the rest unchanged. ``condition='x'`` selects
    entries by ``mu1 <= x_j <= mu2`` instead of by the saturation of ``y``.
    With ``exact_saturated`` the one-sided penalty on saturated entries is
    also minimised: entries on the wrong side of their threshold are
    averaged towards it, the others are kept.
    """
    if not gamma > 0:
        raise InvalidArgumentError("gamma must be > 0")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"prox_mc shapes differ: {x.shape} vs {y.shape}")
    if condition == Y_BASED:
        active = ~saturation_mask(y, spec, tol)
    else:
        active = (x >= spec.mu1) & (x <= spec.mu2)
    out = np.where(active, (x + gamma * y) / (1.0 + gamma), x)
    if exact_saturated:
        upper = (y >= spec.mu2 - tol) & (x < y)
        lower = (y <= spec.mu1 + tol) & ~(y >= spec.mu2 - tol) & (x > y)
        pulled = (x + gamma * y) / (1.0 + gamma)
        out = np.where(upper | lower, pulled, out)
    return out


def dct2(x):
    return dct(x, type=2, norm="ortho", axis=-1)


def idct2(c):
    return idct(c, type=2, norm="ortho", axis=-1)


def soft_threshold(c, tau):
    return np.sign(c) * np.maximum(np.abs(c) - tau, 0.0)


def soft_threshold_denoise(x, tau, transform="dct2"):
    """Shrink the orthonormal DCT-II coefficients of ``x`` by ``tau``."""
    if tau < 0:
        raise InvalidArgumentError("tau must be >= 0")
    if transform != "dct2":
        raise InvalidArgumentError(f"unsupported transform {transform!r}")
    return idct2(soft_threshold(dct2(np.asarray(x, dtype=np.float64)), tau))


def consistency_residual(x, y, spec, tol=0.0):
    """``sum rho(x, y)^2``."""
    r = rho(x, y, spec, tol)
    return float(np.sum(r * r))


def hqs_declip(y, config, spec, return_history=False):
    """Declip ``y`` starting from ``x_0 = y``.

    Each iteration applies :func:`prox_mc` then DCT soft-thresholding with
    the scheduled threshold; the final iterate is blended with ``y`` so
    unsaturated samples are returned unchanged. With ``return_history``
    the consistency residual of every iterate is also returned.
    """
    y = np.asarray(y, dtype=np.float64)
    x = y.copy()
    history = [consistency_residual(x, y, spec, config.sat_tol)]
    for tau in config.threshold_schedule:
        u = prox_mc(x, y, config.gamma, spec, config.prox_condition, config.sat_tol,
                    config.exact_saturated)
        x = soft_threshold_denoise(u, tau, config.transform)
        history.append(consistency_residual(x, y, spec, config.sat_tol))
    out = blend(y, x, spec, config.sat_tol)
    if return_history:
        return out, history
    return out


def dct_sparse_fixture(n=256, active=5, clip_fraction=0.2, count=10, seed=0, mu=1.0):
    """Signals with ``active`` nonzero DCT coefficients, scaled so that
    ``ceil(clip_fraction * n)`` samples reach ``mu`` in magnitude.

    Returns ``(signals, measurements, spec)``.
    """
    rng = make_rng(seed)
    spec = ClipSpec.symmetric(mu)
    p = math.ceil(clip_fraction * n)
    X = np.empty((count, n))
    for i in range(count):
        while True:
            c = np.zeros(n)
            support = rng.choice(np.arange(1, n // 8), active, replace=False)
            c[support] = rng.standard_normal(active)
            x = rescale_to_fraction(idct2(c), p, mu)
            if x is not None:
                break
        X[i] = x
    return X, clip(X, spec), spec

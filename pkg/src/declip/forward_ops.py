"""Clipping forward model and the element-wise helpers built on it.

All functions are vectorised over numpy arrays and are pure.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError, ShapeMismatchError


@dataclass(frozen=True)
class ClipSpec:
    """Lower and upper saturation thresholds."""

    mu1: float
    mu2: float

    def __post_init__(self):
        if not (np.isfinite(self.mu1) and np.isfinite(self.mu2)):
            raise InvalidArgumentError("clip thresholds must be finite")
        if not self.mu1 < self.mu2:
            raise InvalidArgumentError(
                f"need mu1 < mu2, got mu1={self.mu1}, mu2={self.mu2}")

    @classmethod
    def symmetric(cls, mu):
        if not mu > 0:
            raise InvalidArgumentError(f"symmetric threshold must be > 0, got {mu}")
        return cls(-float(mu), float(mu))

    @property
    def is_symmetric(self):
        return self.mu1 == -self.mu2

    @property
    def width(self):
        return self.mu2 - self.mu1

    def real_data_tol(self):
        """Saturation band used for stored or quantised measurements."""
        return 1e-4 * self.width


class SaturationPartition(NamedTuple):
    saturated: np.ndarray
    unsaturated: np.ndarray


def _finite(x, what="input"):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{what} contains non-finite entries")
    return x


def clip(x, spec):
    """Apply the element-wise clipping operator ``eta``.

    Entries at or below ``mu1`` map to ``mu1``, entries at or above ``mu2``
    map to ``mu2`` and the open interval is left untouched.
    """
    x = _finite(x)
    return np.clip(x, spec.mu1, spec.mu2)


def _check_tol(tol):
    if tol < 0:
        raise InvalidArgumentError(f"tolerance must be >= 0, got {tol}")


def saturation_mask(y, spec, tol=0.0):
    """Boolean mask, True where ``y`` sits on (or within ``tol`` of) a threshold."""
    _check_tol(tol)
    y = np.asarray(y, dtype=np.float64)
    return (y >= spec.mu2 - tol) | (y <= spec.mu1 + tol)


def partition_saturation(y, spec, tol=0.0):
    """Split the indices of a single measurement into saturated / unsaturated sets."""
    y = _finite(y, "measurement")
    if y.ndim != 1:
        raise ShapeMismatchError("partition_saturation expects a 1-D measurement")
    mask = saturation_mask(y, spec, tol)
    return SaturationPartition(np.flatnonzero(mask), np.flatnonzero(~mask))


def _check_measurement(b, spec):
    b = _finite(b, "measurement")
    if np.any(b < spec.mu1) or np.any(b > spec.mu2):
        raise InvalidInputError("measurement entries must lie in [mu1, mu2]")
    return b


def _branches(b, spec, tol):
    upper = b >= spec.mu2 - tol
    lower = (b <= spec.mu1 + tol) & ~upper
    return upper, lower


def rho(a, b, spec, tol=0.0):
    """Consistency penalty between a prediction ``a`` and a measurement ``b``.

    ``|b - a|`` where ``b`` is interior, ``(b - a)_+`` where ``b`` is on the
    upper threshold and ``(a - b)_+`` where it is on the lower one.
    """
    _check_tol(tol)
    a = np.asarray(a, dtype=np.float64)
    b = _check_measurement(b, spec)
    a, b = np.broadcast_arrays(a, b)
    upper, lower = _branches(b, spec, tol)
    out = np.abs(b - a)
    out = np.where(upper, np.maximum(b - a, 0.0), out)
    out = np.where(lower, np.maximum(a - b, 0.0), out)
    return out


def rho_grad_a(a, b, spec, tol=0.0):
    """Derivative of ``rho(a, b)**2`` with respect to ``a`` (0 at the kinks)."""
    _check_tol(tol)
    a = np.asarray(a, dtype=np.float64)
    b = _check_measurement(b, spec)
    a, b = np.broadcast_arrays(a, b)
    upper, lower = _branches(b, spec, tol)
    diff = a - b
    grad = 2.0 * diff
    grad = np.where(upper, np.where(diff < 0, 2.0 * diff, 0.0), grad)
    grad = np.where(lower, np.where(diff > 0, 2.0 * diff, 0.0), grad)
    return grad


def blend(y, net_out, spec, tol=0.0):
    """Keep ``y`` on unsaturated entries and ``net_out`` on saturated ones."""
    y = np.asarray(y, dtype=np.float64)
    net_out = np.asarray(net_out, dtype=np.float64)
    if y.shape != net_out.shape:
        raise ShapeMismatchError(
            f"blend shapes differ: {y.shape} vs {net_out.shape}")
    return np.where(saturation_mask(y, spec, tol), net_out, y)


def quantize255(x):
    """8-bit quantisation with clipping from above: floor(255 min(1, x) + 0.5) / 255."""
    x = _finite(x)
    return np.floor(255.0 * np.minimum(1.0, x) + 0.5) / 255.0


def camera_curve(u, beta, sigma):
    """Sigmoidal camera response ``(1 + sigma) u^beta / (u^beta + sigma)``."""
    if not (beta > 0 and sigma > 0):
        raise InvalidArgumentError("beta and sigma must be positive")
    u = _finite(u)
    if np.any(u < 0):
        raise InvalidInputError("camera curve input must be nonnegative")
    p = u ** beta
    return (1.0 + sigma) * p / (p + sigma)

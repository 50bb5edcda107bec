"""Distortion metrics (dB) and the dynamic-range statistic."""

import numpy as np

from .errors import InvalidInputError, ShapeMismatchError

DB_CAP = 150.0


def _pair(x, xhat):
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise ShapeMismatchError(f"metric inputs differ in shape: {x.shape} vs {xhat.shape}")
    return x, xhat


def sdr(x, xhat):
    """Signal-to-distortion ratio ``20 log10(||x|| / ||x - xhat||)``, capped at 150 dB."""
    x, xhat = _pair(x, xhat)
    ref = np.linalg.norm(x)
    if ref == 0:
        raise InvalidInputError("SDR undefined for a zero reference signal")
    err = np.linalg.norm(x - xhat)
    if err < 1e-15 * ref:
        return DB_CAP
    return float(min(DB_CAP, 20.0 * np.log10(ref / err)))


def psnr(x, xhat):
    """``20 log10(1 / ||x - xhat||_2)`` with no per-pixel normalisation."""
    x, xhat = _pair(x, xhat)
    err = np.linalg.norm(x - xhat)
    if err == 0:
        return DB_CAP
    return float(min(DB_CAP, -20.0 * np.log10(err)))


def psnr_per_pixel(x, xhat, peak=1.0):
    """Conventional PSNR, ``10 log10(peak^2 / MSE)``."""
    x, xhat = _pair(x, xhat)
    mse = np.mean((x - xhat) ** 2)
    if mse == 0:
        return DB_CAP
    return float(min(DB_CAP, 10.0 * np.log10(peak ** 2 / mse)))


def dynamic_range(x):
    """``max(x) - min(x)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise InvalidInputError("dynamic range of an empty signal")
    return float(x.max() - x.min())


METRICS = {"sdr": sdr, "psnr": psnr, "psnr_per_pixel": psnr_per_pixel}

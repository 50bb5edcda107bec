"""Training objectives for declipping networks.

Each loss takes network parameters and a batch (rows are items) and
returns ``(value, grads)`` where ``grads`` has the layout of the
parameters. Values are sums over the batch.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ShapeMismatchError
from .forward_ops import clip, rho, rho_grad_a
from .network import backward, forward


@dataclass(frozen=True)
class GroupSampler:
    """Uniform distribution of scale factors on ``[g_min, g_max]``."""

    g_min: float = 0.5
    g_max: float = 1.5

    def __post_init__(self):
        if not 0 < self.g_min < self.g_max:
            raise InvalidArgumentError("need 0 < g_min < g_max")

    def sample(self, rng, size):
        return rng.uniform(self.g_min, self.g_max, size)


@dataclass(frozen=True)
class LossConfig:
    lam: float = 1.0
    group: GroupSampler = field(default_factory=GroupSampler)
    ei_samples_per_item: int = 1
    sat_tol: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidArgumentError("lambda must be >= 0")
        if self.ei_samples_per_item < 1:
            raise InvalidArgumentError("ei_samples_per_item must be >= 1")


def _batch(y):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape[0] == 0:
        raise InvalidArgumentError("empty batch")
    return y


def _interior(a, spec):
    return (a > spec.mu1) & (a < spec.mu2)


def add_grads(a, b, scale=1.0):
    return a.with_arrays([u + scale * v for u, v in zip(a.arrays(), b.arrays())])


def loss_nmc(params, y, spec):
    """Naive consistency ``sum ||y - eta(f(y))||^2``.

    The clipping operator passes no gradient where the prediction lies
    outside ``(mu1, mu2)``.
    """
    Y = _batch(y)
    xhat, trace = forward(params, Y)
    r = Y - clip(xhat, spec)
    value = float(np.sum(r * r))
    grad_out = -2.0 * r * _interior(xhat, spec)
    grads, _ = backward(params, trace, grad_out)
    return value, grads


def loss_mc(params, y, spec, tol=0.0):
    """Consistency ``sum ||rho(f(y), y)||^2``."""
    Y = _batch(y)
    xhat, trace = forward(params, Y)
    r = rho(xhat, Y, spec, tol)
    value = float(np.sum(r * r))
    grads, _ = backward(params, trace, rho_grad_a(xhat, Y, spec, tol))
    return value, grads


def loss_ei(params, y, spec, group=None, samples=1, rng=None, g=None):
    """Scale-equivariance loss ``sum_i E_g ||g f(y_i) - f(eta(g f(y_i)))||^2``.

    The expectation is a Monte Carlo average over ``samples`` draws per
    item. Pass ``g`` with shape ``(batch, samples)`` to freeze the draws.
    Gradients flow through both network evaluations and through the
    interior indicator of the clipping operator.
    """
    Y = _batch(y)
    B = Y.shape[0]
    if g is None:
        if rng is None:
            raise InvalidArgumentError("loss_ei needs either rng or explicit g")
        g = (group or GroupSampler()).sample(rng, (B, samples))
    g = np.asarray(g, dtype=np.float64).reshape(B, -1)
    S = g.shape[1]

    x1, trace1 = forward(params, Y)
    z = (g[:, :, None] * x1[:, None, :]).reshape(B * S, -1)
    yz = clip(z, spec)
    x2, trace2 = forward(params, yz)
    r = z - x2
    value = float(np.sum(r * r)) / S

    d_x2 = -2.0 * r / S
    grads2, d_yz = backward(params, trace2, d_x2)
    d_z = 2.0 * r / S + d_yz * _interior(z, spec)
    d_x1 = np.sum(g[:, :, None] * d_z.reshape(B, S, -1), axis=1)
    grads1, _ = backward(params, trace1, d_x1)
    return value, add_grads(grads1, grads2)


def loss_supervised(params, x, y):
    """Mean-square fit to ground truth, ``sum ||f(y) - x||^2``."""
    X, Y = _batch(x), _batch(y)
    if X.shape != Y.shape:
        raise ShapeMismatchError(f"signal/measurement batches differ: {X.shape} vs {Y.shape}")
    xhat, trace = forward(params, Y)
    r = xhat - X
    grads, _ = backward(params, trace, 2.0 * r)
    return float(np.sum(r * r)), grads


def loss_combined(params, y, spec, config, rng=None, g=None):
    """``loss_mc + lam * loss_ei`` with summed gradients."""
    mc, g_mc = loss_mc(params, y, spec, config.sat_tol)
    if config.lam == 0:
        return mc, g_mc
    ei, g_ei = loss_ei(params, y, spec, config.group, config.ei_samples_per_item, rng, g)
    return mc + config.lam * ei, add_grads(g_mc, g_ei, config.lam)

"""Fully connected ReLU network with hand-written reverse-mode gradients.

Batches are row-major: an input of shape ``(batch, n)`` maps to an output
of shape ``(batch, n)``. Without biases the network is positively
homogeneous, ``f(g y) = g f(y)`` for every ``g > 0``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datasets import make_rng
from .errors import InvalidArgumentError, ShapeMismatchError
from .forward_ops import ClipSpec, saturation_mask


@dataclass(frozen=True)
class MLPConfig:
    layer_widths: tuple
    bias_free: bool = True
    skip_blend: bool = False
    clip_spec: Optional[ClipSpec] = None
    sat_tol: float = 0.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2 or min(widths) < 1:
            raise InvalidArgumentError("need at least input and output widths >= 1")
        if self.skip_blend:
            if self.clip_spec is None:
                raise InvalidArgumentError("skip_blend requires a clip_spec")
            if widths[0] != widths[-1]:
                raise InvalidArgumentError("skip_blend requires input width == output width")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def depth(self):
        return len(self.layer_widths) - 1

    @classmethod
    def synthetic_default(cls, n=100, hidden=100, depth=5, **kw):
        """MLP used for the random-subspace experiment: depth 5, width 100."""
        return cls((n,) + (hidden,) * (depth - 1) + (n,), **kw)


@dataclass
class MLPParams:
    config: MLPConfig
    weights: list
    biases: Optional[list] = None

    def arrays(self):
        """Flat list of all parameter arrays (weights first, then biases)."""
        return list(self.weights) + (list(self.biases) if self.biases is not None else [])

    def with_arrays(self, arrays):
        L = len(self.weights)
        biases = list(arrays[L:]) if self.biases is not None else None
        return MLPParams(self.config, list(arrays[:L]), biases)

    def copy(self):
        return self.with_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self):
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])

    @property
    def size(self):
        return sum(a.size for a in self.arrays())


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    blend_mask: Optional[np.ndarray] = None


def init_params(config, seed=0):
    """He-normal initialisation, ``W ~ N(0, 2 / fan_in)``."""
    rng = make_rng(seed)
    widths = config.layer_widths
    weights = [rng.standard_normal((w_out, w_in)) * np.sqrt(2.0 / w_in)
               for w_in, w_out in zip(widths[:-1], widths[1:])]
    biases = None if config.bias_free else [np.zeros(w) for w in widths[1:]]
    return MLPParams(config, weights, biases)


def identity_params(n, skip_blend=False, clip_spec=None):
    """Single linear layer with ``W = I``."""
    config = MLPConfig((n, n), skip_blend=skip_blend, clip_spec=clip_spec)
    return MLPParams(config, [np.eye(n)])


def _as_batch(y, width):
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    if single:
        y = y[None, :]
    if y.ndim != 2 or y.shape[1] != width:
        raise ShapeMismatchError(f"expected input width {width}, got shape {y.shape}")
    return y, single


def forward(params, y):
    """Evaluate the network on a batch.

    Returns
    -------
    xhat : ndarray, same shape as ``y``
    trace : ForwardTrace
        Intermediate values needed by :func:`backward`.
    """
    cfg = params.config
    Y, single = _as_batch(y, cfg.layer_widths[0])
    trace = ForwardTrace(inputs=Y)
    h = Y
    last = len(params.weights) - 1
    for i, W in enumerate(params.weights):
        z = h @ W.T
        if params.biases is not None:
            z = z + params.biases[i]
        trace.pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        trace.post.append(h)
    out = h
    if cfg.skip_blend:
        mask = saturation_mask(Y, cfg.clip_spec, cfg.sat_tol)
        trace.blend_mask = mask
        out = np.where(mask, out, Y)
    return (out[0] if single else out), trace


def predict(params, y):
    return forward(params, y)[0]


def backward(params, trace, grad_out):
    """Reverse-mode pass through a recorded forward evaluation.

    Parameters
    ----------
    grad_out : ndarray
        Gradient of a scalar loss with respect to the network output.

    Returns
    -------
    grads : MLPParams
        Gradients with the same layout as ``params``.
    grad_input : ndarray
        Gradient with respect to the network input.
    """
    X = trace.inputs
    G = np.asarray(grad_out, dtype=np.float64)
    single = G.ndim == 1
    if single:
        G = G[None, :]
    if len(trace.pre) != len(params.weights) or G.shape != trace.post[-1].shape:
        raise ShapeMismatchError("trace does not match parameters or output gradient")
    for W, z in zip(params.weights, trace.pre):
        if z.shape[1] != W.shape[0]:
            raise ShapeMismatchError("stale trace: layer widths changed")

    grad_input = np.zeros_like(X)
    if trace.blend_mask is not None:
        grad_input += np.where(trace.blend_mask, 0.0, G)
        G = np.where(trace.blend_mask, G, 0.0)

    L = len(params.weights)
    gW = [None] * L
    gb = [None] * L if params.biases is not None else None
    delta = G
    for i in range(L - 1, -1, -1):
        if i < L - 1:
            delta = delta * (trace.pre[i] > 0)
        h_in = X if i == 0 else trace.post[i - 1]
        gW[i] = delta.T @ h_in
        if gb is not None:
            gb[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i]
    grad_input += delta
    grads = MLPParams(params.config, gW, gb)
    return grads, (grad_input[0] if single else grad_input)

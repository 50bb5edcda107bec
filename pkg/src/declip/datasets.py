"""Synthetic signal sets and random measurement operators.

Every generator takes an integer seed and draws from a ``numpy`` PCG64
stream, so datasets are bit-reproducible across runs and platforms.
Independent sub-streams are obtained with :func:`substream`.
"""

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError

GAUSSIAN_UNIT = "gaussian_unit"
GAUSSIAN_SCALED = "gaussian_scaled"
HAAR_ORTHOGONAL = "haar_orthogonal"


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def substream(seed, *keys):
    """Generator for an independent stream identified by ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *keys])))


def exponential(rng, mean, size):
    # inverse CDF on U[0, 1)
    u = rng.random(size)
    return -mean * np.log1p(-u)


@dataclass(frozen=True)
class ConeSpec:
    base_signal: np.ndarray
    amplitude_mean: float = 2.0
    count: int = 1000
    seed: int = 0

    def __post_init__(self):
        x0 = np.asarray(self.base_signal, dtype=np.float64)
        if x0.ndim != 1 or not np.all(np.isfinite(x0)):
            raise InvalidInputError("base signal must be a finite 1-D vector")
        if not np.any(x0):
            raise InvalidInputError("base signal must be nonzero")
        if not self.amplitude_mean > 0:
            raise InvalidArgumentError("amplitude_mean must be > 0")
        if self.count < 1:
            raise InvalidArgumentError("count must be >= 1")
        object.__setattr__(self, "base_signal", x0)


@dataclass(frozen=True)
class SubspaceSpec:
    ambient_dim: int = 100
    subspace_dim: int = 1
    clip_fraction: float = 0.2
    threshold: float = 1.0
    count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.subspace_dim <= self.ambient_dim:
            raise InvalidArgumentError("need 1 <= subspace_dim <= ambient_dim")
        if not 0 < self.clip_fraction < 1:
            raise InvalidArgumentError("clip_fraction must lie in (0, 1)")
        if not self.threshold > 0:
            raise InvalidArgumentError("threshold must be > 0")
        if self.count < 1:
            raise InvalidArgumentError("count must be >= 1")

    @property
    def clipped_count(self):
        return math.ceil(self.clip_fraction * self.ambient_dim)


@dataclass(frozen=True)
class RandomOperator:
    matrix: np.ndarray
    kind: str
    seed: int

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    def apply_rows(self, X):
        """Apply the operator to each row of ``X``."""
        return np.asarray(X) @ self.matrix.T


def gen_cone(spec):
    """Scaled copies ``e_i * x0`` of a base signal, ``e_i ~ Exp(mean)``.

    Returns an ``(count, n)`` array.
    """
    rng = make_rng(spec.seed)
    amplitudes = exponential(rng, spec.amplitude_mean, spec.count)
    return amplitudes[:, None] * spec.base_signal[None, :]


def cone_amplitudes(spec):
    """The amplitudes used by :func:`gen_cone` for the same spec."""
    return exponential(make_rng(spec.seed), spec.amplitude_mean, spec.count)


def rescale_to_fraction(x, p, mu):
    """Scale ``x`` so that exactly ``p`` entries have magnitude >= ``mu``.

    Returns None when the draw is degenerate (zero or tied pivot).
    """
    mags = np.sort(np.abs(x))[::-1]
    pivot = mags[p - 1]
    if pivot == 0.0:
        return None
    scale = mu / pivot
    # push the pivot strictly above the threshold so clipping always changes it
    while pivot * scale <= mu:
        scale = np.nextafter(scale, np.inf)
    out = x * scale
    if np.count_nonzero(np.abs(out) >= mu) != p:
        return None
    return out


def gen_subspace_dataset(spec):
    """Signals from a random ``k``-dimensional subspace of ``R^n``.

    Basis vectors and in-subspace coefficients are standard normal. Each
    signal is rescaled so that exactly ``ceil(v n)`` of its entries reach
    the threshold in magnitude.

    Returns
    -------
    basis : ndarray, shape (n, k)
    signals : ndarray, shape (count, n)
    """
    rng = make_rng(spec.seed)
    n, k = spec.ambient_dim, spec.subspace_dim
    basis = rng.standard_normal((n, k))
    p = spec.clipped_count
    signals = np.empty((spec.count, n))
    for i in range(spec.count):
        while True:
            x = basis @ rng.standard_normal(k)
            scaled = rescale_to_fraction(x, p, spec.threshold)
            if scaled is not None:
                break
        signals[i] = scaled
    return basis, signals


def gaussian_operator(m, n, scaled=False, seed=0):
    """i.i.d. normal ``m x n`` matrix with variance 1 or ``1/m``."""
    if m < 1 or n < 1:
        raise InvalidArgumentError("operator dimensions must be >= 1")
    A = make_rng(seed).standard_normal((m, n))
    if scaled:
        A /= math.sqrt(m)
    return RandomOperator(A, GAUSSIAN_SCALED if scaled else GAUSSIAN_UNIT, seed)


def haar_matrix(rng, n):
    Z = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    # Mezzadri's correction: make diag(R) positive so Q is Haar distributed
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs[None, :]


def haar_orthogonal(n, seed=0):
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    return RandomOperator(haar_matrix(make_rng(seed), n), HAAR_ORTHOGONAL, seed)


def split(data, train_fraction, seed=0):
    """Deterministic shuffle-split along the first axis.

    ``data`` is an array or a tuple of equal-length arrays; the returned
    ``(train, test)`` pair has the same structure.
    """
    if not 0 < train_fraction < 1:
        raise InvalidArgumentError("train_fraction must lie in (0, 1)")
    arrays = data if isinstance(data, tuple) else (data,)
    arrays = tuple(np.asarray(a) for a in arrays)
    count = len(arrays[0])
    if any(len(a) != count for a in arrays):
        raise InvalidArgumentError("arrays to split have different lengths")
    n_train = int(round(train_fraction * count))
    if n_train == 0 or n_train == count:
        raise InvalidArgumentError(
            f"split of {count} items at fraction {train_fraction} leaves one side empty")
    perm = make_rng(seed).permutation(count)
    train = tuple(a[perm[:n_train]] for a in arrays)
    test = tuple(a[perm[n_train:]] for a in arrays)
    if isinstance(data, tuple):
        return train, test
    return train[0], test[0]


def digit_fixture():
    """Bundled 28x28 nonnegative test image, flattened to length 784."""
    path = resources.files("declip") / "data" / "digit28.csv"
    img = np.loadtxt(path.open(), delimiter=",")
    return img.reshape(-1)

"""Monte Carlo checks of the recovery and identification guarantees.

Covers injectivity of ``eta(A .)`` on bounded cones, the fraction of
saturated Gaussian projections, l1 concentration of Gaussian embeddings,
identification of a cone from its unsaturated measurements, and a
greedy box-counting dimension estimate.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .datasets import haar_matrix, make_rng, substream
from .errors import (InfeasibleRegimeError, InvalidArgumentError, InvalidInputError,
                     UnidentifiableError)
from .forward_ops import ClipSpec, clip

GAUSSIAN = "gaussian"
HAAR = "haar"
IDENTITY = "identity"


def radius_bound(k, m, mu):
    """Largest admissible signal norm ``mu (1/2 - (k+1)/m)`` for unit-variance operators."""
    bound = mu * (0.5 - (k + 1) / m)
    if bound <= 0:
        raise InfeasibleRegimeError(
            f"radius bound is nonpositive for k={k}, m={m}: need m > 2(k+1) = {2 * (k + 1)}")
    return bound


@dataclass(frozen=True)
class InjectivityTrialSpec:
    """Pairs drawn from a random ``k``-dimensional cone restricted to a ball.

    ``radius`` is expressed for a unit-variance Gaussian operator. The trial
    itself uses entries of variance ``1/m`` and the ball of radius
    ``sqrt(m) * radius``, which is the same experiment after rescaling.
    Isometric operators (``haar``, ``identity``) use ``radius`` directly.
    """

    cone_dim: int = 2
    ambient_n: int = 50
    measurement_m: int = 40
    threshold: float = 1.0
    radius: Optional[float] = None
    pair_count: int = 10_000
    seed: int = 0
    collision_tol: Optional[float] = None
    operator: str = GAUSSIAN
    pairs_per_operator: int = 100
    enforce_bound: bool = True

    def __post_init__(self):
        if min(self.cone_dim, self.ambient_n, self.measurement_m, self.pair_count) < 1:
            raise InvalidArgumentError("dimensions and pair_count must be positive")
        if self.cone_dim > self.ambient_n:
            raise InvalidArgumentError("cone_dim cannot exceed ambient_n")
        if self.operator not in (GAUSSIAN, HAAR, IDENTITY):
            raise InvalidArgumentError(f"unknown operator {self.operator!r}")
        if self.operator != GAUSSIAN and self.measurement_m != self.ambient_n:
            raise InvalidArgumentError("isometric operators need measurement_m == ambient_n")
        if self.radius is not None and not self.radius > 0:
            raise InvalidArgumentError("radius must be > 0")

    def resolved_radius(self):
        if self.operator == GAUSSIAN and (self.enforce_bound or self.radius is None):
            bound = radius_bound(self.cone_dim, self.measurement_m, self.threshold)
            if self.radius is None:
                return 0.5 * bound
            if self.radius >= bound:
                raise InfeasibleRegimeError(
                    f"radius {self.radius} is not below the bound {bound}")
            return self.radius
        if self.radius is None:
            raise InvalidArgumentError("radius is required for isometric operators")
        return self.radius

    def resolved_tol(self):
        if self.collision_tol is not None:
            return self.collision_tol
        return 1e-9 * math.sqrt(self.measurement_m) * self.threshold


@dataclass(frozen=True)
class TrialReport:
    pairs_tested: int
    collisions: int
    mean_saturated_fraction: float
    residuals: np.ndarray

    @property
    def collision_rate(self):
        return self.collisions / self.pairs_tested


def _orthonormal_basis(rng, n, k):
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return Q


def _sample_cone(rng, basis, count, r_max):
    k = basis.shape[1]
    c = rng.standard_normal((count, k))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    r = r_max * (1.0 - rng.random(count))  # uniform on (0, r_max]
    return (r[:, None] * c) @ basis.T


def _operator(rng, kind, m, n):
    if kind == GAUSSIAN:
        return rng.standard_normal((m, n)) / math.sqrt(m)
    if kind == HAAR:
        return haar_matrix(rng, n)
    return np.eye(n)


def _collide(A, X, U, spec, tol):
    """Collision flags, common-unsaturated residuals and saturated fractions."""
    AX, AU = X @ A.T, U @ A.T
    YX, YU = clip(AX, spec), clip(AU, spec)
    hit = np.max(np.abs(YX - YU), axis=1) <= tol
    unsat = (np.abs(AX) < spec.mu2) & (np.abs(AU) < spec.mu2)
    residual = np.max(np.where(unsat, np.abs(AX - AU), 0.0), axis=1)
    sat = 0.5 * (np.mean(np.abs(AX) >= spec.mu2, axis=1) + np.mean(np.abs(AU) >= spec.mu2, axis=1))
    return hit, residual, sat


def injectivity_trial(spec):
    """Count pairs ``x != u`` of the cone whose clipped projections coincide.

    A fresh operator is drawn for every block of ``pairs_per_operator``
    pairs; a pair collides when ``||eta(Ax) - eta(Au)||_inf <= tol``.
    """
    R = spec.resolved_radius()
    tol = spec.resolved_tol()
    m, n = spec.measurement_m, spec.ambient_n
    r_max = math.sqrt(m) * R if spec.operator == GAUSSIAN else R
    clip_spec = ClipSpec.symmetric(spec.threshold)
    rng = make_rng(spec.seed)
    basis = _orthonormal_basis(rng, n, spec.cone_dim)

    hits, residuals, sats = [], [], []
    done = 0
    block = 0
    while done < spec.pair_count:
        size = min(spec.pairs_per_operator, spec.pair_count - done)
        brng = substream(spec.seed, block)
        A = _operator(brng, spec.operator, m, n)
        X = _sample_cone(brng, basis, size, r_max)
        U = _sample_cone(brng, basis, size, r_max)
        h, r, s = _collide(A, X, U, clip_spec, tol)
        hits.append(h)
        residuals.append(r)
        sats.append(s)
        done += size
        block += 1
    hits = np.concatenate(hits)
    return TrialReport(int(done), int(hits.sum()), float(np.mean(np.concatenate(sats))),
                       np.concatenate(residuals))


def degenerate_axis_trial(n, mu, pair_count, seed=0, operator=IDENTITY,
                          amplitude_range=(1.0, 3.0), pairs_per_operator=100):
    """Pairs along the first coordinate axis with amplitudes past ``mu``.

    Both signals of a pair are ``a e_1`` and ``b e_1`` with
    ``a, b ~ U(amplitude_range) * mu``. Without a rotation the clipping
    sends every such pair to the same corner.
    """
    lo, hi = amplitude_range
    if not 1.0 <= lo < hi:
        raise InvalidArgumentError("amplitude_range must satisfy 1 <= lo < hi")
    clip_spec = ClipSpec.symmetric(mu)
    tol = 1e-9 * math.sqrt(n) * mu
    hits, residuals, sats = [], [], []
    done, block = 0, 0
    while done < pair_count:
        size = min(pairs_per_operator, pair_count - done)
        brng = substream(seed, block)
        A = _operator(brng, operator, n, n)
        a = mu * brng.uniform(lo, hi, size)
        b = mu * brng.uniform(lo, hi, size)
        X = np.zeros((size, n))
        U = np.zeros((size, n))
        X[:, 0], U[:, 0] = a, b
        h, r, s = _collide(A, X, U, clip_spec, tol)
        hits.append(h)
        residuals.append(r)
        sats.append(s)
        done += size
        block += 1
    hits = np.concatenate(hits)
    return TrialReport(int(done), int(hits.sum()), float(np.mean(np.concatenate(sats))),
                       np.concatenate(residuals))


def saturation_fraction(x_norm, mu, m, trials, seed=0, n=16):
    """Empirical vs analytic fraction of entries of ``Ax`` with ``|(Ax)_i| >= mu``.

    ``A`` has unit-variance entries and ``||x|| = x_norm``; the analytic
    value is ``P(|g| x_norm >= mu) = erfc(mu / (x_norm sqrt 2))``.
    """
    if not (x_norm > 0 and mu > 0 and m >= 1 and trials >= 1):
        raise InvalidArgumentError("saturation_fraction needs positive arguments")
    rng = make_rng(seed)
    fractions = np.empty(trials)
    for t in range(trials):
        x = rng.standard_normal(n)
        x *= x_norm / np.linalg.norm(x)
        A = rng.standard_normal((m, n))
        fractions[t] = np.mean(np.abs(A @ x) >= mu)
    return float(fractions.mean()), analytic_saturation_fraction(x_norm, mu)


def analytic_saturation_fraction(x_norm, mu):
    if x_norm == 0:
        return 0.0
    return float(erfc(mu / (x_norm * math.sqrt(2.0))))


@dataclass(frozen=True)
class L1Row:
    m: int
    violation_rate: float
    mean_ratio: float


def l1_concentration(k, n, m_values, samples, seed=0, operators=100):
    """Fraction of unit vectors ``z`` of a random subspace with ``||Az||_1 > sqrt(m)``.

    ``A`` has entries of variance ``1/m``; ``samples`` vectors are split
    evenly over ``operators`` independent draws of ``A`` (and of the
    subspace). ``mean_ratio`` is the average of ``||Az||_1 / sqrt(m)``,
    whose expectation is ``sqrt(2 / pi)``.
    """
    if k > n:
        raise InvalidArgumentError("k cannot exceed n")
    rows = []
    for mi, m in enumerate(m_values):
        per = -(-samples // operators)
        viol, ratios, done = 0, [], 0
        for o in range(operators):
            size = min(per, samples - done)
            if size <= 0:
                break
            rng = substream(seed, mi, o)
            basis = _orthonormal_basis(rng, n, k)
            A = rng.standard_normal((m, n)) / math.sqrt(m)
            c = rng.standard_normal((size, k))
            c /= np.linalg.norm(c, axis=1, keepdims=True)
            l1 = np.abs((c @ basis.T) @ A.T).sum(axis=1)
            viol += int(np.count_nonzero(l1 > math.sqrt(m)))
            ratios.append(l1 / math.sqrt(m))
            done += size
        rows.append(L1Row(int(m), viol / done, float(np.mean(np.concatenate(ratios)))))
    return rows


# ---------------------------------------------------------------------------
# model identification


def conic_extension(measurements, spec, tol=0.0, angle_tol=1e-6):
    """Normalised directions of the strictly unsaturated measurements.

    The returned rows are unit vectors, deduplicated so that no two are
    closer than ``angle_tol``. For asymmetric thresholds with
    ``mu1 <= 0 < mu2`` the signals must be nonnegative and only the upper
    threshold filters measurements.

    Raises
    ------
    UnidentifiableError
        If ``0 < mu1`` (the cone is not determined by its clipped image) or
        no measurement survives the unsaturated filter.
    """
    Y = np.asarray(measurements, dtype=np.float64)
    if Y.ndim != 2:
        raise InvalidInputError("measurements must be a 2-D array of rows")
    if spec.is_symmetric:
        keep = np.all((Y > spec.mu1 + tol) & (Y < spec.mu2 - tol), axis=1)
    elif spec.mu1 <= 0 < spec.mu2:
        if np.any(Y < 0):
            raise InvalidInputError(
                "asymmetric identification requires nonnegative signals")
        keep = np.all(Y < spec.mu2 - tol, axis=1)
    else:
        raise UnidentifiableError(
            f"cone not identifiable from clipped data with 0 < mu1={spec.mu1} < mu2={spec.mu2}")
    Y = Y[keep]
    norms = np.linalg.norm(Y, axis=1)
    Y = Y[norms > 0]
    if len(Y) == 0:
        raise UnidentifiableError("no strictly unsaturated nonzero measurement in the sample")
    S = Y / np.linalg.norm(Y, axis=1, keepdims=True)
    return _dedupe(S, angle_tol)


def _dedupe(points, tol):
    reps = [points[0]]
    R = points[:1]
    for p in points[1:]:
        if np.min(np.linalg.norm(R - p, axis=1)) > tol:
            reps.append(p)
            R = np.asarray(reps)
    return np.asarray(reps)


def hausdorff(P, Q):
    P, Q = np.atleast_2d(P), np.atleast_2d(Q)
    D = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def two_ray_fixture(count=10_000, mu=1.0, seed=0, directions=None, amplitude_mean=1.0):
    """Clipped samples from the union of two rays in ``R^2``.

    Returns ``(measurements, unit_directions)``.
    """
    if directions is None:
        directions = np.array([[math.cos(0.3), math.sin(0.3)],
                               [math.cos(2.0), math.sin(2.0)]])
    D = np.asarray(directions, dtype=np.float64)
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    rng = make_rng(seed)
    which = rng.integers(0, len(D), count)
    amp = rng.exponential(amplitude_mean, count)
    X = amp[:, None] * D[which]
    return clip(X, ClipSpec.symmetric(mu)), D


def remark_counterexample(mu1, mu2, count=10_000, seed=0, amplitude_max=4.0):
    """Two distinct rays whose clipped images coincide when ``0 < mu1 < mu2``.

    The rays pass through ``(mu2, mu1/2)`` and ``(mu2, mu1/3)``. Returns
    ``(spec, Y1, Y2)`` with clipped samples from each ray.
    """
    if not 0 < mu1 < mu2:
        raise InvalidArgumentError("counterexample needs 0 < mu1 < mu2")
    spec = ClipSpec(mu1, mu2)
    rng = make_rng(seed)
    a = rng.uniform(0.0, amplitude_max, (2, count))
    x1 = np.array([mu2, mu1 / 2])
    x2 = np.array([mu2, mu1 / 3])
    return spec, clip(a[0][:, None] * x1, spec), clip(a[1][:, None] * x2, spec)


# ---------------------------------------------------------------------------
# box-counting dimension


def covering_number(points, eps):
    """Greedy farthest-point covering with balls of radius ``eps`` centred on the points.

    Upper bound on the minimal covering number (at most the covering number
    at ``eps / 2``).
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) == 0:
        raise InvalidArgumentError("empty point set")
    if not eps > 0:
        raise InvalidArgumentError("eps must be > 0")
    dist = np.linalg.norm(P - P[0], axis=1)
    count = 1
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= eps:
            return count
        np.minimum(dist, np.linalg.norm(P - P[far], axis=1), out=dist)
        count += 1


def box_dim_estimate(points, eps_grid):
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)``."""
    eps_grid = np.asarray(eps_grid, dtype=np.float64)
    if eps_grid.size < 2 or len(np.unique(eps_grid)) < 2:
        raise InvalidArgumentError("dimension estimate needs at least two distinct eps values")
    counts = np.array([covering_number(points, e) for e in eps_grid], dtype=np.float64)
    slope = np.polyfit(np.log(1.0 / eps_grid), np.log(counts), 1)[0]
    return float(slope)


def sphere_points(dim, n, count, seed=0):
    """``count`` uniform points on a unit ``dim``-sphere embedded in ``R^n``.

    The sphere lives in a random ``(dim + 1)``-dimensional subspace, so its
    box-counting dimension is ``dim`` regardless of ``n``.
    """
    if not 1 <= dim < n:
        raise InvalidArgumentError("need 1 <= dim < n")
    rng = make_rng(seed)
    basis = _orthonormal_basis(rng, n, dim + 1)
    c = rng.standard_normal((count, dim + 1))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return c @ basis.T

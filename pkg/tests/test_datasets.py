import math

import numpy as np
import pytest

from declip.datasets import (ConeSpec, SubspaceSpec, cone_amplitudes, digit_fixture, exponential,
                             gaussian_operator, gen_cone, gen_subspace_dataset, haar_orthogonal,
                             make_rng, rescale_to_fraction, split, substream)
from declip.errors import InvalidArgumentError, InvalidInputError
from declip.forward_ops import ClipSpec, clip


def test_streams_are_reproducible_and_distinct():
    assert make_rng(3).random() == make_rng(3).random()
    assert substream(3, 1).random() != substream(3, 2).random()


def test_exponential_inverse_cdf():
    e = exponential(make_rng(0), 2.0, 10)
    u = make_rng(0).random(10)
    assert np.allclose(e, -2.0 * np.log(1.0 - u), rtol=1e-15)


def test_cone_amplitude_mean():
    x0 = np.array([1.0, 2.0])
    spec = ConeSpec(x0, 2.0, 100_000, seed=1)
    assert 1.96 <= cone_amplitudes(spec).mean() <= 2.04


def test_cone_is_rank_one_and_deterministic():
    x0 = digit_fixture()
    spec = ConeSpec(x0, 2.0, 50, seed=4)
    X = gen_cone(spec)
    assert np.array_equal(X, gen_cone(spec))
    U = X / np.linalg.norm(X, axis=1, keepdims=True)
    assert np.max(np.abs(U - x0 / np.linalg.norm(x0))) <= 1e-10
    assert np.all(cone_amplitudes(spec) >= 0)


def test_cone_spec_validation():
    with pytest.raises(InvalidInputError):
        ConeSpec(np.zeros(3))
    with pytest.raises(InvalidArgumentError):
        ConeSpec(np.ones(3), amplitude_mean=0)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_subspace_clip_count_and_membership(k):
    spec = SubspaceSpec(100, k, 0.2, 1.0, 200, seed=k)
    basis, X = gen_subspace_dataset(spec)
    assert basis.shape == (100, k)
    assert np.all(np.count_nonzero(np.abs(X) >= 1.0, axis=1) == 20)
    P = basis @ np.linalg.pinv(basis)
    resid = np.linalg.norm(X - X @ P.T, axis=1)
    assert np.all(resid <= 1e-8 * np.linalg.norm(X, axis=1))


def test_subspace_clip_changes_the_largest_entries():
    spec = SubspaceSpec(100, 3, 0.3, 1.0, 50, seed=9)
    _, X = gen_subspace_dataset(spec)
    Y = clip(X, ClipSpec.symmetric(1.0))
    for x, y in zip(X, Y):
        # sort-based oracle: the 30 largest magnitudes are exactly the changed entries
        top = set(np.argsort(-np.abs(x))[:30].tolist())
        assert set(np.flatnonzero(x != y).tolist()) == top


def test_subspace_k1_collinear():
    _, X = gen_subspace_dataset(SubspaceSpec(50, 1, 0.1, 1.0, 20, seed=0))
    U = X / np.linalg.norm(X, axis=1, keepdims=True)
    G = np.abs(U @ U.T)
    assert np.allclose(G, 1.0, atol=1e-12)


def test_subspace_spec_validation():
    with pytest.raises(InvalidArgumentError):
        SubspaceSpec(10, 11)
    with pytest.raises(InvalidArgumentError):
        SubspaceSpec(clip_fraction=1.0)
    assert SubspaceSpec(100, 1, 0.25).clipped_count == 25
    assert SubspaceSpec(10, 1, 0.15).clipped_count == 2


def test_rescale_degenerate_draw():
    assert rescale_to_fraction(np.zeros(5), 2, 1.0) is None
    assert rescale_to_fraction(np.array([1.0, 1.0, 0.5]), 1, 1.0) is None
    out = rescale_to_fraction(np.array([3.0, -2.0, 0.5]), 2, 1.0)
    assert np.count_nonzero(np.abs(out) >= 1.0) == 2 and abs(out[1]) > 1.0


def test_gaussian_operator_moments():
    A = gaussian_operator(1000, 1000, seed=2)
    assert 0.99 <= A.matrix.var() <= 1.01
    assert np.array_equal(A.matrix, gaussian_operator(1000, 1000, seed=2).matrix)


def test_scaled_gaussian_l1_norm():
    m, trials = 400, 200
    x = np.zeros(30)
    x[0] = 1.0
    l1 = [np.abs(gaussian_operator(m, 30, scaled=True, seed=s) @ x).sum() for s in range(trials)]
    # entries of Ax are N(0, 1/m), so E ||Ax||_1 = m sqrt(2/pi) / sqrt(m) = sqrt(2m/pi)
    expected = math.sqrt(2 * m / math.pi)
    assert abs(np.mean(l1) / expected - 1) < 0.02


def test_haar_isometry_and_determinant():
    for n in (1, 2, 7, 40):
        Q = haar_orthogonal(n, seed=n).matrix
        x = make_rng(n).standard_normal(n)
        assert abs(np.linalg.norm(Q @ x) / np.linalg.norm(x) - 1) <= 1e-8
        assert abs(abs(np.linalg.det(Q)) - 1) <= 1e-8
    assert haar_orthogonal(1, 5).matrix[0, 0] in (1.0, -1.0)


def test_haar_first_entry_is_unbiased():
    # Haar measure: Q[0, 0] is symmetric about 0 with variance 1/n
    vals = np.array([haar_orthogonal(5, seed=s).matrix[0, 0] for s in range(4000)])
    assert abs(vals.mean()) < 0.03
    assert abs(vals.var() - 0.2) < 0.02


def test_split_sizes_union_and_determinism():
    data = np.arange(1000)
    tr, te = split(data, 0.9, seed=3)
    assert (len(tr), len(te)) == (900, 100)
    assert sorted(np.concatenate([tr, te]).tolist()) == data.tolist()
    tr2, _ = split(data, 0.9, seed=3)
    assert np.array_equal(tr, tr2)
    (a, b), (c, d) = split((data, data * 2), 0.5, seed=1)
    assert np.array_equal(a * 2, b) and np.array_equal(c * 2, d)
    with pytest.raises(InvalidArgumentError):
        split(np.arange(3), 0.01)


def test_digit_fixture():
    x = digit_fixture()
    assert x.shape == (784,)
    assert x.min() >= 0 and x.max() <= 1 and x.max() > 0

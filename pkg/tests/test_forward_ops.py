import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from declip.errors import InvalidArgumentError, InvalidInputError, ShapeMismatchError
from declip.forward_ops import (ClipSpec, blend, camera_curve, clip, partition_saturation,
                                quantize255, rho, rho_grad_a, saturation_mask)

SYM = ClipSpec.symmetric(1.0)
finite = st.floats(-10, 10, allow_nan=False)
vectors = arrays(np.float64, st.integers(1, 20), elements=finite)


def test_clipspec_validation():
    with pytest.raises(InvalidArgumentError):
        ClipSpec(1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        ClipSpec(0.0, float("inf"))
    with pytest.raises(InvalidArgumentError):
        ClipSpec.symmetric(0.0)
    assert SYM.is_symmetric and SYM.width == 2.0
    assert ClipSpec(0.0, 1.0).real_data_tol() == pytest.approx(1e-4)


def test_clip_examples():
    assert clip([-2, 0.5, 3], SYM).tolist() == [-1, 0.5, 1]
    assert clip([0.2, 0.6], ClipSpec(0.0, 0.4)).tolist() == [0.2, 0.4]
    x = np.array([0.3, -0.99, 0.0])
    assert np.array_equal(clip(x, SYM), x)


def test_clip_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        clip([np.nan], SYM)


@given(vectors, st.floats(-3, 3), st.floats(0.01, 5))
def test_clip_idempotent_and_in_range(x, mu1, width):
    spec = ClipSpec(mu1, mu1 + width)
    y = clip(x, spec)
    assert np.array_equal(clip(y, spec), y)
    assert np.all((y >= spec.mu1) & (y <= spec.mu2))


def test_partition_examples():
    p = partition_saturation([1, 0.3, -1], SYM)
    assert p.saturated.tolist() == [0, 2] and p.unsaturated.tolist() == [1]
    assert partition_saturation([0.1, -0.2], SYM).saturated.size == 0
    assert partition_saturation([0.9999], SYM, tol=1e-3).saturated.tolist() == [0]
    with pytest.raises(ShapeMismatchError):
        partition_saturation(np.zeros((2, 2)), SYM)
    with pytest.raises(InvalidArgumentError):
        saturation_mask([0.0], SYM, tol=-1)


def test_rho_examples():
    assert rho(0.3, 0.5, SYM) == pytest.approx(0.2, abs=1e-15)
    assert rho(1.4, 1.0, SYM) == 0.0
    assert rho(0.7, 1.0, SYM) == pytest.approx(0.3, abs=1e-15)
    assert rho(-1.4, -1.0, SYM) == 0.0
    assert rho(-0.7, -1.0, SYM) == pytest.approx(0.3, abs=1e-15)


def test_rho_rejects_out_of_range_measurement():
    with pytest.raises(InvalidInputError):
        rho(0.0, 1.5, SYM)


def test_rho_grad_examples():
    assert rho_grad_a(0.3, 0.5, SYM) == pytest.approx(-0.4, abs=1e-15)
    assert rho_grad_a(1.4, 1.0, SYM) == 0.0
    assert rho_grad_a(1.0, 1.0, SYM) == 0.0
    # at the kink the one-sided differences of rho^2 are 0 (flat side) and 0 (slope 2(a-b) -> 0)
    h = 1e-7
    left = (rho(1.0, 1.0, SYM) ** 2 - rho(1.0 - h, 1.0, SYM) ** 2) / h
    right = (rho(1.0 + h, 1.0, SYM) ** 2 - rho(1.0, 1.0, SYM) ** 2) / h
    assert abs(left) < 1e-6 and right == 0.0


@given(vectors, st.floats(-3, 3), st.floats(0.01, 5))
def test_rho_zero_when_consistent(x, mu1, width):
    spec = ClipSpec(mu1, mu1 + width)
    y = clip(x, spec)
    assert np.all(rho(x, y, spec) == 0.0)


@given(st.floats(-3, 3), st.sampled_from([-1.0, 1.0, 0.2, -0.6]))
def test_rho_grad_matches_central_differences(a, b):
    h = 1e-6
    if abs(a - b) < 1e-3:
        return  # kink
    num = (rho(a + h, b, SYM) ** 2 - rho(a - h, b, SYM) ** 2) / (2 * h)
    ana = rho_grad_a(a, b, SYM)
    assert abs(num - ana) <= 1e-6 * max(1.0, abs(ana))


def test_rho_asymmetric_branches():
    spec = ClipSpec(0.0, 0.4)
    assert rho(0.5, 0.4, spec) == 0.0
    assert rho(0.3, 0.4, spec) == pytest.approx(0.1)
    assert rho(-0.2, 0.0, spec) == 0.0
    assert rho(0.1, 0.0, spec) == pytest.approx(0.1)


def test_blend_examples():
    assert blend([0.5, 1.0], [9.0, 2.0], SYM).tolist() == [0.5, 2.0]
    y = np.array([0.1, -0.3])
    assert np.array_equal(blend(y, [5.0, 5.0], SYM), y)
    net = np.array([3.0, -4.0])
    assert np.array_equal(blend([1.0, -1.0], net, SYM), net)
    with pytest.raises(ShapeMismatchError):
        blend([0.0], [0.0, 1.0], SYM)


@given(vectors)
def test_blend_bit_equal_on_unsaturated(x):
    y = clip(x, SYM)
    out = blend(y, np.full_like(y, 7.0), SYM)
    keep = ~saturation_mask(y, SYM)
    assert np.array_equal(out[keep], y[keep])


def test_quantize_examples():
    assert quantize255([1.7]).tolist() == [1.0]
    assert quantize255([0.5]).tolist() == [128 / 255]
    assert quantize255([0.001]).tolist() == [0.0]


def test_quantize_exhaustive_grid():
    x = np.linspace(0.0, 1.5, 1_000_001)
    q = quantize255(x)
    k = q * 255.0
    # outputs are exact multiples of 1/255 with integer numerators in [0, 255]
    assert np.array_equal(k, np.round(k))
    assert k.min() >= 0 and k.max() <= 255
    # nearest level, ties rounded up
    t = 255.0 * np.minimum(1.0, x)
    assert np.all(np.abs(t - k) <= 0.5)
    ties = np.abs(t - k) == 0.5
    assert np.all(k[ties] > t[ties])
    # independent scalar oracle on a subsample
    for xi, qi in zip(x[::997], q[::997]):
        assert qi == math.floor(255.0 * min(1.0, float(xi)) + 0.5) / 255.0


@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 2)))
def test_quantize_idempotent(x):
    q = quantize255(x)
    assert np.array_equal(quantize255(q), q)
    assert len(np.unique(q)) <= 256


def test_camera_curve_examples():
    assert camera_curve([0.0], 0.9, 0.6).tolist() == [0.0]
    assert camera_curve([1.0], 0.9, 0.6)[0] == pytest.approx(1.0, abs=1e-15)
    assert camera_curve([0.5], 1.0, 1.0)[0] == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(InvalidArgumentError):
        camera_curve([0.5], 0.0, 1.0)
    with pytest.raises(InvalidInputError):
        camera_curve([-0.5], 1.0, 1.0)


@settings(max_examples=50)
@given(st.floats(0.1, 3), st.floats(0.1, 3))
def test_camera_curve_monotone_on_unit_interval(beta, sigma):
    u = np.linspace(0.0, 4.0, 2001)
    c = camera_curve(u, beta, sigma)
    assert np.all(np.diff(c) > 0)
    inside = c[u <= 1.0]
    assert inside.min() >= 0.0 and inside.max() <= 1.0 + 1e-15

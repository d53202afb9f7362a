import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from scalewave.errors import ArgumentError
from scalewave.wavelet.filters import (
    FilterPair,
    dilated_length,
    filter_penalty,
    filter_penalty_grad,
    init_filters,
    max_levels,
    quadrature_mirror,
    upsample_filter,
)
from scalewave.wavelet.swt import (
    SwtCoefficients,
    swt_adjoint,
    swt_backward,
    swt_forward,
    swt_inverse,
    tokenize_window,
)


def daubechies_lowpass(n_vanishing):
    """Minimum-phase spectral factor of the Daubechies half-band polynomial."""
    base = npoly.polymul([1.0, -2.0, 1.0], [-0.25])  # -(z-1)^2 / 4
    total = np.zeros(1)
    for k in range(n_vanishing):
        term = npoly.polymul(npoly.polypow(base, k), [0.0] * (n_vanishing - 1 - k) + [1.0])
        total = npoly.polyadd(total, math.comb(n_vanishing - 1 + k, k) * term)
    roots = npoly.polyroots(total)
    inside = roots[np.abs(roots) < 1.0]
    h = npoly.polymul(npoly.polypow([1.0, 1.0], n_vanishing), npoly.polyfromroots(inside)).real
    return h * math.sqrt(2.0) / h.sum()


def _rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / scale


def _random_filters(rng, k=4):
    return FilterPair(rng.normal(size=k), rng.normal(size=k))


# -----------------------------
# Filters
# -----------------------------
@pytest.mark.parametrize("basis", ["haar", "db4"])
def test_init_filters_are_orthonormal(basis):
    f = init_filters(basis)
    assert f.h.sum() == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert np.sum(f.h ** 2) == pytest.approx(1.0, abs=1e-10)
    assert f.g.sum() == pytest.approx(0.0, abs=1e-10)
    assert np.dot(f.h, f.g) == pytest.approx(0.0, abs=1e-12)


def test_db4_matches_independent_construction():
    oracle = daubechies_lowpass(4)
    h = init_filters("db4").h
    assert h.size == 8
    assert np.allclose(h, oracle, atol=1e-10) or np.allclose(h, oracle[::-1], atol=1e-10)


def test_init_filters_per_channel_rows():
    f = init_filters("haar", n_channels=3)
    assert f.h.shape == (3, 2)
    assert not f.shared
    np.testing.assert_array_equal(f.for_channel(2).h, f.h[0])


def test_init_filters_rejects_unknown_basis_and_tap_count():
    with pytest.raises(ArgumentError):
        init_filters("sym5")
    with pytest.raises(ArgumentError):
        init_filters("db4", k=4)


def test_filter_pair_rejects_odd_taps():
    with pytest.raises(ArgumentError):
        FilterPair([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


def test_quadrature_mirror_alternates_signs():
    np.testing.assert_array_equal(quadrature_mirror([1.0, 2.0, 3.0, 4.0]), [4.0, -3.0, 2.0, -1.0])


def test_upsample_filter_inserts_zeros():
    np.testing.assert_array_equal(upsample_filter([1.0, 2.0], 1), [1.0, 0.0, 2.0])
    np.testing.assert_array_equal(upsample_filter([1.0, 2.0, 3.0], 2), [1, 0, 0, 0, 2, 0, 0, 0, 3])
    assert dilated_length(8, 2) == 29
    assert max_levels(64, 8) == 4
    assert max_levels(10, 8) == 1


def test_filter_penalty_is_zero_at_init_and_gradient_matches():
    assert filter_penalty(init_filters("db4")) == pytest.approx(0.0, abs=1e-20)
    rng = np.random.default_rng(0)
    f = FilterPair(rng.normal(size=(2, 4)), rng.normal(size=(2, 4)))
    gh, gg = filter_penalty_grad(f)
    eps = 1e-6
    for arr, grad in ((f.h, gh), (f.g, gg)):
        idx = (1, 2)
        old = arr[idx]
        arr[idx] = old + eps
        up = filter_penalty(f)
        arr[idx] = old - eps
        down = filter_penalty(f)
        arr[idx] = old
        assert grad[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-6)


# -----------------------------
# Transform
# -----------------------------
@pytest.mark.parametrize("basis, levels", [("haar", 2), ("db4", 1)])
def test_reconstruction_interior(basis, levels):
    rng = np.random.default_rng(1)
    f = init_filters(basis)
    margin = f.k * 2 ** levels
    for _ in range(10):
        x = rng.normal(size=128)
        back = swt_inverse(swt_forward(x, f, levels), f)
        assert np.max(np.abs(back - x)[margin:-margin]) < 1e-8


@pytest.mark.parametrize("basis, levels", [("haar", 3), ("db4", 2)])
def test_reconstruction_periodic_is_exact(basis, levels):
    rng = np.random.default_rng(2)
    f = init_filters(basis)
    x = rng.normal(size=64)
    back = swt_inverse(swt_forward(x, f, levels, padding="periodic"), f, padding="periodic")
    np.testing.assert_allclose(back, x, atol=1e-10)


def test_periodic_transform_is_shift_equivariant_and_keeps_energy():
    rng = np.random.default_rng(3)
    f = init_filters("db4")
    x = rng.normal(size=64)
    S = 2
    coeffs = swt_forward(x, f, S, padding="periodic")
    shifted = swt_forward(np.roll(x, 5), f, S, padding="periodic")
    np.testing.assert_allclose(shifted.stack(), np.roll(coeffs.stack(), 5, axis=0), atol=1e-12)
    energy = sum(np.sum(coeffs.detail[:, s] ** 2) / 2 ** (s + 1) for s in range(S))
    energy += np.sum(coeffs.approx_final ** 2) / 2 ** S
    assert energy == pytest.approx(np.sum(x ** 2), rel=1e-10)


@pytest.mark.parametrize("padding", ["zero", "periodic"])
def test_adjoint_identity(padding):
    rng = np.random.default_rng(4)
    for _ in range(100):
        f = _random_filters(rng)
        S = int(rng.integers(1, 4))
        x = rng.normal(size=32)
        u = rng.normal(size=(32, S + 1))
        lhs = np.sum(swt_forward(x, f, S, padding).stack() * u)
        rhs = np.dot(x, swt_adjoint(u, f, padding))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("padding", ["zero", "periodic"])
def test_backward_matches_finite_differences(padding):
    rng = np.random.default_rng(5)
    eps = 1e-6
    for _ in range(100):
        f = _random_filters(rng)
        S = int(rng.integers(1, 4))
        x = rng.normal(size=24)
        u = rng.normal(size=(24, S + 1))

        def loss(xx, hh, gg):
            return np.sum(swt_forward(xx, FilterPair(hh, gg), S, padding).stack() * u)

        gx, gh, gg = swt_backward(x, f, S, u, padding)
        num_x = np.array([(loss(x + eps * e, f.h, f.g) - loss(x - eps * e, f.h, f.g)) / (2 * eps)
                          for e in np.eye(x.size)])
        num_h = np.array([(loss(x, f.h + eps * e, f.g) - loss(x, f.h - eps * e, f.g)) / (2 * eps)
                          for e in np.eye(f.k)])
        num_g = np.array([(loss(x, f.h, f.g + eps * e) - loss(x, f.h, f.g - eps * e)) / (2 * eps)
                          for e in np.eye(f.k)])
        assert _rel_err(gx, num_x) < 1e-5
        assert _rel_err(gh, num_h) < 1e-5
        assert _rel_err(gg, num_g) < 1e-5


def test_too_deep_names_maximum_levels():
    with pytest.raises(ArgumentError) as info:
        swt_forward(np.zeros(10), init_filters("db4"), 2)
    assert "maximum feasible is 1" in str(info.value)


def test_short_prefix_allowed_without_depth_check():
    coeffs = swt_forward(np.ones(5), init_filters("db4"), 2, check_depth=False)
    assert coeffs.stack().shape == (5, 3)


def test_stack_layout_round_trip():
    coeffs = swt_forward(np.arange(16.0), init_filters("haar"), 2)
    stacked = coeffs.stack()
    np.testing.assert_array_equal(stacked[:, 0], coeffs.detail[:, 0])
    np.testing.assert_array_equal(stacked[:, -1], coeffs.approx_final)
    again = SwtCoefficients.from_stack(stacked)
    np.testing.assert_array_equal(again.detail, coeffs.detail)


def test_haar_first_level_values():
    f = init_filters("haar")
    coeffs = swt_forward([1.0, 3.0, 5.0, 7.0], f, 1)
    r = 1 / math.sqrt(2.0)
    np.testing.assert_allclose(coeffs.approx_final, [4 * r, 8 * r, 12 * r, 7 * r])
    np.testing.assert_allclose(coeffs.detail[:, 0], [-2 * r, -2 * r, -2 * r, 7 * r])


def test_tokenize_window_uses_feature_rows():
    rng = np.random.default_rng(6)
    window = rng.normal(size=(2, 3, 16))
    f = FilterPair(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)))
    tokens = tokenize_window(window, f, 2)
    assert tokens.shape == (2, 3, 16, 3)
    np.testing.assert_allclose(tokens[1, 2], swt_forward(window[1, 2], f.for_channel(2), 2).stack())
    with pytest.raises(ArgumentError):
        tokenize_window(window, init_filters("haar", n_channels=2), 1)

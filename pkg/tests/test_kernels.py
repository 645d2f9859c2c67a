"""Kernels: built-ins, truncation windows, smoothness, ellipticity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czbench import kernels as kn


def test_hilbert_value():
    K = kn.hilbert_kernel()
    assert kn.eval_kernel(K, 0, [[1.0]], [[0.0]])[0] == 1.0
    assert kn.eval_kernel(K, 0, [[0.0]], [[2.0]])[0] == -0.5


def test_riesz_value():
    K = kn.riesz_kernel(2, 0.0)
    v = kn.eval_kernel(K, 0, [[1.0, 0.0]], [[0.0, 0.0]])[0]
    assert v == pytest.approx(1.0)
    v2 = kn.eval_kernel(K, 1, [[1.0, 0.0]], [[0.0, 0.0]])[0]
    assert v2 == pytest.approx(0.0)


def test_fractional_value():
    K = kn.fractional_kernel(1, 0.5)
    assert kn.eval_kernel(K, 0, [[4.0]], [[0.0]])[0] == pytest.approx(0.5)


def test_eval_kernel_rejects_diagonal():
    K = kn.hilbert_kernel()
    with pytest.raises(ValueError):
        kn.eval_kernel(K, 0, [[1.0]], [[1.0]])


def test_adjoint_involution():
    K = kn.riesz_kernel(2, 0.25)
    KK = kn.adjoint_kernel(kn.adjoint_kernel(K))
    rng = np.random.default_rng(0)
    x, y = rng.random((5, 2)), rng.random((5, 2))
    for j in range(2):
        assert np.allclose(kn.eval_kernel(K, j, x, y), kn.eval_kernel(KK, j, x, y))
        assert np.allclose(
            kn.eval_kernel(kn.adjoint_kernel(K), j, x, y), kn.eval_kernel(K, j, y, x)
        )


@settings(max_examples=50, deadline=None)
@given(s=st.floats(0.1, 8.0), seed=st.integers(0, 100))
def test_homogeneity(s, seed):
    rng = np.random.default_rng(seed)
    x = rng.random((1, 2)) + 0.5
    y = rng.random((1, 2)) - 1.5
    for K in (kn.riesz_kernel(2, 0.3), kn.fractional_kernel(2, 0.7)):
        for j in range(K.n_components):
            v1 = kn.eval_kernel(K, j, s * x, s * y)[0]
            v0 = kn.eval_kernel(K, j, x, y)[0]
            scale = s ** (K.alpha - K.n)
            assert v1 == pytest.approx(v0 * scale, rel=8e-15)


def test_truncation_window_sharp():
    K = kn.hilbert_kernel()
    W = kn.TruncationWindow(delta=0.1, R=1.0)
    assert kn.eval_truncated(K, W, 0, [[0.05]], [[0.0]])[0] == 0.0
    assert kn.eval_truncated(K, W, 0, [[0.5]], [[0.0]])[0] == pytest.approx(2.0)
    assert kn.eval_truncated(K, W, 0, [[1.5]], [[0.0]])[0] == 0.0
    assert kn.eval_truncated(K, W, 0, [[0.3]], [[0.3]])[0] == 0.0


def test_truncation_window_smooth_range():
    W = kn.TruncationWindow(delta=0.2, R=1.0, shape="smooth", ramp=0.5)
    s = np.linspace(0.01, 2.0, 500)
    eta = kn.window_values(W, s)
    assert np.all((0 <= eta) & (eta <= 1))
    assert np.all(eta[s < 0.1] == 0)
    assert np.all(eta[(s >= 0.2) & (s <= 1.0)] == 1)
    assert np.all(eta[s > 1.5] == 0)
    K = kn.hilbert_kernel()
    mid = kn.eval_truncated(K, W, 0, [[0.15]], [[0.0]])[0]
    assert 0 < mid < 1 / 0.15


def test_truncated_dominated_by_kernel():
    K = kn.fractional_kernel(1, 0.5)
    W = kn.TruncationWindow(delta=0.05, R=0.8, shape="smooth", ramp=0.3)
    rng = np.random.default_rng(3)
    x = rng.random((64, 1))
    y = rng.random((64, 1))
    mask = np.abs(x - y)[:, 0] > 0
    tv = kn.eval_truncated(K, W, 0, x[mask], y[mask])
    kv = kn.eval_kernel(K, 0, x[mask], y[mask])
    assert np.all(np.abs(tv) <= np.abs(kv) + 1e-15)


def _pairs_1d(count=24, seed=1):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-1, 1, count)
    ys = xs + rng.uniform(0.2, 1.5, count) * rng.choice([-1, 1], count)
    return [(np.array([a]), np.array([b])) for a, b in zip(xs, ys)]


def test_smoothness_fractional_integral_size():
    K = kn.fractional_kernel(1, 0.5)
    rep = kn.verify_smoothness(K, 0, _pairs_1d())
    assert rep["orders"][0] == pytest.approx(1.0, rel=1e-12)


def test_smoothness_hilbert_first_derivative():
    # |K'| = |x-y|**-2 exactly; finite differences should recover constant 1
    K = kn.hilbert_kernel()
    rep = kn.verify_smoothness(K, 1, _pairs_1d())
    assert rep["orders"][1] == pytest.approx(1.0, rel=1e-6)
    assert rep["orders"][0] == pytest.approx(1.0, rel=1e-12)
    assert rep["orders"][1] <= K.C_CZ


def test_smoothness_riesz_direction_sweep():
    # sup over directions of |K_j| |x-y|**n at alpha=0 equals 1 (unit sphere)
    K = kn.riesz_kernel(2, 0.0)
    rng = np.random.default_rng(5)
    theta = rng.uniform(0, 2 * np.pi, 48)
    pairs = [
        (np.array([np.cos(t), np.sin(t)]) * r, np.zeros(2))
        for t, r in zip(theta, rng.uniform(0.3, 2.0, 48))
    ]
    rep = kn.verify_smoothness(K, 0, pairs)
    assert rep["orders"][0] == pytest.approx(1.0, rel=1e-3)
    assert rep["orders"][0] <= 1.0 + 1e-9


def test_smoothness_skips_degenerate():
    K = kn.hilbert_kernel()
    rep = kn.verify_smoothness(K, 0, [(np.array([0.3]), np.array([0.3]))])
    assert rep["skipped"] == 1


def test_ellipticity_hilbert():
    K = kn.hilbert_kernel()
    rep = kn.ellipticity_margin(K)
    assert rep["plain"] == pytest.approx(1.0)
    assert rep["scale_deviation"] <= 1e-8
    for m, data in rep["strong"].items():
        assert data["margin"] == pytest.approx(1.0)


def test_ellipticity_riesz_strong():
    K = kn.riesz_kernel(2, 0.0)
    rep = kn.ellipticity_margin(K)
    assert rep["scale_deviation"] <= 1e-8
    assert rep["plain"] > 0
    for m, data in rep["strong"].items():
        assert data["margin"] > 0
        # the sign vector of the n-ant is always a candidate; margin >= 1
        assert data["margin"] >= 1.0 - 1e-12


def test_ellipticity_riesz_single_direction_contribution():
    K = kn.riesz_kernel(2, 0.0)
    rep = kn.ellipticity_margin(K, {(1, 1): np.array([[1.0, 0.0]])}, coefficient_search=False)
    assert rep["plain"] == pytest.approx(1.0)


def test_ellipticity_rejects_empty():
    K = kn.hilbert_kernel()
    with pytest.raises(ValueError):
        kn.ellipticity_margin(K, {})


def test_make_kernel_registry():
    assert kn.make_kernel("hilbert", 1).name == "hilbert"
    assert kn.make_kernel("riesz", 3, 0.5).n_components == 3
    assert kn.make_kernel("frac-int", 2, 1.0).alpha == 1.0
    with pytest.raises(ValueError):
        kn.make_kernel("nope", 1)
    with pytest.raises(ValueError):
        kn.make_kernel("hilbert", 2)

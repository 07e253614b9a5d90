import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hdlpboot import estimators as est
from hdlpboot.errors import DegenerateColumnError, DomainError, SampleSizeError, ShapeError
from hdlpboot.estimators import Hypothesis


@st.composite
def data(draw, min_n=2, max_n=12, max_d=9):
    n = draw(st.integers(min_n, max_n))
    d = draw(st.integers(1, max_d))
    return draw(hnp.arrays(np.float64, (n, d), elements=st.floats(-100, 100)))


def test_hypothesis_dims():
    H = Hypothesis(R=np.ones((2, 3)), r=[1.0, 2.0])
    assert H.dim(3) == 2
    with pytest.raises(ShapeError):
        H.dim(4)
    with pytest.raises(ShapeError):
        Hypothesis(R=np.ones((2, 3)), r=[1.0])
    with pytest.raises(ShapeError):
        Hypothesis(r=[0.0, 0.0]).dim(3)


@given(data())
def test_naive_cov_matches_numpy_and_factor(X):
    cov = est.sample_cov_transformed(X)
    ref = np.atleast_2d(np.cov(X.T, bias=True))
    scale = max(1.0, np.abs(X).max() ** 2)
    np.testing.assert_allclose(cov.omega_hat, ref, atol=1e-10 * scale)
    np.testing.assert_allclose(cov.factor @ cov.factor.T, cov.omega_hat, atol=1e-8 * scale)


def test_naive_factor_has_n_minus_one_columns_when_wide():
    X = np.random.default_rng(0).standard_normal((10, 40))
    cov = est.sample_cov_transformed(X)
    assert cov.s == 9
    np.testing.assert_allclose(cov.factor @ cov.factor.T, cov.omega_hat, atol=1e-12)


def test_naive_cov_with_projection():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 4))
    R = rng.standard_normal((2, 4))
    cov = est.sample_cov_transformed(X, Hypothesis(R=R))
    np.testing.assert_allclose(cov.omega_hat, R @ np.cov(X.T, bias=True) @ R.T, atol=1e-12)


def test_constant_data_is_degenerate():
    cov = est.sample_cov_transformed(np.tile([1.0, -2.0, 3.0], (5, 1)))
    assert cov.degenerate and not np.any(cov.omega_hat)
    with pytest.raises(SampleSizeError):
        est.sample_cov_transformed(np.ones((1, 3)))


def test_hard_threshold_and_psd_project():
    W = np.array([[1.0, 0.2, -0.6], [0.2, 0.1, 0.05], [-0.6, 0.05, 1.0]])
    T = est.hard_threshold(W, 0.15)
    np.testing.assert_array_equal(T, [[1.0, 0.2, -0.6], [0.2, 0.0, 0.0], [-0.6, 0.0, 1.0]])
    Tp = est.hard_threshold(W, 0.15, preserve_diagonal=True)
    assert Tp[1, 1] == 0.1
    with pytest.raises(DomainError):
        est.hard_threshold(W, -1)
    A = np.array([[1.0, 2.0], [2.0, 1.0]])
    P = est.psd_project(A)
    assert np.linalg.eigvalsh(P).min() >= -1e-12
    np.testing.assert_allclose(est.psd_project(P), P, atol=1e-12)


def test_band_keeps_lags():
    W = np.array([[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]])
    B = est.band(W, 1)
    assert B[0, 2] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(est.band(W, 2), W, atol=1e-12)


def test_default_lambda_regimes():
    L = math.log(100) / 50
    assert est.default_lambda(100, 50) == pytest.approx(math.sqrt(L))
    assert est.default_lambda(100, 50, "heavytail") == pytest.approx(L ** 0.25)
    with pytest.raises(DomainError):
        est.default_lambda(100, 50, "other")


def test_thresholded_and_banded_models_are_psd():
    X = np.random.default_rng(2).standard_normal((40, 15))
    for cov in (est.thresholded_cov(X), est.banded_cov(X, 2)):
        np.testing.assert_allclose(cov.factor @ cov.factor.T, cov.omega_hat, atol=1e-10)


def test_studentize():
    X = np.array([[1.0, 10.0], [3.0, 30.0], [2.0, 20.0]])
    Xs, Rhat = est.studentize(X)
    np.testing.assert_allclose(Xs.std(axis=0), 1.0)
    np.testing.assert_allclose(Xs, X @ Rhat)
    with pytest.raises(DegenerateColumnError):
        est.studentize(np.array([[1.0, 2.0], [1.0, 3.0]]))


def test_selfnormalize_zero_rows_and_trace():
    X = np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]])
    Z, nz = est.selfnormalize(X)
    assert nz == 1
    np.testing.assert_allclose(Z, [[0.6, 0.8], [0.0, 0.0], [1.0, 0.0]])
    cov = est.selfnorm_cov(X)
    assert np.trace(cov.omega_hat) == pytest.approx(2 / 3)
    assert cov.meta["zero_rows"] == 1


@given(data(min_n=1, max_n=10))
def test_selfnorm_factor_reproduces(X):
    cov = est.selfnorm_cov(X)
    np.testing.assert_allclose(cov.factor @ cov.factor.T, cov.omega_hat, atol=1e-10)
    Z, nz = est.selfnormalize(X)
    assert np.trace(cov.omega_hat) == pytest.approx((X.shape[0] - nz) / X.shape[0])


def test_selfnorm_centered_at_mu():
    X = np.array([[2.0, 1.0], [1.0, 2.0]])
    Z, nz = est.selfnormalize(X, center=[1.0, 1.0])
    np.testing.assert_allclose(Z, [[1.0, 0.0], [0.0, 1.0]])

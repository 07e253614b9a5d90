"""Covariance estimates for the projected data R X.

All sample moments use the 1/n divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import helmert

from . import numcore
from .errors import (
    DegenerateColumnError,
    DomainError,
    SampleSizeError,
    ShapeError,
)


@dataclass(frozen=True)
class Hypothesis:
    """H0: R mu = r. ``R=None`` means the identity, ``r=None`` means zero."""

    R: np.ndarray | None = None
    r: np.ndarray | None = None

    def __post_init__(self):
        if self.R is not None:
            R = np.atleast_2d(np.asarray(self.R, dtype=float))
            object.__setattr__(self, "R", R)
        if self.r is not None:
            r = np.atleast_1d(np.asarray(self.r, dtype=float))
            if not np.all(np.isfinite(r)):
                raise DomainError("hypothesis target must be finite")
            if self.R is not None and r.shape[0] != self.R.shape[0]:
                raise ShapeError(f"R has {self.R.shape[0]} rows but r has length {r.shape[0]}")
            object.__setattr__(self, "r", r)

    def dim(self, d: int) -> int:
        if self.R is None:
            if self.r is not None and self.r.shape[0] != d:
                raise ShapeError(f"r has length {self.r.shape[0]}, data has d={d}")
            return d
        if self.R.shape[1] != d:
            raise ShapeError(f"R has {self.R.shape[1]} columns, data has d={d}")
        return self.R.shape[0]

    def project(self, X) -> np.ndarray:
        """Rows R x_i (no centering)."""
        X = _as_data(X)
        self.dim(X.shape[1])
        return X if self.R is None else X @ self.R.T

    def target(self, d: int) -> np.ndarray:
        t = self.dim(d)
        return np.zeros(t) if self.r is None else self.r

    def apply_vec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v if self.R is None else self.R @ v


IDENTITY = Hypothesis()


def _as_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ShapeError("data must be an n x d matrix")
    return X


@dataclass(frozen=True)
class CovModel:
    """Omega-hat with a factor (t x s) such that factor @ factor.T == omega_hat."""

    omega_hat: np.ndarray
    factor: np.ndarray
    method: str
    param: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def s(self) -> int:
        return self.factor.shape[1]

    @property
    def t(self) -> int:
        return self.omega_hat.shape[0]

    @property
    def degenerate(self) -> bool:
        return self.s == 0

    @classmethod
    def from_matrix(cls, omega, method: str, param=None, tol: float = 1e-10, **meta) -> "CovModel":
        omega = np.asarray(omega, dtype=float)
        return cls(omega, numcore.psd_factor(omega, tol), method, param, meta)


def _centered_factor(Y: np.ndarray) -> np.ndarray:
    """Factor of the 1/n sample covariance of rows Y with n - 1 columns.

    Uses Helmert contrasts: Y'H/sqrt(n) where H spans the complement of 1.
    """
    n = Y.shape[0]
    return (_helmert(n) @ Y).T / math.sqrt(n)


@lru_cache(maxsize=32)
def _helmert(n: int) -> np.ndarray:
    # (n-1) x n, orthonormal rows orthogonal to the ones vector
    H = helmert(n, full=False)
    H.setflags(write=False)
    return H


def sample_cov_transformed(X, H: Hypothesis = IDENTITY) -> CovModel:
    """Naive covariance n^{-1} sum R(X_i - Xbar)(X_i - Xbar)'R'.

    The factor has s = n - 1 columns whenever n - 1 <= t; for long data
    (n - 1 > t) it falls back to the eigen factor with s <= t.
    """
    X = _as_data(X)
    n = X.shape[0]
    if n < 2:
        raise SampleSizeError("need at least two observations")
    Y = H.project(X)
    Yc = Y - Y.mean(axis=0)
    omega = (Yc.T @ Yc) / n
    omega = 0.5 * (omega + omega.T)
    t = omega.shape[0]
    if np.max(np.abs(Yc)) <= 1e-13 * max(1.0, float(np.max(np.abs(Y)))):
        return CovModel(np.zeros((t, t)), np.zeros((t, 0)), "naive", meta={"degenerate": True})
    if n - 1 <= t:
        factor = _centered_factor(Y)
    else:
        factor = numcore.psd_factor(omega)
    return CovModel(omega, factor, "naive")


def hard_threshold(omega, lam: float, preserve_diagonal: bool = False) -> np.ndarray:
    """Zero every entry with |w_jk| <= lam (diagonal included unless preserved)."""
    if lam < 0:
        raise DomainError("threshold must be nonnegative")
    W = np.asarray(omega, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeError("hard_threshold expects a square matrix")
    if lam == 0:
        return W.copy()
    out = np.where(np.abs(W) > lam, W, 0.0)
    if preserve_diagonal:
        np.fill_diagonal(out, np.diag(W))
    return out


def psd_project(omega) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues at zero."""
    eig = numcore.sym_eigen(omega)
    lam = np.clip(eig.values, 0.0, None)
    out = (eig.vectors * lam) @ eig.vectors.T
    return 0.5 * (out + out.T)


def default_lambda(t: int, n: int, regime: str = "subgaussian", c: float = 1.0) -> float:
    """Threshold rates: sub-Gaussian c*max(sqrt(L), L); heavy tails c*max(L^{1/4}, sqrt(L)), L = log(t)/n."""
    L = math.log(t) / n
    if regime == "subgaussian":
        return c * max(math.sqrt(L), L)
    if regime in ("heavytail", "heavy", "logconcave"):
        return c * max(L ** 0.25, math.sqrt(L))
    raise DomainError(f"unknown regime {regime!r}")


def band(omega, k: int) -> np.ndarray:
    """Keep entries with |i - j| <= k, then project onto the PSD cone."""
    W = np.asarray(omega, dtype=float)
    if k < 0:
        raise DomainError("bandwidth must be nonnegative")
    i, j = np.indices(W.shape)
    return psd_project(np.where(np.abs(i - j) <= k, W, 0.0))


def thresholded_cov(X, H: Hypothesis = IDENTITY, lam: float | None = None,
                    regime: str = "subgaussian", preserve_diagonal: bool = False) -> CovModel:
    naive = sample_cov_transformed(X, H)
    if lam is None:
        lam = default_lambda(max(naive.t, 2), _as_data(X).shape[0], regime)
    est = psd_project(hard_threshold(naive.omega_hat, lam, preserve_diagonal))
    return CovModel.from_matrix(est, "threshold", lam)


def banded_cov(X, k: int, H: Hypothesis = IDENTITY) -> CovModel:
    naive = sample_cov_transformed(X, H)
    return CovModel.from_matrix(band(naive.omega_hat, k), "band", k)


def studentize(X) -> tuple[np.ndarray, np.ndarray]:
    """Divide each column by its sample sd (1/n divisor). Returns (X / sd, diag(1/sd))."""
    X = _as_data(X)
    sd = X.std(axis=0)
    scale = np.maximum(np.abs(X).max(axis=0), 1.0)
    bad = sd <= 1e-14 * scale
    if np.any(bad):
        raise DegenerateColumnError(f"zero-variance columns: {np.flatnonzero(bad).tolist()}")
    return X / sd, np.diag(1.0 / sd)


def selfnormalize(X, H: Hypothesis = IDENTITY, center=None) -> tuple[np.ndarray, int]:
    """Rows (R x_i - r)/||R x_i - r||_2, or R(x_i - mu)/|| . || when ``center`` is given.

    Zero rows stay zero. Returns the normalized rows and how many were zero.
    """
    X = _as_data(X)
    if center is None:
        Y = H.project(X) - H.target(X.shape[1])
    else:
        Y = H.project(X - np.asarray(center, dtype=float))
    norms = np.sqrt(np.einsum("ij,ij->i", Y, Y))
    zero = norms == 0.0
    Z = np.zeros_like(Y)
    Z[~zero] = Y[~zero] / norms[~zero, None]
    return Z, int(zero.sum())


def selfnorm_cov(X, H: Hypothesis = IDENTITY, center=None) -> CovModel:
    """Omega-tilde = n^{-1} sum Xt_i Xt_i' of the self-normalized rows."""
    Z, nzero = selfnormalize(X, H, center)
    n, t = Z.shape
    omega = (Z.T @ Z) / n
    omega = 0.5 * (omega + omega.T)
    if nzero == n:
        factor = np.zeros((t, 0))
    elif n <= t:
        factor = Z[np.any(Z != 0, axis=1)].T / math.sqrt(n)
    else:
        factor = numcore.psd_factor(omega)
    return CovModel(omega, factor, "selfnorm", meta={"zero_rows": nzero})

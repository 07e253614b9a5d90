"""Dense linear algebra helpers and l_p norms with real exponents.

Exponents are plain Python values: a float ``p >= 1``, ``math.inf``, or the
string ``"logt"`` which resolves to ``max(ln t, 1)`` for a vector of length t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    DegenerateError,
    DimensionError,
    DomainError,
    NotPsdError,
    NumericalError,
    ShapeError,
    UnsupportedNorm,
)

LOG_DIM = "logt"

LpExponent = Union[float, int, str]

_SYM_RTOL = 1e-12


def resolve_p(p: LpExponent, t: int) -> float:
    """Turn an exponent spec into a float in [1, inf]."""
    if isinstance(p, str):
        key = p.strip().lower()
        if key in (LOG_DIM, "log", "logd", "log_t"):
            return max(math.log(t), 1.0) if t > 0 else 1.0
        if key in ("inf", "infinity", "max"):
            return math.inf
        try:
            p = float(key)
        except ValueError:
            raise DomainError(f"unknown exponent {p!r}") from None
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise DomainError(f"exponent must be >= 1, got {p}")
    return p


def conjugate_exponent(p: float) -> float:
    """q with 1/p + 1/q = 1."""
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def lp_norm(v, p: LpExponent) -> float:
    """l_p norm of a vector, overflow-safe for large real p."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise DimensionError("lp_norm of an empty vector")
    return float(lp_norm_rows(v[None, :], p)[0])


def lp_norm_rows(M, p: LpExponent) -> np.ndarray:
    """Row-wise l_p norms of a 2-d array; exponent resolved against ``M.shape[1]``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeError("lp_norm_rows expects a 2-d array")
    if M.shape[1] == 0:
        raise DimensionError("lp_norm_rows of zero-length rows")
    q = resolve_p(p, M.shape[1])
    A = np.abs(M)
    if math.isinf(q):
        return A.max(axis=1)
    if q == 1.0:
        return A.sum(axis=1)
    m = A.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    scaled = A / safe[:, None]
    if q == 2.0:
        s = np.einsum("ij,ij->i", scaled, scaled)
        out = np.sqrt(s)
    else:
        out = np.power(np.power(scaled, q).sum(axis=1), 1.0 / q)
    return np.where(m > 0, m * out, 0.0)


def is_symmetric(M: np.ndarray, rtol: float = _SYM_RTOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if M.size == 0:
        return True
    scale = np.max(np.abs(M))
    return bool(np.max(np.abs(M - M.T)) <= rtol * max(scale, np.finfo(float).tiny))


def _require_symmetric(M, rtol: float = 1e-10) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix has non-finite entries")
    if not is_symmetric(M, rtol):
        raise ShapeError("matrix is not symmetric")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class EigenDecomp:
    values: np.ndarray  # descending
    vectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def sym_eigen(M) -> EigenDecomp:
    """Symmetric eigendecomposition with eigenvalues in descending order."""
    S = _require_symmetric(M)
    try:
        w, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    return EigenDecomp(values=w[order], vectors=V[:, order])


def psd_factor(M, tol: float = 1e-10) -> np.ndarray:
    """Return Gamma (t x s) with Gamma Gamma' equal to M with tiny negatives clipped.

    Strictly positive definite input goes through Cholesky; anything else
    through the eigendecomposition, keeping eigenpairs above
    ``tol * max(|lambda|, 1)``.
    """
    S = _require_symmetric(M)
    t = S.shape[0]
    if t == 0:
        return np.zeros((0, 0))
    if not np.any(S):
        return np.zeros((t, 0))
    eig = sym_eigen(S)
    lam = eig.values
    scale = float(np.max(np.abs(lam)))
    if lam[-1] < -tol * scale:
        raise NotPsdError(f"smallest eigenvalue {lam[-1]:.3e} below -{tol:g} * {scale:.3e}")
    keep = lam > tol * max(scale, 1.0)
    if np.all(keep):
        try:
            return np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            pass
    return eig.vectors[:, keep] * np.sqrt(lam[keep])


def op_norm(M, kind: str = "2->2", p: LpExponent | None = None) -> float:
    """Operator norms ``||M||_{q->p}`` for the pairs we can compute exactly.

    kind:
        ``"2->2"``   largest singular value
        ``"1->inf"`` largest absolute entry
        ``"2->p"``   p = 2 or inf for any matrix; other p only for diagonal M
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeError("op_norm expects a matrix")
    if M.size == 0:
        return 0.0
    if kind == "2->2":
        return float(np.linalg.norm(M, 2))
    if kind == "1->inf":
        return float(np.max(np.abs(M)))
    if kind != "2->p":
        raise UnsupportedNorm(f"unknown operator norm kind {kind!r}")
    if p is None:
        raise UnsupportedNorm("kind '2->p' needs an exponent")
    q = resolve_p(p, M.shape[0])
    if q == 2.0:
        return float(np.linalg.norm(M, 2))
    if math.isinf(q):
        return float(np.sqrt(np.max(np.einsum("ij,ij->i", M, M))))
    if M.shape[0] != M.shape[1] or np.any(M - np.diag(np.diag(M))):
        raise UnsupportedNorm(f"||M||_(2->{q:g}) is only implemented for diagonal M")
    d = np.abs(np.diag(M))
    if q >= 2.0:
        return float(d.max())
    r = 2.0 * q / (2.0 - q)
    return lp_norm(d, r) if np.any(d) else 0.0


def effective_rank(M) -> float:
    """tr(M) / ||M||_op for a PSD matrix."""
    S = _require_symmetric(M)
    top = float(np.linalg.norm(S, 2))
    if top == 0.0:
        raise DegenerateError("effective rank of the zero matrix")
    return float(np.trace(S)) / top


def sqrt_psd(M) -> np.ndarray:
    """Symmetric square root of a PSD matrix (negative roundoff clipped)."""
    eig = sym_eigen(M)
    lam = np.clip(eig.values, 0.0, None)
    return (eig.vectors * np.sqrt(lam)) @ eig.vectors.T

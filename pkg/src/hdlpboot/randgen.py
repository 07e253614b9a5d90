"""Counter-based random streams and the data-generating distributions.

A stream is addressed by ``(seed, stream_id, position)``. The underlying bit
generator is Philox4x64 keyed by ``seed + 2**64 * stream_id``; ``position``
counts 64-bit words, so jumping anywhere in a stream is O(1) and the output of
a replication never depends on which worker runs it.

Every standard normal consumes exactly one word (inverse-CDF transform of an
open-interval uniform), so ``std_normal(k)`` advances the position by k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DimensionError, DomainError

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4
_TWO_M52 = 2.0 ** -52

T4_DOF = 4


class RngStream:
    """Mutable cursor over one counter-based stream.

    Not thread-safe; give each worker its own stream (``spawn``).
    """

    __slots__ = ("seed", "stream_id", "_pos")

    def __init__(self, seed: int, stream_id: int = 0, position: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        if position < 0:
            raise DomainError("stream position must be nonnegative")
        self._pos = int(position)

    @property
    def position(self) -> int:
        return self._pos

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, position={self._pos})"

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id, 0)

    def at(self, position: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, position)

    def copy(self) -> "RngStream":
        return self.at(self._pos)

    def advance(self, nwords: int) -> None:
        self._pos += int(nwords)

    def raw(self, k: int) -> np.ndarray:
        """Next k 64-bit words."""
        k = int(k)
        if k <= 0:
            return np.empty(0, dtype=np.uint64)
        block, offset = divmod(self._pos, _WORDS_PER_BLOCK)
        bg = np.random.Philox(key=self.seed + (self.stream_id << 64), counter=block)
        out = bg.random_raw(offset + k)[offset:]
        self._pos += k
        return out

    def uniform(self, shape) -> np.ndarray:
        """Uniforms on the open interval (0, 1), one word each."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        k = int(np.prod(shape)) if shape else 1
        return words_to_uniform(self.raw(k)).reshape(shape)

    def std_normal(self, shape) -> np.ndarray:
        return special.ndtri(self.uniform(shape))


def words_to_uniform(w) -> np.ndarray:
    """Top 52 bits of each word, offset by half a step: symmetric and never 0 or 1."""
    w = np.asarray(w, dtype=np.uint64)
    return ((w >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_M52


def std_normal_vec(stream: RngStream, k: int) -> np.ndarray:
    """k iid N(0,1) draws; advances the stream by exactly k words."""
    if k < 0:
        raise DimensionError("k must be nonnegative")
    return stream.std_normal(k) if k else np.empty(0)


def mvn_from_factor(factor, stream: RngStream, size: int | None = None) -> np.ndarray:
    """Gamma @ G with G ~ N(0, I_s). With ``size`` returns a (size, t) batch."""
    F = np.asarray(factor, dtype=float)
    t, s = F.shape
    if size is None:
        return F @ std_normal_vec(stream, s)
    G = stream.std_normal((size, s))
    return G @ F.T


def sphere_sample(s: int, stream: RngStream, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) on the unit sphere of R^s."""
    if s < 2:
        raise DimensionError(f"sphere needs s >= 2, got {s}")
    n = 1 if size is None else int(size)
    G = stream.std_normal((n, s))
    r = np.sqrt(np.einsum("ij,ij->i", G, G))
    # ||G|| == 0 has probability zero; redraw those rows anyway
    while np.any(r == 0.0):
        bad = np.flatnonzero(r == 0.0)
        G[bad] = stream.std_normal((bad.size, s))
        r[bad] = np.sqrt(np.einsum("ij,ij->i", G[bad], G[bad]))
    U = G / r[:, None]
    return U[0] if size is None else U


def std_normal_cdf(x):
    return special.ndtr(x)


def gamma11_quantile(u):
    """Quantile of Gamma(shape=1, rate=1), i.e. Exp(1)."""
    u = np.asarray(u, dtype=float)
    if np.any(u >= 1.0) or np.any(u < 0.0) or np.any(np.isnan(u)):
        raise DomainError("gamma11_quantile needs u in [0, 1)")
    out = -np.log1p(-u)
    return float(out) if out.ndim == 0 else out


def copula_transform(Y) -> np.ndarray:
    """Map N(0,1) coordinates to centered Gamma(1,1) marginals.

    Equal to ``gamma11_quantile(Phi(y)) - 1`` but evaluated as
    ``-log Phi(-y) - 1`` so the upper tail keeps full precision.
    """
    return -special.log_ndtr(-np.asarray(Y, dtype=float)) - 1.0


def copula_row(factor, stream: RngStream, size: int | None = None) -> np.ndarray:
    return copula_transform(mvn_from_factor(factor, stream, size))


def mvt4_row(factor, stream: RngStream, size: int | None = None) -> np.ndarray:
    """Multivariate t(4) draw(s) with covariance ``factor @ factor.T``.

    W ~ chi^2_4 is built from 4 extra normals, so a row costs s + 4 words.
    """
    F = np.asarray(factor, dtype=float)
    s = F.shape[1]
    n = 1 if size is None else int(size)
    G = stream.std_normal((n, s + T4_DOF))
    W = np.einsum("ij,ij->i", G[:, s:], G[:, s:])
    scale = np.sqrt((T4_DOF - 2) / W)
    X = (G[:, :s] @ F.T) * scale[:, None]
    return X[0] if size is None else X


@dataclass(frozen=True)
class DgpKind:
    """family in {"copula", "t4", "gaussian"}; cov in {"equicorr", "toeplitz", "banded", "identity"}."""

    family: str
    cov: str

    def __post_init__(self):
        if self.family not in ("copula", "t4", "gaussian"):
            raise DomainError(f"unknown DGP family {self.family!r}")
        if self.cov not in ("equicorr", "toeplitz", "banded", "identity"):
            raise DomainError(f"unknown covariance kind {self.cov!r}")


def draw_rows(kind: DgpKind, factor, stream: RngStream, n: int) -> np.ndarray:
    """n observations (rows) of the given DGP with mean zero."""
    if kind.family == "copula":
        return copula_row(factor, stream, size=n)
    if kind.family == "t4":
        return mvt4_row(factor, stream, size=n)
    return mvn_from_factor(factor, stream, size=n)


def chi_mean(k: int) -> float:
    """E||G||_2 for G ~ N(0, I_k)."""
    return math.sqrt(2.0) * math.exp(math.lgamma((k + 1) / 2) - math.lgamma(k / 2))

"""l_p-norm test statistics, Monte Carlo proxy samplers and the resulting tests.

Exponents follow :mod:`hdlpboot.numcore`; additionally ``p="w"`` selects the
combined norm ||v||_2 + ||v||_{log t} used by the W statistic.

Proxy draw b occupies a fixed window of the proxy stream (b*s .. (b+1)*s - 1
words), so draws can be generated in any chunking or order with identical
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numcore
from .errors import AlphaGridError, DimensionError, DomainError, NumericalError, ShapeError
from .estimators import (
    IDENTITY,
    CovModel,
    Hypothesis,
    _as_data,
    sample_cov_transformed,
    selfnormalize,
    studentize,
)
from .numcore import LOG_DIM, LpExponent
from .randgen import RngStream

COMBINED = "w"

_CHUNK_WORDS = 1 << 21


def stat_norms(Z, p) -> np.ndarray:
    """Row norms for an exponent or the combined W norm."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if isinstance(p, str) and p.lower() == COMBINED:
        return numcore.lp_norm_rows(Z, 2.0) + numcore.lp_norm_rows(Z, LOG_DIM)
    return numcore.lp_norm_rows(Z, p)


def _norm(v, p) -> float:
    return float(stat_norms(np.asarray(v, dtype=float)[None, :], p)[0])


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def score(X, H: Hypothesis = IDENTITY) -> np.ndarray:
    """R S_n - sqrt(n) r with S_n = n^{-1/2} sum X_i."""
    X = _as_data(X)
    n, d = X.shape
    return math.sqrt(n) * (H.apply_vec(X.mean(axis=0)) - H.target(d))


def t_stat(X, H: Hypothesis = IDENTITY, p: LpExponent = 2.0) -> float:
    return _norm(score(X, H), p)


def w_stat(X, H: Hypothesis = IDENTITY) -> float:
    """T_{n,2} + T_{n,log t}."""
    v = score(X, H)
    if v.shape[0] < 2:
        raise DimensionError("the combined statistic needs t >= 2")
    return _norm(v, COMBINED)


def v_stat(X, H: Hypothesis = IDENTITY, center=None) -> float:
    """|| n^{-1/2} sum Xt_i ||_2 over the self-normalized rows."""
    Z, _ = selfnormalize(X, H, center)
    return float(np.linalg.norm(Z.sum(axis=0)) / math.sqrt(Z.shape[0]))


def studentized_stat(X, p: LpExponent = 2.0, mu0=None) -> float:
    """|| S~_n - sqrt(n) mu0~ ||_p after dividing every column by its sample sd."""
    Xs, Rhat = studentize(X)
    n, d = Xs.shape
    v = math.sqrt(n) * Xs.mean(axis=0)
    if mu0 is not None:
        v = v - math.sqrt(n) * (np.diag(Rhat) * np.asarray(mu0, dtype=float))
    return _norm(v, p)


def post_selection_stat(X, p: LpExponent, bsel: int) -> float:
    """Norm of the ``bsel`` largest |S_n| entries (H = identity, r = 0).

    Compare against the full-vector critical value; the resulting test is
    conservative. ``p="logt"`` resolves against the full dimension.
    """
    S = score(X)
    d = S.shape[0]
    if not 1 <= bsel <= d:
        raise DomainError(f"selection size must be in 1..{d}")
    q = numcore.resolve_p(p, d)
    top = np.sort(np.abs(S))[d - bsel:]
    return numcore.lp_norm(top, q)


def linearized_stat(G, p: LpExponent = 2.0) -> float:
    """Norm of a caller-supplied centered vector F(Y) - sqrt(n) r."""
    return _norm(np.asarray(G, dtype=float).ravel(), p)


# ---------------------------------------------------------------------------
# proxy draws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProxyDraws:
    values: np.ndarray  # sorted ascending
    method: str
    p: object
    s: int | None = None
    seed: int | None = None
    stream_id: int | None = None
    position: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DimensionError("need at least one proxy draw")
        if not np.all(np.isfinite(v)):
            raise NumericalError("non-finite proxy draw")
        if np.any(v < 0):
            raise DomainError("proxy draws are norms and must be nonnegative")
        if np.any(np.diff(v) < 0):
            v = np.sort(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def B(self) -> int:
        return self.values.shape[0]


def _provenance(stream: RngStream) -> dict:
    return {"seed": stream.seed, "stream_id": stream.stream_id, "position": stream.position}


def _chunks(B: int, width: int):
    step = max(1, _CHUNK_WORDS // max(width, 1))
    for lo in range(0, B, step):
        yield lo, min(B, lo + step)


def _check_B(B: int) -> int:
    B = int(B)
    if B < 1:
        raise DomainError("B must be at least 1")
    return B


def gaussian_proxy(cov: CovModel, p, B: int, stream: RngStream) -> ProxyDraws:
    """B sorted draws of ||Z||_p with Z ~ N(0, Omega-hat), realized as Gamma G."""
    B = _check_B(B)
    prov = _provenance(stream)
    F = cov.factor
    if cov.s == 0:
        return ProxyDraws(np.zeros(B), "gaussian", p, 0, **prov)
    out = np.empty(B)
    for lo, hi in _chunks(B, max(cov.s, cov.t)):
        G = stream.std_normal((hi - lo, cov.s))
        out[lo:hi] = stat_norms(G @ F.T, p)
    out.sort()
    return ProxyDraws(out, "gaussian", p, cov.s, **prov)


def spherical_proxy(cov: CovModel, p, B: int, stream: RngStream, s: int | None = None) -> ProxyDraws:
    """B sorted draws of sqrt(s) ||Gamma U||_p with U uniform on the unit sphere of R^s.

    ``s`` defaults to the factor's column count. A larger ``s`` pads the
    factor with zero columns, which leaves Gamma Gamma' unchanged.
    """
    B = _check_B(B)
    prov = _provenance(stream)
    F = cov.factor
    s_use = cov.s if s is None else int(s)
    if s_use < cov.s:
        raise DimensionError(f"s={s_use} is below the factor rank {cov.s}")
    if s_use < 2:
        raise DimensionError(f"spherical proxy needs s >= 2, got {s_use}")
    if s_use > cov.s:
        F = np.hstack([F, np.zeros((cov.t, s_use - cov.s))])
    root_s = math.sqrt(s_use)
    out = np.empty(B)
    for lo, hi in _chunks(B, max(s_use, cov.t)):
        G = stream.std_normal((hi - lo, s_use))
        r = np.sqrt(np.einsum("ij,ij->i", G, G))
        if np.any(r == 0.0):
            raise NumericalError("zero-norm Gaussian vector in sphere sampling")
        U = G / r[:, None]
        out[lo:hi] = stat_norms(root_s * (U @ F.T), p)
    out.sort()
    return ProxyDraws(out, "spherical", p, s_use, **prov)


def multiplier_proxy(X, H: Hypothesis, p, B: int, stream: RngStream) -> ProxyDraws:
    """B sorted draws of || n^{-1/2} sum xi_i R(X_i - Xbar) ||_p, xi_i iid N(0, 1)."""
    B = _check_B(B)
    X = _as_data(X)
    n = X.shape[0]
    if n < 2:
        raise DomainError("multiplier bootstrap needs n >= 2")
    prov = _provenance(stream)
    Y = H.project(X)
    Yc = (Y - Y.mean(axis=0)) / math.sqrt(n)
    out = np.empty(B)
    for lo, hi in _chunks(B, max(n, Yc.shape[1])):
        xi = stream.std_normal((hi - lo, n))
        out[lo:hi] = stat_norms(xi @ Yc, p)
    out.sort()
    return ProxyDraws(out, "multiplier", p, n, **prov)


def draw_proxy(method: str, cov: CovModel | None, p, B: int, stream: RngStream,
               X=None, H: Hypothesis = IDENTITY, s: int | None = None) -> ProxyDraws:
    """Dispatch on ``method`` in {"gaussian", "spherical", "multiplier"}."""
    if method == "gaussian":
        return gaussian_proxy(cov, p, B, stream)
    if method == "spherical":
        return spherical_proxy(cov, p, B, stream, s)
    if method == "multiplier":
        if X is None:
            raise DomainError("multiplier proxy needs the data")
        return multiplier_proxy(X, H, p, B, stream)
    raise DomainError(f"unknown proxy method {method!r}")


# ---------------------------------------------------------------------------
# critical values and decisions
# ---------------------------------------------------------------------------


def order_index(alpha: float, B: int) -> int:
    """k = floor((1 - alpha) B), the 1-based order statistic used as critical value.

    The product is rounded to 9 decimals first so decimal levels such as
    alpha = 0.57 are not pushed one index down by binary roundoff.
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaGridError(f"alpha must lie in (0, 1), got {alpha}")
    k = math.floor(round((1.0 - alpha) * B, 9))
    if k < 1 or k > B:
        raise AlphaGridError(f"floor((1 - {alpha}) * {B}) = {k} is outside 1..{B}; increase B")
    return k


def mc_quantile(draws: ProxyDraws, alpha: float) -> float:
    return float(draws.values[order_index(alpha, draws.B) - 1])


def p_value(statistic: float, draws: ProxyDraws) -> float:
    """Fraction of draws >= statistic."""
    below = np.searchsorted(draws.values, statistic, side="left")
    return float(draws.B - below) / draws.B


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    alpha: float
    p_value: float
    reject: bool
    B: int
    method: str


def run_test(statistic: float, draws: ProxyDraws, alpha: float) -> TestResult:
    if not math.isfinite(statistic) or statistic < 0:
        raise DomainError("statistic must be finite and nonnegative")
    c = mc_quantile(draws, alpha)
    return TestResult(
        statistic=float(statistic),
        critical_value=c,
        alpha=float(alpha),
        p_value=p_value(statistic, draws),
        reject=bool(statistic >= c),
        B=draws.B,
        method=draws.method,
    )


def reject_grid(statistic: float, draws: ProxyDraws, alphas) -> np.ndarray:
    """Decisions for a whole grid of levels from one draw set."""
    idx = np.array([order_index(a, draws.B) - 1 for a in alphas], dtype=int)
    return statistic >= draws.values[idx]


# ---------------------------------------------------------------------------
# confidence sets
# ---------------------------------------------------------------------------


def conf_ellipsoid_contains(mu, X, H: Hypothesis, p, c: float) -> bool:
    """sqrt(n) ||R(mu_hat - mu)||_p <= c."""
    X = _as_data(X)
    n = X.shape[0]
    diff = H.apply_vec(X.mean(axis=0) - np.asarray(mu, dtype=float))
    return bool(math.sqrt(n) * _norm(diff, p) <= c)


def simultaneous_ci(h, X, H: Hypothesis, p, c: float) -> tuple[float, float]:
    """h'R mu_hat -/+ ||h||_q c / sqrt(n), with q the conjugate of p."""
    X = _as_data(X)
    n = X.shape[0]
    center_vec = H.apply_vec(X.mean(axis=0))
    h = np.asarray(h, dtype=float)
    if h.shape != center_vec.shape:
        raise ShapeError(f"h has shape {h.shape}, expected {center_vec.shape}")
    q = numcore.conjugate_exponent(numcore.resolve_p(p, h.shape[0]))
    center = float(h @ center_vec)
    half = (numcore.lp_norm(h, q) if h.size else 0.0) * c / math.sqrt(n)
    return center - half, center + half


def norm_ci(X, p, cov: CovModel | None, alpha: float, B: int, stream: RngStream,
            method: str = "gaussian") -> tuple[float, float]:
    """Conservative interval ||mu_hat||_p -/+ c / sqrt(n), clipped at zero (H = identity)."""
    X = _as_data(X)
    n = X.shape[0]
    if cov is None:
        cov = sample_cov_transformed(X)
    draws = draw_proxy(method, cov, p, B, stream, X=X)
    c = mc_quantile(draws, alpha)
    m = _norm(X.mean(axis=0), p)
    return max(0.0, m - c / math.sqrt(n)), m + c / math.sqrt(n)


def lp_test(X, alpha: float = 0.05, p: LpExponent = 2.0, H: Hypothesis = IDENTITY,
            method: str = "spherical", B: int = 2000, seed: int = 0,
            cov: CovModel | None = None) -> TestResult:
    """One-call bootstrap test of H0: R mu = r with the naive covariance by default."""
    stream = RngStream(seed, 0)
    if cov is None and method != "multiplier":
        cov = sample_cov_transformed(X, H)
    stat = w_stat(X, H) if p == COMBINED else t_stat(X, H, p)
    draws = draw_proxy(method, cov, p, B, stream, X=X, H=H)
    return run_test(stat, draws, alpha)

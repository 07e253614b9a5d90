"""Theory-side diagnostics for Gaussian l_p norms, alternatives and Monte Carlo budgets.

The variance bounds carry absolute constants inherited from the literature;
treat them as order-of-magnitude guides, not certified inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import numcore
from .errors import DegenerateError, DomainError, UnsupportedNorm
from .estimators import IDENTITY, CovModel, Hypothesis
from .hdtest import gaussian_proxy
from .numcore import LpExponent
from .randgen import RngStream

P_INF_BRACKET = (0.23, math.sqrt(2.0) * math.e)


# ---------------------------------------------------------------------------
# variance lower bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarBoundReport:
    p: float
    bound: float
    regime: str  # P12, P2LogD, PGeq2LogD or PInf
    refined: float | None
    refined_regime: str | None  # Refined1, Refined2, RefinedInf
    sigma_min: float
    sigma_max: float
    rho: float
    d: int
    certified: bool = False
    note: str = ""


def _max_abs_corr(S: np.ndarray) -> float:
    sd = np.sqrt(np.clip(np.diag(S), 0.0, None))
    ok = sd > 0
    if ok.sum() < 2:
        return 0.0
    C = S[np.ix_(ok, ok)] / np.outer(sd[ok], sd[ok])
    np.fill_diagonal(C, 0.0)
    return float(min(1.0, np.max(np.abs(C))))


def _refined_inf(sig_sorted: np.ndarray) -> float:
    d = sig_sorted.shape[0]
    if sig_sorted[0] == 0.0:
        return 0.0
    k = np.arange(1, d + 1)
    root_log_d = math.sqrt(math.log(d))
    denom = 1.0 / sig_sorted[0] + np.max((1.0 + np.sqrt(np.log(k))) / sig_sorted)
    sbar = (1.0 + root_log_d) / denom
    return (sbar / (1.0 + root_log_d)) ** 2 / 12.0


def var_lower_bound(Sigma, p: LpExponent, rho: float | None = None) -> VarBoundReport:
    """Lower bounds on Var(||Z||_p), Z ~ N(0, Sigma), evaluated as stated.

    Returns the general bound for the regime of p plus, for p in {1, 2, inf},
    the refined bound. The p = 1 refinement exceeds the true variance for
    Sigma = I (per coordinate Var|Z_k| = 1 - 2/pi), so it is reported but flagged.
    """
    S = numcore._require_symmetric(Sigma)
    d = S.shape[0]
    if d == 0 or not np.any(S):
        raise DegenerateError("variance bound needs a nonzero covariance")
    q = numcore.resolve_p(p, d)
    var = np.clip(np.diag(S), 0.0, None)
    sig = np.sqrt(var)
    sig_sorted = np.sort(sig)
    s1, sd_ = float(sig_sorted[0]), float(sig_sorted[-1])
    if rho is None:
        rho = _max_abs_corr(S)
    elif not 0.0 <= rho <= 1.0:
        raise DomainError("rho must lie in [0, 1]")
    log_d = math.log(d)
    root_log_d = math.sqrt(log_d)

    def top_case() -> float:
        if s1 == 0.0:
            return 0.0
        return (s1 ** 2 / (s1 + sd_ * root_log_d)) ** 2 / 15.0 ** 2

    if q <= 2.0:
        regime = "P12"
        bound = (math.pi / 9.0) * np.mean(sig ** q) ** (2.0 / q) * d ** (2.0 / q - 1.0)
    elif math.isinf(q):
        regime = "PInf"
        bound = top_case()
    elif q < 2.0 * log_d:
        regime = "P2LogD"
        # (p^2 / 2^{3p}) underflows for huge p but this branch has p < 2 log d
        bound = (math.pi / 6.0) * q * q * 2.0 ** (-3.0 * q) \
            * np.mean(sig ** (2.0 * q)) ** (1.0 / q) * d ** (2.0 / q - 1.0)
    else:
        regime = "PGeq2LogD"
        bound = top_case() / 11.0 ** 6 / (1.0 + rho * root_log_d) ** 2

    refined, refined_regime, note = None, None, ""
    if q == 1.0:
        refined, refined_regime = (math.pi / 2.0) * float(np.trace(S)), "Refined1"
        note = "Refined1 is violated for Sigma = I; diagnostic only"
    elif q == 2.0:
        tr = float(np.trace(S))
        refined = max(float(np.sum(S * S)) / tr, float(np.sum(var ** 2)) / float(np.sum(var)))
        refined_regime = "Refined2"
    elif math.isinf(q):
        refined, refined_regime = _refined_inf(sig_sorted), "RefinedInf"
    return VarBoundReport(q, float(bound), regime, refined, refined_regime,
                          s1, sd_, float(rho), d, False, note)


# ---------------------------------------------------------------------------
# moments and quantiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    p: float
    closed_form: float | None  # (E||Z||_p^p)^{1/p}; None for p = inf
    lower: float  # bracket for E||Z||_p
    upper: float
    certified: bool


def gaussian_norm_moment(sigma, p: LpExponent) -> MomentReport:
    """(E||Z||_p^p)^{1/p} for Z_k ~ N(0, sigma_k^2) and a bracket for E||Z||_p.

    Finite p: the p-th moment depends only on the marginals, and the bracket
    [m / sqrt(8 pi p), m] holds for any dependence. p = inf: heuristic bracket
    [c min sigma sqrt(log d), C max sigma sqrt(log d)] with log d floored at 1.
    """
    sig = np.abs(np.asarray(sigma, dtype=float).ravel())
    if sig.size == 0:
        raise DomainError("need at least one coordinate")
    d = sig.size
    q = numcore.resolve_p(p, d)
    if math.isinf(q):
        root = math.sqrt(max(math.log(d), 1.0))
        c, C = P_INF_BRACKET
        return MomentReport(q, None, c * float(sig.min()) * root, C * float(sig.max()) * root, False)
    if not np.any(sig):
        return MomentReport(q, 0.0, 0.0, 0.0, True)
    norm = numcore.lp_norm(sig, q)
    log_const = 0.5 * math.log(2.0) - math.log(math.pi) / (2.0 * q) + special.gammaln((q + 1.0) / 2.0) / q
    m = norm * math.exp(log_const)
    return MomentReport(q, m, m / math.sqrt(8.0 * math.pi * q), m, True)


def _root_op_norm(Sigma, p) -> float:
    S = numcore._require_symmetric(Sigma)
    q = numcore.resolve_p(p, S.shape[0])
    if not (q == 2.0 or math.isinf(q)):
        off = S - np.diag(np.diag(S))
        if np.any(off):
            raise UnsupportedNorm(f"||Sigma^(1/2)||_(2->{q:g}) needs p in {{2, inf}} or diagonal Sigma")
    return numcore.op_norm(numcore.sqrt_psd(S), "2->p", q)


def quantile_bracket(Sigma, p: LpExponent, alpha: float, mc_var: float, mc_mean: float) -> tuple[float, float]:
    """Bracket for the (1 - alpha) quantile of ||Z||_p from concentration and Chebyshev."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if mc_var < 0:
        raise DomainError("variance estimate must be nonnegative")
    L = _root_op_norm(Sigma, p)
    sd = math.sqrt(mc_var)
    lo = mc_mean - min(L, sd)
    hi = mc_mean + min(math.sqrt(2.0 * math.log(1.0 / alpha)) * L, math.sqrt(mc_var / alpha))
    return lo, hi


# ---------------------------------------------------------------------------
# alternatives
# ---------------------------------------------------------------------------


def bahadur_slope_lb(mu, H: Hypothesis, Omega, p: LpExponent) -> float:
    """||R mu - r||_p / ||Omega^{1/2}||_{2->p}."""
    mu = np.asarray(mu, dtype=float)
    gap = H.apply_vec(mu) - H.target(mu.shape[0])
    denom = _root_op_norm(Omega, p)
    num = numcore.lp_norm(gap, p)
    if num == 0.0:
        return 0.0
    if denom == 0.0:
        raise DegenerateError("Omega is zero; slope is unbounded")
    return num / denom


LABELS = ("Undetectable", "Intermediate", "Indeterminate", "Consistent")


@dataclass(frozen=True)
class AlternativeClass:
    label: str
    signal: float
    sd_est: float
    mean_est: float
    ratios: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        """0 Undetectable, 1 Intermediate or Indeterminate, 2 Consistent."""
        return {"Undetectable": 0, "Intermediate": 1, "Indeterminate": 1, "Consistent": 2}[self.label]


def classify_alternative(mu, H: Hypothesis, cov: CovModel, p: LpExponent, n: int, B_mc: int,
                         stream: RngStream, thresholds: tuple[float, float] = (0.3, 3.0)) -> AlternativeClass:
    """Place sqrt(n)||R mu - r||_p against MC estimates of sd and mean of ||Z||_p.

    Undetectable if signal <= c_lo sd, Consistent if signal >= c_hi mean,
    Intermediate if signal <= c_lo mean, Indeterminate otherwise.
    """
    if B_mc < 1000:
        raise DomainError("B_mc must be at least 1000")
    c_lo, c_hi = thresholds
    mu = np.asarray(mu, dtype=float)
    gap = H.apply_vec(mu) - H.target(mu.shape[0])
    signal = math.sqrt(n) * numcore.lp_norm(gap, p)
    draws = gaussian_proxy(cov, p, B_mc, stream).values
    mean, sd = float(draws.mean()), float(draws.std(ddof=1))
    if signal <= c_lo * sd:
        label = "Undetectable"
    elif signal >= c_hi * mean:
        label = "Consistent"
    elif signal <= c_lo * mean:
        label = "Intermediate"
    else:
        label = "Indeterminate"
    ratios = {
        "signal/sd": signal / sd if sd > 0 else math.inf,
        "signal/mean": signal / mean if mean > 0 else math.inf,
    }
    return AlternativeClass(label, signal, sd, mean, ratios)


@dataclass(frozen=True)
class AltSpec:
    """s active coordinates of strength delta; support is indices, "random" or "first"."""

    s: int
    delta: float
    support: object = "first"

    def __post_init__(self):
        if int(self.s) < 1:
            raise DomainError("sparsity must be at least 1")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise DomainError("delta must be finite and nonnegative")
        if not isinstance(self.support, str):
            idx = tuple(int(i) for i in self.support)
            if len(set(idx)) != len(idx) or len(idx) != int(self.s):
                raise DomainError("support must list s distinct indices")
            object.__setattr__(self, "support", idx)
        elif self.support not in ("first", "random"):
            raise DomainError(f"unknown support rule {self.support!r}")


def make_alternative(spec: AltSpec, omega_diag, H: Hypothesis = IDENTITY,
                     stream: RngStream | None = None) -> np.ndarray:
    """mu with mu_k - r_k = +/- delta * sqrt(Omega_kk) on the support, alternating signs.

    ``omega_diag`` holds the diagonal of Omega (variances).
    """
    if H.R is not None:
        raise DomainError("alternatives are generated for R = identity")
    w = np.sqrt(np.clip(np.asarray(omega_diag, dtype=float).ravel(), 0.0, None))
    t = w.shape[0]
    if spec.s > t:
        raise DomainError(f"sparsity {spec.s} exceeds dimension {t}")
    if spec.support == "first":
        idx = np.arange(spec.s)
    elif spec.support == "random":
        if stream is None:
            raise DomainError("random support needs a stream")
        idx = np.sort(np.argsort(stream.uniform(t), kind="stable")[: spec.s])
    else:
        idx = np.asarray(spec.support, dtype=int)
        if idx.min() < 0 or idx.max() >= t:
            raise DomainError("support index out of range")
        idx = np.sort(idx)
    signs = np.where(np.arange(spec.s) % 2 == 0, 1.0, -1.0)
    mu = H.target(t).astype(float).copy()
    mu[idx] += spec.delta * w[idx] * signs
    return mu


# ---------------------------------------------------------------------------
# rates and Monte Carlo budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateReport:
    p: float
    n: int
    ratios: dict


def check_rates_subgaussian(Omega, n: int, p: LpExponent) -> RateReport:
    """Evaluate the sub-Gaussian growth ratios at (Omega, n); small values are favourable."""
    S = numcore._require_symmetric(Omega)
    q = numcore.resolve_p(p, S.shape[0])
    if q == 2.0:
        r1 = numcore.effective_rank(S)
        r2 = numcore.effective_rank(S @ S)
        lead = r1 / math.sqrt(r2)
        ratios = {
            "r(O)/sqrt(r(O^2))": lead,
            "r(O)/sqrt(r(O^2))/n^(1/6)": lead / n ** (1.0 / 6.0),
            "r(O)/r(O^2)*max(sqrt(r(O)/n),r(O)/n)": r1 / r2 * max(math.sqrt(r1 / n), r1 / n),
        }
        return RateReport(q, n, ratios)
    if math.isinf(q):
        t = S.shape[0]
        om = np.sqrt(np.clip(np.diag(S), 0.0, None))
        lo, hi = float(om.min()), float(om.max())
        if hi == 0.0:
            raise DegenerateError("Omega has zero diagonal")
        a = math.inf if lo == 0.0 else hi / lo
        L = math.log(t) if t > 1 else 0.0
        ratios = {
            "a*sqrt(log t)/n^(1/6)": a * math.sqrt(L) / n ** (1.0 / 6.0),
            "a^2*log t/n^(1/6)": a * a * L / n ** (1.0 / 6.0),
            "a^2*sqrt(log t/n)": a * a * math.sqrt(L / n),
            "a^4*sqrt((log t)^3/n)": a ** 4 * math.sqrt(L ** 3 / n),
        }
        return RateReport(q, n, ratios)
    raise UnsupportedNorm("rate check is available for p = 2 and p = inf")


@dataclass(frozen=True)
class GaussianTarget:
    var_proxy_est: float
    mode_est: float = 1.0


@dataclass(frozen=True)
class SphericalTarget:
    s: int
    gamma_norm_est: float  # estimate of ||Gamma-hat||_{2->p}
    mode_est: float = 1.0


B_FLOOR = 1000


def recommend_B(n: int, target, gamma: float = 0.1) -> int:
    """max(n, ceil((M^2 * var_term)^{1+gamma}), 1000)."""
    if isinstance(target, GaussianTarget):
        var_term = target.var_proxy_est
    elif isinstance(target, SphericalTarget):
        if target.s < 1:
            raise DomainError("s must be positive")
        var_term = (target.gamma_norm_est / target.s) ** 2
    else:
        raise DomainError("target must be a GaussianTarget or SphericalTarget")
    if var_term < 0 or target.mode_est < 0 or gamma < 0:
        raise DomainError("estimates and gamma must be nonnegative")
    mc = math.ceil((target.mode_est ** 2 * var_term) ** (1.0 + gamma))
    return int(max(n, mc, B_FLOOR))

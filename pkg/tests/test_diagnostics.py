import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from hdlpboot import diagnostics as dg
from hdlpboot import hdtest
from hdlpboot.errors import DegenerateError, DomainError, UnsupportedNorm
from hdlpboot.estimators import IDENTITY, CovModel, Hypothesis
from hdlpboot.randgen import RngStream
from hdlpboot.simharness import build_cov


def _mc(S, p, B=100_000, sid=0):
    return hdtest.gaussian_proxy(CovModel.from_matrix(S, "exact"), p, B, RngStream(77, sid)).values


# variance bounds --------------------------------------------------------------


@pytest.mark.parametrize("d", [1, 5, 100])
def test_refined2_identity_is_one_and_p12(d):
    rep = dg.var_lower_bound(np.eye(d), 2)
    assert rep.refined_regime == "Refined2" and rep.refined == pytest.approx(1.0)
    assert rep.regime == "P12" and rep.bound == pytest.approx(math.pi / 9)


def test_refined_inf_scalar_case():
    rep = dg.var_lower_bound(np.eye(1), math.inf)
    assert rep.regime == "PInf" and rep.refined == pytest.approx(1 / 48)


def test_regimes_follow_p():
    S = build_cov("toeplitz", 100)
    assert dg.var_lower_bound(S, 3.0).regime == "P2LogD"
    assert dg.var_lower_bound(S, 20.0).regime == "PGeq2LogD"
    r1 = dg.var_lower_bound(S, 1.0)
    assert r1.refined_regime == "Refined1" and not r1.certified and r1.note
    assert dg.var_lower_bound(S, 2.0).rho == pytest.approx(0.8)
    with pytest.raises(DegenerateError):
        dg.var_lower_bound(np.zeros((3, 3)), 2)


def test_bound_formulas_by_hand():
    S = np.diag([1.0, 4.0, 9.0])
    sig = np.array([1.0, 2.0, 3.0])
    d = 3
    ref = (math.pi / 9) * np.mean(sig ** 1.5) ** (2 / 1.5) * d ** (2 / 1.5 - 1)
    assert dg.var_lower_bound(S, 1.5).bound == pytest.approx(ref)
    ref_inf = (1 / 225) * (1 / (1 + 3 * math.sqrt(math.log(3)))) ** 2
    assert dg.var_lower_bound(S, math.inf).bound == pytest.approx(ref_inf)
    ref_top = ref_inf / 11 ** 6 / (1 + 0.5 * math.sqrt(math.log(3))) ** 2
    assert dg.var_lower_bound(S, 50.0, rho=0.5).bound == pytest.approx(ref_top)


@pytest.mark.parametrize("name", ["identity", "toeplitz", "equicorr"])
def test_refined2_order_of_magnitude(name):
    S = build_cov(name, 100)
    v = _mc(S, 2).var(ddof=1)
    assert 0.2 <= v / dg.var_lower_bound(S, 2).refined <= 4


def test_refined2_scalar_order_of_magnitude():
    v = _mc(np.eye(1), 2).var(ddof=1)
    assert 0.2 <= v <= 4  # exact value 1 - 2/pi


# moments and quantiles --------------------------------------------------------


def test_moment_examples():
    m1 = dg.gaussian_norm_moment(np.ones(50), 1)
    assert m1.closed_form == pytest.approx(50 * math.sqrt(2 / math.pi))
    assert dg.gaussian_norm_moment(np.ones(1), 2).closed_form == pytest.approx(1.0)
    m = dg.gaussian_norm_moment(np.ones(100), 2)
    assert m.closed_form == pytest.approx(10.0)
    mc = np.linalg.norm(RngStream(1).std_normal((100_000, 100)), axis=1).mean()
    assert m.lower <= mc <= m.upper
    assert m.lower == pytest.approx(10 / math.sqrt(16 * math.pi))


@pytest.mark.parametrize("p", [1, 2, 4])
@pytest.mark.parametrize("d", [1, 10, 100])
def test_moment_closed_form_matches_mc(p, d):
    sig = np.linspace(0.5, 1.5, d)
    Z = RngStream(p, d).std_normal((100_000, d)) * sig
    mc = np.mean(np.sum(np.abs(Z) ** p, axis=1)) ** (1 / p)
    assert dg.gaussian_norm_moment(sig, p).closed_form == pytest.approx(mc, rel=0.01)


def test_moment_inf_bracket_is_heuristic():
    rep = dg.gaussian_norm_moment(np.ones(100), math.inf)
    assert rep.closed_form is None and not rep.certified
    assert rep.lower <= _mc(np.eye(100), math.inf, 20_000).mean() <= rep.upper


def test_quantile_bracket_examples():
    var = 1 - 2 / math.pi
    mean = math.sqrt(2 / math.pi)
    lo, hi = dg.quantile_bracket(np.eye(1), 2, 0.05, var, mean)
    assert lo <= stats.halfnorm.ppf(0.95) <= hi
    lo, hi = dg.quantile_bracket(np.eye(1), 2, 0.5, var, mean)
    assert hi - mean == pytest.approx(min(math.sqrt(2 * math.log(2)), math.sqrt(2 * var)))
    widths = [dg.quantile_bracket(np.eye(3), 2, a, 0.5, 1.0)[1] for a in (0.01, 0.1, 0.3, 0.5)]
    assert all(b <= a for a, b in zip(widths, widths[1:]))
    with pytest.raises(UnsupportedNorm):
        dg.quantile_bracket(build_cov("toeplitz", 5), 3.0, 0.1, 1.0, 1.0)


# alternatives -----------------------------------------------------------------


def test_bahadur_examples():
    assert dg.bahadur_slope_lb(np.zeros(3), IDENTITY, np.eye(3), 2) == 0.0
    mu = np.array([1.0, -2.0, 2.0])
    assert dg.bahadur_slope_lb(mu, IDENTITY, np.eye(3), 2) == pytest.approx(3.0)
    w = np.array([0.5, 2.0, 1.0])
    mu = np.array([0.0, 0.7 * w[1], 0.0])
    assert dg.bahadur_slope_lb(mu, IDENTITY, np.diag(w ** 2), math.inf) == pytest.approx(0.7 * w[1] / w.max())


@given(st.floats(0.1, 10))
def test_bahadur_scale_consistent(c):
    Om = build_cov("toeplitz", 4)
    H = Hypothesis(r=[0.1, 0.0, 0.0, 0.2])
    mu = np.array([0.5, -0.3, 0.2, 0.0])
    base = dg.bahadur_slope_lb(mu, H, Om, math.inf)
    shifted = H.r + c * (mu - H.r)
    assert dg.bahadur_slope_lb(shifted, H, c * c * Om, math.inf) == pytest.approx(base, rel=1e-10)


def test_classify_examples():
    cov = CovModel.from_matrix(np.eye(100), "exact")
    zero = dg.classify_alternative(np.zeros(100), IDENTITY, cov, 2, 50, 2000, RngStream(0))
    assert zero.label == "Undetectable" and zero.signal == 0.0
    big = dg.classify_alternative(np.full(100, 10.0), IDENTITY, cov, 2, 50, 2000, RngStream(0))
    assert big.label == "Consistent"
    dense = np.full(100, 3 / math.sqrt(50))
    lab = dg.classify_alternative(dense, IDENTITY, cov, 2, 50, 2000, RngStream(0))
    assert lab.label == "Consistent" and lab.mean_est == pytest.approx(9.975, rel=0.02)
    with pytest.raises(DomainError):
        dg.classify_alternative(dense, IDENTITY, cov, 2, 50, 10, RngStream(0))


def test_classify_monotone_in_delta():
    cov = CovModel.from_matrix(np.eye(50), "exact")
    ranks = []
    for delta in np.linspace(0, 2, 15):
        mu = dg.make_alternative(dg.AltSpec(5, float(delta)), np.ones(50))
        ranks.append(dg.classify_alternative(mu, IDENTITY, cov, math.inf, 50, 2000, RngStream(3)).rank)
    assert ranks == sorted(ranks) and ranks[0] == 0 and ranks[-1] == 2


def test_make_alternative():
    r = np.array([1.0, 2.0, 3.0, 4.0])
    H = Hypothesis(r=r)
    assert np.array_equal(dg.make_alternative(dg.AltSpec(2, 0.0), np.ones(4), H), r)
    mu = dg.make_alternative(dg.AltSpec(4, 0.1), np.ones(4), H)
    np.testing.assert_allclose(np.abs(mu - r), 0.1)
    np.testing.assert_allclose(np.sign(mu - r), [1, -1, 1, -1])
    mu = dg.make_alternative(dg.AltSpec(3, 0.5, "random"), np.full(10, 4.0), stream=RngStream(1))
    assert np.count_nonzero(mu) == 3 and np.allclose(np.abs(mu[mu != 0]), 1.0)
    with pytest.raises(DomainError):
        dg.make_alternative(dg.AltSpec(5, 0.1), np.ones(4))
    with pytest.raises(DomainError):
        dg.AltSpec(0, 1.0)


# rates and budgets -------------------------------------------------------------


def test_rates_identity_and_rank_one():
    rep = dg.check_rates_subgaussian(np.eye(64), 729, 2)
    assert rep.ratios["r(O)/sqrt(r(O^2))"] == pytest.approx(8.0)
    assert rep.ratios["r(O)/sqrt(r(O^2))/n^(1/6)"] == pytest.approx(8.0 / 3.0)
    v = np.ones(5)
    one = dg.check_rates_subgaussian(np.outer(v, v), 100, 2)
    assert one.ratios["r(O)/sqrt(r(O^2))"] == pytest.approx(1.0)


def test_rates_equicorr_by_eigenvalues():
    d, n = 100, 100
    lam_top, lam_rest = 0.2 + 0.8 * d, 0.2
    tr1 = lam_top + (d - 1) * lam_rest
    tr2 = lam_top ** 2 + (d - 1) * lam_rest ** 2
    r1, r2 = tr1 / lam_top, tr2 / lam_top ** 2
    rep = dg.check_rates_subgaussian(build_cov("equicorr", d), n, 2)
    assert rep.ratios["r(O)/sqrt(r(O^2))"] == pytest.approx(r1 / math.sqrt(r2))
    assert rep.ratios["r(O)/r(O^2)*max(sqrt(r(O)/n),r(O)/n)"] == pytest.approx(r1 / r2 * math.sqrt(r1 / n))
    inf = dg.check_rates_subgaussian(np.diag([1.0, 4.0]), 64, math.inf)
    assert inf.ratios["a^2*sqrt(log t/n)"] == pytest.approx(4 * math.sqrt(math.log(2) / 64))


def test_recommend_B():
    assert dg.recommend_B(50, dg.GaussianTarget(1e-6)) == 1000
    assert dg.recommend_B(10_000, dg.GaussianTarget(1.0)) == 10_000
    assert dg.recommend_B(10, dg.GaussianTarget(2000.0, 1.0), 0.0) == 2000
    n, var, g = 100, 9.0, 40.0
    assert var > (g / (n - 1)) ** 2
    sph = dg.recommend_B(n, dg.SphericalTarget(n - 1, g, 30.0))
    gau = dg.recommend_B(n, dg.GaussianTarget(var, 30.0))
    assert sph < gau

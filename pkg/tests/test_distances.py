import numpy as np
import pytest
from scipy import integrate, stats

from cellfree.distances import (
    EmptySupport,
    conditional_inner_law,
    law_center_distance,
    law_nearest_of_m,
    law_ppp_order,
    law_truncated_remaining,
    law_user_to_random_ap,
)

R_S = 500.0


def _laws():
    return {
        "center": law_center_distance(R_S),
        "random_ap_mid": law_user_to_random_ap(200.0, R_S),
        "random_ap_edge": law_user_to_random_ap(R_S, R_S),
        "random_ap_centre": law_user_to_random_ap(0.0, R_S),
        "nearest_of_8": law_nearest_of_m(350.0, R_S, 8),
        "truncated": law_truncated_remaining(120.0, R_S, 90.0),
        "ppp_3": law_ppp_order(3, 1e-4),
        "inner": conditional_inner_law(80.0),
    }


@pytest.mark.parametrize("name", list(_laws()))
def test_pdf_integrates_to_one_and_matches_cdf(name):
    law = _laws()[name]
    pts = list(law._breaks())
    total = integrate.quad(law.pdf, law.lo, law.hi, points=pts or None, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)
    mid = law.lo + 0.37 * (law.hi - law.lo)
    assert integrate.quad(law.pdf, law.lo, mid, limit=200)[0] == pytest.approx(law.cdf(mid), abs=1e-6)


@pytest.mark.parametrize("name", list(_laws()))
def test_ppf_inverts_cdf(name):
    law = _laws()[name]
    q = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(law.cdf(law.ppf(q)), q, atol=1e-7)


def _ks(law, samples):
    return stats.kstest(samples, law.cdf).pvalue


def test_random_ap_distance_against_sampling(rng):
    r_o = 310.0
    rad = R_S * np.sqrt(rng.random(50_000))
    th = rng.uniform(0, 2 * np.pi, 50_000)
    d = np.hypot(rad * np.cos(th) - r_o, rad * np.sin(th))
    assert _ks(law_user_to_random_ap(r_o, R_S), d) > 1e-3


def test_nearest_of_m_against_sampling(rng):
    r_o, m = 420.0, 6
    rad = R_S * np.sqrt(rng.random((20_000, m)))
    th = rng.uniform(0, 2 * np.pi, (20_000, m))
    d = np.hypot(rad * np.cos(th) - r_o, rad * np.sin(th)).min(axis=1)
    assert _ks(law_nearest_of_m(r_o, R_S, m), d) > 1e-3


def test_truncated_against_rejection(rng):
    r_o, d_oo = 150.0, 200.0
    rad = R_S * np.sqrt(rng.random(200_000))
    th = rng.uniform(0, 2 * np.pi, 200_000)
    d = np.hypot(rad * np.cos(th) - r_o, rad * np.sin(th))
    assert _ks(law_truncated_remaining(r_o, R_S, d_oo), d[d > d_oo]) > 1e-3


def test_ppp_order_against_sampling(rng):
    lam, n = 1e-4, 4
    # n-th nearest of a PPP in a window large enough to hold it with certainty
    ds = []
    for _ in range(4000):
        cnt = rng.poisson(lam * np.pi * 600.0**2)
        r = 600.0 * np.sqrt(rng.random(cnt))
        ds.append(np.sort(r)[n - 1])
    assert _ks(law_ppp_order(n, lam), np.array(ds)) > 1e-3


def test_edge_user_kink_and_limits():
    law = law_user_to_random_ap(R_S, R_S)
    # a user on the boundary sees half the disk near it: pdf ~ d / r_s^2 for small d
    assert law.pdf(1.0) == pytest.approx(1.0 / R_S**2, rel=1e-3)
    assert law.cdf(2 * R_S) == 1.0
    assert law.cdf(-1.0) == 0.0


def test_mean_of_center_distance():
    assert law_center_distance(R_S).mean() == pytest.approx(2 * R_S / 3, rel=1e-9)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        law_user_to_random_ap(600.0, R_S)
    with pytest.raises(ValueError):
        law_nearest_of_m(1.0, R_S, 0)
    with pytest.raises(EmptySupport):
        law_truncated_remaining(100.0, R_S, R_S + 100.0)

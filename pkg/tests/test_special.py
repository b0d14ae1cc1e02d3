import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from axisfdr import special
from axisfdr.errors import DomainError


def test_log_gamma_known_values():
    assert special.log_gamma(1.0) == 0.0
    assert special.log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)


def test_log_gamma_recurrence():
    # Gamma(10.3) = Gamma(0.3) * prod_{k=0}^{9} (0.3 + k)
    expected = special.log_gamma(0.3) + sum(math.log(0.3 + k) for k in range(10))
    assert special.log_gamma(10.3) == pytest.approx(expected, abs=1e-11)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_log_gamma_domain(bad):
    with pytest.raises(DomainError):
        special.log_gamma(bad)


def test_chisq_cdf_df2_closed_form():
    x = np.linspace(0, 40, 401)
    assert np.allclose(special.chisq_cdf(2, x), -np.expm1(-x / 2), atol=1e-12, rtol=0)
    assert special.chisq_cdf(2, 0.0) == 0.0


def test_chisq_tail_at_reported_threshold():
    tail = 1 - special.chisq_cdf(2, 15.92)
    assert tail == pytest.approx(math.exp(-7.96), rel=1e-10)
    assert round(tail, 5) == pytest.approx(3.5e-4, abs=1e-5)


def test_chisq_cdf_against_density_quadrature():
    df, x = 7, 4.2
    pdf = lambda t: t ** (df / 2 - 1) * math.exp(-t / 2) / (2 ** (df / 2) * math.gamma(df / 2))
    oracle, _ = integrate.quad(pdf, 0, x, epsabs=1e-14, epsrel=1e-13)
    assert special.chisq_cdf(df, x) == pytest.approx(oracle, abs=1e-10)


def test_chisq_quantile_examples():
    assert special.chisq_quantile(2, 1 - math.exp(-1)) == pytest.approx(2.0, rel=1e-12)
    assert special.chisq_quantile(2, 1 - 3.49e-4) == pytest.approx(15.92, abs=0.005)
    assert special.chisq_quantile(3, 0.0) == 0.0
    with pytest.raises(DomainError):
        special.chisq_quantile(2, 1.0)


def test_chisq_quantile_round_trip_random(rng):
    df = rng.uniform(0.5, 50, 100)
    p = rng.uniform(1e-6, 1 - 1e-6, 100)
    x = special.chisq_quantile(df, p)
    assert np.allclose(special.chisq_cdf(df, x), p, atol=1e-9, rtol=0)


@pytest.mark.parametrize("df", [1, 1.78, 2, 4, 20, 40])
def test_quantile_cdf_round_trip_grid(df):
    p = np.concatenate([np.geomspace(1e-6, 0.5, 40), 1 - np.geomspace(1e-6, 0.5, 40)])
    assert np.allclose(special.chisq_cdf(df, special.chisq_quantile(df, p)), p, atol=1e-9, rtol=0)
    q = np.geomspace(1e-12, 0.5, 40)
    assert np.allclose(special.chisq_sf(df, special.chisq_isf(df, q)), q, rtol=1e-9, atol=0)


def test_f_cdf_examples():
    assert special.f_cdf(2, 20, 0.0) == 0.0
    assert special.f_cdf(2, 20, 9.9) == pytest.approx(0.999, abs=2e-4)
    with pytest.raises(DomainError):
        special.f_cdf(0, 20, 1.0)


def test_f_cdf_against_monte_carlo():
    rng = np.random.default_rng(5)
    n = 10**7
    f = (rng.chisquare(4, n) / 4) / (rng.chisquare(30, n) / 30)
    p_mc = np.mean(f <= 2.69)
    se = math.sqrt(p_mc * (1 - p_mc) / n)
    assert abs(special.f_cdf(4, 30, 2.69) - p_mc) < 3 * se


def test_f_quantile_inverts_cdf():
    assert special.f_cdf(2, 20, special.f_quantile(2, 20, 0.999)) == pytest.approx(0.999, abs=1e-12)
    assert special.f_sf(2, 20, special.f_isf(2, 20, 1e-3)) == pytest.approx(1e-3, rel=1e-10)


@given(k=st.integers(0, 2**30), a=st.floats(0.05, 50), b=st.floats(0.05, 50))
@settings(max_examples=200, deadline=None)
def test_incomplete_beta_symmetry(k, a, b):
    x = k / 2**30  # 1 - x is then exact
    assert special.incomplete_beta(a, b, x) == pytest.approx(1 - special.incomplete_beta(b, a, 1 - x), abs=1e-12)


@pytest.mark.parametrize("df", [1, 1.78, 2, 20])
def test_cdfs_monotone_and_bounded(df):
    x = np.linspace(0, 10, 20001) ** 2  # dense near 0 where df = 1 rises like sqrt(x)
    c = special.chisq_cdf(df, x)
    assert np.all(np.diff(c) >= 0) and c.min() >= 0 and c.max() <= 1
    assert np.max(np.diff(c)) < 0.01
    fc = special.f_cdf(2, df, x)
    assert np.all(np.diff(fc) >= 0) and fc.min() >= 0 and fc.max() <= 1

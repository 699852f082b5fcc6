import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings, strategies as st

from anderson_meso import stats

finite_floats = st.floats(-50.0, 50.0)


# ------------------------------------------------------- streaming moments

@given(a=st.lists(finite_floats, min_size=0, max_size=30),
       b=st.lists(finite_floats, min_size=0, max_size=30),
       c=st.lists(finite_floats, min_size=0, max_size=30))
@settings(max_examples=80, deadline=None)
def test_merge_associative_and_matches_batch(a, b, c):
    ra = stats.RunningMoments.from_samples(a)
    rb = stats.RunningMoments.from_samples(b)
    rc = stats.RunningMoments.from_samples(c)
    left = ra.merge(rb).merge(rc)
    right = ra.merge(rb.merge(rc))
    batch = stats.RunningMoments.from_samples(a + b + c)
    for got in (left, right):
        assert got.n == batch.n
        if batch.n:
            scale = 1.0 + abs(batch.mean)
            assert got.mean == pytest.approx(batch.mean, abs=1e-8 * scale)
            assert got.m2 == pytest.approx(batch.m2, abs=1e-6 * scale ** 2)
            assert got.m3 == pytest.approx(batch.m3, abs=1e-4 * scale ** 3)
            assert got.m4 == pytest.approx(batch.m4, abs=1e-2 * scale ** 4)
            assert got.max == batch.max


@given(xs=st.lists(finite_floats, min_size=1, max_size=40))
@settings(max_examples=50, deadline=None)
def test_push_equals_from_samples(xs):
    run = stats.RunningMoments()
    for x in xs:
        run = run.push(x)
    batch = stats.RunningMoments.from_samples(xs)
    assert run.n == batch.n
    assert run.mean == pytest.approx(batch.mean, abs=1e-8 * (1 + abs(batch.mean)))


def test_moments_against_numpy():
    rng = np.random.Generator(np.random.PCG64(0))
    x = rng.normal(2.0, 3.0, size=500)
    emp = stats.EmpiricalDistribution(x)
    assert emp.summary.mean == pytest.approx(np.mean(x))
    assert emp.summary.variance == pytest.approx(np.var(x, ddof=1))
    assert stats.moments(emp, 3) == pytest.approx(np.mean((x - x.mean()) ** 3))
    assert stats.moments(emp, 2, kind="raw") == pytest.approx(np.mean(x ** 2))


def test_skewness_sign():
    assert stats.RunningMoments.from_samples([0, 0, 0, 10]).skewness > 0
    assert stats.RunningMoments.from_samples([0, 10, 10, 10]).skewness < 0


# ---------------------------------------------------- reference distributions

def test_poisson_pmf_normalizes():
    for lam in (0.3, 2.0, 17.5):
        total = math.fsum(stats.poisson_pmf(lam, k) for k in range(200))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_poisson_sf_complements_pmf():
    lam = 3.0
    assert stats.poisson_sf(lam, 0) == 1.0
    assert stats.poisson_sf(lam, 2) == pytest.approx(
        1.0 - stats.poisson_pmf(lam, 0) - stats.poisson_pmf(lam, 1), abs=1e-12)
    assert stats.poisson_sf(lam, 3) < stats.poisson_sf(lam, 2)


def test_tv_of_exact_poisson_pmf_is_zero():
    """Samples laid out with the exact pmf frequencies give TV ~ tail mass."""
    lam = 1.0
    n = 100000
    samples = np.concatenate([
        np.full(int(round(stats.poisson_pmf(lam, k) * n)), k) for k in range(12)])
    rep = stats.total_variation_poisson(stats.EmpiricalDistribution(samples), lam)
    assert rep.value < 1e-3
    assert rep.passed


def test_tv_detects_wrong_intensity():
    rng = np.random.Generator(np.random.PCG64(1))
    samples = rng.poisson(4.0, 4000).astype(float)
    rep = stats.total_variation_poisson(stats.EmpiricalDistribution(samples), 1.0)
    assert rep.value > 0.5
    assert not rep.passed


# ----------------------------------------------------------------------- KS

def test_ks_null_accepts_normal_samples():
    rng = np.random.Generator(np.random.PCG64(12))
    x = rng.normal(0.0, 2.0, size=2000)
    rep = stats.ks_normal(x, 0.0, 2.0)
    assert rep.passed


def test_ks_rejects_shifted_samples():
    rng = np.random.Generator(np.random.PCG64(8))
    x = rng.normal(1.0, 1.0, size=2000)
    assert not stats.ks_normal(x, 0.0, 1.0).passed


def test_ks_statistic_point_mass():
    """All mass at the median of the reference: D = 1/2."""
    d = stats.ks_statistic(np.zeros(100), lambda x: np.full_like(x, 0.5))
    assert d == pytest.approx(0.5)


def test_ks_degenerate_sigma():
    rep = stats.ks_normal(np.zeros(100), 0.0, 0.0)
    assert rep.value == 1.0 and not rep.passed


# ------------------------------------------------------------- test report

def test_report_pass_boundary():
    assert stats.TestReport("x", 1.0, 1.0, 10).passed
    assert not stats.TestReport("x", 1.0 + 1e-12, 1.0, 10).passed


# -------------------------------------------------------------- lindeberg

def test_lindeberg_zero_for_small_cells():
    cells = [np.array([0.001, -0.001])] * 100
    assert stats.lindeberg_diagnostic(cells, 0.5) == 0.0


def test_lindeberg_one_for_single_dominant_cell():
    cells = [np.array([5.0, -5.0])] + [np.array([0.0, 0.0])] * 50
    assert stats.lindeberg_diagnostic(cells, 0.5) == pytest.approx(1.0)


# -------------------------------------------------------------- mollifier

def test_mollifier_midpoint_and_tails():
    # far inside -> ~1, far outside -> ~0, value at an endpoint as eps -> 0 is 1/2
    assert stats.mollifier_eval(0.0, 1e-6, -1.0, 1.0) == pytest.approx(1.0, abs=1e-5)
    assert stats.mollifier_eval(50.0, 1e-3, -1.0, 1.0) == pytest.approx(0.0, abs=1e-4)
    assert stats.mollifier_eval(1.0, 1e-9, -1.0, 1.0) == pytest.approx(0.5, abs=1e-8)


@given(eps=st.floats(0.01, 1.0), a=st.floats(-3.0, 0.0), width=st.floats(0.5, 4.0))
@settings(max_examples=25, deadline=None)
def test_mollifier_l1_closed_form_vs_quadrature(eps, a, width):
    b = a + width
    closed = stats.mollifier_l1_error(eps, a, b)

    def integrand(x):
        ind = 1.0 if a < x < b else 0.0
        return abs(ind - stats.mollifier_eval(x, eps, a, b))

    span = 1000.0 * eps + 10.0 * width
    val, err = scipy.integrate.quad(integrand, a - span, b + span,
                                    points=[a, b], limit=400)
    # tail of g_eps beyond the finite quadrature range, from the antiderivative
    tails = (stats._mollifier_antiderivative(a - span, eps, a, b) + width / 2.0
             + width / 2.0 - stats._mollifier_antiderivative(b + span, eps, a, b))
    assert closed == pytest.approx(val + tails, abs=1e-7 + 10 * err)


def test_mollifier_l1_monotone_in_eps():
    errs = [stats.mollifier_l1_error(e, -1.0, 1.0) for e in (0.4, 0.2, 0.1, 0.05)]
    assert all(x > y for x, y in zip(errs, errs[1:]))


def test_mollifier_validation():
    with pytest.raises(ValueError):
        stats.mollifier_eval(0.0, -1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        stats.mollifier_l1_error(0.1, 1.0, -1.0)

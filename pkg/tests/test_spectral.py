import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anderson_meso.hamiltonian import (DisorderedOperator, PotentialSpec,
                                       sample_operator)
from anderson_meso.lattice import make_box
from anderson_meso import spectral


def uniform_spec(width=4.0):
    return PotentialSpec(family="uniform_width", width=width)


# ------------------------------------------------------------ closed forms

def test_path_graph_spectrum():
    """Zero potential, pure hopping: eigenvalues 2 cos(k pi / (n+1))."""
    for n in (5, 101):
        box = make_box((n - 1) / 2 + 0.1, 1)
        assert box.site_count == n
        op = DisorderedOperator(box=box, potential=np.zeros(n))
        got = spectral.dense_spectrum(op)
        expected = np.sort(2.0 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1)))
        assert np.allclose(got, expected, atol=1e-10)


def test_single_site_green_closed_form():
    box = make_box(0.6, 1)
    op = DisorderedOperator(box=box, potential=np.array([1.5]))
    z = 0.3 + 0.2j
    g = spectral.greens_entry(op, 0, 0, z).value
    assert g == pytest.approx(1.0 / (1.5 - z), abs=1e-12)


def test_two_site_green_closed_form():
    box = make_box(1, 1, a_L=0.5)
    assert box.site_count == 2
    v = np.array([0.7, -1.1])
    op = DisorderedOperator(box=box, potential=v)
    z = -0.2 + 0.5j
    det = (v[0] - z) * (v[1] - z) - 1.0
    assert spectral.greens_entry(op, 0, 0, z).value == pytest.approx(
        (v[1] - z) / det, abs=1e-12)
    assert spectral.greens_entry(op, 0, 1, z).value == pytest.approx(
        -1.0 / det, abs=1e-12)


# --------------------------------------------- inertia counting vs dense

@given(L=st.integers(1, 40), seed=st.integers(0, 10 ** 9),
       shift=st.floats(-5.0, 5.0))
@settings(max_examples=80, deadline=None)
def test_inertia_matches_dense_1d(L, seed, shift):
    op = sample_operator(make_box(L, 1), uniform_spec(), seed)
    tri = spectral.inertia_at(op, shift)
    evals = spectral.dense_spectrum(op)
    assert tri.n_neg == int(np.sum(evals < shift))
    assert tri.dimension == op.site_count


@given(L=st.integers(1, 6), seed=st.integers(0, 10 ** 9),
       shift=st.floats(-5.0, 5.0))
@settings(max_examples=40, deadline=None)
def test_inertia_matches_dense_2d(L, seed, shift):
    op = sample_operator(make_box(L, 2), uniform_spec(), seed)
    tri = spectral.inertia_at(op, shift)
    evals = np.linalg.eigvalsh(op.to_dense())
    assert tri.n_neg == int(np.sum(evals < shift))


@given(L=st.integers(1, 40), seed=st.integers(0, 10 ** 9),
       lo=st.floats(-4.0, 3.9), width=st.floats(0.01, 3.0))
@settings(max_examples=60, deadline=None)
def test_count_in_interval_matches_dense(L, seed, lo, width):
    op = sample_operator(make_box(L, 1), uniform_spec(), seed)
    evals = spectral.dense_spectrum(op)
    hi = lo + width
    assert spectral.count_in_interval(op, (lo, hi)) == int(
        np.sum((evals > lo) & (evals < hi)))


def test_count_interval_validation():
    op = sample_operator(make_box(2, 1), uniform_spec(), 0)
    with pytest.raises(ValueError):
        spectral.count_in_interval(op, (1.0, 1.0))


def test_zero_hopping_counts_potential_values():
    op = sample_operator(make_box(50, 1), uniform_spec(), 3, hopping=0.0)
    tri = spectral.inertia_at(op, 0.0)
    assert tri.n_neg == int(np.sum(op.potential < 0.0))


def test_shift_exactly_at_eigenvalue_jitters():
    """A shift equal to a diagonal entry hits a zero pivot; the jittered
    retry must still return a consistent inertia."""
    box = make_box(1.4, 1)
    op = DisorderedOperator(box=box, potential=np.array([0.5, 0.5, 0.5]),
                            hopping=0.0)
    before = spectral.jitter_event_count
    tri = spectral.inertia_at(op, 0.5)
    assert spectral.jitter_event_count > before
    assert tri.n_neg + tri.n_pos == 3


def test_dense_cap_enforced():
    op = sample_operator(make_box(10, 1), uniform_spec(), 0)
    with pytest.raises(spectral.DenseCapError):
        spectral.dense_spectrum(op, cap=5)


# ------------------------------------------------------- resolvent algebra

def test_green_symmetry():
    op = sample_operator(make_box(6, 2), uniform_spec(), 11)
    z = 0.1 + 0.3j
    assert spectral.greens_entry(op, 3, 17, z).value == pytest.approx(
        spectral.greens_entry(op, 17, 3, z).value, abs=1e-10)


@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_diag_resolvent_matches_eigendecomposition(seed):
    op = sample_operator(make_box(20, 1), uniform_spec(), seed)
    z = -0.4 + 0.25j
    fast = spectral.diag_resolvent(op, z)
    w, v = np.linalg.eigh(op.to_dense())
    slow = (v * v) @ (1.0 / (w - z))
    assert np.allclose(fast, slow, atol=1e-10)


def test_trace_im_resolvent_methods_agree():
    op = sample_operator(make_box(15, 1), uniform_spec(), 2)
    z = 0.2 + 0.5j
    a = spectral.trace_im_resolvent(op, z, method="eigen")
    b = spectral.trace_im_resolvent(op, z, method="solve")
    assert a == pytest.approx(b, rel=1e-9)


def test_green_requires_upper_half_plane():
    op = sample_operator(make_box(2, 1), uniform_spec(), 0)
    with pytest.raises(ValueError):
        spectral.greens_entry(op, 0, 0, 0.5 - 0.1j)
    with pytest.raises(ValueError):
        spectral.diag_resolvent(op, 0.5)


def test_green_comparison_requires_shared_realization():
    spec = uniform_spec()
    inner, outer = make_box(3, 1), make_box(6, 1)
    op_i = sample_operator(inner, spec, 7)
    op_o = sample_operator(outer, spec, 7)
    val = spectral.green_comparison(op_i, op_o, (0,), 0.0 + 0.4j)
    assert val >= 0.0
    with pytest.raises(ValueError):
        spectral.green_comparison(op_i, sample_operator(outer, spec, 8),
                                  (0,), 0.0 + 0.4j)


def test_fractional_moment_probe_finite():
    mean, se = spectral.fractional_moment_probe(
        make_box(8, 1), uniform_spec(15.0), 5, x=8, y=12, z=0.0 + 0.1j,
        s=0.5, n_samples=50)
    assert 0.0 < mean < 10.0
    assert se > 0.0

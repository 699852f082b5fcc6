"""Fast self-test: closed forms, exact identities and tiny oracle checks.

Every check is deterministic and runs in milliseconds; the whole suite stays
well under a minute.  Intended as a smoke test for fresh installs and as the
`selftest` CLI subcommand.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import scipy.integrate

from . import dos, spectral, stats
from .hamiltonian import DisorderedOperator, PotentialSpec, restrict, sample_operator
from .lattice import (LatticeBox, MesoWindow, dyadic_depth, dyadic_partition,
                      interior_boundary_split, make_box, partition_box,
                      window_interval)
from .rng import derive_seed, site_uniforms

CHECKS = []


def check(name):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn
    return deco


def _close(a, b, tol):
    assert abs(a - b) <= tol, f"|{a} - {b}| > {tol}"


# ---------------------------------------------------------------- lattice

@check("box: radius-2 segment has 5 sites")
def _():
    assert make_box(2.0, 1).site_count == 5


@check("box: half-shifted 2D square [-1,2]x[-2,2]")
def _():
    box = make_box(2.0, 2, a_L=(0.5, 0.0))
    assert box.lower == (-1, -2) and box.upper == (2, 2) and box.site_count == 20


@check("box: trim shrinks [-2,2] to [-1,1]")
def _():
    box = make_box(2.0, 1, c_L=1.0)
    assert box.lower == (-1,) and box.upper == (1,)


@check("window: microscopic interval at volume 5")
def _():
    w = MesoWindow(E=0.0, eta=1.0, a=-1.0, b=1.0)
    lo, hi = window_interval(w, 5)
    _close(lo, -0.2, 1e-15)
    _close(hi, 0.2, 1e-15)


@check("window nesting: larger volume gives a sub-interval")
def _():
    w = MesoWindow(E=0.3, eta=0.5, a=-2.0, b=1.0)
    lo1, hi1 = window_interval(w, 100)
    lo2, hi2 = window_interval(w, 10000)
    assert lo1 < lo2 < hi2 < hi1


@check("partition: 8-site segment at beta=1/2 gives 3 cells")
def _():
    part = partition_box(LatticeBox(lower=(0,), upper=(7,)), 0.5)
    bounds = [(c.lower[0], c.upper[0]) for c in part.cells]
    assert bounds == [(0, 2), (3, 4), (5, 7)]


@check("partition: beta=1 is the identity partition")
def _():
    parent = LatticeBox(lower=(-4,), upper=(4,))
    part = partition_box(parent, 1.0)
    assert part.cell_count == 1 and part.cells[0] == LatticeBox((-4,), (4,))


@check("partition: 81x81 box at beta=1/2 gives 81 cells of 9x9")
def _():
    parent = LatticeBox(lower=(-40, -40), upper=(40, 40))
    part = partition_box(parent, 0.5)
    assert part.cell_count == 81
    assert all(c.shape == (9, 9) for c in part.cells)


@check("partition exactness: cells tile the parent site set")
def _():
    parent = LatticeBox(lower=(-6, -3), upper=(5, 4))
    part = partition_box(parent, 0.4)
    cells = np.concatenate([c.coords() for c in part.cells])
    lex = np.lexsort(cells.T[::-1])
    assert np.array_equal(cells[lex], parent.coords())


@check("dyadic depth: eta=0.2 sits between 1/8 and 1/4, depth 3")
def _():
    assert dyadic_depth(0.2) == 3


@check("dyadic partition: 2 levels with 256 and 4096 cells")
def _():
    root = LatticeBox(lower=(0, 0), upper=(255, 255))
    tree = dyadic_partition(root, 0.2)
    assert tree.depth == 3
    assert [len(lv) for lv in tree.levels] == [256, 4096]


@check("interior/boundary split of a 5-site segment at cutoff 1")
def _():
    interior, boundary = interior_boundary_split(make_box(2.0, 1), 1.0)
    assert list(interior) == [2] and list(boundary) == [0, 1, 3, 4]


# ------------------------------------------------------------- rng / model

@check("rng: site values are reproducible and restriction-consistent")
def _():
    box = make_box(8.0, 2)
    sub = LatticeBox(lower=(-2, 0), upper=(1, 3))
    u_box = site_uniforms(42, box.coords())
    u_sub = site_uniforms(42, sub.coords())
    idx = box.index_of(sub.coords())
    assert np.array_equal(u_box[idx], u_sub)


@check("rng: derived seeds differ by tag")
def _():
    seeds = {derive_seed(7, t) for t in ("a", "b", "c", 0, 1)}
    assert len(seeds) == 5


@check("potential: uniform ppf hits interval endpoints and midpoint")
def _():
    spec = PotentialSpec(family="uniform_width", width=4.0)
    out = spec.ppf(np.array([0.0, 0.5, 1.0]))
    assert np.allclose(out, [-2.0, 0.0, 2.0], atol=1e-15)


@check("potential: table family integrates to one and bounds rho_sup")
def _():
    spec = PotentialSpec(family="table", bin_edges=(0.0, 1.0, 3.0),
                         densities=(0.5, 0.25))
    assert spec.rho_sup == 0.5
    vals = spec.ppf(np.linspace(0.001, 0.999, 101))
    assert np.all((vals >= 0.0) & (vals <= 3.0))


@check("operator: apply matches dense matrix-vector product")
def _():
    box = make_box(3.0, 2)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=2.0), 3)
    v = np.linspace(-1, 1, op.site_count)
    assert np.allclose(op.apply(v), op.to_dense() @ v, atol=1e-12)


@check("operator: adjacency is symmetric with correct degree sum")
def _():
    box = make_box(3.0, 2)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=1.0), 5)
    a = op.adjacency()
    assert (a != a.T).nnz == 0
    n = box.shape[0]
    assert a.sum() == 2 * 2 * n * (n - 1)  # 2 axes, n(n-1) directed bonds each


@check("operator: restriction keeps the parent potential values")
def _():
    box = make_box(6.0, 1)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 11)
    sub = LatticeBox(lower=(-2,), upper=(3,))
    sub_op = restrict(op, sub)
    assert np.array_equal(sub_op.potential, op.potential[4:10])


@check("operator: Gershgorin bounds enclose the dense spectrum")
def _():
    box = make_box(10.0, 1)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 13)
    lo, hi = op.spectral_bounds()
    evals = spectral.dense_spectrum(op)
    assert lo <= evals[0] and evals[-1] <= hi


# ---------------------------------------------------------------- spectral

@check("path graph: eigenvalues are 2cos(k*pi/(n+1)), n=5")
def _():
    op = DisorderedOperator(box=make_box(2.0, 1), potential=np.zeros(5))
    evals = spectral.dense_spectrum(op)
    exact = np.sort(2.0 * np.cos(np.arange(1, 6) * math.pi / 6.0))
    assert np.max(np.abs(evals - exact)) < 1e-10


@check("path graph: eigenvalues match closed form, n=101")
def _():
    op = DisorderedOperator(box=make_box(50.0, 1), potential=np.zeros(101))
    evals = spectral.dense_spectrum(op)
    exact = np.sort(2.0 * np.cos(np.arange(1, 102) * math.pi / 102.0))
    assert np.max(np.abs(evals - exact)) < 1e-10


@check("inertia: matches dense eigenvalue counting on a 2D box")
def _():
    box = make_box(3.0, 2)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 17)
    evals = spectral.dense_spectrum(op)
    for shift in (-2.0, -0.5, 0.31, 2.7):
        assert spectral.inertia_at(op, shift).n_neg == int(np.sum(evals < shift))


@check("inertia: zero-hopping counting equals potential order statistics")
def _():
    box = make_box(20.0, 1)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 19,
                         hopping=0.0)
    count = spectral.count_in_interval(op, (-0.5, 0.75))
    assert count == int(np.sum((op.potential > -0.5) & (op.potential < 0.75)))


@check("green: single site gives 1/(v - z)")
def _():
    op = DisorderedOperator(box=LatticeBox((0,), (0,)), potential=np.array([1.0]))
    z = complex(-1.0, 1.0)
    got = spectral.greens_entry(op, 0, 0, z).value
    _close(got, 1.0 / (1.0 - z), 1e-12)


@check("green: 2x2 closed form (v-z on diagonal, hopping 1)")
def _():
    op = DisorderedOperator(box=LatticeBox((0,), (1,)),
                            potential=np.array([0.5, -0.5]))
    z = complex(0.1, 0.2)
    a, b = 0.5 - z, -0.5 - z
    det = a * b - 1.0
    _close(spectral.greens_entry(op, 0, 0, z).value, b / det, 1e-12)
    _close(spectral.greens_entry(op, 0, 1, z).value, -1.0 / det, 1e-12)
    _close(spectral.greens_entry(op, 1, 0, z).value, -1.0 / det, 1e-12)


@check("green: symmetry G(x,y) = G(y,x)")
def _():
    box = make_box(6.0, 1)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 23)
    z = complex(0.0, 0.5)
    _close(spectral.greens_entry(op, 2, 9, z).value,
           spectral.greens_entry(op, 9, 2, z).value, 1e-12)


@check("resolvent: O(n) diagonal recursion equals eigendecomposition")
def _():
    box = make_box(30.0, 1)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 29)
    z = complex(0.2, 0.05)
    fast = spectral.diag_resolvent(op, z)
    w, v = np.linalg.eigh(op.to_dense())
    slow = (v * v) @ (1.0 / (w - z))
    assert np.max(np.abs(fast - slow)) < 1e-10


@check("resolvent: trace via eigenvalues equals trace via solves")
def _():
    box = make_box(25.0, 1)
    op = sample_operator(box, PotentialSpec(family="uniform_width", width=4.0), 31)
    z = complex(-0.3, 0.1)
    _close(spectral.trace_im_resolvent(op, z, method="eigen"),
           spectral.trace_im_resolvent(op, z, method="solve"), 1e-10)


# -------------------------------------------------------------------- dos

@check("dos: counting fill equals dense fill bin by bin")
def _():
    box = make_box(40.0, 1)
    spec = PotentialSpec(family="uniform_width", width=4.0)
    edges = np.linspace(-4.5, 4.5, 19)
    a = dos.estimate_dos_histogram(box, spec, 4, 7, grid_edges=edges, method="dense")
    b = dos.estimate_dos_histogram(box, spec, 4, 7, grid_edges=edges, method="counting")
    assert np.array_equal(a.f_hat, b.f_hat)


@check("dos: zero hopping recovers the bare uniform density")
def _():
    box = make_box(3000.0, 1)
    spec = PotentialSpec(family="uniform_width", width=4.0)
    f_hat, se = dos.estimate_dos_pointwise(box, spec, 0.0, 1.0, 4, 7, hopping=0.0)
    _close(f_hat, 0.25, 0.01)


@check("dos: histogram total mass is one")
def _():
    box = make_box(200.0, 1)
    spec = PotentialSpec(family="uniform_width", width=4.0)
    est = dos.estimate_dos_histogram(box, spec, 3, 7,
                                     grid_edges=np.linspace(-4.2, 4.2, 43))
    _close(est.total_mass(), 1.0, 1e-12)


@check("dos: intensity scales with window width")
def _():
    w = MesoWindow(E=0.0, eta=1.0, a=-1.5, b=0.5)
    lam, se = dos.intensity(0.25, w, 0.01)
    _close(lam, 0.5, 1e-15)
    _close(se, 0.02, 1e-15)


# ------------------------------------------------------------------ stats

@check("poisson: pmf sums to one")
def _():
    total = math.fsum(stats.poisson_pmf(3.7, k) for k in range(200))
    _close(total, 1.0, 1e-12)


@check("poisson: survival function is monotone with sf(0)=1")
def _():
    sf = [stats.poisson_sf(2.0, n) for n in range(8)]
    assert sf[0] == 1.0 and all(a >= b for a, b in zip(sf, sf[1:]))


@check("tv: exact Poisson histogram has distance ~0")
def _():
    lam, n = 1.3, 200000
    pmf = np.array([stats.poisson_pmf(lam, k) for k in range(30)])
    counts = np.round(pmf * n).astype(int)
    samples = np.repeat(np.arange(30), counts)
    rep = stats.total_variation_poisson(stats.EmpiricalDistribution(samples), lam)
    assert rep.value < 5e-3


@check("ks: uniform grid against its own cdf is ~1/(2n)")
def _():
    x = (np.arange(1000) + 0.5) / 1000.0
    d = stats.ks_statistic(x, lambda t: t)
    _close(d, 0.0005, 1e-12)


@check("moments: streaming merge equals one-shot summary")
def _():
    x = np.sin(np.arange(40) * 1.7) * 3.0 + 1.0
    whole = stats.RunningMoments.from_samples(x)
    merged = stats.RunningMoments.from_samples(x[:13]).merge(
        stats.RunningMoments.from_samples(x[13:]))
    for attr in ("n", "mean", "m2", "m3", "m4", "max"):
        _close(getattr(whole, attr), getattr(merged, attr), 1e-9)


@check("moments: raw moments of {0,1} Bernoulli data")
def _():
    x = np.array([0.0] * 3 + [1.0] * 7)
    emp = stats.EmpiricalDistribution(x)
    for k in range(1, 5):
        _close(stats.moments(emp, k, kind="raw"), 0.7, 1e-12)


@check("moments: symmetric data has zero skewness")
def _():
    emp = stats.EmpiricalDistribution(np.array([-2.0, -1.0, 0.0, 1.0, 2.0]))
    _close(emp.summary.skewness, 0.0, 1e-14)


@check("mollifier: value at the center of (0,1) with eps=1")
def _():
    got = stats.mollifier_eval(0.0, 1.0, 0.0, 1.0)
    exact = (math.atan(0.0) - math.atan(-1.0)) / math.pi
    _close(got, exact, 1e-15)
    _close(got, 0.25, 1e-15)


@check("mollifier: closed-form L1 error matches quadrature")
def _():
    a, b, eps = -0.7, 1.1, 1e-3
    closed = stats.mollifier_l1_error(eps, a, b)
    lo, hi = a - 50.0, b + 50.0
    mid, _ = scipy.integrate.quad(
        lambda x: abs((a < x < b) - stats.mollifier_eval(x, eps, a, b)),
        lo, hi, points=[a, b], limit=400)
    # far tails of g_eps handled in closed form via its antiderivative
    anti = stats._mollifier_antiderivative
    tails = (anti(lo, eps, a, b) + (b - a) / 2.0) + ((b - a) / 2.0 - anti(hi, eps, a, b))
    _close(closed, mid + tails, 1e-8)


@check("mollifier: L1 error decreases with eps")
def _():
    errs = [stats.mollifier_l1_error(e, 0.0, 1.0) for e in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2] > 0


def run_selftest(stream=None) -> int:
    """Run all checks; print per-check status and a summary; 0 iff all pass."""
    import sys
    out = stream or sys.stdout
    failures = []
    for name, fn in CHECKS:
        try:
            fn()
            print(f"  [  ok] {name}", file=out)
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures.append((name, exc))
            print(f"  [FAIL] {name}: {exc}", file=out)
    print(f"{len(CHECKS)} checks run, {len(CHECKS) - len(failures)} passed, "
          f"{len(failures)} failed", file=out)
    return 0 if not failures else 4

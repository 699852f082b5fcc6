"""Eigenvalue counting by matrix inertia, Green's functions and resolvent traces.

Counting never diagonalizes: in 1D a Sturm pivot recursion gives the number
of eigenvalues below a shift in O(n); in higher dimensions a symmetric
Bunch-Kaufman factorization does.  A dense eigensolver is kept as the
cross-checking oracle for boxes under a configurable size cap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

from .hamiltonian import DisorderedOperator, PotentialSpec, sample_operator
from .lattice import LatticeBox
from .rng import derive_seed

log = logging.getLogger(__name__)

DENSE_CAP = 4096

# diagnostics: how many times a zero pivot forced a shift jitter
jitter_event_count = 0


class FactorizationError(RuntimeError):
    """Persistent pivot breakdown that jittering could not resolve."""


class ConditioningError(RuntimeError):
    """Complex solve refused or failed; raise Im z."""


class DenseCapError(ValueError):
    """Dense-spectrum oracle refused: box exceeds the dense cap."""


@dataclass(frozen=True)
class InertiaTriple:
    n_neg: int
    n_zero: int
    n_pos: int

    @property
    def dimension(self) -> int:
        return self.n_neg + self.n_zero + self.n_pos


@dataclass(frozen=True)
class GreensValue:
    x: int
    y: int
    z: complex
    value: complex


@njit(cache=True, nogil=True)
def _sturm_neg_count(diag, hop2, shift):
    """Negative pivots of the shifted tridiagonal; -1 signals an exact zero."""
    n = diag.shape[0]
    neg = 0
    d = diag[0] - shift
    if d == 0.0:
        return -1
    if d < 0.0:
        neg += 1
    for i in range(1, n):
        d = diag[i] - shift - hop2 / d
        if d == 0.0:
            return -1
        if d < 0.0:
            neg += 1
    return neg


@njit(cache=True, nogil=True)
def _tridiag_diag_resolvent(diag, hop2, w_re, w_im):
    """Diagonal of (T - w)^{-1} for a symmetric tridiagonal T, O(n).

    Uses forward and backward Schur complements:
    G_ii = 1 / (dp_i + dm_i - (a_i - w)).
    """
    n = diag.shape[0]
    w = complex(w_re, w_im)
    dp = np.empty(n, dtype=np.complex128)
    dm = np.empty(n, dtype=np.complex128)
    dp[0] = diag[0] - w
    for i in range(1, n):
        dp[i] = diag[i] - w - hop2 / dp[i - 1]
    dm[n - 1] = diag[n - 1] - w
    for i in range(n - 2, -1, -1):
        dm[i] = diag[i] - w - hop2 / dm[i + 1]
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        out[i] = 1.0 / (dp[i] + dm[i] - (diag[i] - w))
    return out


def _inertia_from_ldl_blocks(d: np.ndarray, tol: float) -> InertiaTriple:
    n = d.shape[0]
    n_neg = n_zero = n_pos = 0
    i = 0
    while i < n:
        if i + 1 < n and abs(d[i + 1, i]) > tol:
            a, b, c = d[i, i], d[i + 1, i], d[i + 1, i + 1]
            tr = a + c
            det = a * c - b * b
            disc = np.sqrt(max(tr * tr / 4.0 - det, 0.0))
            for ev in (tr / 2.0 + disc, tr / 2.0 - disc):
                if abs(ev) <= tol:
                    n_zero += 1
                elif ev < 0:
                    n_neg += 1
                else:
                    n_pos += 1
            i += 2
        else:
            ev = d[i, i]
            if abs(ev) <= tol:
                n_zero += 1
            elif ev < 0:
                n_neg += 1
            else:
                n_pos += 1
            i += 1
    return InertiaTriple(n_neg, n_zero, n_pos)


def inertia_at(op: DisorderedOperator, shift: float, max_retries: int = 4) -> InertiaTriple:
    """Inertia of H - shift*I; zero pivots retried with an ulp-scale jitter."""
    global jitter_event_count
    n = op.site_count
    is_1d = op.box.dimension == 1 and op.hopping != 0.0
    hop2 = op.hopping * op.hopping
    s = float(shift)
    for attempt in range(max_retries + 1):
        if is_1d or op.hopping == 0.0:
            if op.hopping == 0.0:
                neg = int(np.sum(op.potential < s))
                n_zero = int(np.sum(op.potential == s))
                if n_zero == 0:
                    return InertiaTriple(neg, 0, n - neg)
                neg = -1
            else:
                neg = _sturm_neg_count(op.potential, hop2, s)
            if neg >= 0:
                return InertiaTriple(neg, 0, n - neg)
        else:
            a = op.to_dense()
            np.fill_diagonal(a, np.diag(a) - s)
            scale = max(1.0, float(np.max(np.abs(op.potential))) + 2 * op.box.dimension)
            tol = 1e-12 * scale
            try:
                _, d, _ = scipy.linalg.ldl(a, lower=True)
            except Exception as exc:  # LAPACK breakdown
                raise FactorizationError(f"LDL factorization failed at shift {s}") from exc
            tri = _inertia_from_ldl_blocks(d, tol)
            if tri.n_zero == 0:
                return tri
        # exact/near-zero pivot: jitter the shift and retry
        jitter_event_count += 1
        delta = 1e-12 * (1.0 + abs(shift)) * (attempt + 1)
        s = float(shift) + delta
        log.debug("inertia_at: zero pivot at shift %r, jittered to %r", shift, s)
    raise FactorizationError(f"persistent zero pivot at shift {shift}")


def count_in_interval(op: DisorderedOperator, interval) -> int:
    """Number of eigenvalues in (lo, hi) via an inertia difference."""
    lo, hi = interval
    if not lo < hi:
        raise ValueError("interval requires lo < hi")
    return inertia_at(op, hi).n_neg - inertia_at(op, lo).n_neg


def dense_spectrum(op: DisorderedOperator, cap: int = None) -> np.ndarray:
    """All eigenvalues, ascending; refuses boxes above the dense cap."""
    cap = DENSE_CAP if cap is None else cap
    n = op.site_count
    if n > cap:
        raise DenseCapError(
            f"box has {n} sites > dense cap {cap}; use count_in_interval instead")
    if op.hopping == 0.0:
        return np.sort(np.asarray(op.potential, dtype=float))
    if op.box.dimension == 1:
        return scipy.linalg.eigvalsh_tridiagonal(
            np.asarray(op.potential, dtype=float),
            np.full(n - 1, op.hopping, dtype=float))
    return np.linalg.eigvalsh(op.to_dense())


def greens_entry(op: DisorderedOperator, x: int, y: int, z: complex) -> GreensValue:
    """u_x where (H - z) u = δ_y, by a complex sparse direct solve."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("greens_entry requires Im z > 0")
    if z.imag < 1e-14:
        raise ConditioningError("Im z below 1e-14; raise Im z")
    n = op.site_count
    if not (0 <= x < n and 0 <= y < n):
        raise ValueError("site index outside box")
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[y] = 1.0
    u = _resolvent_solve(op, z, rhs)
    return GreensValue(x=x, y=y, z=z, value=complex(u[x]))


def _resolvent_solve(op: DisorderedOperator, z: complex, rhs: np.ndarray) -> np.ndarray:
    if op.box.dimension == 1 and op.hopping != 0.0:
        n = op.site_count
        ab = np.zeros((3, n), dtype=np.complex128)
        ab[0, 1:] = op.hopping
        ab[1, :] = op.potential - z
        ab[2, :-1] = op.hopping
        try:
            return scipy.linalg.solve_banded((1, 1), ab, rhs)
        except Exception as exc:
            raise ConditioningError(f"banded solve failed at z={z}") from exc
    mat = (op.to_sparse().astype(np.complex128)
           - z * sp.identity(op.site_count, dtype=np.complex128, format="csr")).tocsc()
    try:
        lu = spla.splu(mat)
        return lu.solve(rhs)
    except RuntimeError as exc:
        raise ConditioningError(f"sparse LU failed at z={z}") from exc


def diag_resolvent(op: DisorderedOperator, z: complex) -> np.ndarray:
    """All diagonal resolvent entries G(x,x;z)."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("diag_resolvent requires Im z > 0")
    if op.box.dimension == 1 and op.hopping != 0.0:
        return _tridiag_diag_resolvent(
            np.asarray(op.potential, dtype=float),
            op.hopping * op.hopping, z.real, z.imag)
    n = op.site_count
    if n <= DENSE_CAP:
        w, v = np.linalg.eigh(op.to_dense())
        # G_xx = sum_k |psi_k(x)|^2 / (E_k - z)
        return (v * v) @ (1.0 / (w - z))
    mat = (op.to_sparse().astype(np.complex128)
           - z * sp.identity(n, dtype=np.complex128, format="csr")).tocsc()
    lu = spla.splu(mat)
    out = np.empty(n, dtype=np.complex128)
    block = 256
    for start in range(0, n, block):
        stop = min(start + block, n)
        rhs = np.zeros((n, stop - start), dtype=np.complex128)
        rhs[np.arange(start, stop), np.arange(stop - start)] = 1.0
        sol = lu.solve(rhs)
        out[start:stop] = sol[np.arange(start, stop), np.arange(stop - start)]
    return out


def trace_im_resolvent(op: DisorderedOperator, z: complex, method: str = "auto") -> float:
    """Σ_x Im G(x,x;z), via the dense spectrum or via solves."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("trace_im_resolvent requires Im z > 0")
    if method == "auto":
        method = "eigen" if op.site_count <= DENSE_CAP else "solve"
    if method == "eigen":
        evals = dense_spectrum(op)
        return float(np.sum((1.0 / (evals - z)).imag))
    if method == "solve":
        return float(np.sum(diag_resolvent(op, z).imag))
    raise ValueError(f"unknown method {method!r}")


def green_comparison(op_inner: DisorderedOperator, op_outer: DisorderedOperator,
                     coord, z: complex) -> float:
    """|G_Λ(x,x;z) - G_Λ'(x,x;z)| for one shared realization, Λ ⊆ Λ'."""
    if not op_outer.box.contains_box(op_inner.box):
        raise ValueError("inner box is not contained in outer box")
    coord = np.atleast_2d(np.asarray(coord, dtype=np.int64))
    xi = int(op_inner.box.index_of(coord)[0])
    xo = int(op_outer.box.index_of(coord)[0])
    idx = op_outer.box.index_of(op_inner.box.coords())
    if not np.array_equal(op_outer.potential[idx], op_inner.potential):
        raise ValueError("operators do not share a potential realization")
    gi = greens_entry(op_inner, xi, xi, z).value
    go = greens_entry(op_outer, xo, xo, z).value
    return abs(gi - go)


def fractional_moment_probe(box: LatticeBox, spec: PotentialSpec, seed: int,
                            x: int, y: int, z: complex, s: float,
                            n_samples: int, hopping: float = 1.0):
    """Monte Carlo estimate of E|G(x,y;z)|^s with its standard error."""
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    vals = np.empty(n_samples)
    for i in range(n_samples):
        op = sample_operator(box, spec, derive_seed(seed, "fracmom", i), hopping=hopping)
        vals[i] = abs(greens_entry(op, x, y, z).value) ** s
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(n_samples))
    return mean, se

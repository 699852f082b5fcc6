"""Random potentials and the truncated operator Δ + V on a box.

Potential values are a pure function of (seed, global site coordinate), so
restricting an operator to a sub-box reproduces exactly the values the
parent carries there, and parallel sampling is order-independent.
Truncation is Dirichlet: hoppings leaving the box are simply dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeBox
from .rng import site_uniforms


@dataclass(frozen=True)
class PotentialSpec:
    """Absolutely continuous site distribution with bounded density.

    family "uniform_width": uniform on [-width/2, width/2].
    family "uniform": uniform on [lo, hi].
    family "table": piecewise-constant density on bin_edges with the given
    bin densities, sampled by inverse CDF.
    """

    family: str
    width: Optional[float] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    bin_edges: Optional[tuple] = None
    densities: Optional[tuple] = None

    def __post_init__(self):
        if self.family == "uniform_width":
            if self.width is None or self.width <= 0:
                raise ValueError("uniform_width requires width > 0")
        elif self.family == "uniform":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ValueError("uniform requires lo < hi")
        elif self.family == "table":
            if self.bin_edges is None or self.densities is None:
                raise ValueError("table requires bin_edges and densities")
            edges = np.asarray(self.bin_edges, dtype=float)
            dens = np.asarray(self.densities, dtype=float)
            if len(edges) != len(dens) + 1 or np.any(np.diff(edges) <= 0):
                raise ValueError("table bin_edges must be increasing with len(densities)+1 entries")
            if np.any(dens < 0):
                raise ValueError("table densities must be nonnegative")
            mass = float(np.sum(dens * np.diff(edges)))
            if abs(mass - 1.0) > 1e-12:
                raise ValueError(f"table density integrates to {mass}, not 1")
        else:
            raise ValueError(f"unknown potential family {self.family!r}")

    @property
    def rho_sup(self) -> float:
        """Essential sup of the density."""
        if self.family == "uniform_width":
            return 1.0 / self.width
        if self.family == "uniform":
            return 1.0 / (self.hi - self.lo)
        return float(np.max(self.densities))

    @property
    def support(self) -> tuple:
        if self.family == "uniform_width":
            return (-self.width / 2.0, self.width / 2.0)
        if self.family == "uniform":
            return (self.lo, self.hi)
        return (float(self.bin_edges[0]), float(self.bin_edges[-1]))

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF, vectorized over u in (0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.family in ("uniform_width", "uniform"):
            lo, hi = self.support
            return lo + u * (hi - lo)
        edges = np.asarray(self.bin_edges, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        widths = np.diff(edges)
        cum = np.concatenate([[0.0], np.cumsum(dens * widths)])
        cum[-1] = 1.0
        k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(dens) - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(dens[k] > 0, (u - cum[k]) / (dens[k] * widths[k]), 0.0)
        return edges[k] + np.clip(frac, 0.0, 1.0) * widths[k]

    def to_json_dict(self) -> dict:
        d = {"family": self.family}
        for key in ("width", "lo", "hi"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        if self.bin_edges is not None:
            d["bin_edges"] = list(self.bin_edges)
            d["densities"] = list(self.densities)
        return d


@dataclass(frozen=True)
class DisorderedOperator:
    """Δ + V truncated to a box, with one sampled potential realization."""

    box: LatticeBox
    potential: np.ndarray
    hopping: float = 1.0       # 0.0 is the zero-hopping test hook (V only)
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.potential) != self.box.site_count:
            raise ValueError("potential length does not match box site count")

    @property
    def site_count(self) -> int:
        return self.box.site_count

    def spectral_bounds(self) -> tuple:
        """Gershgorin enclosure [min V - 2d, max V + 2d] of the spectrum."""
        r = 2.0 * self.box.dimension * abs(self.hopping)
        return (float(np.min(self.potential)) - r, float(np.max(self.potential)) + r)

    def adjacency(self) -> sp.csr_matrix:
        """Nearest-neighbor adjacency of the box, site enumeration order."""
        shape = self.box.shape
        mats = [sp.identity(n, format="csr") for n in shape]
        out = None
        for k, n in enumerate(shape):
            a_k = sp.diags([np.ones(n - 1), np.ones(n - 1)], [-1, 1], format="csr")
            term = None
            for j in range(len(shape)):
                m = a_k if j == k else mats[j]
                term = m if term is None else sp.kron(term, m, format="csr")
            out = term if out is None else out + term
        return out.tocsr()

    def to_sparse(self) -> sp.csr_matrix:
        h = sp.diags(self.potential, 0, format="csr")
        if self.hopping != 0.0:
            h = h + self.hopping * self.adjacency()
        return h.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def apply(self, v: np.ndarray) -> np.ndarray:
        """(Hv)_n = hopping * Σ_{m~n} v_m + V_n v_n."""
        v = np.asarray(v)
        if v.shape[0] != self.site_count:
            raise ValueError("vector length does not match site count")
        out = self.potential * v
        if self.hopping != 0.0:
            shape = self.box.shape
            g = v.reshape(shape)
            acc = np.zeros_like(g)
            for axis in range(len(shape)):
                shifted = np.zeros_like(g)
                src = [slice(None)] * len(shape)
                dst = [slice(None)] * len(shape)
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
                shifted[tuple(dst)] += g[tuple(src)]
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
                shifted[tuple(dst)] += g[tuple(src)]
                acc += shifted
            out = out + self.hopping * acc.ravel()
        return out


def sample_operator(box: LatticeBox, spec: PotentialSpec, seed: int,
                    hopping: float = 1.0) -> DisorderedOperator:
    """Sample one i.i.d. potential realization keyed by global coordinates."""
    u = site_uniforms(seed, box.coords())
    v = spec.ppf(u)
    v.setflags(write=False)
    return DisorderedOperator(box=box, potential=v, hopping=hopping, seed=seed)


def restrict(op: DisorderedOperator, sub: LatticeBox) -> DisorderedOperator:
    """Dirichlet restriction to a sub-box, keeping the parent's potential."""
    if not op.box.contains_box(sub):
        raise ValueError("sub-box is not contained in the operator's box")
    idx = op.box.index_of(sub.coords())
    v = op.potential[idx]
    v.setflags(write=False)
    return DisorderedOperator(box=sub, potential=v, hopping=op.hopping, seed=op.seed)

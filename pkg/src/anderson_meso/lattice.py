"""Finite boxes of Z^d, mesoscopic energy windows and box partitions.

A box is an axis-aligned product of integer intervals.  Boxes remember how
they were generated (real offset and trim) so that experiment manifests can
reproduce them.  Partitions cut the real edge of a box into equal real
intervals and assign each lattice site to the half-open cell containing it,
so cells always tile the parent exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)


class EmptyBoxError(ValueError):
    """Raised when a shifted/trimmed cube contains no lattice points."""


class DepthExhaustedError(ValueError):
    """Raised when a dyadic partition would produce cells below 2 sites."""


@dataclass(frozen=True)
class LatticeBox:
    """Product of inclusive integer intervals [lower[k], upper[k]]."""

    lower: tuple
    upper: tuple
    offset: Optional[tuple] = None   # a_L used to generate the box
    trim: Optional[float] = None     # c_L used to generate the box

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower/upper dimension mismatch")
        if any(lo > up for lo, up in zip(self.lower, self.upper)):
            raise EmptyBoxError(f"empty box: lower={self.lower} upper={self.upper}")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple:
        return tuple(up - lo + 1 for lo, up in zip(self.lower, self.upper))

    @property
    def site_count(self) -> int:
        return int(np.prod(self.shape))

    def edge_lengths(self) -> tuple:
        """Real edge lengths upper - lower (a cube [-L, L] has edge 2L)."""
        return tuple(up - lo for lo, up in zip(self.lower, self.upper))

    def coords(self) -> np.ndarray:
        """All sites as an (site_count, d) int64 array, lexicographic order.

        Axis 0 varies slowest; this fixed order is the site enumeration
        used everywhere (potentials, matrices, restriction maps).
        """
        axes = [np.arange(lo, up + 1, dtype=np.int64)
                for lo, up in zip(self.lower, self.upper)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def index_of(self, coords: np.ndarray) -> np.ndarray:
        """Enumeration index of each coordinate row; rows must lie in the box."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
        lower = np.asarray(self.lower, dtype=np.int64)
        upper = np.asarray(self.upper, dtype=np.int64)
        if np.any(coords < lower) or np.any(coords > upper):
            raise ValueError("coordinate outside box")
        rel = coords - lower
        strides = np.cumprod([1] + list(self.shape[::-1][:-1]))[::-1]
        return rel @ strides.astype(np.int64)

    def contains_box(self, other: "LatticeBox") -> bool:
        return (self.dimension == other.dimension
                and all(sl <= ol and ou <= su for sl, ol, ou, su in
                        zip(self.lower, other.lower, other.upper, self.upper)))

    def boundary_distance(self) -> np.ndarray:
        """Sup-norm distance from each site to the box's inner boundary layer.

        For axis-aligned boxes this is the minimum over axes of the distance
        to the two faces; face sites are at distance 0.
        """
        axes = [np.arange(lo, up + 1, dtype=np.int64)
                for lo, up in zip(self.lower, self.upper)]
        dists = [np.minimum(ax - lo, up - ax)
                 for ax, lo, up in zip(axes, self.lower, self.upper)]
        grids = np.meshgrid(*dists, indexing="ij")
        return np.minimum.reduce(grids).ravel()

    def to_json_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "offset": None if self.offset is None else list(self.offset),
            "trim": self.trim,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "LatticeBox":
        return LatticeBox(
            lower=tuple(d["lower"]), upper=tuple(d["upper"]),
            offset=None if d.get("offset") is None else tuple(d["offset"]),
            trim=d.get("trim"),
        )


def make_box(L: float, d: int, a_L=None, c_L: float = 0.0) -> LatticeBox:
    """Integer points of the shifted trimmed cube ([-L+c, L-c]^d + a) ∩ Z^d."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if c_L < 0:
        raise ValueError("trim must be nonnegative")
    if L - c_L <= 0.5:
        raise EmptyBoxError(f"L - c_L = {L - c_L} leaves no room for lattice points")
    if a_L is None:
        a_L = (0.0,) * d
    elif np.isscalar(a_L):
        a_L = (float(a_L),) * d
    else:
        a_L = tuple(float(a) for a in a_L)
        if len(a_L) != d:
            raise ValueError("offset length does not match dimension")
    lower = tuple(math.ceil(-L + c_L + a) for a in a_L)
    upper = tuple(math.floor(L - c_L + a) for a in a_L)
    if any(lo > up for lo, up in zip(lower, upper)):
        raise EmptyBoxError("shifted trimmed cube contains no lattice points")
    return LatticeBox(lower=lower, upper=upper, offset=a_L, trim=float(c_L))


@dataclass(frozen=True)
class MesoWindow:
    """Energy window (E + a/|Λ|^η, E + b/|Λ|^η)."""

    E: float
    eta: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.a < 0.0 < self.b):
            raise ValueError("window requires a < 0 < b")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1]")

    def interval(self, volume: int) -> tuple:
        return window_interval(self, volume)

    def to_json_dict(self) -> dict:
        return {"E": self.E, "eta": self.eta, "a": self.a, "b": self.b}


def window_interval(w: MesoWindow, volume: int) -> tuple:
    """Concrete (lo, hi) of the window at a given box volume."""
    if volume < 1:
        raise ValueError("volume must be >= 1")
    scale = float(volume) ** (-w.eta)
    return (w.E + w.a * scale, w.E + w.b * scale)


@dataclass(frozen=True)
class BoxPartition:
    parent: LatticeBox
    beta: float
    cells: tuple = field(repr=False)

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def to_json_dict(self) -> dict:
        return {
            "parent": self.parent.to_json_dict(),
            "beta": self.beta,
            "cell_count": self.cell_count,
            "cells": [c.to_json_dict() for c in self.cells],
        }


def _axis_cuts(lo: int, up: int, n_cells: int):
    """Split sites lo..up by cutting [lo-1/2, up+1/2] into n_cells equal
    real intervals; returns (start, end) inclusive integer bounds per cell,
    dropping cells that catch no site."""
    width = (up - lo + 1) / n_cells
    pieces = []
    for m in range(n_cells):
        left = lo - 0.5 + m * width
        right = lo - 0.5 + (m + 1) * width
        start = math.ceil(left)           # first integer >= left (half-open [left, right))
        end = math.ceil(right) - 1        # last integer < right
        start = max(start, lo)
        end = min(end, up)
        if start <= end:
            pieces.append((start, end))
    return pieces


def partition_box(parent: LatticeBox, beta: float) -> BoxPartition:
    """Single-level partition into ~((edge)^(1-beta))^d equal real cells."""
    if not (0.0 < beta <= 1.0):
        raise ValueError("beta must lie in (0, 1]")
    edges = parent.edge_lengths()
    if min(edges) < 2:
        raise ValueError("parent edge length must be >= 2")
    per_axis = []
    dropped = False
    for (lo, up), edge in zip(zip(parent.lower, parent.upper), edges):
        n_cells = math.ceil(edge ** (1.0 - beta))
        pieces = _axis_cuts(lo, up, n_cells)
        if len(pieces) < n_cells:
            dropped = True
        per_axis.append(pieces)
    if dropped:
        log.warning("partition_box: degenerate empty cell dropped (parent=%s, beta=%s)",
                    parent.shape, beta)
    cells = []
    idx = [0] * parent.dimension
    # cartesian product of per-axis pieces, lexicographic
    def rec(k, lows, ups):
        if k == parent.dimension:
            cells.append(LatticeBox(lower=tuple(lows), upper=tuple(ups)))
            return
        for (s, e) in per_axis[k]:
            rec(k + 1, lows + [s], ups + [e])
    rec(0, [], [])
    return BoxPartition(parent=parent, beta=beta, cells=tuple(cells))


@dataclass(frozen=True)
class PartitionTree:
    """Nested beta=1/2 partitions used to reach exponents below 1/2.

    levels[m] is the list of all boxes at depth m+1 (level 0 cells are the
    first subdivision of the root).
    """

    root: LatticeBox
    depth: int                  # the j with 1/2^j < eta <= 1/2^(j-1)
    levels: tuple = field(repr=False)

    def leaf_boxes(self) -> tuple:
        return self.levels[-1] if self.levels else (self.root,)


def dyadic_depth(eta: float) -> int:
    """The j with 1/2^j < eta <= 1/2^(j-1)."""
    if not (0.0 < eta <= 0.5):
        raise ValueError("eta must lie in (0, 1/2]")
    j = 1
    while not (0.5 ** j < eta):
        j += 1
    return j


def dyadic_partition(root: LatticeBox, eta: float) -> PartitionTree:
    """Iterated beta=1/2 subdivision, j-1 levels deep."""
    j = dyadic_depth(eta)
    levels = []
    current = [root]
    for _ in range(j - 1):
        nxt = []
        for box in current:
            if min(box.edge_lengths()) < 2:
                raise DepthExhaustedError(
                    f"box {box.shape} too small to subdivide to depth {j - 1}")
            nxt.extend(partition_box(box, 0.5).cells)
        if any(b.site_count < 2 for b in nxt):
            raise DepthExhaustedError(
                f"dyadic partition to depth {j - 1} produced cells below 2 sites")
        levels.append(tuple(nxt))
        current = nxt
    return PartitionTree(root=root, depth=j, levels=tuple(levels))


def interior_boundary_split(box: LatticeBox, cutoff: float):
    """Indices of sites deeper than `cutoff` and of the boundary layer."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    dist = box.boundary_distance()
    interior = np.nonzero(dist > cutoff)[0]
    boundary = np.nonzero(dist <= cutoff)[0]
    return interior, boundary

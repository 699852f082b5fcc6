"""Counter-keyed pseudo-randomness.

Every random quantity in this package is a pure function of a 64-bit seed
and an integer key (a lattice coordinate, a replicate index, ...).  This is
what makes restriction to sub-boxes and parallel sharding exact: the value
attached to a lattice site never depends on enumeration order or on which
box the site is viewed through.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# per-axis odd multipliers decorrelating coordinates before mixing
_AXIS_MULT = (
    np.uint64(0xD6E8FEB86659FD93),
    np.uint64(0xC2B2AE3D27D4EB4F),
    np.uint64(0xFF51AFD7ED558CCD),
    np.uint64(0x9DDFEA08EB382D69),
)


def _mix(h):
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    h = h ^ (h >> np.uint64(30))
    h = h * _M1
    h = h ^ (h >> np.uint64(27))
    h = h * _M2
    h = h ^ (h >> np.uint64(31))
    return h


def site_uniforms(seed: int, coords: np.ndarray) -> np.ndarray:
    """Uniform(0,1) value per lattice site, keyed by global coordinates.

    coords: integer array of shape (n, d).  The value at a coordinate is
    independent of the box it was enumerated from.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(np.uint64(seed) + _GOLDEN))
        h = np.full(coords.shape[0], h, dtype=np.uint64)
        for k in range(coords.shape[1]):
            ck = coords[:, k].astype(np.uint64) * _AXIS_MULT[k % len(_AXIS_MULT)]
            h = _mix(h ^ (ck + _GOLDEN * np.uint64(k + 1)))
    # 53-bit mantissa, strictly inside (0, 1) after the +0.5 ulp shift
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


def derive_seed(master: int, *tags) -> int:
    """Stable 64-bit sub-seed from a master seed and a tag path.

    Tags may be ints or strings; the derivation is independent of Python's
    per-process hash randomization.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", master & 0xFFFFFFFFFFFFFFFF))
    for t in tags:
        h.update(repr(t).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")

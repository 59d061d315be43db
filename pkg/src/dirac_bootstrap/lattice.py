"""Honeycomb lattice geometry and truncated Fourier index sets.

Momenta of plane waves are written ``K + m1*k1 + m2*k2`` with integer
``(m1, m2)``; the rotation by 2*pi/3 permutes these indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class LatticeBasis:
    """Primitive vectors, dual basis, Dirac point and rotation matrix."""

    r1: np.ndarray = field(default_factory=lambda: np.array([SQRT3 / 2, 0.5]))
    r2: np.ndarray = field(default_factory=lambda: np.array([SQRT3 / 2, -0.5]))

    @property
    def k1(self) -> np.ndarray:
        return dual_basis(self)[0]

    @property
    def k2(self) -> np.ndarray:
        return dual_basis(self)[1]

    @property
    def K(self) -> np.ndarray:
        return np.array([0.0, 4 * np.pi / 3])

    @property
    def R(self) -> np.ndarray:
        # clockwise rotation by 2*pi/3 acting on coordinates
        return np.array([[-0.5, -SQRT3 / 2], [SQRT3 / 2, -0.5]])

    @property
    def cell_area(self) -> float:
        return float(abs(self.r1[0] * self.r2[1] - self.r1[1] * self.r2[0]))

    def momentum(self, m1, m2) -> np.ndarray:
        """Momentum ``K + m1 k1 + m2 k2``; broadcasts over integer arrays."""
        m1 = np.asarray(m1, dtype=float)[..., None]
        m2 = np.asarray(m2, dtype=float)[..., None]
        return self.K + m1 * self.k1 + m2 * self.k2

    def reciprocal(self, m1, m2) -> np.ndarray:
        """Dual-lattice vector ``m1 k1 + m2 k2`` (no K offset)."""
        m1 = np.asarray(m1, dtype=float)[..., None]
        m2 = np.asarray(m2, dtype=float)[..., None]
        return m1 * self.k1 + m2 * self.k2


def dual_basis(lattice: LatticeBasis) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(k1, k2)`` with ``r_i . k_j = 2 pi delta_ij``."""
    A = np.stack([lattice.r1, lattice.r2])
    B = 2 * np.pi * np.linalg.inv(A).T
    return B[0], B[1]


def rotate_index(idx: tuple[int, int]) -> tuple[int, int]:
    """Index map induced by ``R^t (K + G) = K + G'``."""
    m1, m2 = idx
    return (-m2, m1 - m2 + 1)


def rotate_dual_index(idx: tuple[int, int]) -> tuple[int, int]:
    """Zero-offset analogue of :func:`rotate_index` on dual-lattice vectors."""
    m1, m2 = idx
    return (-m2, m1 - m2)


def orbit(idx: tuple[int, int]) -> list[tuple[int, int]]:
    out = [tuple(idx)]
    nxt = rotate_index(idx)
    while nxt != out[0]:
        out.append(nxt)
        nxt = rotate_index(nxt)
    return out


@dataclass(frozen=True)
class IndexSet:
    """Rotation-closed set of Fourier indices in lexicographic order."""

    cutoff: int
    indices: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {m: i for i, m in enumerate(self.indices)})
        arr = np.array(self.indices, dtype=int).reshape(-1, 2)
        object.__setattr__(self, "_array", arr)
        perm = np.array([self._lookup[rotate_index(m)] for m in self.indices], dtype=int)
        object.__setattr__(self, "_rotation", perm)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, idx) -> bool:
        return tuple(idx) in self._lookup

    def position(self, idx) -> int:
        return self._lookup[tuple(idx)]

    @property
    def m1(self) -> np.ndarray:
        return self._array[:, 0]

    @property
    def m2(self) -> np.ndarray:
        return self._array[:, 1]

    @property
    def rotation_permutation(self) -> np.ndarray:
        """``perm[i]`` is the position of ``rotate_index(indices[i])``."""
        return self._rotation

    @property
    def span(self) -> int:
        """Widest extent of either index coordinate (number of distinct values)."""
        return int(max(np.ptp(self.m1), np.ptp(self.m2)) + 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, IndexSet) and self.indices == other.indices

    def __hash__(self) -> int:
        return hash(self.indices)


def close_under_rotation(indices) -> list[tuple[int, int]]:
    out = set()
    for m in indices:
        out.update(orbit(tuple(m)))
    return sorted(out)


def build_index_set(cutoff: int) -> IndexSet:
    """Max-norm ball of radius ``cutoff`` completed to full rotation orbits."""
    if int(cutoff) != cutoff or cutoff < 1:
        raise ValueError(f"cutoff must be a positive integer, got {cutoff!r}")
    cutoff = int(cutoff)
    ball = [(m1, m2) for m1 in range(-cutoff, cutoff + 1) for m2 in range(-cutoff, cutoff + 1)]
    return IndexSet(cutoff, tuple(close_under_rotation(ball)))

"""K-quasi-periodic fields stored as plane-wave coefficients.

A coefficient ``c[m]`` multiplies ``exp(i (K + G_m) . x) / sqrt(cell_area)``,
so the L2 norm over one cell is the Euclidean norm of ``c``.  Pointwise
products are evaluated pseudospectrally on a uniform grid in lattice
coordinates ``x = s1 r1 + s2 r2``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft

from .lattice import IndexSet, LatticeBasis

OMEGA = np.exp(2j * np.pi / 3)


class IndexSetMismatch(ValueError):
    pass


class GridResolutionError(ValueError):
    pass


class BlochField:
    """Immutable coefficient vector tied to an :class:`IndexSet`."""

    __slots__ = ("coeffs", "index_set")

    def __init__(self, coeffs, index_set: IndexSet):
        c = np.array(coeffs, dtype=complex)
        if c.shape != (len(index_set),):
            raise ValueError(f"expected {len(index_set)} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "index_set", index_set)

    def __setattr__(self, name, value):
        raise AttributeError("BlochField is immutable")

    @classmethod
    def zeros(cls, index_set: IndexSet) -> "BlochField":
        return cls(np.zeros(len(index_set)), index_set)

    @classmethod
    def plane_wave(cls, index_set: IndexSet, idx) -> "BlochField":
        c = np.zeros(len(index_set), dtype=complex)
        c[index_set.position(idx)] = 1.0
        return cls(c, index_set)

    def _check(self, other: "BlochField"):
        if other.index_set is not self.index_set and other.index_set != self.index_set:
            raise IndexSetMismatch("fields live on different index sets")

    def __add__(self, other):
        self._check(other)
        return BlochField(self.coeffs + other.coeffs, self.index_set)

    def __sub__(self, other):
        self._check(other)
        return BlochField(self.coeffs - other.coeffs, self.index_set)

    def __neg__(self):
        return BlochField(-self.coeffs, self.index_set)

    def __mul__(self, scalar):
        return BlochField(scalar * self.coeffs, self.index_set)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return BlochField(self.coeffs / scalar, self.index_set)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __repr__(self):
        return f"BlochField(n={len(self.coeffs)}, norm={self.norm():.6g})"


def inner_product(f: BlochField, g: BlochField) -> complex:
    """``<f, g>``, conjugate-linear in ``f``."""
    f._check(g)
    return complex(np.vdot(f.coeffs, g.coeffs))


def apply_rotation(f: BlochField) -> BlochField:
    """Transformed rotation: the coefficient at ``idx`` moves to ``rotate_index(idx)``."""
    out = np.empty_like(f.coeffs)
    out[f.index_set.rotation_permutation] = f.coeffs
    return BlochField(out, f.index_set)


def conj_invert(f: BlochField) -> BlochField:
    """``x -> conj(f(-x))``; plane waves map to themselves so coefficients conjugate."""
    return BlochField(np.conj(f.coeffs), f.index_set)


def rotation_matrix(index_set: IndexSet) -> np.ndarray:
    """Permutation matrix ``P`` with ``P @ c`` equal to ``apply_rotation`` on ``c``."""
    n = len(index_set)
    P = np.zeros((n, n))
    P[index_set.rotation_permutation, np.arange(n)] = 1.0
    return P


def project_class(f: BlochField, label: complex) -> BlochField:
    """Project onto the eigenspace of the rotation with eigenvalue ``label``."""
    r1 = apply_rotation(f)
    r2 = apply_rotation(r1)
    lc = np.conj(label)
    return BlochField((f.coeffs + lc * r1.coeffs + lc**2 * r2.coeffs) / 3, f.index_set)


@dataclass(frozen=True)
class RealGrid:
    """Uniform ``n x n`` grid over one cell in lattice coordinates."""

    index_set: IndexSet
    n: int
    lattice: LatticeBasis = LatticeBasis()

    def __post_init__(self):
        minimum = self.minimum_resolution(self.index_set)
        if self.n < minimum:
            raise GridResolutionError(
                f"grid n={self.n} under-resolves quintic products on this index set "
                f"(need n >= {minimum})"
            )
        m1 = np.mod(self.index_set.m1, self.n)
        m2 = np.mod(self.index_set.m2, self.n)
        object.__setattr__(self, "_slots", (m1, m2))
        s = np.arange(self.n) / self.n
        s1, s2 = np.meshgrid(s, s, indexing="ij")
        object.__setattr__(self, "_s", (s1, s2))
        # K . x = (2 pi / 3)(s1 - s2) for x = s1 r1 + s2 r2
        object.__setattr__(self, "_phase", np.exp(2j * np.pi / 3 * (s1 - s2)))

    @staticmethod
    def minimum_resolution(index_set: IndexSet) -> int:
        # products of up to six fields (the sextic overlap integral) must not
        # alias back onto the index set: n > 3 (span - 1)
        return max(3 * index_set.span, 3 * (2 * index_set.cutoff + 1))

    @classmethod
    def for_index_set(cls, index_set: IndexSet, lattice: LatticeBasis | None = None) -> "RealGrid":
        n = scipy.fft.next_fast_len(cls.minimum_resolution(index_set))
        return cls(index_set, n, lattice or LatticeBasis())

    @property
    def resolution(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def weight(self) -> float:
        return self.lattice.cell_area / self.n**2

    @property
    def points(self) -> np.ndarray:
        """Cartesian sample positions, shape ``(n, n, 2)``."""
        s1, s2 = self._s
        return s1[..., None] * self.lattice.r1 + s2[..., None] * self.lattice.r2

    # periodic parts: p(x) = exp(-i K . x) f(x)

    def periodic(self, coeffs: np.ndarray) -> np.ndarray:
        C = np.zeros((self.n, self.n), dtype=complex)
        C[self._slots] = coeffs
        return scipy.fft.ifft2(C) * (self.n**2 / np.sqrt(self.lattice.cell_area))

    def from_periodic(self, samples: np.ndarray) -> np.ndarray:
        C = scipy.fft.fft2(samples) * (np.sqrt(self.lattice.cell_area) / self.n**2)
        return C[self._slots]

    def integrate(self, samples: np.ndarray) -> complex:
        return complex(np.sum(samples) * self.weight)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate a real-space function at the grid points."""
        pts = self.points
        return np.asarray(fn(pts[..., 0], pts[..., 1]))


def to_grid(f: BlochField, grid: RealGrid) -> np.ndarray:
    """Samples of ``f`` (including its ``exp(i K.x)`` factor) on the grid."""
    if f.index_set != grid.index_set:
        raise IndexSetMismatch("grid built for a different index set")
    return grid._phase * grid.periodic(f.coeffs)


def from_grid(samples: np.ndarray, index_set: IndexSet, grid: RealGrid) -> BlochField:
    """Inverse of :func:`to_grid`; frequencies outside ``index_set`` are dropped."""
    if index_set != grid.index_set:
        raise IndexSetMismatch("grid built for a different index set")
    return BlochField(grid.from_periodic(np.conj(grid._phase) * samples), index_set)


def pointwise_apply(f: BlochField, scalar_fn, grid: RealGrid) -> BlochField:
    """Multiply ``f`` by a real function of position and ``|f|^2``.

    ``scalar_fn(points, density)`` gets the Cartesian grid points, shape
    ``(n, n, 2)``, and the density samples; a precomputed multiplier array
    may be passed instead.
    """
    p = grid.periodic(f.coeffs)
    if callable(scalar_fn):
        mult = scalar_fn(grid.points, np.abs(p) ** 2)
    else:
        mult = np.broadcast_to(scalar_fn, p.shape)
    return BlochField(grid.from_periodic(mult * p), f.index_set)


def multiply(coeffs: np.ndarray, multiplier: np.ndarray, grid: RealGrid) -> np.ndarray:
    """Coefficient-level ``from_grid(multiplier * to_grid(c))``."""
    return grid.from_periodic(multiplier * grid.periodic(coeffs))


def field_to_csv(f: BlochField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m1", "m2", "re", "im"])
    for (m1, m2), c in zip(f.index_set.indices, f.coeffs):
        w.writerow([m1, m2, repr(float(c.real)), repr(float(c.imag))])
    return buf.getvalue()


def field_from_csv(text: str, index_set: IndexSet) -> BlochField:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if rows[0] != ["m1", "m2", "re", "im"]:
        raise ValueError("field CSV must start with header m1,m2,re,im")
    c = np.zeros(len(index_set), dtype=complex)
    for m1, m2, re, im in rows[1:]:
        c[index_set.position((int(m1), int(m2)))] = complex(float(re), float(im))
    return BlochField(c, index_set)

"""Honeycomb potentials and density-dependent nonlinearities."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .lattice import LatticeBasis, rotate_dual_index

SYMMETRY_TOL = 1e-10


class DomainError(ValueError):
    """Model evaluated outside its domain of definition."""


@dataclass(frozen=True)
class HoneycombPotential:
    """Lattice potential ``amplitude * sum_m V[m] exp(i G_m . x)``.

    ``fourier_coeffs`` maps dual-lattice indices ``(m1, m2)`` (no K offset)
    to coefficients.
    """

    fourier_coeffs: Mapping[tuple[int, int], complex]
    amplitude: float = 1.0

    def coefficient(self, m) -> complex:
        return complex(self.fourier_coeffs.get(tuple(m), 0.0)) * self.amplitude

    def scaled(self, amplitude: float) -> "HoneycombPotential":
        return HoneycombPotential(dict(self.fourier_coeffs), amplitude)

    def periodic_samples(self, grid) -> np.ndarray:
        """Real-space samples on a :class:`~dirac_bootstrap.fields.RealGrid`."""
        s1, s2 = grid._s
        out = np.zeros_like(s1, dtype=complex)
        for (m1, m2), c in self.fourier_coeffs.items():
            out += c * np.exp(2j * np.pi * (m1 * s1 + m2 * s2))
        return self.amplitude * out.real

    def __call__(self, x, y, lattice: LatticeBasis | None = None) -> np.ndarray:
        lat = lattice or LatticeBasis()
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for m, c in self.fourier_coeffs.items():
            G = lat.reciprocal(*m)
            out += c * np.exp(1j * (G[0] * x + G[1] * y))
        return self.amplitude * out.real


def standard_potential(amplitude: float = 1.0) -> HoneycombPotential:
    """``cos(k1.x) + cos(k2.x) + cos((k1+k2).x)``."""
    coeffs = {m: 0.5 for m in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)]}
    return HoneycombPotential(coeffs, amplitude)


@dataclass(frozen=True)
class SymmetryReport:
    realness: float
    inversion: float
    rotation: float
    tol: float = SYMMETRY_TOL

    @property
    def passed(self) -> bool:
        return max(self.realness, self.inversion, self.rotation) <= self.tol

    def as_dict(self) -> dict:
        return {
            "periodicity": 0.0,
            "realness": self.realness,
            "inversion": self.inversion,
            "rotation": self.rotation,
            "tol": self.tol,
            "passed": self.passed,
        }


def _coefficient_report(coeffs: Mapping[tuple[int, int], complex], tol: float) -> SymmetryReport:
    keys = set(coeffs)
    keys |= {(-m1, -m2) for m1, m2 in keys}
    keys |= {rotate_dual_index(m) for m in list(keys)}
    get = lambda m: complex(coeffs.get(m, 0.0))
    scale = max([abs(get(m)) for m in keys] + [0.0])
    if scale == 0.0:
        return SymmetryReport(0.0, 0.0, 0.0, tol)
    real = max(abs(get((-m1, -m2)) - np.conj(get((m1, m2)))) for m1, m2 in keys)
    inv = max(abs(get((-m1, -m2)) - get((m1, m2))) for m1, m2 in keys)
    rot = max(abs(get(rotate_dual_index(m)) - get(m)) for m in keys)
    return SymmetryReport(real / scale, inv / scale, rot / scale, tol)


def validate_honeycomb(obj, tol: float = SYMMETRY_TOL) -> SymmetryReport:
    """Maximal relative violation of realness, inversion and 2pi/3 rotation.

    Accepts a :class:`HoneycombPotential` or a square array of periodic
    real-space samples on a uniform lattice-coordinate grid.  Periodicity is
    built into both representations.
    """
    if isinstance(obj, HoneycombPotential):
        return _coefficient_report(obj.fourier_coeffs, tol)
    samples = np.asarray(obj)
    n = samples.shape[0]
    if samples.shape != (n, n):
        raise ValueError("grid samples must be a square array")
    C = np.fft.fft2(samples) / n**2
    # the lattice-coordinate grid is mapped onto itself by the rotation, so
    # the discrete coefficients obey the symmetries exactly with indices mod n
    m1, m2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    neg = C[(-m1) % n, (-m2) % n]
    r1, r2 = rotate_dual_index((m1, m2))
    rot = C[r1 % n, r2 % n]
    scale = float(np.max(np.abs(C)))
    if scale == 0.0:
        return SymmetryReport(0.0, 0.0, 0.0, tol)
    real = float(np.max(np.abs(neg - np.conj(C)))) / scale
    inv = float(np.max(np.abs(neg - C))) / scale
    rotv = float(np.max(np.abs(rot - C))) / scale
    return SymmetryReport(real, inv, rotv, tol)


KINDS = ("kerr", "saturable", "custom")


@dataclass(frozen=True)
class NonlinearityModel:
    """Density-dependent potential ``v(x, s)`` with ``v(x, 0) = 0``.

    Kerr: ``v = K0 s``.  Saturable: ``v = K0/(1 + V_L + s) - K0/(1 + V_L)``.
    Custom models supply ``v(V_L, s)`` and the two Taylor coefficients as
    functions of the lattice-potential samples.
    """

    kind: str = "kerr"
    K0: float = 1.0
    custom_v: Callable | None = field(default=None, compare=False)
    custom_K: Callable | None = field(default=None, compare=False)
    custom_M: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "custom" and not all((self.custom_v, self.custom_K, self.custom_M)):
            raise ValueError("custom models need v, K and M callables")

    @classmethod
    def kerr(cls, K0: float = 1.0) -> "NonlinearityModel":
        return cls("kerr", K0)

    @classmethod
    def saturable(cls, K0: float = 1.0) -> "NonlinearityModel":
        return cls("saturable", K0)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "K0": self.K0}


def _saturable_base(V_L: np.ndarray) -> np.ndarray:
    base = 1.0 + np.asarray(V_L, dtype=float)
    if np.any(base <= 0):
        raise DomainError(f"saturable model needs 1 + V_L > 0; min is {base.min():.6g}")
    return base


def expand_coefficients(model: NonlinearityModel, V_L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``K(x)`` and ``M(x)`` in ``v = K s + M s^2 + O(s^3)``."""
    V_L = np.asarray(V_L, dtype=float)
    if model.kind == "kerr":
        return np.full_like(V_L, model.K0), np.zeros_like(V_L)
    if model.kind == "saturable":
        base = _saturable_base(V_L)
        return -model.K0 / base**2, model.K0 / base**3
    return (np.broadcast_to(model.custom_K(V_L), V_L.shape).astype(float),
            np.broadcast_to(model.custom_M(V_L), V_L.shape).astype(float))


def evaluate_v(model: NonlinearityModel, V_L: np.ndarray, density: np.ndarray) -> np.ndarray:
    """Exact ``v(x, density)``; the Taylor form is never used here."""
    density = np.asarray(density, dtype=float)
    if np.any(density < 0):
        raise DomainError("negative density passed to evaluate_v")
    if model.kind == "kerr":
        return model.K0 * density
    V_L = np.asarray(V_L, dtype=float)
    if model.kind == "saturable":
        base = _saturable_base(V_L)
        return model.K0 / (base + density) - model.K0 / base
    return np.asarray(model.custom_v(V_L, density), dtype=float)

"""Overlap integrals of the Dirac pair and the predicted bifurcation angles."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .fields import RealGrid
from .linear_spectrum import SpectralBasis

HYPOTHESIS_THRESHOLD = 1e-8
POLE_TOL = 1e-12


class SymmetryRegressionError(RuntimeError):
    """A quantity forced to vanish by symmetry came out nonzero."""


def _dirac_samples(basis: SpectralBasis, grid: RealGrid):
    return grid.periodic(basis.phi_a.coeffs), grid.periodic(basis.phi_b.coeffs)


def quartic_integrals(basis: SpectralBasis, K_field: np.ndarray, grid: RealGrid,
                      tol: float = 1e-10) -> tuple[float, float, complex, complex]:
    """Return ``(I_one, I_int, I_a, I_b)``.

    ``I_a = int K |phi_a|^4``, ``I_b = int K |phi_b|^4``,
    ``I_int = int K |phi_a|^2 |phi_b|^2``; ``I_one`` is the common value of
    ``I_a`` and ``I_b``.
    """
    a, b = _dirac_samples(basis, grid)
    da, db = np.abs(a) ** 2, np.abs(b) ** 2
    I_a = grid.integrate(K_field * da**2)
    I_b = grid.integrate(K_field * db**2)
    I_int = grid.integrate(K_field * da * db)
    scale = max(abs(I_a), abs(I_b), 1e-300)
    if abs(I_a - I_b) > tol * scale and scale > 1e-300:
        raise SymmetryRegressionError(f"|I_a - I_b| = {abs(I_a - I_b):.3g} (I_a = {I_a:.12g})")
    return float(I_a.real), float(I_int.real), I_a, I_b


def t2_terms(basis: SpectralBasis, K_field: np.ndarray, grid: RealGrid,
             restrict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Per-eigenpair summands of ``T2`` and their eigenvector indices.

    Summand ``n`` is ``-conj(P_n) Q_n / (E_n - E0)`` with
    ``P_n = int K conj(phi_n) phi_a^2 conj(phi_b)`` and
    ``Q_n = int K conj(phi_n) conj(phi_a) phi_b^2``.
    """
    a, b = _dirac_samples(basis, grid)
    g_p = grid.from_periodic(K_field * a * a * np.conj(b))
    g_q = grid.from_periodic(K_field * np.conj(a) * b * b)
    idx = basis.perp_idx
    if restrict:
        idx = idx[basis.classes[idx] == 0]
    V = basis.vectors[:, idx]
    P = V.conj().T @ g_p
    Q = V.conj().T @ g_q
    return -np.conj(P) * Q / (basis.eigenvalues[idx] - basis.E0), idx


def t2_sum(basis: SpectralBasis, K_field: np.ndarray, grid: RealGrid, restrict: bool = True) -> complex:
    terms, _ = t2_terms(basis, K_field, grid, restrict)
    return complex(np.sum(terms))


def sextic_integral(basis: SpectralBasis, M_field: np.ndarray, grid: RealGrid) -> complex:
    """``int M (conj(phi_a) phi_b)^3``."""
    a, b = _dirac_samples(basis, grid)
    return grid.integrate(M_field * (np.conj(a) * b) ** 3)


@dataclass(frozen=True)
class PerturbationReport:
    I_one: float
    I_int: float
    I_a_minus_I_b: float
    T2: complex
    M_integral: complex
    I_c_int: complex
    theta_pred: float
    nondegeneracy: float
    n_terms_T2: int
    I_a_imag: float = 0.0
    I_int_imag: float = 0.0
    threshold: float = HYPOTHESIS_THRESHOLD

    @property
    def degenerate_hypothesis(self) -> bool:
        """True when ``I_one - 2 I_int`` or ``I_c_int`` is below threshold."""
        return self.nondegeneracy < self.threshold or abs(self.I_c_int) < self.threshold

    @property
    def splitting(self) -> float:
        return self.I_one - 2 * self.I_int

    def predicted_roots(self) -> np.ndarray:
        """Leading-order equator angles ``(n pi - arg I_c_int)/3`` folded to ``[-pi, pi)``."""
        n = np.arange(6)
        roots = (n * np.pi - np.angle(self.I_c_int)) / 3
        return np.sort((roots + np.pi) % (2 * np.pi) - np.pi)

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("T2", "M_integral", "I_c_int"):
            z = d.pop(k)
            d[k] = {"re": z.real, "im": z.imag}
        d["abs_I_c_int"] = abs(self.I_c_int)
        d["degenerate_hypothesis"] = self.degenerate_hypothesis
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationReport":
        kw = {k: d[k] for k in ("I_one", "I_int", "I_a_minus_I_b", "theta_pred",
                                 "nondegeneracy", "n_terms_T2", "I_a_imag", "I_int_imag", "threshold")}
        for k in ("T2", "M_integral", "I_c_int"):
            kw[k] = complex(d[k]["re"], d[k]["im"])
        return cls(**kw)


def complex_interaction(basis: SpectralBasis, K_field: np.ndarray, M_field: np.ndarray,
                        grid: RealGrid, threshold: float = HYPOTHESIS_THRESHOLD) -> PerturbationReport:
    I_one, I_int, I_a, I_b = quartic_integrals(basis, K_field, grid)
    a, b = _dirac_samples(basis, grid)
    I_int_c = grid.integrate(K_field * np.abs(a) ** 2 * np.abs(b) ** 2)
    terms, idx = t2_terms(basis, K_field, grid)
    T2 = complex(np.sum(terms))
    M_int = sextic_integral(basis, M_field, grid)
    I_c = 3 * T2 + M_int
    report = PerturbationReport(
        I_one=I_one, I_int=I_int, I_a_minus_I_b=float(abs(I_a - I_b)), T2=T2,
        M_integral=M_int, I_c_int=I_c, theta_pred=float(np.angle(I_c) / 3),
        nondegeneracy=abs(I_one - 2 * I_int), n_terms_T2=len(idx),
        I_a_imag=float(I_a.imag), I_int_imag=float(I_int_c.imag), threshold=threshold,
    )
    if report.degenerate_hypothesis:
        warnings.warn(
            f"nondegeneracy hypotheses fail (|I_one - 2 I_int| = {report.nondegeneracy:.3g}, "
            f"|I_c_int| = {abs(I_c):.3g}); eight-mode prediction void",
            stacklevel=2,
        )
    return report


@dataclass(frozen=True)
class ParameterPair:
    """Normalized Dirac-pair weights in canonical gauge (``a`` real, >= 0)."""

    a: complex
    b: complex

    def __post_init__(self):
        n = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(n - 1) > 1e-12:
            raise ValueError(f"|a|^2 + |b|^2 = {n}, expected 1")

    @classmethod
    def canonical(cls, a: complex, b: complex) -> "ParameterPair":
        n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
        a, b = a / n, b / n
        # round-off sized components count as exact zeros so poles stay poles
        a = a if abs(a) > POLE_TOL else 0j
        b = b if abs(b) > POLE_TOL else 0j
        if abs(a) > 0:
            ph = np.conj(a) / abs(a)
            a, b = abs(a), b * ph
        else:
            b = abs(b)
        return cls(complex(a), complex(b))

    @classmethod
    def equator(cls, beta: float) -> "ParameterPair":
        return cls(complex(1 / np.sqrt(2)), complex(np.exp(1j * beta) / np.sqrt(2)))

    @classmethod
    def polar(cls, which: str) -> "ParameterPair":
        if which == "a_pole":
            return cls(1.0 + 0j, 0j)
        if which == "b_pole":
            return cls(0j, 1.0 + 0j)
        raise ValueError(f"unknown pole {which!r}")

    @property
    def beta(self) -> float:
        """Relative phase ``arg(b) - arg(a)``; the equator coordinate."""
        return float(np.angle(self.b * np.conj(self.a))) if abs(self.a) * abs(self.b) > 0 else 0.0

    @property
    def theta(self) -> float:
        return float(np.arctan2(abs(self.b), abs(self.a)))

    def as_dict(self) -> dict:
        return {"a": {"re": self.a.real, "im": self.a.imag},
                "b": {"re": self.b.real, "im": self.b.imag},
                "beta": self.beta, "theta": self.theta}


def landscape_value(report: PerturbationReport, a: complex, b: complex) -> float:
    """``|a b (|b|^2 - |a|^2) (I_one - 2 I_int)|``."""
    return float(abs(a * b * (abs(b) ** 2 - abs(a) ** 2) * report.splitting))


def necessary_condition_landscape(report: PerturbationReport, n_theta: int = 33,
                                  n_phase: int = 16) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate the necessary-condition magnitude on a ``(theta, phase)`` grid of ``Sigma_q``.

    Pairs are ``(cos theta, sin theta e^{i phase})`` with ``theta`` in
    ``[0, pi/2]`` and ``phase`` in ``[0, 2 pi)``.
    """
    theta = np.linspace(0.0, np.pi / 2, n_theta)
    phase = np.linspace(0.0, 2 * np.pi, n_phase, endpoint=False)
    T, F = np.meshgrid(theta, phase, indexing="ij")
    a = np.cos(T)
    b = np.sin(T) * np.exp(1j * F)
    vals = np.abs(a * b * (np.abs(b) ** 2 - np.abs(a) ** 2) * report.splitting)
    return theta, phase, vals

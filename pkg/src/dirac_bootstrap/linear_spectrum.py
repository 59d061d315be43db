"""Truncated linear Bloch Hamiltonian at K and its symmetry-adapted eigenbasis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fields import OMEGA, BlochField, conj_invert, rotation_matrix
from .lattice import IndexSet, LatticeBasis
from .nonlinearity import HoneycombPotential

CUBE_ROOTS = np.array([1.0, OMEGA, np.conj(OMEGA)])
CLASS_NAMES = ("1", "omega", "omega_bar")


class DegeneracyError(RuntimeError):
    """Lowest cluster is not a two-dimensional Dirac pair."""


class SymmetryError(RuntimeError):
    pass


class EigenSolverError(RuntimeError):
    pass


class StabilityError(ValueError):
    """Resolvent shift outside the spectral gap window."""


def build_hamiltonian(lattice: LatticeBasis, index_set: IndexSet,
                      potential: HoneycombPotential, epsilon_V: float) -> np.ndarray:
    """``H(K) = -(grad + iK)^2 + epsilon_V * V`` in the plane-wave basis."""
    q = lattice.momentum(index_set.m1, index_set.m2)
    H = np.zeros((len(index_set), len(index_set)), dtype=complex)
    H[np.diag_indices_from(H)] = np.sum(q**2, axis=-1)
    if epsilon_V != 0.0:
        d1 = index_set.m1[:, None] - index_set.m1[None, :]
        d2 = index_set.m2[:, None] - index_set.m2[None, :]
        for m, c in potential.fourier_coeffs.items():
            mask = (d1 == m[0]) & (d2 == m[1])
            H[mask] += epsilon_V * potential.amplitude * c
    return H


def solve_spectrum(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    defect = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    scale = max(np.max(np.abs(H)), 1.0)
    if defect > 1e-12 * scale:
        raise EigenSolverError(f"matrix is not Hermitian (defect {defect:.3g})")
    try:
        w, V = scipy.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigh failed: {exc}") from exc
    res = np.linalg.norm(H @ V - V * w, axis=0)
    norm = np.linalg.norm(H, 2)
    if np.any(res > 1e-10 * norm):
        raise EigenSolverError(f"eigenpair residual {res.max():.3g} exceeds 1e-10 * ||H||")
    return w, V


def _class_index(label: complex) -> int:
    return int(np.argmin(np.abs(CUBE_ROOTS - label)))


@dataclass(frozen=True)
class SpectralBasis:
    """Symmetry-adapted eigenpairs of the linear Hamiltonian.

    ``vectors`` holds eigenvectors as columns; ``classes`` is 0, 1, 2 for
    rotation eigenvalue 1, omega, omega-bar.  Columns ``dirac_idx`` are the
    Dirac pair, ``phi_a`` (omega) first.
    """

    index_set: IndexSet
    eigenvalues: np.ndarray
    vectors: np.ndarray
    classes: np.ndarray
    rotation_eigenvalues: np.ndarray
    residuals: np.ndarray
    dirac_idx: tuple[int, int]
    degeneracy_tol: float
    hamiltonian: np.ndarray

    @property
    def E0(self) -> float:
        return float(self.eigenvalues[self.dirac_idx[0]])

    @property
    def phi_a(self) -> BlochField:
        return BlochField(self.vectors[:, self.dirac_idx[0]], self.index_set)

    @property
    def phi_b(self) -> BlochField:
        return BlochField(self.vectors[:, self.dirac_idx[1]], self.index_set)

    @property
    def dirac(self) -> tuple[BlochField, BlochField, float]:
        return self.phi_a, self.phi_b, self.E0

    @property
    def degeneracy_gap(self) -> float:
        others = np.delete(self.eigenvalues, list(self.dirac_idx))
        return float(np.min(others) - self.E0)

    @property
    def perp_idx(self) -> np.ndarray:
        return np.setdiff1d(np.arange(len(self.eigenvalues)), self.dirac_idx)

    def eigenfield(self, n: int) -> BlochField:
        return BlochField(self.vectors[:, n], self.index_set)

    def class_label(self, n: int) -> str:
        return CLASS_NAMES[self.classes[n]]

    def gauge_record(self) -> dict:
        a = self.vectors[:, self.dirac_idx[0]]
        k = _gauge_anchor(a)
        return {
            "convention": "phi_a: first largest-magnitude coefficient real positive; phi_b = conj_invert(phi_a)",
            "anchor_index": list(self.index_set.indices[k]),
            "anchor_value": float(a[k].real),
        }


def _gauge_anchor(v: np.ndarray) -> int:
    mag = np.abs(v)
    # ties are common (equal weights on a rotation orbit); take the first in index order
    return int(np.flatnonzero(mag >= mag.max() * (1 - 1e-8))[0])


def _cluster(eigenvalues: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, start = [], 0
    for i in range(1, len(eigenvalues) + 1):
        if i == len(eigenvalues) or eigenvalues[i] - eigenvalues[i - 1] > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def adapt_clusters(eigenvalues: np.ndarray, eigenvectors: np.ndarray, index_set: IndexSet,
                   tol_degeneracy: float | None = None, hamiltonian: np.ndarray | None = None):
    """Rotate each degenerate cluster onto rotation eigenvectors.

    Returns ``(eigenvalues, vectors, labels, clusters, tol)`` where ``labels``
    are the measured rotation eigenvalues and ``clusters`` lists index arrays.
    A cluster may merge nearly (not exactly) degenerate levels; when the
    Hamiltonian is supplied it is re-diagonalized inside each symmetry class
    of the cluster so the returned vectors stay exact eigenvectors.
    """
    if tol_degeneracy is None:
        tol_degeneracy = 1e-8 * float(np.max(np.abs(eigenvalues)))
    P = rotation_matrix(index_set)
    vecs = np.array(eigenvectors, dtype=complex)
    eigenvalues = np.array(eigenvalues, dtype=float)
    labels = np.empty(len(eigenvalues), dtype=complex)
    clusters = _cluster(eigenvalues, tol_degeneracy)
    for idx in clusters:
        U = vecs[:, idx]
        Q = U.conj().T @ P @ U
        # (Q - Q^H)/2i is Hermitian with eigenvalues 0, +-sqrt(3)/2 per class
        _, W = np.linalg.eigh((Q - Q.conj().T) / 2j)
        U = U @ W
        lab = np.einsum("ij,ij->j", U.conj(), P @ U)
        if hamiltonian is not None and len(idx) > 1:
            cls = class_indices(lab)
            e = np.empty(len(idx))
            for c in np.unique(cls):
                cols = np.flatnonzero(cls == c)
                Uc = U[:, cols]
                e[cols], Z = np.linalg.eigh(Uc.conj().T @ hamiltonian @ Uc)
                U[:, cols] = Uc @ Z
            order = np.argsort(e, kind="stable")
            U, e = U[:, order], e[order]
            eigenvalues[idx] = e
            lab = np.einsum("ij,ij->j", U.conj(), P @ U)
        vecs[:, idx] = U
        labels[idx] = lab
    dist = np.min(np.abs(labels[:, None] - CUBE_ROOTS[None, :]), axis=1)
    if np.any(dist > 1e-6):
        bad = int(np.argmax(dist))
        raise SymmetryError(
            f"eigenvector {bad} has rotation eigenvalue {labels[bad]:.6g}, "
            f"off the cube roots of unity by {dist[bad]:.3g}"
        )
    return eigenvalues, vecs, labels, clusters, float(tol_degeneracy)


def class_indices(labels: np.ndarray) -> np.ndarray:
    """0, 1, 2 for the nearest of 1, omega, omega-bar."""
    return np.array([_class_index(l) for l in labels], dtype=int)


def classify_and_adapt(eigenvalues: np.ndarray, eigenvectors: np.ndarray,
                       index_set: IndexSet, tol_degeneracy: float | None = None,
                       hamiltonian: np.ndarray | None = None) -> SpectralBasis:
    """Symmetry-adapt every cluster, label classes and fix the Dirac pair gauge."""
    eigenvalues, vecs, labels, clusters, tol_degeneracy = adapt_clusters(
        eigenvalues, eigenvectors, index_set, tol_degeneracy, hamiltonian)
    classes = class_indices(labels)

    lowest = clusters[0]
    if len(lowest) != 2:
        raise DegeneracyError(
            f"lowest eigenvalue has multiplicity {len(lowest)}, expected 2 "
            "(lattice amplitude too large, or of the wrong sign)"
        )
    if len(clusters) > 1:
        gap = eigenvalues[clusters[1][0]] - eigenvalues[lowest[-1]]
        if gap <= 10 * tol_degeneracy:
            raise DegeneracyError("Dirac pair is not separated from the next eigenvalue")
    ia = [i for i in lowest if classes[i] == 1]
    ib = [i for i in lowest if classes[i] == 2]
    if len(ia) != 1 or len(ib) != 1:
        raise SymmetryError(f"Dirac pair classes are {[CLASS_NAMES[classes[i]] for i in lowest]}")
    ia, ib = ia[0], ib[0]
    a = vecs[:, ia]
    k = _gauge_anchor(a)
    a = a * (np.conj(a[k]) / abs(a[k]))
    a[k] = abs(a[k])
    vecs[:, ia] = a
    vecs[:, ib] = np.conj(a)
    # both members share the cluster mean so E0 is unambiguous
    E0 = float(np.mean(eigenvalues[lowest]))
    eigenvalues = np.array(eigenvalues, dtype=float)
    eigenvalues[lowest] = E0

    if hamiltonian is not None:
        residuals = np.linalg.norm(hamiltonian @ vecs - vecs * eigenvalues, axis=0)
    else:
        residuals = np.zeros(len(eigenvalues))
    return SpectralBasis(index_set, eigenvalues, vecs, classes, labels, residuals,
                         (int(ia), int(ib)), float(tol_degeneracy), hamiltonian)


def linear_basis(lattice: LatticeBasis, index_set: IndexSet, potential: HoneycombPotential,
                 epsilon_V: float, tol_degeneracy: float | None = None) -> SpectralBasis:
    H = build_hamiltonian(lattice, index_set, potential, epsilon_V)
    w, V = solve_spectrum(H)
    return classify_and_adapt(w, V, index_set, tol_degeneracy, hamiltonian=H)


def project_parallel(basis: SpectralBasis, f: BlochField) -> BlochField:
    D = basis.vectors[:, list(basis.dirac_idx)]
    return BlochField(D @ (D.conj().T @ f.coeffs), f.index_set)


def project_perp(basis: SpectralBasis, f: BlochField) -> BlochField:
    return f - project_parallel(basis, f)


class Resolvent:
    """``(L - shift)^{-1} M_perp`` applied through the eigenbasis spectral sum."""

    def __init__(self, basis: SpectralBasis):
        self.basis = basis
        perp = basis.perp_idx
        self.Q = basis.vectors[:, perp]
        self.Qh = self.Q.conj().T
        self.excitation = basis.eigenvalues[perp] - basis.E0
        self.window = 0.5 * basis.degeneracy_gap

    def check_shift(self, shift: float):
        if not abs(shift) < self.window:
            raise StabilityError(
                f"resolvent shift {shift:.6g} outside the gap window |shift| < {self.window:.6g}"
            )

    def coefficients(self, c: np.ndarray, shift: float = 0.0) -> np.ndarray:
        self.check_shift(shift)
        return self.Q @ ((self.Qh @ c) / (self.excitation - shift))

    def __call__(self, f: BlochField, shift: float = 0.0) -> BlochField:
        return BlochField(self.coefficients(f.coeffs, shift), f.index_set)


def resolvent_apply(basis: SpectralBasis, f: BlochField, shift: float = 0.0) -> BlochField:
    """``sum_n phi_n <phi_n, f> / (E_n - E0 - shift)`` over non-Dirac eigenpairs."""
    return Resolvent(basis)(f, shift)


def conj_pair_defect(basis: SpectralBasis) -> float:
    return (conj_invert(basis.phi_a) - basis.phi_b).norm()

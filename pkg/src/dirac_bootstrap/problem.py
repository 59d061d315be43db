"""Assembled linear problem shared by the perturbation and bootstrap stages."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fields import BlochField, RealGrid, multiply
from .lattice import IndexSet, LatticeBasis, build_index_set
from .linear_spectrum import Resolvent, SpectralBasis, linear_basis
from .nonlinearity import (HoneycombPotential, NonlinearityModel, evaluate_v,
                           expand_coefficients, standard_potential, validate_honeycomb)
from .perturbation import PerturbationReport, complex_interaction


@dataclass
class DiracProblem:
    """Everything fixed by the lattice, the potential and the nonlinearity model."""

    lattice: LatticeBasis
    index_set: IndexSet
    grid: RealGrid
    potential: HoneycombPotential
    epsilon_V: float
    model: NonlinearityModel
    basis: SpectralBasis
    V_L: np.ndarray = field(repr=False)
    K_field: np.ndarray = field(repr=False)
    M_field: np.ndarray = field(repr=False)

    @cached_property
    def resolvent(self) -> Resolvent:
        return Resolvent(self.basis)

    @cached_property
    def report(self) -> PerturbationReport:
        return complex_interaction(self.basis, self.K_field, self.M_field, self.grid)

    @cached_property
    def dirac_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.basis.vectors[:, self.basis.dirac_idx[0]]),
                np.asarray(self.basis.vectors[:, self.basis.dirac_idx[1]]))

    @property
    def E0(self) -> float:
        return self.basis.E0

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.basis.hamiltonian

    def field(self, coeffs) -> BlochField:
        return BlochField(coeffs, self.index_set)

    def v_of(self, coeffs: np.ndarray) -> np.ndarray:
        """Grid samples of ``v(x, |phi|^2)`` for the field with these coefficients."""
        density = np.abs(self.grid.periodic(coeffs)) ** 2
        return evaluate_v(self.model, self.V_L, density)

    def apply_v(self, v_samples: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        return multiply(coeffs, v_samples, self.grid)

    def perp(self, coeffs: np.ndarray) -> np.ndarray:
        a, b = self.dirac_coeffs
        return coeffs - a * np.vdot(a, coeffs) - b * np.vdot(b, coeffs)

    def nonlinear_residual(self, coeffs: np.ndarray, energy: float) -> float:
        """``||(H + v(|phi|^2) - E) phi|| / ||phi||`` for the full nonlinear equation."""
        r = self.hamiltonian @ coeffs + self.apply_v(self.v_of(coeffs), coeffs) - energy * coeffs
        nrm = np.linalg.norm(coeffs)
        return float(np.linalg.norm(r) / nrm) if nrm > 0 else float(np.linalg.norm(r))

    def metadata(self) -> dict:
        return {
            "cutoff": self.index_set.cutoff,
            "basis_size": len(self.index_set),
            "grid": self.grid.n,
            "epsilon_V": self.epsilon_V,
            "nonlinearity": self.model.as_dict(),
            "E0": self.E0,
            "gauge": self.basis.gauge_record(),
        }


def build_problem(cutoff: int = 6, epsilon_V: float = 0.5,
                  model: NonlinearityModel | None = None,
                  potential: HoneycombPotential | None = None,
                  lattice: LatticeBasis | None = None,
                  tol_degeneracy: float | None = None) -> DiracProblem:
    """Diagonalize the linear problem and sample the nonlinearity coefficients."""
    lattice = lattice or LatticeBasis()
    model = model or NonlinearityModel.kerr(1.0)
    potential = potential or standard_potential()
    sym = validate_honeycomb(potential)
    if not sym.passed:
        raise ValueError(f"potential is not honeycomb-symmetric: {sym.as_dict()}")
    index_set = build_index_set(cutoff)
    grid = RealGrid.for_index_set(index_set, lattice)
    basis = linear_basis(lattice, index_set, potential, epsilon_V, tol_degeneracy)
    V_L = potential.scaled(potential.amplitude * epsilon_V).periodic_samples(grid)
    K_field, M_field = expand_coefficients(model, V_L)
    return DiracProblem(lattice, index_set, grid, potential, epsilon_V, model, basis,
                        V_L, K_field, M_field)

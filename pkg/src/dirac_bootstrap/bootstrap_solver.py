"""Bootstrap construction of nonlinear (pseudo-)eigenpairs near the Dirac point.

A mode is parametrized by a pair ``(a, b)`` with ``|a|^2 + |b|^2 = 1`` and an
amplitude ``eps``: ``phi = eps (a phi_a + b phi_b) + corr`` with ``corr``
orthogonal to the Dirac pair.  For a frozen test field ``phi_t`` the
correction solves

    (L - Re E1) corr + M_perp[v(|phi_t|^2) corr] = -M_perp[v(|phi_t|^2) eps u]

and ``E1`` comes from projecting the equation onto the larger Dirac
component.  The outer loop replaces ``phi_t`` by the new field until it stops
moving.  ``E1`` is real for true eigenpairs; on the equator ``|a| = |b|`` its
imaginary part vanishes only at six angles.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .fields import BlochField, apply_rotation
from .perturbation import ParameterPair, SymmetryRegressionError
from .problem import DiracProblem

log = logging.getLogger(__name__)


class BootstrapError(RuntimeError):
    pass


class DivergenceError(BootstrapError):
    """Fixed-point map is not contracting (amplitude too large)."""


class NonConvergenceError(BootstrapError):
    pass


class RegimeError(BootstrapError):
    """The energy correction left the perturbative window."""


class BifurcationCountError(BootstrapError):
    def __init__(self, msg, curve=None):
        super().__init__(msg)
        self.curve = curve


@dataclass(frozen=True)
class BootstrapConfig:
    epsilon: float = 0.04
    inner_tol: float = 1e-13
    outer_tol: float = 1e-11
    max_inner: int = 200
    max_outer: int = 60
    max_sweeps: int = 200
    damping: float = 0.5
    resolvent_shift_mode: str = "real-E1"
    pseudo_tol: float = 1e-3
    epsilon_max: float = 0.2

    def __post_init__(self):
        if not 0 <= self.epsilon < self.epsilon_max:
            raise ValueError(f"epsilon={self.epsilon} outside [0, {self.epsilon_max})")
        for name in ("inner_tol", "outer_tol", "pseudo_tol"):
            if not getattr(self, name) > np.finfo(float).eps:
                raise ValueError(f"{name} must exceed machine epsilon")
        if self.resolvent_shift_mode not in ("zero", "real-E1"):
            raise ValueError(f"unknown resolvent_shift_mode {self.resolvent_shift_mode!r}")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must be in (0, 1]")

    def with_epsilon(self, epsilon: float) -> "BootstrapConfig":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class ModeResult:
    pair: ParameterPair
    epsilon: float
    phi: BlochField
    correction: BlochField
    E_shift: complex
    E0: float
    residual: float
    consistency_residual: float
    iterations: tuple[int, int]
    converged: bool
    is_true_eigenpair: bool
    outer_diffs: tuple[float, ...] = ()
    sweep_ratios: tuple[float, ...] = ()
    second_consistency: float = float("nan")
    kind: str = "equator"

    @property
    def im_energy(self) -> float:
        return float(self.E_shift.imag)

    @property
    def energy(self) -> float:
        return self.E0 + float(self.E_shift.real)

    @property
    def contraction_ratios(self) -> np.ndarray:
        d = np.asarray(self.outer_diffs)
        return d[1:] / d[:-1] if len(d) > 1 else np.array([])

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "pair": self.pair.as_dict(),
            "epsilon": self.epsilon,
            "E_shift": {"re": self.E_shift.real, "im": self.E_shift.imag},
            "E0": self.E0,
            "energy": self.energy,
            "residual": self.residual,
            "consistency_residual": self.consistency_residual,
            "iterations": {"inner": self.iterations[0], "outer": self.iterations[1]},
            "converged": self.converged,
            "is_true_eigenpair": self.is_true_eigenpair,
            "correction_norm": self.correction.norm(),
            "outer_diffs": list(self.outer_diffs),
        }


# -- building blocks ---------------------------------------------------------


def _use_a(a: complex, b: complex) -> bool:
    """Project onto phi_a unless b is clearly larger (ties on the equator go to a)."""
    return abs(a) >= abs(b) * (1 - 1e-12)


def _leading_value(problem: DiracProblem, a: complex, b: complex) -> float:
    """Leading ``E1 / eps^2`` for the projection onto the larger component."""
    r = problem.report
    big, small = (abs(a), abs(b)) if _use_a(a, b) else (abs(b), abs(a))
    return big**2 * r.I_one + 2 * small**2 * r.I_int


def _solve_perp(problem: DiracProblem, v_samples: np.ndarray, shift: float,
                parallel: np.ndarray, config: BootstrapConfig,
                init: np.ndarray | None = None) -> tuple[np.ndarray, dict]:
    """Picard solve of the orthogonal equation for a frozen multiplier ``v``.

    ``parallel`` holds the coefficients of ``eps (a phi_a + b phi_b)``.
    Returns the correction coefficients and sweep diagnostics (``ratios`` is
    the per-sweep contraction, expected ``O(eps^2)``).
    """
    R = problem.resolvent
    R.check_shift(shift)
    scale = max(np.linalg.norm(parallel), 1e-300)
    y = np.zeros_like(parallel) if init is None else problem.perp(np.asarray(init, dtype=complex))
    source = problem.apply_v(v_samples, parallel)
    ratios, prev, rising = [], None, 0
    for sweep in range(1, config.max_sweeps + 1):
        y_new = -R.coefficients(source + problem.apply_v(v_samples, y), shift)
        d = float(np.linalg.norm(y_new - y))
        y = y_new
        if prev is not None and prev > 0:
            ratios.append(d / prev)
        if d <= config.inner_tol * scale:
            return y, {"sweeps": sweep, "ratios": ratios}
        if prev is not None and d >= prev:
            rising += 1
            if rising >= 3:
                raise DivergenceError(
                    f"orthogonal correction not contracting (ratio {d / prev:.3g}); reduce epsilon"
                )
        prev = d
    raise NonConvergenceError(f"orthogonal correction: {config.max_sweeps} sweeps, last step {d:.3g}")


def orthogonal_correction(problem: DiracProblem, phi_t, E1_real: float, a: complex, b: complex,
                          config: BootstrapConfig, init=None) -> tuple[BlochField, dict]:
    """Correction orthogonal to the Dirac pair for the frozen test field ``phi_t``.

    Solves ``(L - E1_real) y + M_perp[v(|phi_t|^2) y] = -M_perp[v(|phi_t|^2) eps u]``
    with ``u = a phi_a + b phi_b``.  ``info["ratios"]`` holds the per-sweep
    contraction ratios.
    """
    pa, pb = problem.dirac_coeffs
    parallel = config.epsilon * (a * pa + b * pb)
    phi_t = phi_t.coeffs if isinstance(phi_t, BlochField) else np.asarray(phi_t, dtype=complex)
    if isinstance(init, BlochField):
        init = init.coeffs
    y, info = _solve_perp(problem, problem.v_of(phi_t), E1_real, parallel, config, init)
    return problem.field(y), info


def _project_energy(problem: DiracProblem, v_samples, phi_coeffs, a, b, eps) -> complex:
    pa, pb = problem.dirac_coeffs
    vphi = problem.apply_v(v_samples, phi_coeffs)
    if _use_a(a, b):
        return complex(np.vdot(pa, vphi) / (eps * a))
    return complex(np.vdot(pb, vphi) / (eps * b))


def consistency_energy(problem: DiracProblem, phi_t, phi_correction, a: complex, b: complex,
                       config: BootstrapConfig) -> complex:
    """``E1`` from the projection onto the larger Dirac component, for frozen ``phi_t``.

    ``phi_correction`` only seeds the coupled iteration; the returned value is
    the converged inner fixed point.
    """
    phi_t = phi_t.coeffs if isinstance(phi_t, BlochField) else np.asarray(phi_t, dtype=complex)
    if isinstance(phi_correction, BlochField):
        phi_correction = phi_correction.coeffs
    return _energy_fixed_point(problem, phi_t, phi_correction, a, b, config)[0]


def _energy_fixed_point(problem: DiracProblem, phi_t: np.ndarray, phi_correction: np.ndarray | None,
                        a: complex, b: complex, config: BootstrapConfig,
                        E_init: complex | None = None) -> tuple[complex, np.ndarray, dict]:
    """Energy correction ``E1`` and the matching correction for frozen ``phi_t``.

    Damped Picard on ``E1 = (1 + mu) eps^2 lead``; each step re-solves the
    orthogonal equation with the current ``Re E1`` shift.
    """
    eps = config.epsilon
    pa, pb = problem.dirac_coeffs
    parallel = eps * (a * pa + b * pb)
    if eps == 0:
        return 0j, np.zeros_like(parallel), {"inner": 0, "mu": 0.0, "sweeps": 0, "ratios": []}
    v = problem.v_of(phi_t)
    lead = _leading_value(problem, a, b) * eps**2
    E = complex(lead) if E_init is None else complex(E_init)
    y = phi_correction
    sweeps, ratios = 0, []
    escale = max(abs(lead), eps**2 * 1e-3)
    for k in range(1, config.max_inner + 1):
        shift = E.real if config.resolvent_shift_mode == "real-E1" else 0.0
        y, info = _solve_perp(problem, v, shift, parallel, config, init=y)
        sweeps += info["sweeps"]
        ratios = info["ratios"] or ratios
        E_new = _project_energy(problem, v, parallel + y, a, b, eps)
        step = abs(E_new - E)
        if lead != 0 and abs(E_new / lead - 1) > 1:
            raise RegimeError(f"|mu| = {abs(E_new / lead - 1):.3g} > 1; outside the perturbative regime")
        if step <= config.inner_tol * escale:
            mu = E_new / lead - 1 if lead != 0 else 0.0
            return E_new, y, {"inner": k, "mu": mu, "sweeps": sweeps, "ratios": ratios}
        E = (1 - config.damping) * E + config.damping * E_new
    raise NonConvergenceError(f"energy fixed point: {config.max_inner} iterations, last step {step:.3g}")


def _run(problem: DiracProblem, pair: ParameterPair, config: BootstrapConfig,
         initial: np.ndarray | None = None, kind: str = "equator") -> ModeResult:
    eps = config.epsilon
    a, b = pair.a, pair.b
    pa, pb = problem.dirac_coeffs
    parallel = eps * (a * pa + b * pb)
    y = np.zeros_like(parallel) if initial is None else problem.perp(np.asarray(initial, dtype=complex))
    phi = parallel + y
    E, diffs, inner_total, ratios = None, [], 0, []
    converged = False
    tol = config.outer_tol * max(eps, 1e-300)
    for n in range(1, config.max_outer + 1):
        E, y_new, info = _energy_fixed_point(problem, phi, y, a, b, config, E_init=E)
        inner_total += info["inner"]
        ratios = info["ratios"] or ratios
        # amplitude constraint: the parallel part is pinned to eps (a phi_a + b phi_b)
        y_new = problem.perp(y_new)
        phi_new = parallel + y_new
        d = float(np.linalg.norm(phi_new - phi))
        diffs.append(d)
        phi, y = phi_new, y_new
        if d <= tol:
            converged = True
            break
        if len(diffs) >= 4 and diffs[-1] > diffs[-2] > diffs[-3]:
            raise DivergenceError(f"outer bootstrap diverging (steps {diffs[-3:]})")
    if not converged:
        raise NonConvergenceError(f"outer bootstrap: {config.max_outer} iterations, last step {diffs[-1]:.3g}")
    E = complex(E)
    res = problem.nonlinear_residual(phi, problem.E0 + E.real)
    cres = _consistency_residual(problem, phi, E, a, b)
    second = _second_consistency(problem, phi, a, b)
    return ModeResult(
        pair=pair, epsilon=eps, phi=problem.field(phi), correction=problem.field(y),
        E_shift=E, E0=problem.E0, residual=res, consistency_residual=cres,
        iterations=(inner_total, len(diffs)), converged=converged, is_true_eigenpair=False,
        outer_diffs=tuple(diffs), sweep_ratios=tuple(ratios), second_consistency=second, kind=kind,
    )


def _consistency_residual(problem: DiracProblem, phi: np.ndarray, E: complex, a, b) -> float:
    """Residual of the pseudo-eigenpair equations (perp equation plus one projection)."""
    nrm = np.linalg.norm(phi)
    if nrm == 0:
        return 0.0
    pa, pb = problem.dirac_coeffs
    r = problem.hamiltonian @ phi + problem.apply_v(problem.v_of(phi), phi) - (problem.E0 + E.real) * phi
    p = pa if _use_a(a, b) else pb
    proj = np.vdot(p, r) - 1j * E.imag * np.vdot(p, phi)
    return float(np.sqrt(np.linalg.norm(problem.perp(r)) ** 2 + abs(proj) ** 2) / nrm)


def _second_consistency(problem: DiracProblem, phi: np.ndarray, a, b) -> float:
    """``b <phi_a, v phi> - a <phi_b, v phi>``: zero iff both projections agree."""
    pa, pb = problem.dirac_coeffs
    vphi = problem.apply_v(problem.v_of(phi), phi)
    return float(abs(b * np.vdot(pa, vphi) - a * np.vdot(pb, vphi)))


# -- modes -------------------------------------------------------------------


def bootstrap_polar(problem: DiracProblem, which: str, config: BootstrapConfig,
                    initial: np.ndarray | None = None) -> ModeResult:
    """True eigenpair for the pole ``(1, 0)`` (``a_pole``) or ``(0, 1)`` (``b_pole``)."""
    pair = ParameterPair.polar(which)
    mode = _run(problem, pair, config, initial, kind=which)
    eps = config.epsilon
    if mode.second_consistency > 1e-10 * eps**3 + 1e-300:
        raise SymmetryRegressionError(
            f"rotation cancellation failed: second projection {mode.second_consistency:.3g}"
        )
    if abs(mode.E_shift.imag) > 1e-10 * max(abs(mode.E_shift), 1e-300):
        raise SymmetryRegressionError(f"polar eigenvalue not real: {mode.E_shift}")
    true = mode.residual <= 10 * config.outer_tol
    return replace(mode, E_shift=complex(mode.E_shift.real), is_true_eigenpair=true)


def _im_threshold(problem: DiracProblem, config: BootstrapConfig) -> float:
    return config.pseudo_tol * config.epsilon**4 * abs(problem.report.I_c_int)


def bootstrap_equator(problem: DiracProblem, beta: float, config: BootstrapConfig,
                      initial: np.ndarray | None = None) -> ModeResult:
    """Pseudo-eigenpair for ``(a, b) = (1, e^{i beta}) / sqrt(2)``."""
    mode = _run(problem, ParameterPair.equator(beta), config, initial, kind="equator")
    true = abs(mode.im_energy) <= _im_threshold(problem, config) and mode.residual <= 10 * config.outer_tol
    return replace(mode, is_true_eigenpair=true)


def bootstrap_pair(problem: DiracProblem, pair: ParameterPair, config: BootstrapConfig,
                   initial: np.ndarray | None = None) -> ModeResult:
    """Pseudo-eigenpair for an arbitrary pair (used by the separability probe)."""
    return _run(problem, pair, config, initial, kind="generic")


def leading_correction(problem: DiracProblem, pair: ParameterPair, epsilon: float) -> np.ndarray:
    """``-eps^3 L^{-1} M_perp [K |u|^2 u]`` via the eigenbasis spectral sum."""
    pa, pb = problem.dirac_coeffs
    u = pair.a * pa + pair.b * pb
    dens = np.abs(problem.grid.periodic(u)) ** 2
    return -epsilon**3 * problem.resolvent.coefficients(problem.apply_v(problem.K_field * dens, u))


class _Scanner:
    """``Im E'(beta)`` with warm starts from the nearest solved angle."""

    def __init__(self, problem: DiracProblem, config: BootstrapConfig):
        self.problem, self.config = problem, config
        self.cache: dict[float, ModeResult] = {}

    def _nearest(self, beta):
        if not self.cache:
            return None, None
        def dist(x):
            return abs((x - beta + np.pi) % (2 * np.pi) - np.pi)
        key = min(self.cache, key=dist)
        m = self.cache[key]
        # a phase step in b rotates the b-part of the correction; first order is enough
        return m.correction.coeffs, m.E_shift

    def mode(self, beta: float) -> ModeResult:
        if beta in self.cache:
            return self.cache[beta]
        init, _ = self._nearest(beta)
        m = bootstrap_equator(self.problem, beta, self.config, initial=init)
        self.cache[beta] = m
        return m

    def __call__(self, beta: float) -> float:
        return self.mode(beta).im_energy


def scan_beta(problem: DiracProblem, config: BootstrapConfig, n_samples: int = 64,
              scanner: _Scanner | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(beta, Im E', Re E')`` on a half-step-offset grid over ``[-pi, pi)``."""
    scanner = scanner or _Scanner(problem, config)
    betas = -np.pi + (np.arange(n_samples) + 0.5) * (2 * np.pi / n_samples)
    modes = [scanner.mode(float(b)) for b in betas]
    return (betas, np.array([m.im_energy for m in modes]),
            np.array([m.E_shift.real for m in modes]))


def _fold(beta: float) -> float:
    return float((beta + np.pi) % (2 * np.pi) - np.pi)


def _brackets(betas, values, zero_tol):
    """Sign-change brackets on a periodic sample; samples within ``zero_tol`` are roots."""
    n = len(betas)
    sign = np.where(np.abs(values) <= zero_tol, 0, np.sign(values))
    out = []
    for i in range(n):
        j = (i + 1) % n
        lo, hi = betas[i], betas[j] + (2 * np.pi if j == 0 else 0.0)
        if sign[i] == 0:
            out.append((lo, lo))
        elif sign[j] != 0 and sign[i] != sign[j]:
            out.append((lo, hi))
    return out


@dataclass
class BifurcationResult:
    status: str
    epsilon: float
    modes: list[ModeResult] = field(default_factory=list)
    curve: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    roots: np.ndarray = field(default_factory=lambda: np.array([]))
    predicted_roots: np.ndarray = field(default_factory=lambda: np.array([]))

    @property
    def equator_modes(self) -> list[ModeResult]:
        return [m for m in self.modes if m.kind == "equator"]

    @property
    def polar_modes(self) -> list[ModeResult]:
        return [m for m in self.modes if m.kind != "equator"]


def find_bifurcation_modes(problem: DiracProblem, config: BootstrapConfig,
                           n_samples: int = 64) -> BifurcationResult:
    """Two polar modes plus the six equator roots of ``Im E'(beta)``."""
    report = problem.report
    scanner = _Scanner(problem, config)
    curve = scan_beta(problem, config, n_samples, scanner)
    if report.degenerate_hypothesis:
        return BifurcationResult("prediction_void", config.epsilon, [], curve)
    betas, im, _ = curve
    zero_tol = 1e-9 * _im_threshold(problem, config)
    brackets = _brackets(betas, im, zero_tol)
    if len(brackets) != 6:
        raise BifurcationCountError(
            f"found {len(brackets)} sign changes of Im E'(beta), expected 6", curve=curve
        )
    roots = []
    for lo, hi in brackets:
        if lo == hi:
            roots.append(lo)
            continue
        r = scipy.optimize.brentq(lambda x: scanner(_fold(x)), lo, hi, xtol=1e-14, rtol=1e-15)
        roots.append(_fold(r))
    roots = np.sort(np.array(roots))
    log.debug("eps=%g: equator roots %s", config.epsilon, roots)
    equator = [scanner.mode(float(r)) for r in roots]
    polar = [bootstrap_polar(problem, "a_pole", config), bootstrap_polar(problem, "b_pole", config)]
    modes = polar + equator
    status = "ok" if all(m.is_true_eigenpair for m in modes) else "uncertified"
    return BifurcationResult(status, config.epsilon, modes, curve, roots, report.predicted_roots())


# -- probes ------------------------------------------------------------------


def rotate_mode(problem: DiracProblem, mode: ModeResult) -> tuple[ParameterPair, np.ndarray]:
    """Apply the 2pi/3 rotation and restore the canonical gauge (``a`` real)."""
    rotated = apply_rotation(mode.phi).coeffs
    pa, pb = problem.dirac_coeffs
    eps = mode.epsilon
    a, b = np.vdot(pa, rotated) / eps, np.vdot(pb, rotated) / eps
    pair = ParameterPair.canonical(a, b)
    phase = pair.a / a if abs(pair.a) > 0 else pair.b / b
    return pair, phase * rotated


@dataclass(frozen=True)
class RotationCheck:
    pair: ParameterPair
    field_distance: float
    energy_difference: float
    mode: ModeResult

    def passed(self, tol: float) -> bool:
        return self.field_distance <= tol and self.energy_difference <= 1e-10 * abs(self.mode.energy)


def rotation_check(problem: DiracProblem, mode: ModeResult, config: BootstrapConfig) -> RotationCheck:
    """Rotate a converged mode, re-run the bootstrap at the image pair and compare.

    An equator mode at ``beta`` maps to ``beta + 2 pi / 3``; the poles map to
    themselves up to the phase ``omega`` (removed by the canonical gauge).
    """
    pair, rotated = rotate_mode(problem, mode)
    init = problem.perp(rotated)
    if mode.kind == "equator":
        again = bootstrap_equator(problem, pair.beta, config, initial=init)
    elif mode.kind in ("a_pole", "b_pole"):
        again = bootstrap_polar(problem, mode.kind, config, initial=init)
    else:
        again = bootstrap_pair(problem, pair, config, initial=init)
    dist = float(np.linalg.norm(again.phi.coeffs - rotated))
    return RotationCheck(pair, dist, abs(again.energy - mode.energy), again)


@dataclass(frozen=True)
class UniquenessReport:
    max_distance: float
    distances: tuple[float, ...]
    tolerance: float
    lipschitz_ratio: float | None
    unique: bool


def uniqueness_probe(problem: DiracProblem, mode: ModeResult, config: BootstrapConfig,
                     n_restarts: int = 5, perturbation_scale: float = 0.5, seed: int = 0,
                     lipschitz_step: float | None = 1e-3) -> UniquenessReport:
    """Restart the bootstrap from perturbed corrections and check they all return.

    Perturbations are random fields orthogonal to the Dirac pair with norm
    ``perturbation_scale * eps^3``.  For equator modes the Lipschitz ratio
    ``||d corr|| / (|da| + |db|)`` is measured against a pseudo-eigenpair at
    ``beta + lipschitz_step``.
    """
    rng = np.random.default_rng(seed)
    eps = config.epsilon
    n = len(problem.index_set)
    dists = []
    for _ in range(n_restarts):
        z = problem.perp(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        z *= perturbation_scale * eps**3 / np.linalg.norm(z)
        start = mode.correction.coeffs + z
        again = _run(problem, mode.pair, config, initial=start, kind=mode.kind)
        dists.append(float(np.linalg.norm(again.phi.coeffs - mode.phi.coeffs)))
    tol = 10 * config.outer_tol * eps
    lip = None
    if lipschitz_step and mode.kind == "equator":
        other = bootstrap_equator(problem, mode.pair.beta + lipschitz_step, config,
                                  initial=mode.correction.coeffs)
        dpair = abs(mode.pair.a - other.pair.a) + abs(mode.pair.b - other.pair.b)
        lip = float(np.linalg.norm(other.correction.coeffs - mode.correction.coeffs) / dpair)
    md = max(dists) if dists else 0.0
    return UniquenessReport(md, tuple(dists), tol, lip, md <= tol)


@dataclass(frozen=True)
class SeparabilityReport:
    theta: np.ndarray
    min_residual: np.ndarray
    best_beta: np.ndarray
    landscape: np.ndarray
    ratio: np.ndarray
    attainable: np.ndarray
    fitted_constant: float
    epsilon: float


def _min_over_beta(problem, theta, config, n_beta):
    """Smallest second-consistency residual over the relative phase at fixed theta."""
    eps = config.epsilon
    cache = {}

    def resid(beta):
        pair = ParameterPair(complex(np.cos(theta)), complex(np.sin(theta) * np.exp(1j * beta)))
        init = cache.get("last")
        m = bootstrap_pair(problem, pair, config, initial=init)
        cache["last"] = m.correction.coeffs
        # energy units: b <phi_a, v phi> - a <phi_b, v phi> is O(eps^3)
        return m.second_consistency / eps

    if min(np.cos(theta), np.sin(theta)) < 1e-14:
        return resid(0.0), 0.0
    grid = -np.pi + (np.arange(n_beta) + 0.5) * 2 * np.pi / n_beta
    vals = np.array([resid(b) for b in grid])
    k = int(np.argmin(vals))
    h = 2 * np.pi / n_beta
    opt = scipy.optimize.minimize_scalar(resid, bounds=(grid[k] - h, grid[k] + h), method="bounded",
                                         options={"xatol": 1e-12})
    if opt.fun < vals[k]:
        return float(opt.fun), _fold(opt.x)
    return float(vals[k]), float(grid[k])


def radial_separability_probe(problem: DiracProblem, config: BootstrapConfig,
                              theta_grid, n_beta: int = 12,
                              attain_tol: float = 1e-6, delta: float = 0.05) -> SeparabilityReport:
    """Minimum attainable consistency residual along ``(cos theta, sin theta e^{i beta})``.

    Off the poles and the equator the residual should stay above
    ``C eps^2 |a b (|b|^2 - |a|^2)(I_one - 2 I_int)|``; the fitted ``C`` is the
    smallest ratio over those angles (``delta`` away from the allowed set).
    """
    eps = config.epsilon
    r = problem.report
    theta = np.asarray(theta_grid, dtype=float)
    mins, betas, land = [], [], []
    for t in theta:
        m, b = _min_over_beta(problem, t, config, n_beta)
        mins.append(m)
        betas.append(b)
        a_, b_ = np.cos(t), np.sin(t)
        land.append(eps**2 * abs(a_ * b_ * (b_**2 - a_**2) * r.splitting))
    mins, land = np.array(mins), np.array(land)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(land > 0, mins / land, np.nan)
    attainable = mins <= attain_tol * eps**2 * r.nondegeneracy
    off = (theta > delta) & (theta < np.pi / 2 - delta) & (np.abs(theta - np.pi / 4) > delta)
    C = float(np.nanmin(ratio[off])) if np.any(off) else float("nan")
    return SeparabilityReport(theta, mins, np.array(betas), land, ratio, attainable, C, eps)


# -- epsilon scaling ---------------------------------------------------------


def fit_exponent(x, y) -> float:
    """Least-squares slope of ``log |y|`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float))), 1)[0])


def richardson(epsilons, values) -> float:
    """Extrapolate ``f(eps) = f0 + c2 eps^2 + c4 eps^4 + ...`` to ``eps = 0``.

    Fits a polynomial in ``eps^2`` of degree ``len(epsilons) - 1``; for two
    points this is the classic ``(4 f(h) - f(2h)) / 3``.
    """
    e2 = np.asarray(epsilons, float) ** 2
    coef = np.polyfit(e2, np.asarray(values, float), len(e2) - 1)
    return float(coef[-1])


def _leading_ratio(mode: ModeResult, floor: float) -> float:
    d = np.asarray(mode.outer_diffs)
    ok = d[:-1] > floor
    r = (d[1:] / d[:-1])[ok]
    return float(r[0]) if len(r) else float("nan")


@dataclass(frozen=True)
class ScalingStudy:
    epsilons: np.ndarray
    correction_norm: np.ndarray
    im_energy: np.ndarray
    polar_shift: np.ndarray
    equator_shift: np.ndarray
    contraction: np.ndarray
    beta: float
    exponents: dict
    contraction_constants: np.ndarray
    extrapolated: dict
    predicted: dict

    def as_dict(self) -> dict:
        return {
            "epsilons": self.epsilons.tolist(),
            "correction_norm": self.correction_norm.tolist(),
            "im_energy": self.im_energy.tolist(),
            "polar_shift": self.polar_shift.tolist(),
            "equator_shift": self.equator_shift.tolist(),
            "contraction": self.contraction.tolist(),
            "contraction_constants": self.contraction_constants.tolist(),
            "beta": self.beta,
            "exponents": self.exponents,
            "extrapolated": self.extrapolated,
            "predicted": self.predicted,
        }


def scaling_study(problem: DiracProblem, config: BootstrapConfig, epsilons,
                  beta: float | None = None) -> ScalingStudy:
    """Polar and generic-equator runs over an amplitude grid, with log-log fits.

    ``beta`` defaults to the angle where the leading ``Im E'`` law peaks.
    """
    r = problem.report
    if beta is None:
        beta = _fold((np.pi / 2 - np.angle(r.I_c_int)) / 3)
    eps = np.asarray(sorted(epsilons), dtype=float)
    corr, im, pol, equ, con = [], [], [], [], []
    for e in eps:
        cfg = config.with_epsilon(float(e))
        pm = bootstrap_polar(problem, "a_pole", cfg)
        em = bootstrap_equator(problem, beta, cfg)
        corr.append(pm.correction.norm())
        im.append(em.im_energy)
        pol.append(pm.E_shift.real)
        equ.append(em.E_shift.real)
        con.append(_leading_ratio(pm, 1e3 * cfg.outer_tol * e))
    corr, im, pol, equ, con = map(np.array, (corr, im, pol, equ, con))
    exps = {
        "correction_norm": fit_exponent(eps, corr),
        "im_energy": fit_exponent(eps, im),
        "polar_shift": fit_exponent(eps, pol),
        "equator_shift": fit_exponent(eps, equ),
        "contraction": fit_exponent(eps, con),
    }
    extrap = {
        "polar_coefficient": richardson(eps, pol / eps**2),
        "equator_coefficient": richardson(eps, equ / eps**2),
    }
    pred = {
        "polar_coefficient": r.I_one,
        "equator_coefficient": r.I_int + r.I_one / 2,
        "im_energy_coefficient": abs(r.I_c_int) / 4 * float(np.sin(3 * beta + np.angle(r.I_c_int))),
    }
    return ScalingStudy(eps, corr, im, pol, equ, con, float(beta), exps, con / eps**2, extrap, pred)

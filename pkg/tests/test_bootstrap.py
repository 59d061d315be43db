import warnings
from dataclasses import replace

import numpy as np
import pytest

from dirac_bootstrap.bootstrap_solver import (BifurcationCountError, BootstrapConfig, DivergenceError,
                                              NonConvergenceError, RegimeError, bootstrap_equator,
                                              bootstrap_polar, consistency_energy, find_bifurcation_modes,
                                              fit_exponent, leading_correction, orthogonal_correction,
                                              radial_separability_probe, richardson, rotation_check,
                                              scan_beta, uniqueness_probe)
from dirac_bootstrap.fields import conj_invert
from dirac_bootstrap.linear_spectrum import StabilityError
from dirac_bootstrap.nonlinearity import NonlinearityModel
from dirac_bootstrap.problem import build_problem

CFG = BootstrapConfig()


@pytest.fixture(scope="module")
def zero_problem():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = build_problem(cutoff=4, epsilon_V=0.5, model=NonlinearityModel.kerr(0.0))
        p.report
    return p


@pytest.fixture(scope="module")
def polar(small_problem):
    return {e: bootstrap_polar(small_problem, "a_pole", CFG.with_epsilon(e)) for e in (0.02, 0.04)}


def _regauge(problem, gamma):
    b = problem.basis
    v = b.vectors.copy()
    v[:, b.dirac_idx[0]] *= np.exp(1j * gamma)
    v[:, b.dirac_idx[1]] *= np.exp(-1j * gamma)
    return replace(problem, basis=replace(b, vectors=v))


@pytest.mark.parametrize("config", [
    dict(epsilon=-0.1), dict(epsilon=0.3), dict(inner_tol=0.0), dict(outer_tol=1e-20),
    dict(resolvent_shift_mode="imaginary"), dict(damping=0.0), dict(damping=1.5),
])
def test_config_validation(config):
    with pytest.raises(ValueError):
        BootstrapConfig(**config)


def test_zero_nonlinearity_gives_zero_correction(zero_problem):
    m = bootstrap_polar(zero_problem, "a_pole", CFG)
    assert m.correction.norm() == 0 and m.E_shift == 0
    e = bootstrap_equator(zero_problem, 0.3, CFG)
    assert e.correction.norm() == 0 and e.E_shift == 0


def test_zero_amplitude_gives_linear_energy(small_problem):
    m = bootstrap_polar(small_problem, "a_pole", CFG.with_epsilon(0.0))
    assert m.energy == small_problem.E0
    assert m.phi.norm() == 0


def test_correction_orthogonal_to_dirac_pair(small_problem, polar):
    pa, pb = small_problem.dirac_coeffs
    for m in polar.values():
        c = m.correction.coeffs
        assert abs(np.vdot(pa, c)) <= 1e-14 * np.linalg.norm(c)
        assert abs(np.vdot(pb, c)) <= 1e-14 * np.linalg.norm(c)


def test_correction_matches_leading_term(small_problem, polar):
    errs = []
    for e, m in sorted(polar.items()):
        lead = leading_correction(small_problem, m.pair, e)
        errs.append(np.linalg.norm(m.correction.coeffs - lead) / np.linalg.norm(lead))
    assert errs[1] < 0.05
    # relative error is O(eps^2): halving eps divides it by about 4
    assert errs[1] / errs[0] == pytest.approx(4, rel=0.1)


def test_orthogonal_correction_single_solve(small_problem, polar):
    m = polar[0.04]
    cfg = CFG.with_epsilon(0.04)
    y, info = orthogonal_correction(small_problem, m.phi, m.E_shift.real, 1.0, 0.0, cfg)
    assert np.linalg.norm(y.coeffs - m.correction.coeffs) <= 1e-9 * m.correction.norm()
    assert max(info["ratios"]) < 0.01
    E = consistency_energy(small_problem, m.phi, m.correction, 1.0, 0.0, cfg)
    assert E == pytest.approx(m.E_shift, rel=1e-10)


def test_polar_energy_leading_order(small_problem, polar):
    r = small_problem.report
    for e, m in polar.items():
        assert m.E_shift.imag == 0
        assert m.E_shift.real / e**2 == pytest.approx(r.I_one, rel=2 * e**2)
        assert m.is_true_eigenpair and m.residual <= 10 * CFG.outer_tol


def test_b_pole_is_conj_inverted_a_pole(small_problem, polar):
    m = polar[0.04]
    b = bootstrap_polar(small_problem, "b_pole", CFG.with_epsilon(0.04))
    assert b.energy == pytest.approx(m.energy, rel=1e-13)
    target = conj_invert(m.phi).coeffs
    # equal up to a global phase
    ph = np.vdot(target, b.phi.coeffs)
    ph /= abs(ph)
    assert np.linalg.norm(b.phi.coeffs - ph * target) <= 1e-10 * m.phi.norm()


def test_equator_real_part_leading_order(small_problem):
    r = small_problem.report
    e = 0.02
    m = bootstrap_equator(small_problem, 0.4, CFG.with_epsilon(e))
    assert m.E_shift.real / e**2 == pytest.approx(r.I_int + r.I_one / 2, rel=2 * e**2)
    assert m.consistency_residual <= 1e-9


def test_im_energy_law(small_problem):
    r = small_problem.report
    e = 0.02
    cfg = CFG.with_epsilon(e)
    betas = np.linspace(-np.pi, np.pi, 9, endpoint=False) + 0.1
    im = np.array([bootstrap_equator(small_problem, b, cfg).im_energy for b in betas])
    shape = np.sin(3 * betas + np.angle(r.I_c_int))
    coef = np.dot(shape, im) / np.dot(shape, shape) / e**4
    assert coef == pytest.approx(abs(r.I_c_int) / 4, rel=0.01)
    assert np.max(np.abs(im - coef * e**4 * shape)) <= 0.02 * e**4 * abs(r.I_c_int)


def test_im_energy_periodic(small_problem):
    e = 0.04
    cfg = CFG.with_epsilon(e)
    vals = [bootstrap_equator(small_problem, 0.3 + k * 2 * np.pi / 3, cfg).im_energy for k in range(3)]
    assert np.ptp(vals) <= 1e-10 * e**4


def test_im_energy_scales_as_eps4(small_problem):
    eps = np.array([0.02, 0.04])
    beta = (np.pi / 2 - np.angle(small_problem.report.I_c_int)) / 3
    im = [bootstrap_equator(small_problem, beta, CFG.with_epsilon(e)).im_energy for e in eps]
    assert fit_exponent(eps, im) == pytest.approx(4, abs=0.1)


@pytest.mark.parametrize("gamma", [0.25])
def test_gauge_shifts_im_curve(small_problem, gamma):
    other = _regauge(small_problem, gamma)
    cfg = CFG.with_epsilon(0.04)
    for beta in (0.1, 1.3):
        a = bootstrap_equator(small_problem, beta, cfg).im_energy
        b = bootstrap_equator(other, beta + 2 * gamma, cfg).im_energy
        assert b == pytest.approx(a, rel=1e-8)


def test_rotation_generates_equator_mode(small_problem):
    cfg = CFG.with_epsilon(0.04)
    m = bootstrap_equator(small_problem, 0.2, cfg)
    chk = rotation_check(small_problem, m, cfg)
    assert np.angle(np.exp(1j * (chk.pair.beta - 0.2 - 2 * np.pi / 3))) == pytest.approx(0, abs=1e-10)
    assert chk.passed(1e-9)


@pytest.mark.parametrize("which", ["a_pole", "b_pole"])
def test_rotation_fixes_poles(small_problem, which):
    cfg = CFG.with_epsilon(0.04)
    m = bootstrap_polar(small_problem, which, cfg)
    assert rotation_check(small_problem, m, cfg).passed(1e-9)


def test_uniqueness_restarts(small_problem):
    cfg = CFG.with_epsilon(0.04)
    m = bootstrap_equator(small_problem, 0.7, cfg)
    rep = uniqueness_probe(small_problem, m, cfg, n_restarts=5)
    assert rep.unique and len(rep.distances) == 5
    zero = uniqueness_probe(small_problem, m, cfg, n_restarts=1, perturbation_scale=0.0,
                            lipschitz_step=None)
    assert zero.max_distance <= rep.tolerance


def test_lipschitz_ratio_scales_as_eps3(small_problem):
    lips = []
    eps = np.array([0.02, 0.04])
    for e in eps:
        cfg = CFG.with_epsilon(e)
        m = bootstrap_equator(small_problem, 0.7, cfg)
        lips.append(uniqueness_probe(small_problem, m, cfg, n_restarts=0).lipschitz_ratio)
    assert fit_exponent(eps, lips) == pytest.approx(3, abs=0.1)


def test_radial_separability(small_problem):
    cfg = CFG.with_epsilon(0.04)
    rep = radial_separability_probe(small_problem, cfg, [0.0, np.pi / 8, np.pi / 4, np.pi / 2])
    assert rep.attainable.tolist() == [True, False, True, True]
    assert rep.fitted_constant > 0


def test_large_amplitude_fails_loudly():
    p = build_problem(cutoff=4, epsilon_V=0.5, model=NonlinearityModel.kerr(4000.0))
    with pytest.raises((DivergenceError, RegimeError, StabilityError, NonConvergenceError)):
        bootstrap_equator(p, 0.3, CFG.with_epsilon(0.19))


def test_prediction_void(zero_problem):
    res = find_bifurcation_modes(zero_problem, CFG, n_samples=12)
    assert res.status == "prediction_void" and res.modes == []


def test_too_coarse_scan_raises(small_problem):
    with pytest.raises(BifurcationCountError) as info:
        find_bifurcation_modes(small_problem, CFG, n_samples=4)
    assert info.value.curve is not None and len(info.value.curve[0]) == 4


def test_scan_grid_is_offset(small_problem):
    betas, im, re = scan_beta(small_problem, CFG, n_samples=12)
    assert betas[0] == pytest.approx(-np.pi + np.pi / 12)
    assert len(im) == len(re) == 12


def test_richardson_exact_for_quadratic():
    eps = np.array([0.1, 0.2, 0.4])
    vals = 3.0 + 2.0 * eps**2 - 5.0 * eps**4
    assert richardson(eps, vals) == pytest.approx(3.0, rel=1e-12)


def test_fit_exponent_exact():
    x = np.array([1.0, 2.0, 4.0])
    assert fit_exponent(x, 7 * x**3) == pytest.approx(3)

"""Command-line front end: spectrum, integrals, bifurcate, verify.

Configuration is a flat text file with one ``key = value`` pair per line;
``#`` starts a comment.  Recognized keys and defaults are in ``DEFAULTS``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap_solver import (BifurcationCountError, BootstrapConfig, BootstrapError, ModeResult,
                               ParameterPair, RegimeError, find_bifurcation_modes,
                               rotation_check, scaling_study, uniqueness_probe)
from .fields import field_from_csv, field_to_csv, inner_product
from .lattice import LatticeBasis, build_index_set
from .linear_spectrum import (CLASS_NAMES, DegeneracyError, StabilityError, SymmetryError,
                              adapt_clusters, build_hamiltonian, class_indices, classify_and_adapt,
                              conj_pair_defect, solve_spectrum)
from .nonlinearity import DomainError, HoneycombPotential, NonlinearityModel, standard_potential, \
    validate_honeycomb
from .perturbation import SymmetryRegressionError, necessary_condition_landscape
from .problem import DiracProblem, build_problem

log = logging.getLogger("dirac_bootstrap")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_CERT = 0, 2, 3, 4

DEFAULTS = {
    "potential": "standard",
    "epsilon_V": "0.5",
    "nonlinearity": "kerr",
    "K0": "1.0",
    "cutoff": "6",
    "epsilons": "0.02, 0.04, 0.08",
    "beta_samples": "64",
    "inner_tol": "1e-13",
    "outer_tol": "1e-11",
    "pseudo_tol": "1e-3",
    "output_dir": "out",
    "seed": "0",
    "restarts": "5",
}


class ConfigError(ValueError):
    pass


class CertificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    potential: str = "standard"
    epsilon_V: float = 0.5
    nonlinearity: str = "kerr"
    K0: float = 1.0
    cutoff: int = 6
    epsilons: tuple[float, ...] = (0.02, 0.04, 0.08)
    beta_samples: int = 64
    inner_tol: float = 1e-13
    outer_tol: float = 1e-11
    pseudo_tol: float = 1e-3
    output_dir: str = "out"
    seed: int = 0
    restarts: int = 5
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if self.cutoff < 2:
            raise ConfigError("cutoff must be >= 2")
        for name in ("inner_tol", "outer_tol", "pseudo_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.epsilons or list(self.epsilons) != sorted(self.epsilons) or len(set(self.epsilons)) != len(self.epsilons):
            raise ConfigError("epsilons must be a strictly ascending list")
        if self.nonlinearity not in ("kerr", "saturable"):
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.beta_samples < 12:
            raise ConfigError("beta_samples must be at least 12")

    def bootstrap(self, epsilon: float) -> BootstrapConfig:
        return BootstrapConfig(epsilon=epsilon, inner_tol=self.inner_tol,
                               outer_tol=self.outer_tol, pseudo_tol=self.pseudo_tol)

    def metadata(self) -> dict:
        return {
            "version": __version__,
            "cutoff": self.cutoff,
            "epsilon_V": self.epsilon_V,
            "nonlinearity": self.nonlinearity,
            "K0": self.K0,
            "potential": self.potential,
            "tolerances": {"inner": self.inner_tol, "outer": self.outer_tol, "pseudo": self.pseudo_tol},
            "seed": self.seed,
        }


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    raw = dict(DEFAULTS)
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        raw[key] = value
    try:
        return RunConfig(
            potential=raw["potential"],
            epsilon_V=float(raw["epsilon_V"]),
            nonlinearity=raw["nonlinearity"].lower(),
            K0=float(raw["K0"]),
            cutoff=int(raw["cutoff"]),
            epsilons=tuple(float(x) for x in raw["epsilons"].split(",") if x.strip()),
            beta_samples=int(raw["beta_samples"]),
            inner_tol=float(raw["inner_tol"]),
            outer_tol=float(raw["outer_tol"]),
            pseudo_tol=float(raw["pseudo_tol"]),
            output_dir=raw["output_dir"],
            seed=int(raw["seed"]),
            restarts=int(raw["restarts"]),
            base_dir=base_dir,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_potential(cfg: RunConfig) -> HoneycombPotential:
    """``standard`` or a path to a CSV Fourier table with columns m1, m2, re, im."""
    if cfg.potential == "standard":
        return standard_potential()
    path = Path(cfg.potential)
    if not path.is_absolute():
        path = cfg.base_dir / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read potential table: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["m1", "m2", "re", "im"]:
        raise ConfigError("potential table must start with header m1,m2,re,im")
    try:
        coeffs = {(int(m1), int(m2)): complex(float(re), float(im)) for m1, m2, re, im in rows[1:]}
    except ValueError as exc:
        raise ConfigError(f"bad potential table row: {exc}") from exc
    return HoneycombPotential(coeffs)


def make_problem(cfg: RunConfig) -> DiracProblem:
    potential = load_potential(cfg)
    sym = validate_honeycomb(potential)
    if not sym.passed:
        raise DomainError(f"potential fails honeycomb symmetry: {sym.as_dict()}")
    model = NonlinearityModel(cfg.nonlinearity, cfg.K0)
    return build_problem(cfg.cutoff, cfg.epsilon_V, model, potential)


# -- writers -----------------------------------------------------------------


def _metadata(cfg: RunConfig, problem: DiracProblem | None) -> dict:
    meta = cfg.metadata()
    if problem is not None:
        meta["gauge"] = problem.basis.gauge_record()
        meta["basis_size"] = len(problem.index_set)
        meta["grid"] = problem.grid.n
    return meta


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_json(path: Path, payload: dict, meta: dict):
    doc = dict(payload)
    doc["metadata"] = meta
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False,
                               default=_jsonable) + "\n",
                    encoding="utf-8")


def _header(meta: dict) -> str:
    return "".join(f"# {k}: {json.dumps(meta[k], sort_keys=True)}\n" for k in sorted(meta))


def write_csv(path: Path, header: list, rows, meta: dict):
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_field(path: Path, f, meta: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_header(meta) + field_to_csv(f), encoding="utf-8")


def _complex(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


# -- subcommands -------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    """Spectrum CSV, Dirac-pair field CSVs and a symmetry report.

    Outside the two-fold regime (e.g. ``epsilon_V = 0``) the spectrum is still
    written; the report then has ``dirac_pair: null`` and no field files.
    """
    potential = load_potential(cfg)
    sym = validate_honeycomb(potential)
    if not sym.passed:
        raise DomainError(f"potential fails honeycomb symmetry: {sym.as_dict()}")
    lattice = LatticeBasis()
    index_set = build_index_set(cfg.cutoff)
    H = build_hamiltonian(lattice, index_set, potential, cfg.epsilon_V)
    w, V = solve_spectrum(H)
    meta = cfg.metadata()
    meta["basis_size"] = len(index_set)
    d = out / "spectrum"
    report = {"potential_symmetry": sym.as_dict()}
    try:
        basis = classify_and_adapt(w, V, index_set, hamiltonian=H)
    except DegeneracyError as exc:
        log.warning("no Dirac pair: %s", exc)
        eigenvalues, vecs, labels, clusters, _ = adapt_clusters(w, V, index_set, hamiltonian=H)
        classes = class_indices(labels)
        residuals = np.linalg.norm(H @ vecs - vecs * eigenvalues, axis=0)
        report.update({
            "lowest_eigenvalue": float(w[0]),
            "multiplicity": len(clusters[0]),
            "lowest_classes": sorted(CLASS_NAMES[classes[i]] for i in clusters[0]),
            "dirac_pair": None,
        })
    else:
        eigenvalues, classes, residuals = basis.eigenvalues, basis.classes, basis.residuals
        meta["gauge"] = basis.gauge_record()
        write_field(d / "phi_a.csv", basis.phi_a, meta)
        write_field(d / "phi_b.csv", basis.phi_b, meta)
        report.update({
            "lowest_eigenvalue": basis.E0,
            "multiplicity": int(np.sum(np.abs(basis.eigenvalues - basis.E0) <= basis.degeneracy_tol)),
            "lowest_classes": [basis.class_label(i) for i in basis.dirac_idx],
            "dirac_pair": {
                "E0": basis.E0,
                "classes": [basis.class_label(i) for i in basis.dirac_idx],
                "degeneracy_gap": basis.degeneracy_gap,
                "conj_invert_defect": conj_pair_defect(basis),
                "orthogonality": abs(inner_product(basis.phi_a, basis.phi_b)),
            },
        })
        log.info("E0 = %.12g, Dirac classes %s", basis.E0, report["lowest_classes"])
    rows = [(n, float(e), CLASS_NAMES[c], float(r))
            for n, (e, c, r) in enumerate(zip(eigenvalues, classes, residuals))]
    write_csv(d / "spectrum.csv", ["index", "eigenvalue", "class", "residual"], rows, meta)
    write_json(d / "symmetry.json", report, meta)
    return EXIT_OK


def cmd_integrals(cfg: RunConfig, out: Path) -> int:
    problem = make_problem(cfg)
    meta = _metadata(cfg, problem)
    report = problem.report
    d = out / "integrals"
    write_json(d / "report.json", report.as_dict(), meta)
    theta, phase, vals = necessary_condition_landscape(report)
    rows = []
    for i, t in enumerate(theta):
        for j, p in enumerate(phase):
            a, b = np.cos(t), np.sin(t) * np.exp(1j * p)
            rows.append((float(t), float(p), float(a), float(b.real), float(b.imag), float(vals[i, j])))
    write_csv(d / "landscape.csv", ["theta", "phase", "a", "b_re", "b_im", "value"], rows, meta)
    log.info("I_one = %.10g, I_int = %.10g, I_c_int = %s", report.I_one, report.I_int, report.I_c_int)
    return EXIT_OK


def _mode_name(mode: ModeResult, k: int) -> str:
    return mode.kind if mode.kind != "equator" else f"equator_{k}"


def _mode_payload(mode: ModeResult, problem: DiracProblem) -> dict:
    d = mode.as_dict()
    d["gauge"] = problem.basis.gauge_record()
    return d


def cmd_bifurcate(cfg: RunConfig, out: Path) -> int:
    problem = make_problem(cfg)
    meta = _metadata(cfg, problem)
    d = out / "bifurcate"
    status = EXIT_OK
    summary = []
    for eps in cfg.epsilons:
        bc = cfg.bootstrap(eps)
        ed = d / f"eps_{eps:g}"
        m = dict(meta, epsilon=eps)
        try:
            result = find_bifurcation_modes(problem, bc, cfg.beta_samples)
        except BifurcationCountError as exc:
            log.error("epsilon %g: %s", eps, exc)
            if exc.curve is not None:
                _write_curve(ed / "curve.csv", exc.curve, m)
            status = max(status, EXIT_CERT)
            continue
        _write_curve(ed / "curve.csv", result.curve, m)
        if result.status == "prediction_void":
            log.error("epsilon %g: nondegeneracy hypotheses fail; eight-mode prediction void", eps)
            write_json(ed / "status.json", {"status": result.status}, m)
            status = max(status, EXIT_DOMAIN)
            continue
        k = 0
        for mode in result.modes:
            name = _mode_name(mode, k)
            k += mode.kind == "equator"
            write_json(ed / f"{name}.json", _mode_payload(mode, problem), m)
            write_field(ed / f"{name}.csv", mode.phi, m)
            summary.append((eps, name, mode.pair.beta, mode.pair.theta, mode.E_shift.real,
                            mode.E_shift.imag, mode.residual, str(mode.is_true_eigenpair)))
        write_json(ed / "roots.json", {"roots": result.roots.tolist(),
                                       "predicted": result.predicted_roots.tolist(),
                                       "status": result.status}, m)
        if result.status != "ok":
            status = max(status, EXIT_CERT)
    write_csv(d / "summary.csv", ["epsilon", "mode", "beta", "theta", "E_shift_re", "E_shift_im",
                                  "residual", "certified"], summary, meta)
    if len(cfg.epsilons) >= 2:
        study = scaling_study(problem, cfg.bootstrap(cfg.epsilons[0]), cfg.epsilons)
        write_json(d / "scaling.json", study.as_dict(), meta)
        log.info("fitted exponents: %s", study.exponents)
    return status


def _write_curve(path: Path, curve, meta):
    betas, im, re = curve
    write_csv(path, ["beta", "im_E_shift", "re_E_shift"],
              [(float(b), float(i), float(r)) for b, i, r in zip(betas, im, re)], meta)


def load_mode(json_path: Path, problem: DiracProblem) -> ModeResult:
    doc = json.loads(json_path.read_text(encoding="utf-8"))
    phi = field_from_csv(json_path.with_suffix(".csv").read_text(encoding="utf-8"), problem.index_set)
    p = doc["pair"]
    pair = ParameterPair(complex(p["a"]["re"], p["a"]["im"]), complex(p["b"]["re"], p["b"]["im"]))
    E = complex(doc["E_shift"]["re"], doc["E_shift"]["im"])
    return ModeResult(pair=pair, epsilon=doc["epsilon"], phi=phi,
                      correction=problem.field(problem.perp(phi.coeffs)), E_shift=E, E0=problem.E0,
                      residual=float("nan"), consistency_residual=float("nan"), iterations=(0, 0),
                      converged=True, is_true_eigenpair=doc["is_true_eigenpair"], kind=doc["kind"])


def verify_mode(problem: DiracProblem, mode: ModeResult, cfg: RunConfig) -> dict:
    bc = cfg.bootstrap(mode.epsilon)
    eps = mode.epsilon
    pa, pb = problem.dirac_coeffs
    a, b = np.vdot(pa, mode.phi.coeffs) / eps, np.vdot(pb, mode.phi.coeffs) / eps
    pair_defect = float(abs(a - mode.pair.a) + abs(b - mode.pair.b))
    residual = problem.nonlinear_residual(mode.phi.coeffs, mode.energy)
    uniq = uniqueness_probe(problem, mode, bc, n_restarts=cfg.restarts, seed=cfg.seed, lipschitz_step=None)
    rot = rotation_check(problem, mode, bc)
    im_limit = cfg.pseudo_tol * eps**4 * abs(problem.report.I_c_int)
    checks = {
        "pair_matches_field": pair_defect <= 1e-10,
        "residual": residual <= 10 * cfg.outer_tol,
        "uniqueness": uniq.unique,
        "rotation": rot.passed(10 * cfg.outer_tol * eps),
        "real_energy": abs(mode.E_shift.imag) <= im_limit,
    }
    return {
        "checks": checks,
        "passed": all(checks.values()),
        "pair_defect": pair_defect,
        "residual": residual,
        "uniqueness_max_distance": uniq.max_distance,
        "rotation_field_distance": rot.field_distance,
        "rotated_beta": rot.pair.beta,
    }


def cmd_verify(cfg: RunConfig, out: Path, mode_dir: Path | None = None) -> int:
    problem = make_problem(cfg)
    meta = _metadata(cfg, problem)
    src = mode_dir or (out / "bifurcate")
    files = sorted(p for p in src.rglob("*.json")
                   if p.with_suffix(".csv").exists() and p.name not in ("roots.json", "status.json"))
    if not files:
        raise ConfigError(f"no mode files under {src}")
    results = {}
    for p in files:
        mode = load_mode(p, problem)
        results[p.relative_to(src).as_posix()] = verify_mode(problem, mode, cfg)
    passed = all(r["passed"] for r in results.values())
    write_json(out / "verify" / "verify.json", {"modes": results, "passed": passed}, meta)
    for name, r in results.items():
        if not r["passed"]:
            log.error("%s failed: %s", name, [k for k, v in r["checks"].items() if not v])
    return EXIT_OK if passed else EXIT_CERT


COMMANDS = {"spectrum": cmd_spectrum, "integrals": cmd_integrals,
            "bifurcate": cmd_bifurcate, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirac-bootstrap", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    parser.add_argument("--cutoff", type=int, help="plane-wave cutoff (overrides config)")
    parser.add_argument("--modes", type=Path, help="mode directory for verify (default OUT/bifurcate)")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.config is not None:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            cfg = parse_config(text, args.config.parent)
        else:
            cfg = parse_config("")
        if args.cutoff is not None:
            cfg = replace(cfg, cutoff=args.cutoff)
        out = args.out or (cfg.base_dir / cfg.output_dir)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.modes)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DomainError, RegimeError, StabilityError, DegeneracyError, SymmetryError) as exc:
        log.error("domain error: %s", exc)
        return EXIT_DOMAIN
    except (BootstrapError, CertificationError, SymmetryRegressionError) as exc:
        log.error("certification failure: %s", exc)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: dielectric and absorption scans, self-test."""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, ScanConfig, read_config_file, resolve

DIELECTRIC_COLUMNS = ("k", "omega", "re_chi_l", "im_chi_l", "re_chi_t", "im_chi_t",
                      "re_eps_l", "im_eps_l", "re_eps_t", "im_eps_t", "quad_err")
ABSORPTION_COLUMNS = ("omega", "alpha", "nu_re", "mc_err", "k_scaling_slope")

NAN = float("nan")


def _dielectric_point(args):
    from .kinematics import PlasmaState
    from .rpa import WavePoint, response_point

    k, omega, beta, mu, tol, vacuum, cutoff, convention = args
    try:
        rp = response_point(WavePoint(k, omega), PlasmaState(beta, mu), tol=tol,
                            vacuum=vacuum, cutoff=cutoff, convention=convention)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return (k, omega) + (NAN,) * 9, f"error: {type(exc).__name__}: {exc}"
    note = "note: " + ", ".join(rp.flags) if rp.flags else None
    row = (k, omega, rp.chi_l.real, rp.chi_l.imag, rp.chi_t.real, rp.chi_t.imag,
           rp.eps_l.real, rp.eps_l.imag, rp.eps_t.real, rp.eps_t.imag, rp.quad_error)
    return row, note


def _absorption_point(args):
    from .bremsstrahlung import IonPotentialModel, absorption_coefficient
    from .kinematics import PlasmaState
    from .quadrature import MCConfig

    omega, beta, mu, Z, kappa, n_ion, seed, samples, strata, target, k_seq = args
    try:
        res = absorption_coefficient(
            omega, PlasmaState(beta, mu), IonPotentialModel(Z, kappa, n_ion),
            MCConfig(seed, samples, strata, target), k_seq=k_seq)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return (omega, NAN, NAN, NAN, NAN), f"error: {type(exc).__name__}: {exc}"
    note = "note: RWA-questionable (omega >= 2m)" if "RWA-questionable" in res.flags else None
    return (omega, res.alpha, res.collision_nu_re, res.mc_error, res.k_scaling_slope), note


def _dispatch(fn, tasks, threads):
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_dielectric_scan(cfg: ScanConfig):
    """Rows sorted by (k, omega) plus (row index, message) notes and errors."""
    tasks = [(k, w, cfg.beta, cfg.mu, cfg.tol, cfg.vacuum, cfg.cutoff, cfg.convention)
             for k in cfg.k_values for w in cfg.omega_values]
    out = _dispatch(_dielectric_point, tasks, cfg.threads)
    rows = [r for r, _ in out]
    notes = [(i, msg) for i, (_, msg) in enumerate(out) if msg]
    return rows, notes


def run_absorption_scan(cfg: ScanConfig):
    """One row per omega; notes for flagged or failed points."""
    tasks = [(w, cfg.beta, cfg.mu, cfg.Z, cfg.kappa, cfg.n_ion, cfg.seed, cfg.samples,
              cfg.strata, cfg.target_rel_error, cfg.k_seq) for w in cfg.omegas]
    out = _dispatch(_absorption_point, tasks, cfg.threads)
    rows = [r for r, _ in out]
    notes = [(i, msg) for i, (_, msg) in enumerate(out) if msg]
    return rows, notes


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return "%.17g" % x
    return str(x)


def format_csv(cfg: ScanConfig, columns, rows, notes=()) -> str:
    lines = ["# relplasma resolved configuration"]
    lines += [f"# {key} = {_fmt(val) if val is not None else 'none'}"
              for key, val in cfg.resolved]
    for i, msg in notes:
        lines.append(f"# row {i}: {msg}")
    lines.append(",".join(columns))
    lines += [",".join(_fmt(float(x)) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def format_json(columns, rows) -> str:
    def clean(x):
        x = float(x)
        return x if math.isfinite(x) else None

    return json.dumps([{c: clean(x) for c, x in zip(columns, row)} for row in rows],
                      indent=1) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _overrides(args, mapping):
    return {key: getattr(args, attr) for attr, key in mapping.items()
            if getattr(args, attr, None) is not None}


_COMMON = {"T_keV": "plasma.T_keV", "T": "plasma.T", "mu": "plasma.mu",
           "n_e_m3": "plasma.n_e_m3", "threads": "threads"}
_DIEL = {"k_min": "grid.k_min", "k_max": "grid.k_max", "n_k": "grid.n_k",
         "omega_min": "grid.omega_min", "omega_max": "grid.omega_max",
         "n_omega": "grid.n_omega", "spacing": "grid.spacing", "cutoff": "numerics.cutoff",
         "tol": "numerics.tol", "convention": "numerics.convention"}
_ABS = {"omega": "grid.omegas", "Z": "ion.Z", "kappa": "ion.kappa", "n_ion": "ion.n_ion",
        "seed": "numerics.seed", "samples": "numerics.samples", "strata": "numerics.strata",
        "k_seq": "numerics.k_seq", "target_rel_error": "numerics.target_rel_error"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relplasma", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--T-keV", dest="T_keV", type=float)
        p.add_argument("--T", dest="T", type=float, help="temperature in units of m")
        p.add_argument("--mu", type=float)
        p.add_argument("--n-e-m3", dest="n_e_m3", type=float,
                       help="net electron density in m^-3 (solves for mu)")
        p.add_argument("--threads", type=int)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out")

    d = sub.add_parser("scan-dielectric", help="chi and eps on a (k, omega) grid")
    common(d)
    d.add_argument("--k-min", dest="k_min", type=float)
    d.add_argument("--k-max", dest="k_max", type=float)
    d.add_argument("--n-k", dest="n_k", type=int)
    d.add_argument("--omega-min", dest="omega_min", type=float)
    d.add_argument("--omega-max", dest="omega_max", type=float)
    d.add_argument("--n-omega", dest="n_omega", type=int)
    d.add_argument("--spacing", choices=("linear", "log"))
    d.add_argument("--vacuum", action="store_true", default=None)
    d.add_argument("--cutoff", type=float)
    d.add_argument("--tol", type=float)
    d.add_argument("--convention", choices=("rpa", "inverse"))

    a = sub.add_parser("scan-absorption", help="inverse-bremsstrahlung alpha(omega)")
    common(a)
    a.add_argument("--omega", help="comma-separated photon energies")
    a.add_argument("--Z", type=int)
    a.add_argument("--kappa", help="screening wavenumber or 'debye'")
    a.add_argument("--n-ion", dest="n_ion", help="ion density or 'neutral'")
    a.add_argument("--seed", type=int)
    a.add_argument("--samples", type=int)
    a.add_argument("--strata", type=int)
    a.add_argument("--k-seq", dest="k_seq")
    a.add_argument("--target-rel-error", dest="target_rel_error", type=float)

    s = sub.add_parser("self-test", help="run built-in invariant checks")
    s.add_argument("--quick", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "self-test":
        from .selftest import run_self_test

        return 0 if run_self_test(quick=args.quick) else 1
    try:
        file_values = read_config_file(args.config) if args.config else {}
        if args.command == "scan-dielectric":
            ov = _overrides(args, {**_COMMON, **_DIEL})
            if args.vacuum:
                ov["numerics.vacuum"] = True
            cfg = resolve(file_values, ov, mode="dielectric")
        else:
            cfg = resolve(file_values, _overrides(args, {**_COMMON, **_ABS}),
                          mode="absorption")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "scan-dielectric":
        columns = DIELECTRIC_COLUMNS
        rows, notes = run_dielectric_scan(cfg)
    else:
        columns = ABSORPTION_COLUMNS
        rows, notes = run_absorption_scan(cfg)
    if args.format == "json":
        _emit(format_json(columns, rows), args.out)
    else:
        _emit(format_csv(cfg, columns, rows, notes), args.out)
    failed = any(msg.startswith("error") for _, msg in notes)
    for i, msg in notes:
        print(f"row {i}: {msg}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

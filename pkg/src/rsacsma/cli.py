"""Command-line front end.

Each subcommand reads a JSON config, runs one experiment and writes a CSV
whose first comment line records the tool version and every parameter::

    rsacsma map-curve --config map.json --output map.csv --seed 7 --workers 4
    rsacsma validate

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance failure (``validate`` only).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import logging
import sys

import numpy as np

from . import __version__
from .availability import solve_density
from .config import COMMANDS, ConfigError, ExperimentSpec, load_config, parse_config
from .metrics import coverage_curve, map_mhpp2, map_rsa, write_map_csv
from .montecarlo import mc_coverage, mc_density, mc_map, rsa_patterns_at_coverage
from .pcf import (
    PcfTable,
    estimate_pcf,
    fit_exponential,
    read_fits_csv,
    solve_pcf_numerical,
    write_fits_csv,
)
from .radio import DeploymentConfig, Disk, Torus, derive_inhibition

log = logging.getLogger("rsacsma")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 1, 2, 3


def _jsonable(o):
    if dataclasses.is_dataclass(o):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(o).items()}
    if isinstance(o, (Torus, Disk)):
        return dataclasses.asdict(o)
    if isinstance(o, np.generic):
        return o.item()
    return str(o)


def _header(spec: ExperimentSpec, args, extra=None):
    seed = args.seed
    if seed is None:
        seed = spec.deployment.master_seed if spec.deployment else 0
    prov = {"tool": f"rsacsma {__version__}", "command": spec.command, "seed": seed,
            "config": spec.raw}
    if extra:
        prov.update(extra)
    lines = [json.dumps(prov, sort_keys=True, default=_jsonable)]
    if not args.no_timestamp:
        lines.append("generated " + datetime.datetime.now(datetime.timezone.utc).isoformat())
    return lines


def _deployment(spec, args, default_window):
    dep = spec.deployment
    if dep is None:
        dep = DeploymentConfig(1e-4, default_window)
    if args.seed is not None:
        dep = dataclasses.replace(dep, master_seed=args.seed)
    return dep


def _grid(spec, key, default):
    return np.asarray(spec.sweep.get(key, default), dtype=float)


def cmd_map_curve(spec, args):
    radio = spec.radio
    g = derive_inhibition(radio)
    base = _deployment(spec, args, Disk(1500.0))
    reps = int(spec.monte_carlo.get("replications", 10_000))
    lams = _grid(spec, "lambda_a_per_m2", np.geomspace(1e-5, 1e-3, 9))
    rows = []
    for lam in lams:
        row = [lam, map_rsa(lam, g), map_mhpp2(lam, g.d_inh)]
        if reps:
            est = mc_map(dataclasses.replace(base, ap_density=float(lam)), radio, reps,
                         args.workers)
            row += [est.mean, est.ci95_halfwidth]
        rows.append(row)
    extra = ("map_mc", "map_mc_ci") if reps else ()
    write_map_csv(args.output, rows, _header(spec, args), extra)


def cmd_density_curve(spec, args):
    radio = spec.radio
    g = derive_inhibition(radio)
    dep = _deployment(spec, args, Torus(50.0 * g.d_inh))
    t = _grid(spec, "t", np.linspace(0.0, 1.0, 21))
    curve = solve_density(dep.ap_density, g.kappa, t)
    reps = int(spec.monte_carlo.get("replications", 0))
    cols = [t, curve.rho, curve.theta]
    names = ["t", "rho_per_m2", "theta"]
    if reps:
        sim = mc_density(dep, radio, t, reps, args.workers)
        cols += [sim.theta, sim.ci95_theta]
        names += ["theta_mc", "theta_mc_ci"]
    _write_columns(args.output, names, cols, _header(spec, args))


def _write_columns(path, names, cols, header):
    import csv

    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def _pcf_patterns(spec, args, theta):
    p = spec.pcf
    seed = args.seed if args.seed is not None else (spec.deployment.master_seed
                                                   if spec.deployment else 0)
    side = float(p.get("torus_side_dinh", 50.0))
    n = int(p.get("patterns", 200))
    if theta >= 0.547:
        return rsa_patterns_at_coverage(theta, n, seed, side, jamming_rate=5000.0)
    return rsa_patterns_at_coverage(theta, n, seed, side)


def _coverages(spec):
    return [float(c) for c in spec.sweep.get("coverage", [0.3])]


def cmd_pcf_estimate(spec, args):
    p = spec.pcf
    covs = _coverages(spec)
    if len(covs) != 1:
        raise ConfigError("pcf-estimate takes a single sweep.coverage value")
    table = estimate_pcf(_pcf_patterns(spec, args, covs[0]), float(p.get("bin_width_dinh", 0.05)),
                         float(p.get("r_max_dinh", 4.0)), coverage=covs[0])
    table.to_csv(args.output, _header(spec, args))


def cmd_pcf_solve(spec, args):
    p = spec.pcf
    covs = _coverages(spec)
    if len(covs) != 1:
        raise ConfigError("pcf-solve takes a single sweep.coverage value")
    table = solve_pcf_numerical(covs[0], float(p.get("solver_r_max_dinh", 16.0)),
                                int(p.get("solver_n_r", 2048)),
                                int(p.get("solver_n_rho_steps", 400)))
    table.to_csv(args.output, _header(spec, args))


def cmd_pcf_fit(spec, args):
    p = spec.pcf
    r_cut = float(p.get("fit_r_cut_dinh", 3.0))
    if "table_csv" in p:
        cov = _coverages(spec)[0] if "coverage" in spec.sweep else float("nan")
        fits = [fit_exponential(PcfTable.from_csv(p["table_csv"], cov), r_cut)]
    else:
        fits = []
        for cov in _coverages(spec):
            table = estimate_pcf(_pcf_patterns(spec, args, cov),
                                 float(p.get("bin_width_dinh", 0.05)),
                                 float(p.get("r_max_dinh", 4.0)), coverage=cov)
            fits.append(fit_exponential(table, r_cut))
    write_fits_csv(args.output, fits, _header(spec, args))


def cmd_coverage_curve(spec, args):
    radio = spec.radio
    g = derive_inhibition(radio)
    dep = _deployment(spec, args, Torus(40.0 * g.d_inh))
    betas = _grid(spec, "beta_db", np.arange(-10.0, 20.01, 2.5))
    rows = None
    if "fits_csv" in spec.pcf:
        rows = [(f.coverage, f.c1, f.c2) for f in read_fits_csv(spec.pcf["fits_csv"])]
    curve = coverage_curve(betas, radio, dep, rows)
    names = ["beta_db", "p_cov"]
    cols = [curve.beta_grid_db, curve.p_cov]
    reps = int(spec.monte_carlo.get("replications", 0))
    if reps:
        if not isinstance(dep.window, Torus):
            raise ConfigError("coverage simulation needs deployment.torus_side_m")
        sim = mc_coverage(dep, radio, betas, reps, args.workers,
                          spec.monte_carlo.get("conditioning", "palm"))
        cols += [sim.p_cov, np.array([e.ci95_halfwidth for e in sim.estimates])]
        names += ["p_cov_mc", "p_cov_mc_ci"]
        if spec.monte_carlo.get("raw_dump_path"):
            sim.dump_csv(spec.monte_carlo["raw_dump_path"])
    extra = {"lambda_active_per_m2": curve.provenance["lambda_active_per_m2"],
             "c1": curve.provenance["c1"], "c2": curve.provenance["c2"]}
    _write_columns(args.output, names, cols, _header(spec, args, extra))


def cmd_validate(spec, args):
    from .validation import run_all

    results = run_all(print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


HANDLERS = {
    "map-curve": cmd_map_curve,
    "density-curve": cmd_density_curve,
    "pcf-estimate": cmd_pcf_estimate,
    "pcf-solve": cmd_pcf_solve,
    "pcf-fit": cmd_pcf_fit,
    "coverage-curve": cmd_coverage_curve,
    "validate": cmd_validate,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="rsacsma", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"rsacsma {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment configuration")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")
        sp.add_argument("--output", help="CSV output path")
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation timestamp comment")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.config:
            spec = load_config(args.config, args.command)
        else:
            spec = parse_config("{}", args.command)
        if args.output is None:
            args.output = spec.output_path
        if args.output is None and args.command != "validate":
            raise ConfigError("no output path: pass --output or set output_path")
        status = HANDLERS[args.command](spec, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return status or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

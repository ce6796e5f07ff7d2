"""Command-line front end: eval, dual, subgrad, solve, consistency, gamma, validate.

One config JSON drives every subcommand, with up to four sections:

    {
      "domain":   {"bounds": [[0,1]], "h": 0.0625, "epsilon": 0.15,
                   "metric": "euclidean"}
                  or {"points_csv": "pts.csv", "epsilon": 0.3, "metric": "l1"},
      "measures": {"uniform": true}
                  or {"rho0": "0.5", "rho1": "0.5", "normalize": false}
                     (expression strings or per-point value lists)
                  or {"samples_csv": "samples.csv", "bandwidth": 0.0}
                  or {"densities_csv": "densities.csv"},
      "solver":   {"tau": null, "sigma": null, "max_iters": 50000,
                   "gap_tol": 1e-6, "check_every": 25, "lambda": null,
                   "seed": 0},
      "sweep":    {"u": "x**2", "rho": "1", "rho0": "0.5", "rho1": "0.5",
                   "bounds": [[0,1]], "epsilons": [0.2, 0.1, 0.05],
                   "h_over_eps": 0.1, "metric": "euclidean"}
    }

Command-line flags override config keys.  Scalar fields travel as
``index,value`` CSV; labeled samples as ``x1,...,xN,label`` CSV; class
densities as ``index,rho0,rho1`` CSV.  stdout carries exactly one JSON
document per invocation; diagnostics go to stderr.  Exit codes: 0 success,
1 validation/configuration failure, 2 usage error.

``--threads`` (or the ATV_THREADS environment variable) caps worker
parallelism.  Every numeric path in this package is serial, so any accepted
value runs the same bit-reproducible code; the flag exists so callers can
pin ``--threads 1`` in scripts that must stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .domain import build_grid, build_point_cloud
from .duality import dual_eval, maximizing_kernels, subgradient, check_subgradient
from .experiments import consistency_study, gamma_limit_study
from .expressions import parse_field
from .measures import ClassMeasures, from_samples, uniform_measures, validate
from .report import (
    canonical_json,
    read_csv,
    read_field_csv,
    to_jsonable,
    write_csv,
    write_field_csv,
    write_report,
)
from .solver import SolverConfig, solve_pd
from .tv import eval_tv


def _emit(obj) -> None:
    sys.stdout.write(canonical_json(obj))
    sys.stdout.write("\n")


def _load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return cfg


def _build_domain(cfg: dict):
    section = cfg.get("domain")
    if not isinstance(section, dict):
        raise ValueError("config needs a 'domain' section")
    metric = section.get("metric", "euclidean")
    epsilon = section.get("epsilon")
    if epsilon is None:
        raise ValueError("domain section needs 'epsilon'")
    if "points_csv" in section:
        rows = read_csv(section["points_csv"])
        pts = np.array([[float(c) for c in row] for row in rows[1:]])
        weights = section.get("quad_weights")
        return build_point_cloud(pts, epsilon=float(epsilon), metric=metric, quad_weights=weights)
    if "bounds" not in section or "h" not in section:
        raise ValueError("domain section needs 'bounds' and 'h' (grid) or 'points_csv' (cloud)")
    return build_grid(section["bounds"], h=float(section["h"]), metric=metric, epsilon=float(epsilon))


def _read_samples(path, dim):
    """Labeled sample rows "x1,...,xN,label"; a header row is tolerated."""
    rows = read_csv(path)
    if rows and rows[0] and rows[0][-1].strip().lower() == "label":
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no sample rows")
    pts0, pts1 = [], []
    for k, row in enumerate(rows):
        if len(row) != dim + 1:
            raise ValueError(
                f"{path}: row {k + 1} has {len(row) - 1} coordinates, domain has {dim}"
            )
        label = row[-1].strip()
        coords = [float(c) for c in row[:-1]]
        if label == "0":
            pts0.append(coords)
        elif label == "1":
            pts1.append(coords)
        else:
            raise ValueError(f"{path}: row {k + 1} has label {label!r}, expected 0 or 1")
    return np.array(pts0), np.array(pts1)


def _density_values(spec, domain, name):
    """A density from the config: an expression string or a list of values."""
    if isinstance(spec, str):
        return parse_field(spec, domain.dim)(domain.points)
    vals = np.asarray(spec, dtype=float)
    if vals.shape != (domain.n,):
        raise ValueError(f"measures.{name}: {vals.size} values for {domain.n} points")
    return vals


def _build_measures(cfg: dict, domain, samples_path=None) -> ClassMeasures:
    section = dict(cfg.get("measures") or {})
    if samples_path is not None:
        section = {"samples_csv": samples_path, "bandwidth": section.get("bandwidth", 0.0)}
    if not section or section.get("uniform"):
        return uniform_measures(domain)
    if "samples_csv" in section:
        pts0, pts1 = _read_samples(section["samples_csv"], domain.dim)
        return from_samples(pts0, pts1, domain, bandwidth=float(section.get("bandwidth", 0.0)))
    if "densities_csv" in section:
        rows = read_csv(section["densities_csv"])
        if not rows or [c.strip() for c in rows[0][:3]] != ["index", "rho0", "rho1"]:
            raise ValueError(f"{section['densities_csv']}: expected header 'index,rho0,rho1'")
        if len(rows) - 1 != domain.n:
            raise ValueError(f"{section['densities_csv']}: {len(rows) - 1} rows for {domain.n} points")
        rho0 = np.empty(domain.n)
        rho1 = np.empty(domain.n)
        for row in rows[1:]:
            idx = int(row[0])
            rho0[idx] = float(row[1])
            rho1[idx] = float(row[2])
        return ClassMeasures(rho0=rho0, rho1=rho1, nu_weights=domain.quad_weights.copy())
    if "rho0" in section and "rho1" in section:
        rho0 = _density_values(section["rho0"], domain, "rho0")
        rho1 = _density_values(section["rho1"], domain, "rho1")
        if section.get("normalize"):
            total = float((rho0 + rho1) @ domain.quad_weights)
            if total <= 0:
                raise ValueError("cannot normalize measures with zero total mass")
            rho0, rho1 = rho0 / total, rho1 / total
        return ClassMeasures(rho0=rho0, rho1=rho1, nu_weights=domain.quad_weights.copy())
    raise ValueError("measures section needs 'uniform', 'rho0'/'rho1', 'samples_csv', or 'densities_csv'")


def _load_field(path, domain):
    u = read_field_csv(path)
    if u.shape != (domain.n,):
        raise ValueError(f"{path}: field has {u.shape[0]} values, domain has {domain.n} points")
    return u


def _solver_config(cfg: dict, args) -> SolverConfig:
    section = dict(cfg.get("solver") or {})
    if "lambda" in section:
        section["lam"] = section.pop("lambda")
    for key in ("lam", "seed", "max_iters", "gap_tol"):
        override = getattr(args, key, None)
        if override is not None:
            section[key] = override
    known = {f.name for f in SolverConfig.__dataclass_fields__.values()}
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
    return SolverConfig(**section)


def _lam(cfg: dict, args, domain) -> float:
    if getattr(args, "lam", None) is not None:
        return float(args.lam)
    section = cfg.get("solver") or {}
    lam = section.get("lambda")
    return domain.epsilon if lam is None else float(lam)


def _resolve_threads(args) -> int:
    raw = getattr(args, "threads", None)
    if raw is None:
        raw = os.environ.get("ATV_THREADS", "1")
    threads = int(raw)
    if threads < 1:
        raise ValueError("--threads must be >= 1")
    return threads


def cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    domain = _build_domain(cfg)
    measures = _build_measures(cfg, domain)
    u = _load_field(args.field, domain)
    lam = _lam(cfg, args, domain)
    tv = eval_tv(u, measures, domain)
    w = domain.quad_weights
    data = float(((measures.rho0 * u + measures.rho1 * (1.0 - u)) * w).sum())
    _emit({"tv": tv, "data_term": data, "objective": data + lam * tv, "lambda": lam})
    return 0


def cmd_dual(args) -> int:
    cfg = _load_config(args.config)
    domain = _build_domain(cfg)
    measures = _build_measures(cfg, domain)
    u = _load_field(args.field, domain)
    tv = eval_tv(u, measures, domain)
    dual = dual_eval(maximizing_kernels(u, measures, domain), u, measures, domain)
    _emit({"tv": tv, "dual": dual, "gap": tv - dual})
    return 0


def cmd_subgrad(args) -> int:
    cfg = _load_config(args.config)
    domain = _build_domain(cfg)
    measures = _build_measures(cfg, domain)
    u = _load_field(args.field, domain)
    p = subgradient(u, measures, domain)
    if args.out:
        write_field_csv(p, args.out)
    pairing_value = float((p * u * domain.quad_weights).sum())
    tv = eval_tv(u, measures, domain)
    worst = check_subgradient(p, u, measures, domain, n_trials=args.trials, seed=args.seed or 0)
    _emit({"pairing": pairing_value, "fy_residual": pairing_value - tv, "worst_violation": worst})
    return 0


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    domain = _build_domain(cfg)
    measures = _build_measures(cfg, domain, samples_path=args.data)
    problems = validate(measures, domain)
    if problems:
        for v in problems:
            print(f"validation: {v.message}", file=sys.stderr)
        return 1
    config = _solver_config(cfg, args)
    report = solve_pd(measures, domain, config)
    if args.out:
        write_report(report, args.out)
    if args.field_out:
        write_field_csv(report.u_star, args.field_out)
    _emit(
        {
            "objective": report.primal_obj,
            "certificate": report.dual_certificate,
            "gap": report.primal_obj - report.dual_certificate,
            "iterations": report.iterations,
            "converged": report.converged,
        }
    )
    return 0


def _sweep_section(cfg: dict) -> dict:
    section = cfg.get("sweep")
    if not isinstance(section, dict):
        raise ValueError("config needs a 'sweep' section")
    if "bounds" not in section or "epsilons" not in section:
        raise ValueError("sweep section needs 'bounds' and 'epsilons'")
    return section


def cmd_consistency(args) -> int:
    section = _sweep_section(_load_config(args.config))
    result = consistency_study(
        section.get("u", "x**2"),
        section.get("rho", "1"),
        section["bounds"],
        section["epsilons"],
        h_over_eps=float(section.get("h_over_eps", 0.1)),
        metric=section.get("metric", "euclidean"),
    )
    if args.out:
        write_csv(result.table(), args.out)
    _emit(to_jsonable(result))
    return 0


def cmd_gamma(args) -> int:
    section = _sweep_section(_load_config(args.config))
    result = gamma_limit_study(
        section.get("u", "x"),
        section.get("rho0", "0.5"),
        section.get("rho1", "0.5"),
        section["bounds"],
        section["epsilons"],
        h_over_eps=float(section.get("h_over_eps", 0.1)),
    )
    if args.out:
        write_csv(result.table(), args.out)
    _emit(to_jsonable(result))
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    domain = _build_domain(cfg)
    measures = _build_measures(cfg, domain)
    problems = validate(measures, domain)
    for v in problems:
        print(f"validation: {v.message}", file=sys.stderr)
    _emit(
        {
            "violations": [{"kind": v.kind, "index": v.index, "message": v.message} for v in problems],
            "count": len(problems),
            "message": f"{len(problems)} violations",
        }
    )
    return 0 if not problems else 1


def _add_threads(sp) -> None:
    sp.add_argument(
        "--threads",
        type=int,
        default=argparse.SUPPRESS,
        help="worker cap (>= 1); all numerics are serial, so 1 is both the default and the reproducible path",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atv",
        description="Adversarial nonlocal total variation: evaluation, duality, solver, and limit studies.",
        epilog="Precedence: command-line flags override config-file keys; config keys override built-in defaults.",
    )
    parser.add_argument("--threads", type=int, default=None, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, metavar="{eval,dual,subgrad,solve,consistency,gamma,validate}")

    p = sub.add_parser("eval", help="evaluate TV and the classification objective at a field")
    p.add_argument("--config", required=True)
    p.add_argument("--field", required=True, help="index,value CSV with one value per domain point")
    p.add_argument("--lam", type=float, default=None, help="TV weight (default: solver.lambda or epsilon)")
    _add_threads(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dual", help="evaluate the attained dual value and duality gap at a field")
    p.add_argument("--config", required=True)
    p.add_argument("--field", required=True)
    _add_threads(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("subgrad", help="compute a TV subgradient, verify it, optionally write it as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--out", default=None, help="where to write the subgradient as index,value CSV")
    p.add_argument("--trials", type=int, default=200, help="random directions for the subgradient check")
    p.add_argument("--seed", type=int, default=None)
    _add_threads(p)
    p.set_defaults(func=cmd_subgrad)

    p = sub.add_parser("solve", help="run the primal-dual solver")
    p.add_argument("--config", required=True)
    p.add_argument("--data", default=None, help="x1,...,xN,label samples CSV (overrides config measures)")
    p.add_argument("--out", default=None, help="solve report JSON path")
    p.add_argument("--field-out", default=None, help="u* as index,value CSV")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--gap-tol", dest="gap_tol", type=float, default=None)
    _add_threads(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("consistency", help="nonlocal-diffusion consistency sweep over an epsilon ladder")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="sweep CSV path (epsilon,h,observed,reference,abs_err,rel_err)")
    _add_threads(p)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("gamma", help="TV epsilon-limit sweep against the weighted local TV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    _add_threads(p)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("validate", help="check domain/measures invariants from a config")
    p.add_argument("--config", required=True)
    _add_threads(p)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        _resolve_threads(args)
        return args.func(args)
    except Exception as exc:  # config / data / invariant problems: not usage
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

    cyclrf SUBCOMMAND CONFIG -o OUTDIR [--seed S] [--M M] [--r R] [--N N]

Exit status: 0 success, 2 usage error, 3 invalid configuration or model,
4 numerical failure.  Every run writes ``manifest.json`` next to its outputs.
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from . import io
from .errors import ModelError, NumericalError
from .fieldsim import simulate
from .functionals import Quadrature, functional_I, normalization_constants, normalize, oracle_matrix
from .harness import convergence_study, run_experiment
from .limits import covariance_matrix, simulate_limit
from .spectrum import covariance, eval_density, lrd_diagnostic, spectral_function

SUBCOMMANDS = ("validate", "density", "covariance", "simulate", "functional", "limit", "convergence", "experiment")

EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 2, 3, 4


def _validate(data, out):
    model = cfgmod.build_model(data)
    rep = {"valid": True, "n": model.n, "k": model.k, "total_mass": model.total_mass,
           "component_masses": list(model.masses)}
    if "weight" in data:
        w = cfgmod.build_weight(data, model)
        rep.update(weight=w.kind, j=w.j, a_j=w.a)
    io.write_report(os.path.join(out, "report.txt"), rep)
    return ["report.txt"]


def _density(data, out):
    model = cfgmod.build_model(data)
    sec = data.get("density") or {}
    pts = sec.get("points")
    if pts is None:
        pts = np.linspace(0.0, 2.0 * model.upper_frequency / 10.0, 41)[1:]
    rows = []
    for lam in pts:
        rows.append((float(lam), eval_density(model, lam), spectral_function(model, float(lam))))
    io.write_csv(os.path.join(out, "density.csv"), ["lambda", "density", "spectral_function"], rows)
    return ["density.csv"]


def _covariance(data, out):
    model = cfgmod.build_model(data)
    sec = data.get("covariance") or {}
    lags = sec.get("lags", [0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
    tol = sec.get("tol")
    rows = []
    for lag in lags:
        ev = covariance(model, float(lag), tol)
        rows.append((ev.lag, ev.value, ev.error))
    io.write_csv(os.path.join(out, "covariance.csv"), ["lag", "value", "error"], rows)
    written = ["covariance.csv"]
    if data.get("lrd"):
        T = data["lrd"].get("T", [10.0, 100.0, 1000.0])
        io.write_csv(os.path.join(out, "lrd.csv"), ["T", "abs_covariance_integral"], lrd_diagnostic(model, T))
        written.append("lrd.csv")
    return written


def _simulate(data, out):
    model = cfgmod.build_model(data)
    exp = cfgmod.experiment_section(data)
    sec = data.get("simulate") or {}
    real = simulate(model, int(exp["N"]), int(exp["seed"]), int(sec.get("rep", 0)))
    pts = sec.get("points")
    if pts is None:
        g = np.linspace(0.0, float(sec.get("extent", 10.0)), int(sec.get("size", 21)))
        if model.n == 1:
            pts = g[:, None]
        else:
            mesh = np.meshgrid(*([g] * model.n), indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
    pts = np.asarray(pts, dtype=float).reshape(-1, model.n)
    vals = real.evaluate(pts)
    header = [f"x{k + 1}" for k in range(model.n)] + ["value"]
    io.write_csv(os.path.join(out, "field.csv"), header, [(*p, v) for p, v in zip(pts, vals)])
    tmp = os.path.join(out, ".realization.bin.part")
    real.sample.dump(tmp)
    os.replace(tmp, os.path.join(out, "realization.bin"))
    return ["field.csv", "realization.bin"]


def _functional(data, out):
    model = cfgmod.build_model(data)
    w = cfgmod.build_weight(data, model)
    exp = cfgmod.experiment_section(data)
    consts = normalization_constants(model, w.j)
    r = float(exp["r"])
    t = np.asarray(exp["t"], dtype=float)
    real = simulate(model, int(exp["N"]), int(exp["seed"]), 0)
    rt = r * t ** (1.0 / model.n)
    I = functional_I(real, w, rt, Quadrature(**(exp.get("quadrature") or {})))
    X = normalize(I, consts, r, t)
    K = oracle_matrix(model, w, consts, r, t)
    rows = [(tt, rr, ii, xx, K[k, k]) for k, (tt, rr, ii, xx) in enumerate(zip(t, rt, I, X))]
    io.write_csv(os.path.join(out, "functional.csv"), ["t", "r_t", "I", "X", "oracle_variance"], rows)
    return ["functional.csv"]


def _limit(data, out):
    model = cfgmod.build_model(data, require_finite_mass=False)
    w = cfgmod.build_weight(data, model)
    exp = cfgmod.experiment_section(data)
    sec = data.get("limit") or {}
    alpha = model.components[w.j].alpha
    t = np.asarray(sec.get("t", [0.2, 0.4, 0.6, 0.8, 1.0]), dtype=float)
    M = int(sec.get("M", exp["M"]))
    paths = simulate_limit(w, alpha, model.n, t, M, int(sec.get("K", 4096)), int(exp["seed"]),
                           sec.get("method", "cholesky"))
    K = covariance_matrix(w, alpha, model.n, t)
    io.write_csv(os.path.join(out, "limit_covariance.csv"), [io.fmt(x) for x in t], K)
    io.write_csv(os.path.join(out, "limit_paths.csv"), [io.fmt(x) for x in t], paths)
    return ["limit_covariance.csv", "limit_paths.csv"]


def _convergence(data, out):
    model = cfgmod.build_model(data, require_finite_mass=False)
    w = cfgmod.build_weight(data, model)
    sec = data.get("convergence") or {}
    consts = normalization_constants(model, w.j)
    tab = convergence_study(model, w, consts, sec.get("ladder", [10.0, 100.0, 1000.0, 10000.0]),
                            float(sec.get("t", 1.0)))
    io.write_csv(os.path.join(out, "convergence.csv"), ["r", "t", "R", "S", "R_err", "S_err"], tab.rows)
    io.write_report(os.path.join(out, "report.txt"), {"rows": len(tab.rows), "trend": tab.trend,
                                                       "strictly_decreasing": tab.decreasing})
    return ["convergence.csv", "report.txt"]


def _experiment(data, out):
    cfg = cfgmod.build_experiment(data)
    rep = run_experiment(cfg)
    io.write_report(os.path.join(out, "report.txt"), rep.summary())
    io.write_csv(os.path.join(out, "qq.csv"), ["theoretical", "empirical"], rep.qq)
    rows = []
    for i in range(cfg.M):
        for k, t in enumerate(cfg.tgrid):
            rows.append((i, t, rep.field_samples[i, k], rep.oracle_samples[i, k]))
    io.write_csv(os.path.join(out, "samples.csv"), ["rep", "t", "field", "oracle"], rows)
    written = ["report.txt", "qq.csv", "samples.csv"]
    if rep.convergence is not None:
        io.write_csv(os.path.join(out, "convergence.csv"), ["r", "t", "R", "S", "R_err", "S_err"],
                     rep.convergence.rows)
        written.append("convergence.csv")
    return written, {"elapsed_seconds": round(rep.elapsed, 3)}


HANDLERS = {"validate": _validate, "density": _density, "covariance": _covariance, "simulate": _simulate,
            "functional": _functional, "limit": _limit, "convergence": _convergence, "experiment": _experiment}


def parser():
    p = argparse.ArgumentParser(prog="cyclrf", description="Random fields with cyclical long-range dependence")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("config", help="YAML run configuration")
    p.add_argument("-o", "--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--N", type=int)
    return p


def main(argv=None):
    args = parser().parse_args(argv)
    if not os.path.isfile(args.config):
        print(f"cyclrf: error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        data = cfgmod.apply_overrides(cfgmod.load(args.config), args.seed, args.M, args.r, args.N)
        os.makedirs(args.out, exist_ok=True)
        result = HANDLERS[args.subcommand](data, args.out)
        written, extra = result if isinstance(result, tuple) else (result, None)
        seed = cfgmod.experiment_section(data)["seed"]
        io.write_manifest(args.out, command=args.subcommand, config_path=args.config, seed=seed,
                          outputs=written, extra=extra)
    except ModelError as exc:
        print(f"cyclrf {args.subcommand}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"cyclrf {args.subcommand}: numerical failure in {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in written:
        print(os.path.join(args.out, name))
    return 0


if __name__ == "__main__":
    sys.exit(main())

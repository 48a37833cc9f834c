"""YAML run configuration (schema in the README)."""

import yaml

from .errors import IndexMismatch, ModelError
from .functionals import Quadrature
from .harness import ExperimentConfig
from .spectrum import SpectralModel
from .weights import weight_from_dict

DEFAULTS = {"r": 100.0, "t": [1.0], "M": 500, "N": 2**14, "seed": 0, "workers": 1}


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ModelError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: top level must be a mapping")
    if "model" not in data:
        raise ModelError(f"{path}: missing required section 'model'")
    return data


def apply_overrides(data, seed=None, M=None, r=None, N=None):
    exp = dict(data.get("experiment") or {})
    for key, val in (("seed", seed), ("M", M), ("r", r), ("N", N)):
        if val is not None:
            exp[key] = val
    out = dict(data)
    out["experiment"] = exp
    return out


def build_model(data, require_finite_mass=True):
    return SpectralModel.from_dict(data["model"], require_finite_mass=require_finite_mass)


def build_weight(data, model):
    wd = dict(data.get("weight") or {"kind": "donsker"})
    j = int(wd.get("j", 0))
    if not 0 <= j <= model.k:
        raise IndexMismatch(f"weight matched to j={j} but the model has k={model.k}")
    if wd.get("kind") == "gaussian" and j > 0 and "a" not in wd:
        wd["a"] = model.components[j].a
    w = weight_from_dict(wd, model.n)
    if abs(w.a - model.components[w.j].a) > 1e-12 * max(1.0, w.a):
        raise IndexMismatch(f"weight frequency {w.a} does not match a_{w.j} = {model.components[w.j].a}")
    return w


def experiment_section(data):
    exp = dict(DEFAULTS)
    exp.update(data.get("experiment") or {})
    return exp


def build_experiment(data, model=None, weight=None):
    model = model or build_model(data)
    weight = weight or build_weight(data, model)
    exp = experiment_section(data)
    q = Quadrature(**(exp.get("quadrature") or {}))
    ladder = tuple(float(r) for r in (data.get("convergence") or {}).get("ladder", ()))
    try:
        return ExperimentConfig(model, weight, r=float(exp["r"]), tgrid=tuple(exp["t"]), M=int(exp["M"]),
                                N=int(exp["N"]), seed=int(exp["seed"]), workers=int(exp["workers"]), quad=q,
                                ladder=ladder, label=str(data.get("label", "experiment")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"invalid experiment section: {exc}") from None

"""Experiment configuration: strict JSON parsing and validation.

Unknown keys are rejected at every level, and so are keys that the chosen
experiment does not use, so a typo in a campaign file fails loudly instead
of being ignored. Entry indices are 0-based.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Optional

from smilab.ensembles import EnsembleSpec, Family, ShiftKind, ShiftSpec
from smilab.errors import ConfigError, ConfigParseError

__all__ = ["Experiment", "ExperimentConfig", "DEFAULT_T_GRID", "parse_config", "config_from_dict"]

DEFAULT_T_GRID = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
DEFAULT_TRIALS = 10_000
DEFAULT_SAMPLES = 1_000_000


class Experiment(str, enum.Enum):
    THEOREM_TAIL = "theorem_tail"
    SST_TAIL = "sst_tail"
    ENTRY_TAIL = "entry_tail"
    COUNTEREXAMPLE = "counterexample"
    HAGELSTEIN = "hagelstein"
    GINIBRE_LOWER = "ginibre_lower"
    IDENTITY_SUITE = "identity_suite"
    DENSITY_CHECK = "density_check"


_COMMON = {"experiment", "master_seed", "workers", "output_path"}
_FIELDS = {
    Experiment.THEOREM_TAIL: {"ensemble", "trials", "t_grid"},
    Experiment.SST_TAIL: {"ensemble", "trials", "t_grid"},
    Experiment.ENTRY_TAIL: {"ensemble", "trials", "t_grid", "entry"},
    Experiment.COUNTEREXAMPLE: {"ensemble", "trials", "d_list", "quantile"},
    Experiment.HAGELSTEIN: {"trials", "components"},
    Experiment.GINIBRE_LOWER: {"ensemble", "trials"},
    Experiment.IDENTITY_SUITE: {"n_max", "cases"},
    Experiment.DENSITY_CHECK: {"ensemble", "samples"},
}
_REQUIRED = {
    Experiment.ENTRY_TAIL: {"entry"},
    Experiment.COUNTEREXAMPLE: {"d_list"},
    Experiment.HAGELSTEIN: {"components"},
}
# families an experiment accepts, and the default when "family" is omitted
_FAMILIES = {
    Experiment.THEOREM_TAIL: ({Family.BOUNDED_UNIFORM, Family.BOUNDED_GAUSSIAN, Family.CAUCHY}, None),
    Experiment.ENTRY_TAIL: ({Family.BOUNDED_UNIFORM, Family.BOUNDED_GAUSSIAN, Family.CAUCHY}, None),
    Experiment.DENSITY_CHECK: ({Family.BOUNDED_UNIFORM, Family.BOUNDED_GAUSSIAN, Family.CAUCHY}, None),
    Experiment.SST_TAIL: ({Family.GINIBRE}, Family.GINIBRE),
    Experiment.GINIBRE_LOWER: ({Family.GINIBRE}, Family.GINIBRE),
    Experiment.COUNTEREXAMPLE: ({Family.LAZY_RADEMACHER}, Family.LAZY_RADEMACHER),
}
_ORDER = ["experiment", "ensemble", "trials", "t_grid", "d_list", "quantile", "entry", "components",
          "samples", "n_max", "cases", "master_seed", "workers", "output_path"]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    ensemble: Optional[EnsembleSpec] = None
    trials: Optional[int] = None
    t_grid: Optional[tuple] = None
    d_list: Optional[tuple] = None
    quantile: Optional[float] = None
    entry: Optional[tuple] = None
    components: Optional[tuple] = None
    samples: Optional[int] = None
    n_max: Optional[int] = None
    cases: Optional[int] = None
    master_seed: int = 0
    workers: int = 0
    output_path: Optional[str] = None

    def to_dict(self) -> dict:
        """JSON-ready echo; ``parse_config`` on it gives back an equal config."""
        out = {}
        for key in _ORDER:
            val = getattr(self, key)
            if val is None:
                continue
            if key == "experiment":
                val = val.value
            elif key == "ensemble":
                val = _ensemble_to_dict(val)
            elif isinstance(val, tuple):
                val = list(val)
            out[key] = val
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return config_from_dict(data)


def _shift_to_dict(shift: ShiftSpec) -> dict:
    if shift.kind is ShiftKind.ZERO:
        return {"kind": "zero"}
    if shift.kind is ShiftKind.SCALAR_IDENTITY:
        return {"kind": "scalar_identity", "c": shift.value}
    if shift.kind is ShiftKind.COUNTEREXAMPLE_DIAG:
        return {"kind": "counterexample_diag", "d": shift.value}
    return {"kind": "explicit", "matrix": [list(r) for r in shift.matrix]}


def _ensemble_to_dict(spec: EnsembleSpec) -> dict:
    out = {"family": spec.family.value}
    if spec.K is not None:
        out["K"] = spec.K
    out["n"] = spec.n
    # zero is the default and the only shift some experiments accept
    if spec.shift.kind is not ShiftKind.ZERO:
        out["shift"] = _shift_to_dict(spec.shift)
    return out


def _int(val, name, minimum=None, maximum=None):
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"expected an integer, got {val!r}", name)
    if minimum is not None and val < minimum:
        raise ConfigError(f"must be >= {minimum}, got {val}", name)
    if maximum is not None and val > maximum:
        raise ConfigError(f"must be <= {maximum}, got {val}", name)
    return val


def _num(val, name):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"expected a finite number, got {val!r}", name)
    return float(val)


def _num_list(val, name, increasing=True):
    if not isinstance(val, list) or not val:
        raise ConfigError("expected a non-empty list of numbers", name)
    out = tuple(_num(v, f"{name}[{k}]") for k, v in enumerate(val))
    if any(v <= 0 for v in out):
        raise ConfigError("values must be positive", name)
    if increasing and any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError("values must be strictly increasing", name)
    return out


def _check_keys(obj, allowed, prefix):
    if not isinstance(obj, dict):
        raise ConfigError("expected a JSON object", prefix.rstrip(".") or None)
    for key in obj:
        if key not in allowed:
            raise ConfigError("unknown key", f"{prefix}{key}")


def _parse_shift(obj) -> ShiftSpec:
    if obj is None:
        return ShiftSpec.zero()
    _check_keys(obj, {"kind", "c", "d", "matrix"}, "ensemble.shift.")
    kind = obj.get("kind")
    try:
        kind = ShiftKind(kind)
    except ValueError:
        raise ConfigError(f"unknown shift kind {kind!r}", "ensemble.shift.kind") from None
    params = {ShiftKind.ZERO: set(), ShiftKind.SCALAR_IDENTITY: {"c"},
              ShiftKind.COUNTEREXAMPLE_DIAG: {"d"}, ShiftKind.EXPLICIT: {"matrix"}}[kind]
    for key in {"c", "d", "matrix"}:
        if key in obj and key not in params:
            raise ConfigError(f"not used by shift kind {kind.value}", f"ensemble.shift.{key}")
        if key in params and key not in obj:
            raise ConfigError("required", f"ensemble.shift.{key}")
    try:
        if kind is ShiftKind.ZERO:
            return ShiftSpec.zero()
        if kind is ShiftKind.SCALAR_IDENTITY:
            return ShiftSpec.scalar_identity(_num(obj["c"], "ensemble.shift.c"))
        if kind is ShiftKind.COUNTEREXAMPLE_DIAG:
            return ShiftSpec.counterexample_diag(_num(obj["d"], "ensemble.shift.d"))
        m = obj["matrix"]
        if not isinstance(m, list) or not all(isinstance(r, list) for r in m):
            raise ConfigError("expected a list of rows", "ensemble.shift.matrix")
        return ShiftSpec.explicit([[_num(v, "ensemble.shift.matrix") for v in r] for r in m])
    except ConfigError as exc:
        if exc.field and not exc.field.startswith("ensemble."):
            raise ConfigError(exc.message, f"ensemble.{exc.field}") from None
        raise


def _parse_ensemble(obj, experiment: Experiment) -> EnsembleSpec:
    _check_keys(obj, {"family", "K", "n", "shift"}, "ensemble.")
    allowed, default = _FAMILIES[experiment]
    fam = obj.get("family", default)
    if fam is None:
        raise ConfigError("required", "ensemble.family")
    try:
        fam = Family(fam)
    except ValueError:
        raise ConfigError(f"unknown family {fam!r}", "ensemble.family") from None
    if fam not in allowed:
        raise ConfigError(f"{fam.value} is not supported by {experiment.value}", "ensemble.family")
    if "n" not in obj:
        raise ConfigError("required", "ensemble.n")
    n = _int(obj["n"], "ensemble.n", minimum=1)
    if fam.continuous:
        if "K" not in obj:
            raise ConfigError("required", "ensemble.K")
        K = _num(obj["K"], "ensemble.K")
    elif "K" in obj:
        raise ConfigError(f"not used by family {fam.value}", "ensemble.K")
    else:
        K = None
    if experiment in (Experiment.COUNTEREXAMPLE, Experiment.DENSITY_CHECK) and "shift" in obj:
        raise ConfigError(f"not used by {experiment.value}", "ensemble.shift")
    if experiment is Experiment.GINIBRE_LOWER and obj.get("shift", {"kind": "zero"}) != {"kind": "zero"}:
        raise ConfigError("ginibre_lower requires a zero shift", "ensemble.shift")
    shift = _parse_shift(obj.get("shift"))
    try:
        return EnsembleSpec(fam, n, K=K, shift=shift)
    except ConfigError as exc:
        raise ConfigError(exc.message, f"ensemble.{exc.field}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON object and fill defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "experiment" not in data:
        raise ConfigError("required", "experiment")
    try:
        exp = Experiment(data["experiment"])
    except ValueError:
        raise ConfigError(f"unknown experiment {data['experiment']!r}", "experiment") from None
    allowed = _COMMON | _FIELDS[exp]
    for key in data:
        if key not in allowed:
            known = set(_ORDER)
            msg = "unknown key" if key not in known else f"not used by {exp.value}"
            raise ConfigError(msg, key)
    for key in _REQUIRED.get(exp, ()):
        if key not in data:
            raise ConfigError("required", key)
    fields = _FIELDS[exp]
    kw = {"experiment": exp}

    if "ensemble" in fields:
        if "ensemble" not in data:
            raise ConfigError("required", "ensemble")
        kw["ensemble"] = _parse_ensemble(data["ensemble"], exp)
    if "trials" in fields:
        kw["trials"] = _int(data.get("trials", DEFAULT_TRIALS), "trials", minimum=1)
    if "t_grid" in fields:
        kw["t_grid"] = _num_list(data["t_grid"], "t_grid") if "t_grid" in data else DEFAULT_T_GRID
    if "d_list" in fields:
        kw["d_list"] = _num_list(data["d_list"], "d_list")
        if len(kw["d_list"]) < 3:
            raise ConfigError("need at least 3 values", "d_list")
    if "quantile" in fields:
        q = _num(data.get("quantile", 0.5), "quantile")
        if not 0.0 < q < 1.0:
            raise ConfigError("must lie in (0, 1)", "quantile")
        kw["quantile"] = q
    if "entry" in fields:
        e = data["entry"]
        if not isinstance(e, list) or len(e) != 2:
            raise ConfigError("expected [i, j]", "entry")
        n = kw["ensemble"].n
        kw["entry"] = tuple(_int(v, "entry", minimum=0, maximum=n - 1) for v in e)
    if "components" in fields:
        c = data["components"]
        c = c if isinstance(c, list) else [c]
        if not c:
            raise ConfigError("expected a positive integer or a list of them", "components")
        kw["components"] = tuple(_int(v, "components", minimum=1) for v in c)
    if "samples" in fields:
        kw["samples"] = _int(data.get("samples", DEFAULT_SAMPLES), "samples", minimum=100_000)
    if "n_max" in fields:
        kw["n_max"] = _int(data.get("n_max", 8), "n_max", minimum=2, maximum=12)
    if "cases" in fields:
        kw["cases"] = _int(data.get("cases", 1000), "cases", minimum=1)

    kw["master_seed"] = _int(data.get("master_seed", 0), "master_seed", minimum=0, maximum=2**64 - 1)
    kw["workers"] = _int(data.get("workers", 0), "workers", minimum=0)
    out = data.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("expected a string", "output_path")
    kw["output_path"] = out
    return ExperimentConfig(**kw)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from None
    return config_from_dict(data)

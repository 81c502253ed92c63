"""Run configuration: sectioned ``key = value`` files.

Scalars are numbers or words; lists use brackets, e.g. ``M = [0.02, 0.04]``.
Unknown keys are rejected so typos do not pass silently.
"""
from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .dynamics import (CarryingCapacity, ModelSpec, WolbachiaParams, build_separated_model,
                       build_wolbachia_model, cubic_separated, separated_from_wolbachia)
from .errors import ConfigError

DEFAULT_CONFIG = "default.cfg"

SCHEMA: dict[str, dict[str, Any]] = {
    "model": {"family": "wolbachia", "b1": 0.8, "b2": 0.6, "d1": 0.27, "d2": 0.3, "sh": 0.9,
              "theta": 0.4, "m_amp": 0.0},
    "capacity": {"kind": "cosine", "K0": 0.06, "A": 0.02, "T": 12.0, "samples_file": ""},
    "numerics": {"tol": 1e-10, "grid_n": 256, "orbit_n": 512, "cost_grid_n": 256,
                 "delta": 1e-6, "t0_grid_n": 64, "c_tol": 1e-10, "finite_s_tol": 1e-12,
                 "coarse_n": 48, "d_tol": 1e-6, "threads": 1},
    "experiment": {"S": [10.0, 100.0, 1000.0], "M": [0.02, 0.04, 0.06], "periods": 2,
                   "t0": 6.0, "t1": 8.0, "split": 0.5, "budget_factor": 1.0,
                   "etas": [0.04, 0.02, 0.01, 0.005],
                   "sigmas": [0.2, 0.1, 0.05, 0.025], "reduction_pulse": [5.5, 0.5, 0.03],
                   "p0": 0.0, "t_end": 24.0, "impulse": [], "pulse": []},
    "output": {"dir": "out", "formats": "csv, svg, json"},
}


@dataclass
class RunConfig:
    model: dict
    capacity: dict
    numerics: dict
    experiment: dict
    output: dict
    source: Optional[str] = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def formats(self) -> set[str]:
        return {f.strip().lower() for f in self.output["formats"].split(",") if f.strip()}

    def to_dict(self) -> dict:
        return {"model": self.model, "capacity": self.capacity, "numerics": self.numerics,
                "experiment": self.experiment, "output": self.output, "source": self.source}

    # builders ------------------------------------------------------------

    def wolbachia_params(self) -> WolbachiaParams:
        m = self.model
        return WolbachiaParams(b1=m["b1"], b2=m["b2"], d1=m["d1"], d2=m["d2"], sh=m["sh"])

    def capacity_obj(self) -> CarryingCapacity:
        c = self.capacity
        if c["kind"] == "cosine":
            return CarryingCapacity.cosine(c["K0"], c["A"], c["T"])
        path = Path(c["samples_file"])
        if not path.is_absolute():
            path = self.base_dir / path
        values = np.loadtxt(path, delimiter=",", ndmin=1)
        return CarryingCapacity.sampled(values, c["T"])

    def build_model(self, validate: bool = True) -> ModelSpec:
        K = self.capacity_obj()
        fam = self.model["family"]
        if fam == "wolbachia":
            return build_wolbachia_model(self.wolbachia_params(), K, validate=validate)
        if fam == "separated":
            return build_separated_model(separated_from_wolbachia(self.wolbachia_params(), K), K)
        return build_separated_model(cubic_separated(self.model["theta"], self.model["m_amp"],
                                                     K.T), K)


def _parse_value(raw: str, default):
    raw = raw.strip()
    if isinstance(default, str):
        return raw
    try:
        v = ast.literal_eval(raw)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse value {raw!r}") from exc
    if isinstance(default, bool):
        return bool(v)
    if isinstance(default, int) and not isinstance(default, bool):
        if not float(v).is_integer():
            raise ConfigError(f"expected an integer, got {raw!r}")
        return int(v)
    if isinstance(default, float):
        return float(v)
    if isinstance(default, list):
        if isinstance(v, (int, float)):
            v = [v]
        return _floatify(list(v))
    return v


def _floatify(v):
    if isinstance(v, (list, tuple)):
        return [_floatify(x) for x in v]
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        return v
    raise ConfigError(f"unsupported list entry {v!r}")


def _validate(cfg: RunConfig) -> None:
    m, c, n, e = cfg.model, cfg.capacity, cfg.numerics, cfg.experiment
    errs = []
    if m["family"] not in ("wolbachia", "separated", "cubic"):
        errs.append("model.family must be wolbachia, separated or cubic")
    if m["family"] == "separated" and m["d1"] != m["d2"]:
        errs.append("model.family = separated needs d1 == d2")
    if c["kind"] not in ("cosine", "sampled"):
        errs.append("capacity.kind must be cosine or sampled")
    if c["T"] <= 0:
        errs.append("capacity.T must be positive")
    if c["kind"] == "cosine" and not c["K0"] > c["A"] >= 0:
        errs.append("capacity needs K0 > A >= 0")
    if c["kind"] == "sampled":
        p = Path(c["samples_file"])
        p = p if p.is_absolute() else cfg.base_dir / p
        if not c["samples_file"] or not p.is_file():
            errs.append(f"capacity.samples_file not found: {p}")
    if not 1e-13 <= n["tol"] <= 1e-3:
        errs.append("numerics.tol must lie in [1e-13, 1e-3]")
    if n["grid_n"] < 64:
        errs.append("numerics.grid_n must be >= 64")
    if n["orbit_n"] < 256:
        errs.append("numerics.orbit_n must be >= 256")
    if n["cost_grid_n"] < 128:
        errs.append("numerics.cost_grid_n must be >= 128")
    if not 1e-8 <= n["delta"] <= 1e-2:
        errs.append("numerics.delta must lie in [1e-8, 1e-2]")
    if n["c_tol"] > 1e-5 or n["c_tol"] <= 0:
        errs.append("numerics.c_tol must lie in (0, 1e-5]")
    if n["threads"] < 1:
        errs.append("numerics.threads must be >= 1")
    S = e["S"]
    if any(b <= a for a, b in zip(S, S[1:])) or any(s <= 1.0 / c["T"] for s in S):
        errs.append("experiment.S must be increasing and exceed 1/T")
    if any(v <= 0 for v in e["M"]):
        errs.append("experiment.M values must be positive")
    sig = e["sigmas"]
    if any(not 0 < s < 1 for s in sig) or any(b >= a for a, b in zip(sig, sig[1:])):
        errs.append("experiment.sigmas must be decreasing in (0, 1)")
    if any(v < 0 for v in e["etas"]):
        errs.append("experiment.etas must be non-negative")
    if not 0 < e["split"] < 1:
        errs.append("experiment.split must lie in (0, 1)")
    if not 0 <= e["p0"] <= 1:
        errs.append("experiment.p0 must lie in [0, 1]")
    if e["periods"] < 2:
        errs.append("experiment.periods must be >= 2")
    bad_fmt = cfg.formats - {"csv", "svg", "json"}
    if bad_fmt:
        errs.append(f"output.formats has unknown entries {sorted(bad_fmt)}")
    if errs:
        raise ConfigError("invalid configuration: " + "; ".join(errs))


def _schedule_list(v, width: int, name: str) -> list:
    if not v:
        return []
    if all(isinstance(x, float) for x in v):
        v = [v]
    for row in v:
        if len(row) != width:
            raise ConfigError(f"experiment.{name} entries need {width} numbers, got {row}")
    return [list(r) for r in v]


def default_config_text() -> str:
    return resources.files("popreplace").joinpath("configs", DEFAULT_CONFIG).read_text()


def parse_config(text: str, source: Optional[str] = None,
                 base_dir: Optional[Path] = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"{source or 'config'}: {exc}") from exc
    sections = {}
    for name, defaults in SCHEMA.items():
        vals = dict(defaults)
        vals = {k: (list(v) if isinstance(v, list) else v) for k, v in vals.items()}
        if cp.has_section(name):
            for key, raw in cp.items(name):
                if key not in defaults:
                    raise ConfigError(f"{source or 'config'}: unknown key [{name}] {key}")
                vals[key] = _parse_value(raw, defaults[key])
        sections[name] = vals
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"{source or 'config'}: unknown section [{name}]")
    e = sections["experiment"]
    e["impulse"] = _schedule_list(e["impulse"], 2, "impulse")
    e["pulse"] = _schedule_list(e["pulse"], 3, "pulse")
    cfg = RunConfig(**sections, source=source,
                    base_dir=base_dir if base_dir is not None else Path.cwd())
    _validate(cfg)
    return cfg


def load_config(path: Optional[str] = None) -> RunConfig:
    """Load ``path``, or the packaged default configuration when ``None``."""
    if path is None:
        return parse_config(default_config_text(), source=f"<package>/{DEFAULT_CONFIG}")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), source=str(p), base_dir=p.parent)

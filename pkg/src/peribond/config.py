"""Scenario configuration: JSON schema, parsing and validation.

A scenario file is a single JSON object selecting an experiment and the
blocks it needs.  Validation runs before any computation and reports every
problem found; the CLI maps parse errors, validation errors, numerical
failures and contract failures to distinct exit codes.

Schema (keys by experiment; unknown keys are rejected):

    {
      "experiment": "energy" | "density" | "sawtooth" | "laminate" |
                    "rigidity" | "minimize" | "linearize" | "localize" |
                    "checks",
      "seed": 64-bit integer (default 0),
      "domain":   {"dim": 1|2|3, "lo": num, "hi": num, "n_cells": int,
                   "collar": num >= 0},
      "kernel":   {"family": "box" | "fractional", "delta": num,
                   "s": num in (0,1), "p": num > 1},
      "potential": {"profile": "power" | "quartic", "p": num > 1,
                    "scale": num > 0},
      "micropotential": {"tag": catalog tag, ...catalog params},
      "strain_m": num >= 1 (default 1),
      "sawtooth": {"N": int, "delta": num, "h": num | null},
      "density":  {"matrices": [[row-major d*d numbers], ...],
                   "order": int, "laminate_search": bool},
      "laminate": {"lam": [numbers in [0,1]], "n_values": [ints]},
      "rigidity": {"trials": int, "resolution": int},
      "minimize": {"datum": [row-major d*d numbers], "max_iters": int},
      "linearize": {"eps": [numbers], "field": "quadratic" | "sinusoid",
                    "support_radius": num},
      "localize": {"datum": [row-major d*d numbers], "n_values": [ints],
                   "delta_law": "1/n" | "1/n^2", "base_cells": int}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

EXPERIMENTS = ("energy", "density", "sawtooth", "laminate", "rigidity",
               "minimize", "linearize", "localize", "checks")

_TOP_KEYS = {"experiment", "seed", "domain", "kernel", "potential",
             "micropotential", "strain_m", "sawtooth", "density", "laminate",
             "rigidity", "minimize", "linearize", "localize"}

#: blocks each experiment requires beyond its own section
_REQUIRED = {
    "energy": ["domain", "kernel", "potential"],
    "density": ["potential", "density"],
    "sawtooth": ["sawtooth"],
    "laminate": ["laminate"],
    "rigidity": [],
    "minimize": ["domain", "kernel", "potential", "minimize"],
    "linearize": ["domain", "micropotential", "linearize"],
    "localize": ["domain", "potential", "localize"],
    "checks": [],
}


class ConfigError(Exception):
    """A scenario file problem; ``kind`` is "parse" or "validation"."""

    def __init__(self, kind: str, problems: list[str]):
        self.kind = kind
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class ScenarioConfig:
    experiment: str
    seed: int
    raw: dict = field(repr=False)

    def block(self, name: str, default=None) -> Any:
        return self.raw.get(name, default)


def _check_number(problems, block, name, key, lo=None, hi=None,
                  strict_lo=False, required=True):
    if key not in block:
        if required:
            problems.append(f"{name}.{key} is required")
        return None
    v = block[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        problems.append(f"{name}.{key} must be a number")
        return None
    if lo is not None and (v <= lo if strict_lo else v < lo):
        problems.append(f"{name}.{key} must be {'>' if strict_lo else '>='} {lo}")
    if hi is not None and v > hi:
        problems.append(f"{name}.{key} must be <= {hi}")
    return v


def _check_int(problems, block, name, key, lo=None, required=True):
    v = _check_number(problems, block, name, key, lo=lo, required=required)
    if v is not None and int(v) != v:
        problems.append(f"{name}.{key} must be an integer")
        return None
    return None if v is None else int(v)


def _validate_domain(problems, dom):
    d = _check_int(problems, dom, "domain", "dim", lo=1)
    if d is not None and d not in (1, 2, 3):
        problems.append("domain.dim must be 1, 2 or 3")
    lo = _check_number(problems, dom, "domain", "lo")
    hi = _check_number(problems, dom, "domain", "hi")
    if lo is not None and hi is not None and hi <= lo:
        problems.append("domain.hi must exceed domain.lo")
    _check_int(problems, dom, "domain", "n_cells", lo=2)
    _check_number(problems, dom, "domain", "collar", lo=0.0, required=False)


def _validate_kernel(problems, kern):
    fam = kern.get("family")
    if fam not in ("box", "fractional"):
        problems.append("kernel.family must be 'box' or 'fractional'")
    elif fam == "box":
        _check_number(problems, kern, "kernel", "delta", lo=0.0, strict_lo=True)
    else:
        s = _check_number(problems, kern, "kernel", "s", lo=0.0, hi=1.0)
        if s is not None and not (0.0 < s < 1.0):
            problems.append("kernel.s must lie strictly in (0, 1)")
        _check_number(problems, kern, "kernel", "p", lo=1.0, strict_lo=True)


def _validate_potential(problems, pot):
    prof = pot.get("profile", "power")
    if prof not in ("power", "quartic"):
        problems.append("potential.profile must be 'power' or 'quartic'")
    if prof == "power":
        _check_number(problems, pot, "potential", "p", lo=1.0, strict_lo=True)
        _check_number(problems, pot, "potential", "scale", lo=0.0,
                      strict_lo=True, required=False)


def _validate_micropotential(problems, mp):
    from .materials import CATALOG_TAGS
    tag = mp.get("tag")
    if tag not in CATALOG_TAGS:
        problems.append(f"micropotential.tag must be one of {sorted(CATALOG_TAGS)}")


def _validate_matrices(problems, block, name, key):
    mats = block.get(key)
    if not isinstance(mats, list) or not mats:
        problems.append(f"{name}.{key} must be a non-empty list")
        return
    for i, m in enumerate(mats):
        if not isinstance(m, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in m):
            problems.append(f"{name}.{key}[{i}] must be a list of numbers")
        elif len(m) not in (1, 4, 9):
            problems.append(f"{name}.{key}[{i}] must have d*d entries for d in 1..3")


def _validate_matrix(problems, block, name, key):
    m = block.get(key)
    if not isinstance(m, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in m):
        problems.append(f"{name}.{key} must be a flat list of d*d numbers")
    elif len(m) not in (1, 4, 9):
        problems.append(f"{name}.{key} must have d*d entries for d in 1..3")


def parse_config(path: str) -> ScenarioConfig:
    """Parse a scenario file; raises ConfigError("parse", ...) on bad JSON."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("parse", [f"cannot read config: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("parse", [f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError("parse", ["config must be a JSON object"])
    exp = data.get("experiment")
    seed = data.get("seed", 0)
    return ScenarioConfig(str(exp), int(seed) if isinstance(seed, int) else 0, data)


def validate_config(cfg: ScenarioConfig) -> None:
    """Full schema validation; raises ConfigError("validation", ...) listing
    every problem found."""
    problems: list[str] = []
    raw = cfg.raw
    if cfg.experiment not in EXPERIMENTS:
        problems.append(f"experiment must be one of {EXPERIMENTS}")
        raise ConfigError("validation", problems)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown top-level keys: {sorted(unknown)}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not (0 <= seed < 2**64):
        problems.append("seed must be a 64-bit unsigned integer")
    m = raw.get("strain_m", 1)
    if not isinstance(m, (int, float)) or isinstance(m, bool) or m < 1:
        problems.append("strain_m must be a number >= 1")

    for name in _REQUIRED[cfg.experiment]:
        if name not in raw:
            problems.append(f"experiment '{cfg.experiment}' requires block '{name}'")

    if "domain" in raw:
        _validate_domain(problems, raw["domain"])
    if "kernel" in raw:
        _validate_kernel(problems, raw["kernel"])
    if "potential" in raw:
        _validate_potential(problems, raw["potential"])
    if "micropotential" in raw:
        _validate_micropotential(problems, raw["micropotential"])

    if "sawtooth" in raw:
        blk = raw["sawtooth"]
        N = _check_int(problems, blk, "sawtooth", "N", lo=1)
        delta = _check_number(problems, blk, "sawtooth", "delta", lo=0.0, strict_lo=True)
        h = _check_number(problems, blk, "sawtooth", "h", lo=0.0,
                          strict_lo=True, required=False)
        if delta is not None and h is not None and h > delta / 16.0:
            problems.append("sawtooth.h must be <= delta/16")
    if "density" in raw:
        blk = raw["density"]
        _validate_matrices(problems, blk, "density", "matrices")
        _check_int(problems, blk, "density", "order", lo=8, required=False)
    if "laminate" in raw:
        blk = raw["laminate"]
        lam = blk.get("lam")
        if not isinstance(lam, list) or not lam or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                and 0.0 <= x <= 1.0 for x in lam):
            problems.append("laminate.lam must be a list of numbers in [0, 1]")
        nv = blk.get("n_values")
        if not isinstance(nv, list) or not nv or not all(
                isinstance(x, int) and x >= 1 for x in nv):
            problems.append("laminate.n_values must be a list of integers >= 1")
    if "rigidity" in raw:
        blk = raw["rigidity"]
        _check_int(problems, blk, "rigidity", "trials", lo=1, required=False)
        _check_int(problems, blk, "rigidity", "resolution", lo=8, required=False)
    if "minimize" in raw:
        _validate_matrix(problems, raw["minimize"], "minimize", "datum")
        _check_int(problems, raw["minimize"], "minimize", "max_iters", lo=1,
                   required=False)
    if "linearize" in raw:
        blk = raw["linearize"]
        eps = blk.get("eps")
        if not isinstance(eps, list) or len(eps) < 2 or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0
                for x in eps):
            problems.append("linearize.eps must be a list of >= 2 positive numbers")
        elif any(b >= a for a, b in zip(eps, eps[1:])):
            problems.append("linearize.eps must be strictly decreasing")
        if blk.get("field", "quadratic") not in ("quadratic", "sinusoid"):
            problems.append("linearize.field must be 'quadratic' or 'sinusoid'")
        _check_number(problems, blk, "linearize", "support_radius", lo=0.0,
                      strict_lo=True, required=False)
    if "localize" in raw:
        blk = raw["localize"]
        _validate_matrix(problems, blk, "localize", "datum")
        nv = blk.get("n_values")
        if not isinstance(nv, list) or not nv or not all(
                isinstance(x, int) and x >= 1 for x in nv):
            problems.append("localize.n_values must be a list of integers >= 1")
        if blk.get("delta_law", "1/n") not in ("1/n", "1/n^2"):
            problems.append("localize.delta_law must be '1/n' or '1/n^2'")
        _check_int(problems, blk, "localize", "base_cells", lo=8, required=False)

    if problems:
        raise ConfigError("validation", problems)

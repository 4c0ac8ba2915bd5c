"""TOML run configurations and problem definitions.

A problem file looks like::

    schema = 1

    [problem]
    lagrangian = "elastica"          # elastica, double-well-a, double-well-b, quadratic, rod
    interval = [0.0, 1.0]
    dirichlet_a = []                 # 1-based component indices
    dirichlet_b = []
    parameters = { M = 1.0, K = 0.5 }

    [path]
    kind = "shoot"                   # constant, shoot, table, double-well
    u0 = 2.91044

A run configuration carries the subcommand, its options and, for field runs,
an embedded problem table; it is what ``--dump-config`` writes.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import ConfigurationError
from .jacobi import Tolerances
from .lagrangians import Lagrangian, QuadraticLagrangian, double_well_a, double_well_b, elastica, reduced_rod_lagrangian
from .problem import DEFAULT_NODES, ExtremalPath, Problem

SCHEMA = 1
RUN_KEYS = {"schema", "command", "format", "output", "jobs", "strict", "oracle", "pi2_units",
            "tolerances", "options", "problem", "path"}
PROBLEM_KEYS = {"lagrangian", "interval", "dirichlet_a", "dirichlet_b", "parameters", "dimension"}
PATH_KEYS = {"kind", "value", "u0", "slope", "seed", "nodes", "x", "u", "du", "length", "end_slope",
             "variant"}
TOLERANCE_KEYS = {"degenerate", "dip", "extremal", "root_xtol"}
LAGRANGIAN_PARAMS = {
    "elastica": {"M", "K"},
    "double-well-a": set(),
    "double-well-b": set(),
    "quadratic": {"P", "Q", "R", "x"},
    "rod": {"alpha", "beta"},
}


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _check_schema(doc: dict, where: str) -> None:
    if doc.get("schema") != SCHEMA:
        raise ConfigurationError(f"{where}: expected 'schema = {SCHEMA}', got {doc.get('schema')!r}")


def read_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc


# ---------------------------------------------------------------------------
# problems


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{name} must be a number")
    return float(value)


def _tabulated(xs: np.ndarray, values, name: str):
    ys = np.asarray(values, dtype=float)
    if ys.shape != xs.shape:
        raise ConfigurationError(f"tabulated {name} must have one value per x node")
    return lambda t: np.interp(t, xs, ys)


def build_lagrangian(name: str, params: dict) -> Lagrangian:
    if name not in LAGRANGIAN_PARAMS:
        raise ConfigurationError(f"unknown lagrangian {name!r}; choose from {sorted(LAGRANGIAN_PARAMS)}")
    _reject_unknown(params, LAGRANGIAN_PARAMS[name], f"parameters of {name}")
    if name == "elastica":
        return elastica(_number(params.get("M", 1.0), "M"), _number(params.get("K", 0.0), "K"))
    if name == "double-well-a":
        return double_well_a()
    if name == "double-well-b":
        return double_well_b()
    if name == "rod":
        return reduced_rod_lagrangian(_number(params["alpha"], "alpha"), _number(params["beta"], "beta"))
    if "P" not in params:
        raise ConfigurationError("quadratic lagrangian needs P")
    if "x" in params:
        # scalar coefficients tabulated on x nodes, linearly interpolated
        xs = np.asarray(params["x"], dtype=float)
        if xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ConfigurationError("tabulated x must be strictly increasing with at least 2 nodes")
        blocks = [_tabulated(xs, params[k], k) if k in params else None for k in "PQR"]
        return QuadraticLagrangian(*blocks)
    return QuadraticLagrangian(params["P"], params.get("Q"), params.get("R"))


def build_problem(table: dict) -> Problem:
    _reject_unknown(table, PROBLEM_KEYS, "[problem]")
    if "lagrangian" not in table:
        raise ConfigurationError("[problem] needs a lagrangian name")
    lag = build_lagrangian(table["lagrangian"], dict(table.get("parameters", {})))
    if "dimension" in table and int(table["dimension"]) != lag.dim:
        raise ConfigurationError(f"dimension {table['dimension']} does not match lagrangian "
                                 f"dimension {lag.dim}")
    interval = table.get("interval", [0.0, 1.0])
    if len(interval) != 2:
        raise ConfigurationError("interval must be [a, b]")
    idx = {}
    for end in ("dirichlet_a", "dirichlet_b"):
        items = table.get(end, [])
        if not isinstance(items, list) or any(isinstance(k, bool) or not isinstance(k, int) for k in items):
            raise ConfigurationError(f"{end} must be a list of 1-based integers")
        idx[end] = items
    return Problem(lag, _number(interval[0], "a"), _number(interval[1], "b"), idx["dirichlet_a"],
                   idx["dirichlet_b"])


def build_path(table: dict, problem: Problem) -> ExtremalPath:
    from . import scalar

    _reject_unknown(table, PATH_KEYS, "[path]")
    kind = table.get("kind", "constant")
    nodes = int(table.get("nodes", DEFAULT_NODES))
    if kind == "constant":
        value = table.get("value", [0.0] * problem.dim)
        return ExtremalPath.constant(value, problem.a, problem.b, nodes)
    if kind == "shoot":
        if "u0" not in table:
            raise ConfigurationError("shoot path needs u0")
        slope = table.get("slope")
        return scalar.shoot_extremal(problem.lagrangian, problem.a, problem.b, _number(table["u0"], "u0"),
                                     None if slope is None else _number(slope, "slope"), nodes,
                                     _number(table.get("seed", 0.0), "seed"))
    if kind == "table":
        x = np.asarray(table.get("x", []), dtype=float)
        return ExtremalPath(x, np.asarray(table.get("u", []), dtype=float),
                            np.asarray(table.get("du", []), dtype=float))
    if kind == "double-well":
        variant = table.get("variant", "a")
        path = scalar.double_well_extremal(variant, problem.b - problem.a, table.get("end_slope"), nodes,
                                           problem.a)
        return path
    raise ConfigurationError(f"unknown path kind {kind!r}")


def load_problem(source: str | Path | dict) -> tuple[Problem, ExtremalPath, dict]:
    """Problem and candidate path from a file name or an already parsed document."""
    doc = read_toml(source) if not isinstance(source, dict) else source
    _check_schema(doc, str(source) if not isinstance(source, dict) else "problem")
    _reject_unknown(doc, {"schema", "problem", "path"}, "problem file")
    if "problem" not in doc:
        raise ConfigurationError("problem file needs a [problem] table")
    problem = build_problem(doc["problem"])
    path = build_path(doc.get("path", {}), problem)
    return problem, path, doc


# ---------------------------------------------------------------------------
# run configurations


@dataclass
class RunConfig:
    command: list[str]
    options: dict[str, Any] = field(default_factory=dict)
    tolerances: Tolerances = field(default_factory=Tolerances)
    format: str = "report"
    output: str = "-"
    jobs: int = 1
    strict: bool = False
    oracle: bool = False
    pi2_units: bool = False
    problem: dict | None = None

    def __post_init__(self):
        if self.format not in ("report", "csv"):
            raise ConfigurationError(f"format must be report or csv, got {self.format!r}")
        if int(self.jobs) < 1:
            raise ConfigurationError("jobs must be at least 1")
        for name in ("degenerate", "dip", "extremal", "root_xtol"):
            if getattr(self.tolerances, name) <= 0:
                raise ConfigurationError(f"tolerance {name} must be positive")

    def to_document(self) -> dict:
        doc = {
            "schema": SCHEMA,
            "command": list(self.command),
            "format": self.format,
            "output": self.output,
            "jobs": int(self.jobs),
            "strict": bool(self.strict),
            "oracle": bool(self.oracle),
            "pi2_units": bool(self.pi2_units),
            "tolerances": {k: getattr(self.tolerances, k) for k in sorted(TOLERANCE_KEYS)},
            "options": {k: v for k, v in sorted(self.options.items()) if v is not None},
        }
        if self.problem is not None:
            doc["problem"] = copy.deepcopy(self.problem["problem"])
            if "path" in self.problem:
                doc["path"] = copy.deepcopy(self.problem["path"])
        return doc

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_document())

    @classmethod
    def from_document(cls, doc: dict) -> "RunConfig":
        _check_schema(doc, "run configuration")
        _reject_unknown(doc, RUN_KEYS, "run configuration")
        if "command" not in doc or not isinstance(doc["command"], list):
            raise ConfigurationError("run configuration needs a command list")
        tol = dict(doc.get("tolerances", {}))
        _reject_unknown(tol, TOLERANCE_KEYS, "[tolerances]")
        problem = None
        if "problem" in doc:
            problem = {"schema": SCHEMA, "problem": doc["problem"]}
            if "path" in doc:
                problem["path"] = doc["path"]
        return cls(command=[str(c) for c in doc["command"]], options=dict(doc.get("options", {})),
                   tolerances=Tolerances(**tol), format=doc.get("format", "report"),
                   output=doc.get("output", "-"), jobs=int(doc.get("jobs", 1)),
                   strict=bool(doc.get("strict", False)), oracle=bool(doc.get("oracle", False)),
                   pi2_units=bool(doc.get("pi2_units", False)), problem=problem)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_document(read_toml(path))

"""Experiment configuration: TOML files, validated strictly (unknown keys
are rejected), plus programmatic construction from registry presets.

Schema (all tables optional unless noted):

    [experiment]
    example = "sec43"            # registry preset; seeds operator + family
    q = [1.2, 1.1, 1.05]         # dilation parameters, each > 1
    deformation = "registry"     # "registry" | "eq17"
    connection_mode = "pure"     # "pure" | "with-constants"
    direction = "auto"           # "auto" (run the finder) or radians
    grid = "valid"               # named preset grid, or give [experiment.grid]

    [experiment.grid]
    modulus = [0.7, 1.1]
    argument = [-0.314, 0.314]   # radians
    n_modulus = 5
    n_argument = 5

    [experiment.tolerances]
    quadrature = 1e-10
    functional = 1e-9
    scale = 1.0                  # stress runs may relax everything at once

    [operator]                   # explicit coefficients instead of a preset
    coefficients = [             # one table per factor, lowest index first
        { terms = [[-2, -2.0, 0.0]] },   # (exponent, re, im) triples
        { terms = [[-1, -1.0, 0.0]] },
        { terms = [] },
    ]
    # optional per-factor positive-part level declarations:
    # levels = [ [ {level = 1, image = "log1p", terms = [[1, 1.0, 0.0]]} ], [], [] ]

    [eval]                       # points for the `eval` command
    theta = [[1.0, 0.0]]         # (re, im) pairs
    qexp = [[1.0, 0.0]]
    gamma_p = [2.5]

    [output]
    directory = "out"
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - 3.10 path
    import tomli as tomllib

from .domain import LogPoint
from .operators import FactoredDifferentialOperator
from .registry import ExampleSpec, get_example, make_grid
from .series import LaurentSeries
from .summation import get_borel_image


class ConfigError(ValueError):
    pass


_SCHEMA: Dict[str, Any] = {
    "experiment": {"example", "q", "deformation", "connection_mode", "direction",
                   "grid", "tolerances"},
    "experiment.grid": {"modulus", "argument", "n_modulus", "n_argument"},
    "experiment.tolerances": {"quadrature", "functional", "scale"},
    "operator": {"coefficients", "levels"},
    "operator.coefficients": {"terms"},
    "operator.levels": {"level", "image", "terms", "numerator", "denominator"},
    "eval": {"theta", "qexp", "gamma_p", "q"},
    "output": {"directory"},
}


@dataclass
class ExperimentConfig:
    example: Optional[str] = None
    q_values: Tuple[float, ...] = (1.2, 1.1, 1.05, 1.01)
    deformation: str = "registry"
    connection_mode: str = "pure"
    direction: Any = "auto"
    grid_name: str = "valid"
    grid: Optional[List[LogPoint]] = None
    quad_tol: float = 1e-10
    functional_tol: float = 1e-9
    tol_scale: float = 1.0
    operator: Optional[FactoredDifferentialOperator] = None
    level_spec: Optional[list] = None
    eval_points: Dict[str, list] = field(default_factory=dict)
    eval_q: Tuple[float, ...] = (1.5,)
    output_dir: str = "out"
    source_text: str = ""

    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()[:16]

    def resolve_example(self) -> Optional[ExampleSpec]:
        return get_example(self.example) if self.example else None

    def resolve_operator(self) -> FactoredDifferentialOperator:
        if self.operator is not None:
            return self.operator
        ex = self.resolve_example()
        if ex is None or ex.diff_op is None:
            raise ConfigError("no operator: give [operator] or an example preset")
        return ex.diff_op

    def resolve_grid(self) -> List[LogPoint]:
        if self.grid is not None:
            return self.grid
        ex = self.resolve_example()
        if ex is None or not ex.grids:
            raise ConfigError("no grid: give [experiment.grid] or a preset")
        name = self.grid_name if self.grid_name in ex.grids else ex.default_grid
        return ex.grids[name]


def _check_keys(table: Dict[str, Any], path: str) -> None:
    allowed = _SCHEMA.get(path)
    if allowed is None:
        raise ConfigError(f"unknown table [{path}]")
    for key, value in table.items():
        if isinstance(value, dict):
            _check_keys(value, f"{path}.{key}")
            continue
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{path}]")
        _check_nested(value, f"{path}.{key}")


def _check_nested(value: Any, path: str) -> None:
    """Descend into arrays of tables so their keys are validated too."""
    if isinstance(value, dict):
        _check_keys(value, path)
    elif isinstance(value, list):
        for item in value:
            _check_nested(item, path)


def _terms_to_series(raw: Sequence[Sequence[float]],
                     truncation: int = 64) -> LaurentSeries:
    terms = []
    for item in raw:
        if len(item) != 3:
            raise ConfigError(f"a Laurent term is (exponent, re, im); got {item!r}")
        e, re_, im_ = item
        terms.append((int(e), complex(float(re_), float(im_))))
    return LaurentSeries.from_terms(terms, truncation) if terms else LaurentSeries.zero(truncation)


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    for key in data:
        if key not in _SCHEMA:
            raise ConfigError(f"unknown table [{key}]")
        if isinstance(data[key], dict):
            _check_keys(data[key], key)

    cfg = ExperimentConfig(source_text=text)
    exp = data.get("experiment", {})
    cfg.example = exp.get("example")
    if "q" in exp:
        qs = tuple(float(q) for q in exp["q"])
        if any(q <= 1.0 for q in qs):
            raise ConfigError("every q must be > 1")
        cfg.q_values = qs
    cfg.deformation = exp.get("deformation", cfg.deformation)
    if cfg.deformation not in ("registry", "eq17"):
        raise ConfigError(f"unknown deformation route {cfg.deformation!r}")
    cfg.connection_mode = exp.get("connection_mode", cfg.connection_mode)
    if cfg.connection_mode not in ("pure", "with-constants"):
        raise ConfigError(f"unknown connection mode {cfg.connection_mode!r}")
    cfg.direction = exp.get("direction", "auto")
    if cfg.direction != "auto":
        cfg.direction = float(cfg.direction)
    grid = exp.get("grid", "valid")
    if isinstance(grid, str):
        cfg.grid_name = grid
    else:
        for need in ("modulus", "argument", "n_modulus", "n_argument"):
            if need not in grid:
                raise ConfigError(f"[experiment.grid] missing {need!r}")
        r_lo, r_hi = (float(x) for x in grid["modulus"])
        a_lo, a_hi = (float(x) for x in grid["argument"])
        if r_lo <= 0:
            raise ConfigError("grid moduli must be positive")
        cfg.grid = make_grid(r_lo, r_hi, a_lo, a_hi,
                             int(grid["n_modulus"]), int(grid["n_argument"]))
    tols = exp.get("tolerances", {})
    cfg.quad_tol = float(tols.get("quadrature", cfg.quad_tol))
    cfg.functional_tol = float(tols.get("functional", cfg.functional_tol))
    cfg.tol_scale = float(tols.get("scale", 1.0))

    if "operator" in data:
        op = data["operator"]
        if "coefficients" not in op:
            raise ConfigError("[operator] needs a coefficients array")
        series = tuple(_terms_to_series(entry.get("terms", []))
                       for entry in op["coefficients"])
        cfg.operator = FactoredDifferentialOperator(series)
        if "levels" in op:
            from .summation import make_rational_image
            spec = []
            for fidx, factor_levels in enumerate(op["levels"]):
                decl = []
                for item in factor_levels:
                    level = int(item.get("level", 1))
                    if item.get("image"):
                        image = get_borel_image(item["image"])
                    elif "numerator" in item or "denominator" in item:
                        image = make_rational_image(
                            f"rational-f{fidx + 1}",
                            [complex(x) for x in item.get("numerator", [1.0])],
                            [complex(x) for x in item.get("denominator", [1.0])],
                            level)
                    else:
                        image = None
                    decl.append((_terms_to_series(item.get("terms", [])), level, image))
                spec.append(decl)
            cfg.level_spec = spec

    ev = data.get("eval", {})
    for key in ("theta", "qexp"):
        if key in ev:
            cfg.eval_points[key] = [complex(float(a), float(b)) for a, b in ev[key]]
    if "gamma_p" in ev:
        cfg.eval_points["gamma_p"] = [float(x) for x in ev["gamma_p"]]
    if "q" in ev:
        cfg.eval_q = tuple(float(x) for x in ev["q"])

    cfg.output_dir = data.get("output", {}).get("directory", cfg.output_dir)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config(example: str = "sec43") -> ExperimentConfig:
    cfg = ExperimentConfig(source_text=f"# built-in preset {example}\n")
    cfg.example = example
    ex = get_example(example)
    cfg.q_values = ex.q_values
    return cfg

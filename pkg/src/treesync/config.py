"""Experiment configuration files.

A configuration is a JSON document::

    {
      "name": "star-omega",
      "graph": {"n": 4, "edges": [[1, 2], [1, 3], [1, 4]], "index_base": 1},
      "omega": [20, 3, 2, 1],
      "kappa": 5.0,
      "epsilon": 0.0,
      "theta0": [0.785, 0.314, 1.571, 0.628],
      "integrator": {"dt": 0.001, "t_end": 10.0, "sample_stride": 5},
      "controller": {"enabled": true, "delta_gain": 1.1, "epsilon": 0.314},
      "output": {"dir": "out", "prefix": "star-omega"}
    }

Node labels in ``edges`` use ``index_base`` (1 by default, matching the usual
1..n naming); they are shifted to 0-based indices internally.  Only ``graph``
and ``omega`` are required.  Unknown keys are rejected.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError, GraphError
from .events import EventConfig
from .graph import FrequencyAssignment, TreeGraph, build_tree

__all__ = ["ControllerConfig", "ExperimentConfig", "load_config", "parse_config"]


@dataclass(frozen=True)
class ControllerConfig:
    enabled: bool = True
    delta_gain: float | None = None
    epsilon: float = math.pi / 10
    eta: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    edges: tuple[tuple[int, int], ...]
    omega: tuple[float, ...]
    name: str = "experiment"
    index_base: int = 1
    kappa: float | None = None
    epsilon: float = 0.0
    theta0: tuple[float, ...] | None = None
    dt: float = 1e-3
    t_end: float = 10.0
    sample_stride: int = 1
    controller: ControllerConfig | None = None
    output_dir: str | None = None
    prefix: str | None = None

    def graph(self) -> TreeGraph:
        zero_based = [(a - self.index_base, b - self.index_base) for a, b in self.edges]
        return build_tree(self.n, zero_based)

    def frequencies(self) -> FrequencyAssignment:
        return FrequencyAssignment(self.omega)

    def event_config(self) -> EventConfig:
        c = self.controller or ControllerConfig()
        return EventConfig(
            kappa=self.kappa, epsilon=c.epsilon, delta_gain=c.delta_gain, eta=c.eta, enabled=c.enabled
        )

    @property
    def label(self) -> str:
        return self.prefix or self.name

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "name": self.name,
            "graph": {"n": self.n, "edges": [list(e) for e in self.edges], "index_base": self.index_base},
            "omega": list(self.omega),
            "epsilon": self.epsilon,
            "integrator": {"dt": self.dt, "t_end": self.t_end, "sample_stride": self.sample_stride},
        }
        if self.kappa is not None:
            d["kappa"] = self.kappa
        if self.theta0 is not None:
            d["theta0"] = list(self.theta0)
        if self.controller is not None:
            c = self.controller
            block: dict[str, Any] = {"enabled": c.enabled, "epsilon": c.epsilon}
            if c.delta_gain is not None:
                block["delta_gain"] = c.delta_gain
            if c.eta is not None:
                block["eta"] = c.eta
            d["controller"] = block
        out = {}
        if self.output_dir is not None:
            out["dir"] = self.output_dir
        if self.prefix is not None:
            out["prefix"] = self.prefix
        if out:
            d["output"] = out
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


_TOP = {"name", "graph", "omega", "kappa", "epsilon", "theta0", "integrator", "controller", "output"}
_GRAPH = {"n", "edges", "index_base"}
_INTEGRATOR = {"dt", "t_end", "sample_stride"}
_CONTROLLER = {"enabled", "delta_gain", "epsilon", "eta"}
_OUTPUT = {"dir", "prefix"}


def _check_keys(obj, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


def _number(value, where: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{where}: must be positive, got {value}")
    return value


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _vector(value, where: str, length: int | None = None) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list")
    out = tuple(_number(v, f"{where}[{i}]") for i, v in enumerate(value))
    if length is not None and len(out) != length:
        raise ConfigError(f"{where}: expected {length} entries, got {len(out)}")
    return out


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON document.  Raises :class:`ConfigError` naming the field."""
    _check_keys(data, _TOP, "config")
    for key in ("graph", "omega"):
        if key not in data:
            raise ConfigError(f"config: missing required field '{key}'")

    g = data["graph"]
    _check_keys(g, _GRAPH, "graph")
    if "n" not in g or "edges" not in g:
        raise ConfigError("graph: 'n' and 'edges' are required")
    n = _integer(g["n"], "graph.n")
    base = _integer(g.get("index_base", 1), "graph.index_base")
    if base not in (0, 1):
        raise ConfigError(f"graph.index_base: must be 0 or 1, got {base}")
    if not isinstance(g["edges"], list):
        raise ConfigError("graph.edges: expected a list of [i, j] pairs")
    edges = []
    for k, e in enumerate(g["edges"]):
        if not (isinstance(e, list) and len(e) == 2):
            raise ConfigError(f"graph.edges[{k}]: expected a pair [i, j], got {e!r}")
        a, b = (_integer(v, f"graph.edges[{k}]") for v in e)
        for v in (a, b):
            if not base <= v < n + base:
                raise ConfigError(f"graph.edges[{k}]: node label {v} outside {base}..{n + base - 1}")
        edges.append((a, b))

    omega = _vector(data["omega"], "omega", n)
    if min(omega) <= 0:
        raise ConfigError("omega: all frequencies must be strictly positive")

    kw: dict[str, Any] = {}
    if "name" in data:
        if not isinstance(data["name"], str):
            raise ConfigError("name: expected a string")
        kw["name"] = data["name"]
    if "kappa" in data:
        kw["kappa"] = _number(data["kappa"], "kappa")
        if kw["kappa"] < 0:
            raise ConfigError("kappa: must be non-negative")
    if "epsilon" in data:
        kw["epsilon"] = _number(data["epsilon"], "epsilon")
        if not 0 <= kw["epsilon"] < math.pi / 2:
            raise ConfigError("epsilon: must lie in [0, pi/2)")
    if "theta0" in data:
        kw["theta0"] = _vector(data["theta0"], "theta0", n)
    if "integrator" in data:
        it = data["integrator"]
        _check_keys(it, _INTEGRATOR, "integrator")
        if "dt" in it:
            kw["dt"] = _number(it["dt"], "integrator.dt", positive=True)
        if "t_end" in it:
            kw["t_end"] = _number(it["t_end"], "integrator.t_end", positive=True)
        if "sample_stride" in it:
            kw["sample_stride"] = _integer(it["sample_stride"], "integrator.sample_stride")
            if kw["sample_stride"] < 1:
                raise ConfigError("integrator.sample_stride: must be >= 1")
    if "controller" in data:
        c = data["controller"]
        _check_keys(c, _CONTROLLER, "controller")
        ckw: dict[str, Any] = {}
        if "enabled" in c:
            if not isinstance(c["enabled"], bool):
                raise ConfigError("controller.enabled: expected true or false")
            ckw["enabled"] = c["enabled"]
        for key in ("delta_gain", "epsilon", "eta"):
            if key in c:
                ckw[key] = _number(c[key], f"controller.{key}")
        kw["controller"] = ControllerConfig(**ckw)
    if "output" in data:
        o = data["output"]
        _check_keys(o, _OUTPUT, "output")
        for key, attr in (("dir", "output_dir"), ("prefix", "prefix")):
            if key in o:
                if not isinstance(o[key], str):
                    raise ConfigError(f"output.{key}: expected a string")
                kw[attr] = o[key]

    cfg = ExperimentConfig(n=n, edges=tuple(edges), omega=omega, index_base=base, **kw)
    try:
        cfg.graph()
    except GraphError as exc:
        raise type(exc)(f"graph.edges: {exc} (0-based node indices)") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)

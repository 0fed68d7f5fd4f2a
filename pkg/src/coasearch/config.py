"""Run configuration: a TOML file, overridden by command-line flags.

Relative paths inside a config file resolve against the file's directory.
Unknown keys are rejected so that a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .scoring import DEFAULT_CRITICAL_PREDICATES, EdgeWeightMode
from .search import HeuristicMode
from .temporal import DEFAULT_EXPLORATION, MctsConfig


@dataclass(frozen=True)
class TemporalParams:
    availability: float = 1.0
    arc_availability: tuple[tuple[int, int, float], ...] = ()
    drift: float = 0.0
    horizon: int = 32
    seed: int = 0
    trials: int = 1000


@dataclass(frozen=True)
class RunConfig:
    vertices: str | None = None
    arcs: str | None = None
    vulndb: str | None = None
    reverse_arcs: bool = True
    source: int | None = None
    target: int | None = None
    heuristic: HeuristicMode = HeuristicMode.REACHABLE_SUM
    edge_weight: EdgeWeightMode = EdgeWeightMode.DST
    strict_cve: bool = True
    critical_predicates: tuple[str, ...] = DEFAULT_CRITICAL_PREDICATES
    temporal: TemporalParams | None = None
    mcts: MctsConfig | None = None
    out: str | None = None
    dot: str | None = None
    timing: bool = False

    def require_inputs(self) -> None:
        missing = [name for name in ("vertices", "arcs") if not getattr(self, name)]
        if missing:
            raise ValidationError(f"missing required input path(s): {', '.join(missing)}")

    def require_query(self) -> tuple[int, int]:
        if self.source is None or self.target is None:
            raise ValidationError("both source and target vertex ids are required")
        if self.source == self.target:
            raise ValidationError("source and target must differ")
        return self.source, self.target


_SECTIONS: dict[str, set[str]] = {
    "inputs": {"vertices", "arcs", "vulndb", "reverse_arcs"},
    "query": {"source", "target"},
    "scoring": {"edge_weight", "strict_cve", "critical_predicates"},
    "search": {"heuristic"},
    "temporal": {"availability", "arcs", "drift", "horizon", "seed", "trials"},
    "mcts": {"iterations", "exploration", "rollout_depth_cap", "seed", "strict_goal"},
    "output": {"report", "dot", "timing"},
}


def _expect(value: Any, kind: type | tuple[type, ...], key: str) -> Any:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    # bool is an int subclass; only accept it where asked for
    if not isinstance(value, kinds) or (isinstance(value, bool) and bool not in kinds):
        raise ValidationError(f"config key {key!r} has the wrong type: {value!r}")
    return value


def _path(value: Any, key: str, base: Path) -> str:
    _expect(value, str, key)
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: invalid config: {exc}") from None
    except UnicodeDecodeError:
        raise ValidationError(f"{path}: config is not valid UTF-8") from None
    return config_from_mapping(data, path.parent)


def config_from_mapping(data: dict[str, Any], base: Path = Path(".")) -> RunConfig:
    for section, body in data.items():
        if section not in _SECTIONS:
            raise ValidationError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ValidationError(f"config section [{section}] must be a table")
        unknown = set(body) - _SECTIONS[section]
        if unknown:
            raise ValidationError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")

    cfg: dict[str, Any] = {}
    inputs = data.get("inputs", {})
    for key in ("vertices", "arcs", "vulndb"):
        if key in inputs:
            cfg[key] = _path(inputs[key], f"inputs.{key}", base)
    if "reverse_arcs" in inputs:
        cfg["reverse_arcs"] = _expect(inputs["reverse_arcs"], bool, "inputs.reverse_arcs")

    query = data.get("query", {})
    for key in ("source", "target"):
        if key in query:
            cfg[key] = _expect(query[key], int, f"query.{key}")

    scoring = data.get("scoring", {})
    try:
        if "edge_weight" in scoring:
            cfg["edge_weight"] = EdgeWeightMode(scoring["edge_weight"])
        if "heuristic" in data.get("search", {}):
            cfg["heuristic"] = HeuristicMode(data["search"]["heuristic"])
    except ValueError as exc:
        raise ValidationError(f"invalid config value: {exc}") from None
    if "strict_cve" in scoring:
        cfg["strict_cve"] = _expect(scoring["strict_cve"], bool, "scoring.strict_cve")
    if "critical_predicates" in scoring:
        preds = _expect(scoring["critical_predicates"], list, "scoring.critical_predicates")
        cfg["critical_predicates"] = tuple(_expect(p, str, "scoring.critical_predicates") for p in preds)

    if "temporal" in data:
        t = data["temporal"]
        arcs = []
        for item in _expect(t.get("arcs", []), list, "temporal.arcs"):
            _expect(item, dict, "temporal.arcs")
            if set(item) != {"src", "dst", "availability"}:
                raise ValidationError("each temporal.arcs entry needs exactly src, dst, availability")
            arcs.append(
                (
                    _expect(item["src"], int, "temporal.arcs.src"),
                    _expect(item["dst"], int, "temporal.arcs.dst"),
                    float(_expect(item["availability"], (int, float), "temporal.arcs.availability")),
                )
            )
        cfg["temporal"] = TemporalParams(
            availability=float(_expect(t.get("availability", 1.0), (int, float), "temporal.availability")),
            arc_availability=tuple(arcs),
            drift=float(_expect(t.get("drift", 0.0), (int, float), "temporal.drift")),
            horizon=_expect(t.get("horizon", 32), int, "temporal.horizon"),
            seed=_expect(t.get("seed", 0), int, "temporal.seed"),
            trials=_expect(t.get("trials", 1000), int, "temporal.trials"),
        )
    if "mcts" in data:
        m = data["mcts"]
        cfg["mcts"] = MctsConfig(
            iterations=_expect(m.get("iterations", 10_000), int, "mcts.iterations"),
            exploration_c=float(_expect(m.get("exploration", DEFAULT_EXPLORATION), (int, float), "mcts.exploration")),
            rollout_depth_cap=_expect(m.get("rollout_depth_cap", 64), int, "mcts.rollout_depth_cap"),
            seed=_expect(m.get("seed", 0), int, "mcts.seed"),
            strict_goal=_expect(m.get("strict_goal", False), bool, "mcts.strict_goal"),
        )

    output = data.get("output", {})
    if "report" in output:
        cfg["out"] = _path(output["report"], "output.report", base)
    if "dot" in output:
        cfg["dot"] = _path(output["dot"], "output.dot", base)
    if "timing" in output:
        cfg["timing"] = _expect(output["timing"], bool, "output.timing")
    return RunConfig(**cfg)


def apply_overrides(config: RunConfig, **flags: Any) -> RunConfig:
    """Layer command-line values (``None`` means "not given") over ``config``."""
    simple = {
        k: v
        for k, v in flags.items()
        if v is not None and k in RunConfig.__dataclass_fields__ and k not in ("temporal", "mcts")
    }
    config = replace(config, **simple)

    temporal_flags = {
        "availability": flags.get("availability"),
        "drift": flags.get("drift"),
        "horizon": flags.get("horizon"),
        "trials": flags.get("trials"),
        "seed": flags.get("seed"),
    }
    temporal_flags = {k: v for k, v in temporal_flags.items() if v is not None}
    mcts_flags = {
        "iterations": flags.get("iterations"),
        "exploration_c": flags.get("exploration"),
        "rollout_depth_cap": flags.get("rollout_depth_cap"),
        "seed": flags.get("seed"),
        "strict_goal": flags.get("strict_goal"),
    }
    mcts_flags = {k: v for k, v in mcts_flags.items() if v is not None}
    if temporal_flags or config.temporal is not None:
        config = replace(config, temporal=replace(config.temporal or TemporalParams(), **temporal_flags))
    if mcts_flags or config.mcts is not None:
        base = config.mcts or MctsConfig()
        config = replace(config, mcts=replace(base, **mcts_flags))
    return config

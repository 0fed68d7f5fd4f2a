"""Command-line front end.

Exit status: 0 on success, 1 on any input or validation problem, 2 when the
target cannot be reached from the source.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

from .config import RunConfig, apply_overrides, load_config
from .errors import InputError, NoPathError, ValidationError
from .graph import AttackGraph, export_dot, load_graph
from .report import SCHEMA, dumps, search_section, temporal_section
from .scoring import (
    EdgeWeightMode,
    ScoreAssignment,
    VulnDb,
    WeightedGraph,
    assign_node_scores,
    edge_weights,
    load_vuln_db,
)
from .search import HeuristicMode, plan
from .temporal import TimeVaryingModel, compare

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_PATH = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for "no path"
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--vertices", help="MULVAL VERTICES.CSV")
    p.add_argument("--arcs", help="MULVAL ARCS.CSV")
    p.add_argument("--vulndb", help="vulnerability records (JSON or CSV)")
    p.add_argument(
        "--reverse-arcs",
        dest="reverse_arcs",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="reverse MULVAL child,parent arcs into attack direction (default: on)",
    )
    p.add_argument("--source", type=int)
    p.add_argument("--target", type=int)
    p.add_argument("--heuristic", type=HeuristicMode, choices=list(HeuristicMode), metavar="{reachable-sum,dp-exact}")
    p.add_argument("--edge-weight", dest="edge_weight", type=EdgeWeightMode, choices=list(EdgeWeightMode), metavar="{src,dst,avg}")
    strict = p.add_mutually_exclusive_group()
    strict.add_argument("--strict-cve", dest="strict_cve", action="store_const", const=True, default=None)
    strict.add_argument("--lenient-cve", dest="strict_cve", action="store_const", const=False)
    p.add_argument("--seed", type=int, help="seed for both the dynamics and the tree search")
    p.add_argument("--out", help="report path (stdout when omitted)")
    p.add_argument("--dot", help="write a Graphviz DOT rendering here")
    p.add_argument("--timing", action="store_const", const=True, default=None, help="include elapsed time in reports")
    return p


def _temporal_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--iterations", type=int)
    p.add_argument("--exploration", type=float)
    p.add_argument("--rollout-depth-cap", dest="rollout_depth_cap", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--availability", type=float, help="default per-step arc availability")
    p.add_argument("--drift", type=float, help="std-dev of the log-normal score drift")
    p.add_argument("--strict-goal", dest="strict_goal", action=argparse.BooleanOptionalAction, default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coasearch", description="Attack course-of-action search over MULVAL attack graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common_options()
    sub.add_parser("plan", parents=[common], help="maximum-value attack path")
    sub.add_parser("temporal", parents=[common, _temporal_options()], help="spatial plan vs MCTS under dynamics")
    sub.add_parser("export", parents=[common], help="DOT rendering of the attack graph")
    sub.add_parser("validate", parents=[common], help="check inputs and summarise them")
    return parser


def _read(path: str, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path}: {exc.strerror or exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


def _load_inputs(config: RunConfig) -> tuple[AttackGraph, VulnDb]:
    config.require_inputs()
    graph = load_graph(
        _read(config.vertices, "vertices"),
        _read(config.arcs, "arcs"),
        reverse=config.reverse_arcs,
        vertices_source=config.vertices,
        arcs_source=config.arcs,
    )
    db = VulnDb()
    if config.vulndb:
        raw = _read(config.vulndb, "vulnerability database")
        try:
            db = load_vuln_db(raw, source=config.vulndb)
        except ValidationError as exc:
            raise ValidationError(f"{config.vulndb}: {exc}") from None
    return graph, db


def _score(config: RunConfig, graph: AttackGraph, db: VulnDb) -> tuple[ScoreAssignment, WeightedGraph]:
    source, target = config.require_query()
    scores = assign_node_scores(
        graph, db, source, target, strict=config.strict_cve, critical_predicates=config.critical_predicates
    )
    return scores, edge_weights(graph, scores, config.edge_weight)


def _report_head(command: str, config: RunConfig, scores: ScoreAssignment) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "command": command,
        "inputs": {
            "vertices": config.vertices,
            "arcs": config.arcs,
            "vulndb": config.vulndb,
            "reverse_arcs": config.reverse_arcs,
        },
        "query": {"source": scores.source, "target": scores.target},
        "scoring": {
            "edge_weight": config.edge_weight.value,
            "strict_cve": config.strict_cve,
            "critical_predicates": list(config.critical_predicates),
            "warnings": list(scores.warnings),
        },
    }


def cmd_plan(config: RunConfig) -> int:
    graph, db = _load_inputs(config)
    scores, wg = _score(config, graph, db)
    result = plan(wg, scores.source, scores.target, config.heuristic)
    report = _report_head("plan", config, scores)
    report["search"] = search_section(result, graph, scores, config.timing)
    _write(config.out, dumps(report))
    if config.dot:
        _write(config.dot, export_dot(graph, scores, highlight=result.path))
    return EXIT_OK


def cmd_temporal(config: RunConfig) -> int:
    if config.temporal is None or config.mcts is None:
        raise ValidationError("the temporal command needs [temporal] and [mcts] settings")
    graph, db = _load_inputs(config)
    scores, wg = _score(config, graph, db)
    t = config.temporal
    overrides = {}
    for src, dst, p in t.arc_availability:
        if (src, dst) in overrides:
            raise ValidationError(f"availability for arc {src}->{dst} given twice")
        overrides[(src, dst)] = p
    model = TimeVaryingModel(
        wg,
        edge_availability=overrides,
        default_availability=t.availability,
        score_drift=t.drift,
        horizon=t.horizon,
        seed=t.seed,
    )
    cmp = compare(model, scores.source, scores.target, config.mcts, t.trials, config.heuristic)
    report = _report_head("temporal", config, scores)
    report["search"] = search_section(cmp.spatial, graph, scores, config.timing)
    report["temporal"] = temporal_section(cmp, model, config.mcts)
    _write(config.out, dumps(report))
    if config.dot:
        _write(config.dot, export_dot(graph, scores, highlight=cmp.mcts.recommended_path))
    return EXIT_OK


def cmd_export(config: RunConfig) -> int:
    graph, db = _load_inputs(config)
    scores = None
    if config.source is not None or config.target is not None:
        scores, _ = _score(config, graph, db)
    _write(config.dot or config.out, export_dot(graph, scores))
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    graph, db = _load_inputs(config)
    kinds = Counter(v.kind.value for v in graph.vertices.values())
    summary: dict[str, Any] = {
        "schema": SCHEMA,
        "command": "validate",
        "vertices": len(graph),
        "kinds": {k: kinds.get(k, 0) for k in ("LEAF", "AND", "OR")},
        "arcs": len(graph.arcs),
        "acyclic": graph.acyclic,
        "vulnerability_records": len(db),
    }
    if config.source is not None or config.target is not None:
        scores, _ = _score(config, graph, db)
        summary["warnings"] = list(scores.warnings)
        summary["target_reachable"] = scores.target in graph.reachable_from(scores.source)
    if config.out:
        _write(config.out, dumps(summary))
    else:
        for key, value in summary.items():
            if key != "schema":
                sys.stdout.write(f"{key}: {value}\n")
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "temporal": cmd_temporal, "export": cmd_export, "validate": cmd_validate}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    return apply_overrides(config, **flags)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.config and not Path(args.config).is_file():
            raise InputError(f"cannot read config file {args.config}")
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except NoPathError as exc:
        print(f"coasearch: no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except InputError as exc:
        print(f"coasearch: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())

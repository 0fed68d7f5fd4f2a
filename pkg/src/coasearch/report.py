"""JSON report documents written by the CLI.

All reports share the ``coasearch.report/1`` schema family; see README.md for
the field reference. Serialisation is deterministic: fixed key order, no
wall-clock data unless timing was requested.
"""

from __future__ import annotations

import json
from typing import Any

from .graph import AttackGraph
from .scoring import ScoreAssignment
from .search import SearchResult
from .temporal import Comparison, MctsConfig, TimeVaryingModel, ValueEstimate

SCHEMA = "coasearch.report/1"


def search_section(result: SearchResult, graph: AttackGraph, scores: ScoreAssignment, timing: bool) -> dict[str, Any]:
    section: dict[str, Any] = {
        "heuristic_mode": result.mode,
        "path": list(result.path),
        "total_value": result.total_value,
        "expanded_count": result.expanded_count,
        "steps": [
            {
                "vertex": s.vertex,
                "label": graph.vertices[s.vertex].label,
                "score": scores.values[s.vertex],
                "g": s.g,
                "f": s.f,
            }
            for s in result.per_step
        ],
    }
    if timing:
        section["elapsed_seconds"] = result.elapsed
    return section


def estimate_dict(est: ValueEstimate) -> dict[str, Any]:
    return {
        "mean": est.mean,
        "std_error": est.std_error,
        "trials": est.trials,
        "success_rate": est.success_rate,
    }


def temporal_section(cmp: Comparison, model: TimeVaryingModel, config: MctsConfig) -> dict[str, Any]:
    return {
        "model": {
            "default_availability": model.default_availability,
            "arc_availability": [
                {"src": s, "dst": d, "availability": p} for (s, d), p in sorted(model.edge_availability.items())
            ],
            "score_drift": model.score_drift,
            "horizon": model.horizon,
            "seed": model.seed,
        },
        "mcts_config": {
            "iterations": config.iterations,
            "exploration": config.exploration_c,
            "rollout_depth_cap": config.rollout_depth_cap,
            "seed": config.seed,
            "strict_goal": config.strict_goal,
        },
        "spatial": {
            "path": list(cmp.spatial.path),
            "static_value": cmp.spatial.total_value,
            "estimate": estimate_dict(cmp.spatial_estimate),
        },
        "mcts": {
            "path": list(cmp.mcts.recommended_path),
            "expected_value": cmp.mcts.expected_value,
            "root_visits": cmp.mcts.root_visits,
            "actions": [
                {"src": s, "dst": d, "visits": st.visits, "mean_reward": st.mean_reward}
                for (s, d), st in cmp.mcts.per_action_stats.items()
            ],
            "estimate": estimate_dict(cmp.mcts_estimate),
        },
        "winner": cmp.winner,
        "difference": cmp.difference,
    }


def dumps(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"

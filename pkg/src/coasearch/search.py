"""Maximum-value attack path search.

The planner is a best-first branch-and-bound over simple paths. A state is a
partial path from the source; its priority is ``f = g + h`` where ``g`` is the
attack value collected so far and ``h`` an optimistic estimate of what is
still collectable on the way to the target. Because the objective is
maximised, "optimistic" means ``h`` never under-states the best remainder.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .errors import (
    DegenerateQueryError,
    GuardExceededError,
    NoPathError,
    UnsupportedInputError,
    ValidationError,
    VertexLookupError,
)
from .scoring import WeightedGraph

UNREACHABLE = -math.inf
DEFAULT_BRUTE_FORCE_LIMIT = 20


class HeuristicMode(str, Enum):
    REACHABLE_SUM = "reachable-sum"
    DP_EXACT = "dp-exact"


@dataclass(frozen=True)
class HeuristicTable:
    h: Mapping[int, float]
    mode: HeuristicMode
    target: int

    def __getitem__(self, vid: int) -> float:
        return self.h[vid]

    def reachable(self, vid: int) -> bool:
        return self.h[vid] != UNREACHABLE


@dataclass(frozen=True)
class StepRecord:
    vertex: int
    g: float
    f: float


@dataclass(frozen=True)
class SearchResult:
    path: tuple[int, ...]
    total_value: float
    per_step: tuple[StepRecord, ...]
    expanded_count: int
    mode: str
    elapsed: float = field(default=0.0, compare=False)


def heuristic_reachable_sum(wg: WeightedGraph, target: int) -> HeuristicTable:
    """Sum of the values still collectable anywhere downstream of each vertex.

    For vertex ``v`` this adds, over every vertex ``u`` reachable from ``v``,
    the largest weight of an arc entering ``u`` from the reachable region.
    With destination weighting that is exactly the node value of ``u``.
    Vertices that cannot reach ``target`` get ``UNREACHABLE``.

    Sums of more than one term are nudged up by the worst-case rounding of a
    front-to-back float sum, so no path's computed ``g`` can exceed the bound.
    """
    graph = wg.graph
    if target not in graph:
        raise VertexLookupError(f"vertex {target} is not in the graph")
    co_reachable = graph.can_reach(target)
    h: dict[int, float] = {}
    for v in graph.vertices:
        if v == target:
            h[v] = 0.0
        elif v not in co_reachable:
            h[v] = UNREACHABLE
        else:
            region = graph.reachable_from(v)
            allowed = region | {v}
            gains = []
            for u in region:
                if u == v:
                    continue
                gains.append(max(wg.weight[(p, u)] for p in graph.predecessors[u] if p in allowed))
            h[v] = _upper_sum(gains)
    return HeuristicTable(h, HeuristicMode.REACHABLE_SUM, target)


def _upper_sum(terms: list[float]) -> float:
    total = math.fsum(terms)
    if len(terms) <= 1:
        return total
    return math.nextafter(total * (1.0 + len(terms) * 2.0**-52), math.inf)


def heuristic_dp_exact(wg: WeightedGraph, target: int) -> HeuristicTable:
    """Exact best remaining value per vertex on an acyclic graph.

    Each entry is the maximum over paths to ``target`` of the path value
    accumulated front to back, the same order the planner accumulates ``g``,
    so ``h[source]`` matches the planner's optimum bit for bit.
    """
    graph = wg.graph
    if target not in graph:
        raise VertexLookupError(f"vertex {target} is not in the graph")
    order = graph.topological_order
    if order is None:
        raise UnsupportedInputError("exact heuristic requires an acyclic graph")
    position = {v: i for i, v in enumerate(order)}
    co_reachable = graph.can_reach(target)
    h: dict[int, float] = {}
    for v in graph.vertices:
        if v == target:
            h[v] = 0.0
            continue
        if v not in co_reachable:
            h[v] = UNREACHABLE
            continue
        best = {v: 0.0}
        for u in order[position[v] + 1 : position[target] + 1]:
            if u not in co_reachable:
                continue
            cands = [best[p] + wg.weight[(p, u)] for p in graph.predecessors[u] if p in best]
            if cands:
                best[u] = max(cands)
        h[v] = best[target]
    return HeuristicTable(h, HeuristicMode.DP_EXACT, target)


def build_heuristic(wg: WeightedGraph, target: int, mode: HeuristicMode | str) -> HeuristicTable:
    mode = HeuristicMode(mode)
    if mode is HeuristicMode.DP_EXACT:
        return heuristic_dp_exact(wg, target)
    return heuristic_reachable_sum(wg, target)


def validate_path(wg: WeightedGraph, path: Sequence[int]) -> None:
    if not path:
        raise ValidationError("path is empty")
    for v in path:
        if v not in wg.graph:
            raise ValidationError(f"path vertex {v} is not in the graph")
    if len(set(path)) != len(path):
        raise ValidationError(f"path revisits a vertex: {list(path)}")
    for u, v in zip(path, path[1:]):
        if not wg.graph.has_arc(u, v):
            raise ValidationError(f"path step {u}->{v} is not an arc of the graph")


def path_value(wg: WeightedGraph, path: Sequence[int]) -> float:
    """Attack value of a simple path, summed front to back."""
    validate_path(wg, path)
    g = 0.0
    for u, v in zip(path, path[1:]):
        g += wg.weight[(u, v)]
    return g


def _check_query(wg: WeightedGraph, source: int, target: int) -> None:
    for vid in (source, target):
        if vid not in wg.graph:
            raise VertexLookupError(f"vertex {vid} is not in the graph")
    if source == target:
        raise DegenerateQueryError("source and target must differ")


def _slack(best: float) -> float:
    # pruning margin so rounding in g + h can never discard an optimum
    return 1e-9 * max(1.0, abs(best))


def _steps(wg: WeightedGraph, path: Sequence[int], h: Mapping[int, float] | None) -> tuple[StepRecord, ...]:
    steps = []
    g = 0.0
    for i, v in enumerate(path):
        if i:
            g += wg.weight[(path[i - 1], v)]
        steps.append(StepRecord(v, g, g + h[v] if h is not None else g))
    return tuple(steps)


def plan(
    wg: WeightedGraph,
    source: int,
    target: int,
    mode: HeuristicMode | str = HeuristicMode.REACHABLE_SUM,
    heuristic: HeuristicTable | None = None,
    trace: list[float] | None = None,
) -> SearchResult:
    """Best-first search for the maximum-value simple path source -> target.

    Ties between equally valued complete paths resolve to the
    lexicographically smallest vertex sequence. Popped ``f`` values are
    appended to ``trace`` when one is given.
    """
    started = time.perf_counter()
    _check_query(wg, source, target)
    table = heuristic if heuristic is not None else build_heuristic(wg, target, mode)
    h = table.h
    if h[source] == UNREACHABLE:
        raise NoPathError(source, target)

    best_value = -math.inf
    best_path: tuple[int, ...] | None = None
    expanded = 0
    # (-f, -g, vertex, path, visited); path makes every key unique
    frontier = [(-h[source], -0.0, source, (source,), frozenset((source,)))]
    while frontier:
        neg_f, neg_g, v, path, visited = heapq.heappop(frontier)
        f = -neg_f
        if f < best_value - _slack(best_value):
            break
        if trace is not None:
            trace.append(f)
        expanded += 1
        g = -neg_g
        for u, w in wg.out_arcs(v):
            if u in visited or h[u] == UNREACHABLE:
                continue
            g2 = g + w
            if u == target:
                cand = path + (u,)
                if g2 > best_value or (g2 == best_value and cand < best_path):
                    best_value, best_path = g2, cand
                continue
            f2 = g2 + h[u]
            if f2 < best_value - _slack(best_value):
                continue
            heapq.heappush(frontier, (-f2, -g2, u, path + (u,), visited | {u}))

    if best_path is None:
        raise NoPathError(source, target)
    return SearchResult(
        path=best_path,
        total_value=best_value,
        per_step=_steps(wg, best_path, h),
        expanded_count=expanded,
        mode=table.mode.value,
        elapsed=time.perf_counter() - started,
    )


def brute_force_optimal(
    wg: WeightedGraph, source: int, target: int, max_vertices: int = DEFAULT_BRUTE_FORCE_LIMIT
) -> SearchResult:
    """Enumerate every simple source -> target path and keep the best.

    Exists as an independent check on :func:`plan`; refuses graphs larger
    than ``max_vertices``.
    """
    started = time.perf_counter()
    _check_query(wg, source, target)
    if len(wg.graph) > max_vertices:
        raise GuardExceededError(
            f"brute force refuses graphs above {max_vertices} vertices (got {len(wg.graph)})"
        )
    best_value = -math.inf
    best_path: list[int] | None = None
    visited_count = 0
    path = [source]
    on_path = {source}

    def walk(v: int, g: float) -> None:
        nonlocal best_value, best_path, visited_count
        visited_count += 1
        if v == target:
            if g > best_value or (g == best_value and path < best_path):
                best_value, best_path = g, list(path)
            return
        for u, w in wg.out_arcs(v):
            if u in on_path:
                continue
            path.append(u)
            on_path.add(u)
            walk(u, g + w)
            path.pop()
            on_path.discard(u)

    walk(source, 0.0)
    if best_path is None:
        raise NoPathError(source, target)
    return SearchResult(
        path=tuple(best_path),
        total_value=best_value,
        per_step=_steps(wg, best_path, None),
        expanded_count=visited_count,
        mode="brute-force",
        elapsed=time.perf_counter() - started,
    )

"""Graph builders and brute-force oracles shared by the test modules."""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Sequence

from coasearch.graph import Arc, Vertex, build_graph
from coasearch.scoring import ScoreAssignment, WeightedGraph, edge_weights


def make_wg(
    n: int,
    arcs: Sequence[tuple[int, int]],
    values: dict[int, float],
    source: int,
    target: int,
    mode: str = "dst",
) -> WeightedGraph:
    graph = build_graph([Vertex(i, f"n{i}", "OR") for i in range(1, n + 1)], [Arc(s, d) for s, d in arcs])
    full = {i: values.get(i, 0.0) for i in range(1, n + 1)}
    return edge_weights(graph, ScoreAssignment(full, source, target), mode)


def diamond() -> WeightedGraph:
    """S=1, A=2, B=3, T=4 with w(S,A)=3.822, w(S,B)=1.5, w(*,T)=100."""
    return make_wg(4, [(1, 2), (2, 4), (1, 3), (3, 4)], {1: 0.01, 2: 3.822, 3: 1.5, 4: 100.0}, 1, 4)


def random_instance(
    rnd: random.Random,
    sizes: tuple[int, int] = (6, 12),
    density: tuple[float, float] = (0.2, 0.5),
    acyclic: bool = False,
) -> tuple[WeightedGraph, int, int]:
    """Random digraph with a reachable target; source 0.01, target 100, others uniform in [0, 10]."""
    while True:
        n = rnd.randint(*sizes)
        d = rnd.uniform(*density)
        order = list(range(1, n + 1))
        rnd.shuffle(order)
        rank = {v: i for i, v in enumerate(order)}
        arcs = [
            (u, v)
            for u, v in itertools.permutations(range(1, n + 1), 2)
            if (not acyclic or rank[u] < rank[v]) and rnd.random() < d
        ]
        if acyclic:
            source, target = order[0], order[-1]
        else:
            source, target = rnd.sample(range(1, n + 1), 2)
        values = {v: rnd.uniform(0.0, 10.0) for v in range(1, n + 1)}
        values[source], values[target] = 0.01, 100.0
        wg = make_wg(n, arcs, values, source, target)
        if target in wg.graph.reachable_from(source):
            return wg, source, target


def simple_paths(wg: WeightedGraph, start: int, target: int) -> Iterator[tuple[tuple[int, ...], float]]:
    """Every simple start->target path with its front-to-back value."""
    stack = [((start,), 0.0)]
    while stack:
        path, g = stack.pop()
        v = path[-1]
        if v == target:
            yield path, g
            continue
        for u in wg.graph.successors[v]:
            if u not in path:
                stack.append((path + (u,), g + wg.weight[(v, u)]))


def best_simple_path_value(wg: WeightedGraph, start: int, target: int) -> float | None:
    values = [g for _, g in simple_paths(wg, start, target)]
    return max(values) if values else None


def enumerate_episodes(model, path: Sequence[int], target: int | None = None, strict_goal: bool = False):
    """Exact episode distribution for following ``path`` (drift must be 0).

    Branches on every up/down outcome of the arc the attacker is waiting on
    at each step. Returns (expected value, success probability).
    """
    assert model.score_drift == 0.0
    arcs = list(zip(path, path[1:]))
    goal_ok = target is None or path[-1] == target
    expected = 0.0
    success = 0.0

    def walk(k: int, clock: int, acc: float, prob: float) -> None:
        nonlocal expected, success
        if prob == 0.0:
            return
        if k == len(arcs) or clock == model.horizon:
            ok = k == len(arcs) and goal_ok
            expected += prob * (acc if ok or not strict_goal else 0.0)
            success += prob * ok
            return
        u, v = arcs[k]
        p = model.availability(u, v)
        walk(k + 1, clock + 1, acc + model.base.weight[(u, v)], prob * p)
        walk(k, clock + 1, acc, prob * (1.0 - p))

    walk(0, 0, 0.0, 1.0)
    return expected, success

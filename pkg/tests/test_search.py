import math
import random

import pytest

from coasearch.errors import (
    DegenerateQueryError,
    GuardExceededError,
    NoPathError,
    UnsupportedInputError,
    ValidationError,
    VertexLookupError,
)
from coasearch.scoring import WeightedGraph, edge_weights
from coasearch.search import (
    UNREACHABLE,
    HeuristicMode,
    brute_force_optimal,
    heuristic_dp_exact,
    heuristic_reachable_sum,
    path_value,
    plan,
)

from _support import best_simple_path_value, diamond, make_wg, random_instance


def chain():
    return make_wg(3, [(1, 2), (2, 3)], {1: 0.01, 2: 3.822, 3: 100.0}, 1, 3)


def test_reachable_sum_chain():
    h = heuristic_reachable_sum(chain(), 3)
    assert h[1] == pytest.approx(103.822, abs=1e-12)
    assert h[2] == 100.0
    assert h[3] == 0.0


def test_reachable_sum_isolated_vertex_is_unreachable():
    wg = make_wg(4, [(1, 2), (2, 3)], {1: 0.01, 2: 3.822, 3: 100.0, 4: 7.0}, 1, 3)
    h = heuristic_reachable_sum(wg, 3)
    assert h[4] == UNREACHABLE
    assert not h.reachable(4)
    assert math.isinf(h[4]) and h[4] < 0


def test_reachable_sum_counts_whole_downstream_region():
    # 1 -> 2 -> 4, 1 -> 3 -> 4, plus a side branch 2 -> 5 that never reaches 4
    wg = make_wg(5, [(1, 2), (1, 3), (2, 4), (3, 4), (2, 5)], {1: 0.01, 2: 2.0, 3: 1.5, 4: 100.0, 5: 9.0}, 1, 4)
    h = heuristic_reachable_sum(wg, 4)
    assert h[1] == pytest.approx(2.0 + 1.5 + 100.0 + 9.0)
    assert h[2] == pytest.approx(100.0 + 9.0)
    assert h[5] == UNREACHABLE


def test_dp_exact_diamond():
    h = heuristic_dp_exact(diamond(), 4)
    assert h[1] == pytest.approx(103.822, abs=1e-12)
    assert h[4] == 0.0
    assert h.mode is HeuristicMode.DP_EXACT


def test_dp_exact_rejects_cycles():
    wg = make_wg(3, [(1, 2), (2, 3), (3, 1)], {1: 0.01, 3: 100.0}, 1, 3)
    with pytest.raises(UnsupportedInputError):
        heuristic_dp_exact(wg, 3)
    with pytest.raises(UnsupportedInputError):
        plan(wg, 1, 3, HeuristicMode.DP_EXACT)


def test_plan_diamond():
    result = plan(diamond(), 1, 4)
    assert result.path == (1, 2, 4)
    assert result.total_value == pytest.approx(103.822, abs=1e-12)
    assert [s.vertex for s in result.per_step] == [1, 2, 4]
    assert result.per_step[-1].g == result.total_value == result.per_step[-1].f
    assert result.per_step[0].g == 0.0
    assert result.mode == "reachable-sum"


def test_plan_single_arc():
    wg = make_wg(2, [(1, 2)], {1: 0.01, 2: 100.0}, 1, 2)
    result = plan(wg, 1, 2)
    assert result.path == (1, 2)
    assert result.total_value == 100.0


def test_plan_errors():
    wg = make_wg(4, [(1, 2), (3, 4)], {1: 0.01, 4: 100.0}, 1, 4)
    with pytest.raises(NoPathError):
        plan(wg, 1, 4)
    with pytest.raises(NoPathError):
        brute_force_optimal(wg, 1, 4)
    with pytest.raises(VertexLookupError):
        plan(wg, 1, 99)
    with pytest.raises(DegenerateQueryError):
        plan(wg, 1, 1)


def test_plan_dp_exact_mode_matches():
    wg = diamond()
    assert plan(wg, 1, 4, "dp-exact").path == plan(wg, 1, 4).path


def test_brute_force_matches_diamond():
    a, b = plan(diamond(), 1, 4), brute_force_optimal(diamond(), 1, 4)
    assert (a.path, a.total_value) == (b.path, b.total_value)
    assert [s.g for s in a.per_step] == [s.g for s in b.per_step]


def test_brute_force_guard():
    wg = make_wg(21, [(i, i + 1) for i in range(1, 21)], {1: 0.01, 21: 100.0}, 1, 21)
    with pytest.raises(GuardExceededError):
        brute_force_optimal(wg, 1, 21)
    assert brute_force_optimal(wg, 1, 21, max_vertices=21).path == tuple(range(1, 22))


def test_cycles_do_not_double_count():
    # 1 -> 2 <-> 3 -> 4 ; revisiting 2 or 3 is impossible on a simple path
    wg = make_wg(4, [(1, 2), (2, 3), (3, 2), (3, 4), (2, 4)], {1: 0.01, 2: 5.0, 3: 6.0, 4: 100.0}, 1, 4)
    result = plan(wg, 1, 4)
    assert result.path == (1, 2, 3, 4)
    assert result.total_value == 111.0


def test_equal_value_paths_break_ties_lexicographically():
    wg = make_wg(4, [(1, 3), (3, 4), (1, 2), (2, 4)], {1: 0.01, 2: 4.0, 3: 4.0, 4: 100.0}, 1, 4)
    assert plan(wg, 1, 4).path == (1, 2, 4)
    assert brute_force_optimal(wg, 1, 4).path == (1, 2, 4)


def test_path_value_and_validation():
    wg = diamond()
    assert path_value(wg, [1, 3, 4]) == 101.5
    assert path_value(wg, [2]) == 0.0
    with pytest.raises(ValidationError):
        path_value(wg, [1, 4])
    with pytest.raises(ValidationError):
        path_value(wg, [])


def test_plan_is_deterministic():
    rnd = random.Random(11)
    for _ in range(20):
        wg, s, t = random_instance(rnd)
        assert plan(wg, s, t) == plan(wg, s, t)


@pytest.mark.parametrize("mode", ["dst", "src", "avg"])
def test_oracle_equivalence_all_weight_modes(mode):
    rnd = random.Random(sum(map(ord, mode)))
    for _ in range(40):
        base, s, t = random_instance(rnd, sizes=(5, 9))
        wg = edge_weights(base.graph, base.scores, mode)
        fast, slow = plan(wg, s, t), brute_force_optimal(wg, s, t)
        assert fast.total_value == slow.total_value
        assert fast.path == slow.path
        h = heuristic_reachable_sum(wg, t)
        for v in wg.graph.vertices:
            best = best_simple_path_value(wg, v, t) if v != t else 0.0
            if best is not None:
                assert h[v] + 1e-9 >= best


def test_frontier_is_monotone_on_dags():
    rnd = random.Random(5)
    for _ in range(60):
        wg, s, t = random_instance(rnd, acyclic=True)
        trace: list[float] = []
        plan(wg, s, t, trace=trace)
        assert trace
        for earlier, later in zip(trace, trace[1:]):
            assert later <= earlier + 1e-9


def _scaled(wg: WeightedGraph, factor: float) -> WeightedGraph:
    return WeightedGraph(wg.graph, {arc: w * factor for arc, w in wg.weight.items()}, wg.scores, wg.mode)


def test_scale_covariance_of_argmax():
    rnd = random.Random(17)
    for _ in range(40):
        wg, s, t = random_instance(rnd)
        base = plan(wg, s, t)
        for factor in (0.25, 0.5, 2.0, 8.0):
            scaled = plan(_scaled(wg, factor), s, t)
            assert scaled.path == base.path
            assert scaled.total_value == base.total_value * factor


def test_scaling_non_constant_scores_keeps_path():
    rnd = random.Random(23)
    for _ in range(40):
        wg, s, t = random_instance(rnd)
        base = plan(wg, s, t)
        values = {v: (x if v in (s, t) else x * 0.5) for v, x in wg.scores.values.items()}
        n = len(wg.graph)
        scaled = make_wg(n, list(wg.weight), values, s, t)
        result = plan(scaled, s, t)
        assert result.path == base.path
        assert result.total_value - 100.0 == pytest.approx((base.total_value - 100.0) * 0.5)

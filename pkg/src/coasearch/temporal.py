"""Planning over a network whose arcs and node values change every step.

The dynamics are deliberately simple: at each time step every arc is up
independently with its own probability, and every node value (source and
target excepted) is multiplied by ``exp(N(0, drift**2))`` and clamped to
[0, 10]. Steps are independent of each other.

Random streams
--------------
Every random draw comes from a numpy ``SeedSequence`` keyed by the run seed
plus a spawn key ``(stream, index)``:

* ``(0, step)`` for :func:`sample_snapshot` when no generator is passed,
* ``(1, iteration)`` for each MCTS iteration,
* ``(2, trial)`` for each :func:`evaluate_path` episode.

Work for iteration ``i`` is therefore reproducible on its own, independent of
what ran before it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateQueryError, ValidationError, VertexLookupError
from .scoring import ScoreAssignment, WeightedGraph, edge_weights, weight_for
from .search import HeuristicMode, SearchResult, plan, validate_path


STREAM_SNAPSHOT = 0
STREAM_MCTS = 1
STREAM_EVAL = 2
SCORE_CEILING = 10.0
# textbook UCT constant for rewards scaled to [0, 1]
DEFAULT_EXPLORATION = 1 / math.sqrt(2)
_SEED_MASK = (1 << 64) - 1


class DegenerateSampleWarning(UserWarning):
    """A statistic was computed from a single sample."""


def substream(seed: int, stream: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed & _SEED_MASK, spawn_key=(stream, index))
    return np.random.Generator(np.random.PCG64(ss))


class _LazyRng:
    """Creates the substream generator on first use only."""

    __slots__ = ("_seed", "_stream", "_index", "_rng")

    def __init__(self, seed: int, stream: int, index: int):
        self._seed, self._stream, self._index = seed, stream, index
        self._rng: np.random.Generator | None = None

    def get(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = substream(self._seed, self._stream, self._index)
        return self._rng


@dataclass(frozen=True)
class TimeVaryingModel:
    base: WeightedGraph
    edge_availability: Mapping[tuple[int, int], float] = field(default_factory=dict)
    default_availability: float = 1.0
    score_drift: float = 0.0
    horizon: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        for arc, p in self.edge_availability.items():
            if arc not in self.base.weight:
                raise ValidationError(f"availability given for {arc[0]}->{arc[1]}, which is not an arc")
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"availability {p!r} for {arc[0]}->{arc[1]} outside [0, 1]")
        if not 0.0 <= self.default_availability <= 1.0:
            raise ValidationError(f"default availability {self.default_availability!r} outside [0, 1]")
        if not (math.isfinite(self.score_drift) and self.score_drift >= 0.0):
            raise ValidationError(f"score drift must be finite and >= 0, got {self.score_drift!r}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")

    def availability(self, src: int, dst: int) -> float:
        return self.edge_availability.get((src, dst), self.default_availability)

    @property
    def is_static(self) -> bool:
        return self.score_drift == 0.0 and all(
            self.availability(a.src, a.dst) == 1.0 for a in self.base.graph.arcs
        )

    def score_cap(self, vid: int) -> float:
        """Largest value node ``vid`` can take in any snapshot."""
        scores = self.base.scores
        value = scores.values[vid]
        if self.score_drift == 0.0 or vid in (scores.source, scores.target) or value == 0.0:
            return value
        return max(value, SCORE_CEILING)

    def reward_bound(self) -> float:
        """No episode can collect more than this."""
        return math.fsum(self.score_cap(v) for v in self.base.graph.vertices)


class _StepView:
    """One time step of the process, sampled lazily and cached."""

    __slots__ = ("model", "rng", "_present", "_scores")

    def __init__(self, model: TimeVaryingModel, rng: _LazyRng | np.random.Generator):
        self.model = model
        self.rng = rng
        self._present: dict[tuple[int, int], bool] = {}
        self._scores: dict[int, float] = {}

    def _gen(self) -> np.random.Generator:
        return self.rng.get() if isinstance(self.rng, _LazyRng) else self.rng

    def present(self, src: int, dst: int) -> bool:
        key = (src, dst)
        hit = self._present.get(key)
        if hit is None:
            p = self.model.availability(src, dst)
            hit = True if p >= 1.0 else False if p <= 0.0 else bool(self._gen().random() < p)
            self._present[key] = hit
        return hit

    def score(self, vid: int) -> float:
        value = self._scores.get(vid)
        if value is None:
            model = self.model
            value = model.base.scores.values[vid]
            if model.score_drift > 0.0 and vid not in (model.base.source, model.base.target) and value > 0.0:
                value *= math.exp(self._gen().normal(0.0, model.score_drift))
                value = min(max(value, 0.0), SCORE_CEILING)
            self._scores[vid] = value
        return value

    def weight(self, src: int, dst: int) -> float:
        if self.model.score_drift == 0.0:
            return self.model.base.weight[(src, dst)]
        return weight_for(self.model.base.mode, self.score(src), self.score(dst))

    def moves(self, vid: int, visited) -> list[tuple[int, float]]:
        return [
            (u, self.weight(vid, u))
            for u, _ in self.model.base.out_arcs(vid)
            if u not in visited and self.present(vid, u)
        ]


def _has_possible_move(model: TimeVaryingModel, vid: int, visited) -> bool:
    return any(u not in visited and model.availability(vid, u) > 0.0 for u, _ in model.base.out_arcs(vid))


def sample_snapshot(model: TimeVaryingModel, step: int, rng: np.random.Generator | None = None) -> WeightedGraph:
    """Draw the network as it looks at ``step``.

    Node values are drawn first (ascending id), then arc availability in arc
    order. Without an explicit generator the draw comes from the snapshot
    substream for ``step``.
    """
    if not 0 <= step < model.horizon:
        raise ValidationError(f"step {step} outside [0, {model.horizon})")
    if rng is None:
        rng = substream(model.seed, STREAM_SNAPSHOT, step)
    view = _StepView(model, rng)
    base = model.base
    values = {vid: view.score(vid) for vid in base.graph.vertices}
    arcs = [a for a in base.graph.arcs if view.present(a.src, a.dst)]
    graph = base.graph.with_arcs(arcs)
    scores = ScoreAssignment(values, base.scores.source, base.scores.target, base.scores.warnings)
    return edge_weights(graph, scores, base.mode)


def uct_score(mean_reward: float, child_visits: int, parent_visits: int, c: float) -> float:
    """UCB1 applied to trees. Unvisited children score ``math.inf``."""
    if child_visits == 0:
        return math.inf
    if c == 0.0:
        return mean_reward
    return mean_reward + c * math.sqrt(math.log(parent_visits) / child_visits)


@dataclass(frozen=True)
class MctsConfig:
    iterations: int = 10_000
    exploration_c: float = DEFAULT_EXPLORATION
    rollout_depth_cap: int = 64
    seed: int = 0
    strict_goal: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if not (math.isfinite(self.exploration_c) and self.exploration_c >= 0.0):
            raise ValidationError(f"exploration constant must be >= 0, got {self.exploration_c!r}")
        if self.rollout_depth_cap < 1:
            raise ValidationError(f"rollout depth cap must be >= 1, got {self.rollout_depth_cap}")


class TreeNode:
    """Open-loop search tree node: the state reached by a fixed move sequence."""

    __slots__ = ("vertex", "depth", "visited", "visit_count", "total_reward", "children")

    def __init__(self, vertex: int, depth: int, visited: frozenset[int]):
        self.vertex = vertex
        self.depth = depth
        self.visited = visited
        self.visit_count = 0
        self.total_reward = 0.0
        self.children: dict[tuple[int, int], TreeNode] = {}

    @property
    def mean_reward(self) -> float:
        return self.total_reward / self.visit_count if self.visit_count else 0.0

    def __repr__(self) -> str:
        return f"TreeNode(vertex={self.vertex}, visits={self.visit_count}, mean={self.mean_reward:.4g})"


@dataclass(frozen=True)
class ActionStats:
    visits: int
    mean_reward: float


@dataclass(frozen=True)
class MctsResult:
    recommended_path: tuple[int, ...]
    expected_value: float
    root_visits: int
    per_action_stats: Mapping[tuple[int, int], ActionStats]
    tree: TreeNode | None = field(default=None, compare=False, repr=False)


def _run_iteration(
    model: TimeVaryingModel,
    root: TreeNode,
    target: int,
    config: MctsConfig,
    rng: _LazyRng,
    bound: float,
) -> tuple[list[TreeNode], float, bool]:
    views: dict[int, _StepView] = {}

    def view_at(clock: int) -> _StepView:
        view = views.get(clock)
        if view is None:
            view = views[clock] = _StepView(model, rng)
        return view

    node = root
    line = [root]
    vertex, visited = root.vertex, set(root.visited)
    clock = 0
    reward = 0.0
    expanded = False

    # selection and expansion
    while vertex != target and clock < model.horizon and _has_possible_move(model, vertex, visited):
        moves = view_at(clock).moves(vertex, visited)
        if not moves:
            clock += 1
            continue
        untried = [(u, w) for u, w in moves if (vertex, u) not in node.children]
        if untried:
            u, w = untried[0]
            child = TreeNode(u, node.depth + 1, node.visited | {u})
            node.children[(vertex, u)] = child
            expanded = True
        else:
            parent_visits = node.visit_count
            best_key = None
            for cand_u, cand_w in moves:
                c_node = node.children[(vertex, cand_u)]
                score = uct_score(c_node.mean_reward / bound, c_node.visit_count, parent_visits, config.exploration_c)
                key = (score, -cand_u)
                if best_key is None or key > best_key:
                    best_key, u, w = key, cand_u, cand_w
            child = node.children[(vertex, u)]
        node = child
        line.append(child)
        reward += w
        vertex = u
        visited.add(u)
        clock += 1
        if expanded:
            break

    # rollout
    depth = 0
    if expanded:
        while (
            vertex != target
            and clock < model.horizon
            and depth < config.rollout_depth_cap
            and _has_possible_move(model, vertex, visited)
        ):
            moves = view_at(clock).moves(vertex, visited)
            clock += 1
            depth += 1
            if not moves:
                continue
            u, w = moves[int(rng.get().integers(len(moves)))]
            reward += w
            vertex = u
            visited.add(u)

    reached = vertex == target
    if config.strict_goal and not reached:
        reward = 0.0
    return line, reward, reached


def mcts_plan(model: TimeVaryingModel, source: int, target: int, config: MctsConfig) -> MctsResult:
    """Monte-Carlo tree search for a high-value attack line under the model's dynamics.

    Selection uses UCT on rewards scaled by :meth:`TimeVaryingModel.reward_bound`;
    untried moves are expanded lowest id first; rollouts pick uniformly among
    available unvisited successors. When no move is available at a step the
    attacker waits. Episodes that miss the target keep what they collected
    unless ``config.strict_goal`` is set.
    """
    graph = model.base.graph
    for vid in (source, target):
        if vid not in graph:
            raise VertexLookupError(f"vertex {vid} is not in the graph")
    if source == target:
        raise DegenerateQueryError("source and target must differ")

    bound = model.reward_bound() or 1.0
    root = TreeNode(source, 0, frozenset((source,)))
    for i in range(config.iterations):
        line, reward, _ = _run_iteration(model, root, target, config, _LazyRng(config.seed, STREAM_MCTS, i), bound)
        for n in line:
            n.visit_count += 1
            n.total_reward += reward

    path = [source]
    node = root
    while node.children:
        arc, node = max(
            node.children.items(),
            key=lambda item: (item[1].visit_count, item[1].mean_reward, -item[0][1]),
        )
        path.append(arc[1])
    stats = {
        arc: ActionStats(child.visit_count, child.mean_reward) for arc, child in sorted(root.children.items())
    }
    return MctsResult(
        recommended_path=tuple(path),
        expected_value=node.mean_reward,
        root_visits=root.visit_count,
        per_action_stats=stats,
        tree=root,
    )


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    std_error: float
    trials: int
    success_rate: float


def evaluate_path(
    model: TimeVaryingModel,
    path: Sequence[int],
    trials: int,
    seed: int | None = None,
    target: int | None = None,
    strict_goal: bool = False,
) -> ValueEstimate:
    """Monte-Carlo value of committing to ``path`` under the model's dynamics.

    Each episode starts at ``path[0]`` at step 0 and crosses one arc per step
    when that arc is up, otherwise it waits. The episode stops at the end of
    the path or at the horizon. It counts as a success when it finishes the
    path and, if ``target`` is given, the path ends there.
    """
    validate_path(model.base, path)
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    seed = model.seed if seed is None else seed
    goal_ok = target is None or path[-1] == target
    arcs = list(zip(path, path[1:]))

    mean = 0.0
    m2 = 0.0
    successes = 0
    for t in range(trials):
        rng = _LazyRng(seed, STREAM_EVAL, t)
        k = 0
        clock = 0
        acc = 0.0
        while k < len(arcs) and clock < model.horizon:
            view = _StepView(model, rng)
            u, v = arcs[k]
            if view.present(u, v):
                acc += view.weight(u, v)
                k += 1
            clock += 1
        success = k == len(arcs) and goal_ok
        successes += success
        value = acc if success or not strict_goal else 0.0
        # Welford: identical samples leave the mean bit-exact
        delta = value - mean
        mean += delta / (t + 1)
        m2 += delta * (value - mean)

    if trials == 1:
        warnings.warn("evaluate_path with a single trial: standard error reported as 0", DegenerateSampleWarning, stacklevel=2)
        std_error = 0.0
    else:
        std_error = math.sqrt(max(m2, 0.0) / (trials - 1)) / math.sqrt(trials)
    return ValueEstimate(mean, std_error, trials, successes / trials)


@dataclass(frozen=True)
class Comparison:
    spatial: SearchResult
    spatial_estimate: ValueEstimate
    mcts: MctsResult
    mcts_estimate: ValueEstimate
    winner: str

    @property
    def difference(self) -> float:
        return self.mcts_estimate.mean - self.spatial_estimate.mean


def compare(
    model: TimeVaryingModel,
    source: int,
    target: int,
    config: MctsConfig,
    trials: int,
    heuristic: HeuristicMode | str = HeuristicMode.REACHABLE_SUM,
) -> Comparison:
    """Static optimum versus the MCTS recommendation, both scored under dynamics.

    The two paths are evaluated on the same random streams, so identical paths
    get identical estimates.
    """
    if source == target:
        raise DegenerateQueryError("source and target must differ")
    spatial = plan(model.base, source, target, heuristic)
    spatial_est = evaluate_path(model, spatial.path, trials, target=target, strict_goal=config.strict_goal)
    mres = mcts_plan(model, source, target, config)
    mcts_est = evaluate_path(model, mres.recommended_path, trials, target=target, strict_goal=config.strict_goal)
    if mcts_est.mean > spatial_est.mean:
        winner = "mcts"
    elif mcts_est.mean < spatial_est.mean:
        winner = "spatial"
    else:
        winner = "tie"
    return Comparison(spatial, spatial_est, mres, mcts_est, winner)

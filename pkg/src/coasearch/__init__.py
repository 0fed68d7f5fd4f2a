"""Attack course-of-action search over MULVAL attack graphs.

Scores attack-graph nodes from CVSS data, finds the maximum-value attack
path with best-first branch-and-bound, and re-plans with Monte-Carlo tree
search when arcs and scores vary over time.
"""

from .errors import (
    CoaError,
    DegenerateQueryError,
    DuplicateIdError,
    GuardExceededError,
    InputError,
    MissingCveError,
    NoPathError,
    ParseError,
    ScoreDomainError,
    UnsupportedInputError,
    ValidationError,
    VertexLookupError,
)
from .graph import (
    Arc,
    AttackGraph,
    Predicate,
    Vertex,
    VertexKind,
    adjacency_matrix,
    build_graph,
    export_dot,
    load_graph,
    parse_arcs,
    parse_predicate,
    parse_vertices,
)
from .scoring import (
    EdgeWeightMode,
    ScoreAssignment,
    VulnDb,
    VulnRecord,
    WeightedGraph,
    assign_node_scores,
    edge_weights,
    load_vuln_db,
    score_vul,
)
from .search import (
    HeuristicMode,
    HeuristicTable,
    SearchResult,
    brute_force_optimal,
    heuristic_dp_exact,
    heuristic_reachable_sum,
    path_value,
    plan,
)
from .temporal import (
    Comparison,
    MctsConfig,
    MctsResult,
    TimeVaryingModel,
    ValueEstimate,
    compare,
    evaluate_path,
    mcts_plan,
    sample_snapshot,
    uct_score,
)

__version__ = "0.1.0"

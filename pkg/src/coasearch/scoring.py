"""CVSS-driven node values and the edge weights derived from them."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .errors import (
    DuplicateIdError,
    MissingCveError,
    ParseError,
    ScoreDomainError,
    ValidationError,
    VertexLookupError,
)
from .graph import AttackGraph

log = logging.getLogger(__name__)

SOURCE_VALUE = 0.01
TARGET_VALUE = 100.0
CRITICAL_ACTION_VALUE = 1.5
DEFAULT_CRITICAL_PREDICATES = ("execCode", "accessFile")
VULN_PREDICATE = "vulExists"


class EdgeWeightMode(str, Enum):
    SRC = "src"
    DST = "dst"
    AVG = "avg"


def _check_score(value: float, what: str, cve_id: str | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScoreDomainError(f"{what} must be a number, got {value!r}" + (f" for {cve_id}" if cve_id else ""))
    # written so that NaN fails the check
    if not 0.0 <= value <= 10.0:
        raise ScoreDomainError(f"{what} {value!r} outside [0, 10]" + (f" for {cve_id}" if cve_id else ""))
    return float(value)


@dataclass(frozen=True)
class VulnRecord:
    cve_id: str
    base_score: float
    exploitability_score: float

    def __post_init__(self) -> None:
        if not isinstance(self.cve_id, str) or not self.cve_id.strip():
            raise ValidationError(f"cveId must be a non-empty string, got {self.cve_id!r}")
        object.__setattr__(self, "base_score", _check_score(self.base_score, "baseScore", self.cve_id))
        object.__setattr__(
            self,
            "exploitability_score",
            _check_score(self.exploitability_score, "exploitabilityScore", self.cve_id),
        )

    @property
    def score(self) -> float:
        return score_vul(self.base_score, self.exploitability_score)


class VulnDb(Mapping[str, VulnRecord]):
    """Read-only CVE id -> VulnRecord lookup."""

    def __init__(self, records: Iterable[VulnRecord] = ()):
        self._records: dict[str, VulnRecord] = {}
        for rec in records:
            if rec.cve_id in self._records:
                raise DuplicateIdError(f"duplicate cveId {rec.cve_id!r}")
            self._records[rec.cve_id] = rec

    def __getitem__(self, cve_id: str) -> VulnRecord:
        return self._records[cve_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __repr__(self) -> str:
        return f"VulnDb({len(self)} records)"

    def to_json(self) -> str:
        rows = [
            {"cveId": r.cve_id, "baseScore": r.base_score, "exploitabilityScore": r.exploitability_score}
            for r in self._records.values()
        ]
        return json.dumps(rows, indent=2) + "\n"


def _parse_score_text(raw: str, what: str, cve_id: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"{what} is not a number for {cve_id}: {raw!r}", lineno) from None


def load_vuln_db(text: str | bytes, source: str | None = None) -> VulnDb:
    """Load vulnerability records from JSON or CSV.

    JSON is an array of ``{"cveId", "baseScore", "exploitabilityScore"}``
    objects. CSV has a header line naming the same three columns.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            lineno = bytes(text)[: exc.start].count(b"\n") + 1
            raise ParseError("invalid UTF-8 byte sequence", lineno, source) from None
    text = text.lstrip("\ufeff")
    if not text.strip():
        return VulnDb()
    try:
        if text.lstrip().startswith(("[", "{")):
            return _load_json(text)
        return _load_csv(text)
    except ParseError as exc:
        if source is None or exc.source is not None:
            raise
        raise type(exc)(exc.message, exc.lineno, source) from None


def _load_json(text: str) -> VulnDb:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(data, list):
        raise ParseError("vulnerability database JSON must be an array of records")
    records = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise ParseError(f"record {i} is not an object")
        missing = {"cveId", "baseScore", "exploitabilityScore"} - item.keys()
        if missing:
            raise ParseError(f"record {i} lacks {', '.join(sorted(missing))}")
        records.append(VulnRecord(item["cveId"], item["baseScore"], item["exploitabilityScore"]))
    return VulnDb(records)


def _load_csv(text: str) -> VulnDb:
    reader = csv.reader(io.StringIO(text))
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise ParseError(f"malformed CSV ({exc})", reader.line_num) from None
    header = [h.strip() for h in rows[0]]
    try:
        cols = [header.index(k) for k in ("cveId", "baseScore", "exploitabilityScore")]
    except ValueError:
        raise ParseError("CSV header must name cveId, baseScore, exploitabilityScore", 1) from None
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", lineno)
        cve_id, base, expl = (row[c].strip() for c in cols)
        records.append(
            VulnRecord(
                cve_id,
                _parse_score_text(base, "baseScore", cve_id, lineno),
                _parse_score_text(expl, "exploitabilityScore", cve_id, lineno),
            )
        )
    return VulnDb(records)


def score_vul(base_score: float, exploitability_score: float) -> float:
    """Base score weighted by how exploitable the vulnerability is.

    >>> score_vul(10, 10)
    10.0
    """
    base = _check_score(base_score, "baseScore")
    expl = _check_score(exploitability_score, "exploitabilityScore")
    # expl / 10 <= 1 exactly in floating point, so the result never exceeds base
    return base * (expl / 10.0)


@dataclass(frozen=True)
class ScoreAssignment:
    values: Mapping[int, float]
    source: int
    target: int
    warnings: tuple[str, ...] = ()


def cve_of(args: tuple[str, ...]) -> str | None:
    """CVE id from a vulExists argument list (second argument, quotes stripped)."""
    if len(args) < 2:
        return None
    cve = args[1].strip().strip("'\"").strip()
    return cve or None


def assign_node_scores(
    graph: AttackGraph,
    db: Mapping[str, VulnRecord],
    source: int,
    target: int,
    strict: bool = True,
    critical_predicates: Iterable[str] = DEFAULT_CRITICAL_PREDICATES,
) -> ScoreAssignment:
    """Give every vertex its attack value.

    Source and target get fixed values; ``vulExists`` nodes get the CVSS
    score of their CVE; code-execution and file-access nodes get 1.5; all
    others 0. In strict mode an unknown CVE is an error, otherwise it scores
    0 and a warning is recorded.
    """
    for vid in (source, target):
        if vid not in graph:
            raise VertexLookupError(f"vertex {vid} is not in the graph")
    if source == target:
        raise ValidationError("source and target must differ")

    critical = frozenset(critical_predicates)
    values: dict[int, float] = {}
    missing: list[tuple[int, str]] = []
    for vid in graph.vertices:
        if vid == source:
            values[vid] = SOURCE_VALUE
            continue
        if vid == target:
            values[vid] = TARGET_VALUE
            continue
        pred = graph.predicate(vid)
        if pred.name == VULN_PREDICATE:
            cve = cve_of(pred.args)
            rec = db.get(cve) if cve else None
            if rec is None:
                missing.append((vid, cve or graph.vertices[vid].label))
                values[vid] = 0.0
            else:
                values[vid] = rec.score
        elif pred.name in critical:
            values[vid] = CRITICAL_ACTION_VALUE
        else:
            values[vid] = 0.0

    if missing and strict:
        raise MissingCveError(missing)
    warnings = tuple(f"node {vid}: CVE {cve!r} not in database, scored 0" for vid, cve in missing)
    for w in warnings:
        log.warning(w)
    return ScoreAssignment(values, source, target, warnings)


@dataclass(frozen=True)
class WeightedGraph:
    """An attack graph with a weight on every arc.

    ``weight`` has exactly one entry per arc; a missing pair means "no arc".
    """

    graph: AttackGraph
    weight: Mapping[tuple[int, int], float]
    scores: ScoreAssignment
    mode: EdgeWeightMode = EdgeWeightMode.DST
    _out: Mapping[int, tuple[tuple[int, float], ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        out = {
            vid: tuple((dst, self.weight[(vid, dst)]) for dst in self.graph.successors[vid])
            for vid in self.graph.vertices
        }
        object.__setattr__(self, "_out", out)

    def out_arcs(self, vid: int) -> tuple[tuple[int, float], ...]:
        """``(successor, weight)`` pairs in ascending successor order."""
        return self._out[vid]

    @property
    def source(self) -> int:
        return self.scores.source

    @property
    def target(self) -> int:
        return self.scores.target

    def score_bound(self) -> float:
        """Upper bound on the value of any simple path."""
        return math.fsum(max((w for _, w in self._in_weights(v)), default=0.0) for v in self.graph.vertices)

    def _in_weights(self, vid: int) -> Iterator[tuple[int, float]]:
        for p in self.graph.predecessors[vid]:
            yield p, self.weight[(p, vid)]


def weight_for(mode: EdgeWeightMode, src_value: float, dst_value: float) -> float:
    if mode is EdgeWeightMode.DST:
        return dst_value
    if mode is EdgeWeightMode.SRC:
        return src_value
    return (src_value + dst_value) / 2.0


def edge_weights(
    graph: AttackGraph, scores: ScoreAssignment, mode: EdgeWeightMode | str = EdgeWeightMode.DST
) -> WeightedGraph:
    mode = EdgeWeightMode(mode)
    values = scores.values
    missing = [vid for vid in graph.vertices if vid not in values]
    if missing:
        raise ValidationError(f"scores missing for vertices {missing}")
    weight = {(a.src, a.dst): weight_for(mode, values[a.src], values[a.dst]) for a in graph.arcs}
    return WeightedGraph(graph, weight, scores, mode)

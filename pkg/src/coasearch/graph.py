"""MULVAL attack-graph ingestion, validation and export.

MULVAL writes two files per run. ``VERTICES.CSV`` holds one record per node::

    1,"execCode(workStation,root)","OR",0

and ``ARCS.CSV`` holds one ``child,parent,-1`` record per edge. The planner
walks in the direction the attacker progresses, so arcs are reversed on load
unless the caller asks otherwise.
"""

from __future__ import annotations

import csv
import heapq
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateIdError, ParseError, ValidationError


class VertexKind(str, Enum):
    LEAF = "LEAF"
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class Vertex:
    id: int
    label: str
    kind: VertexKind
    metric: float = 0.0

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValidationError(f"vertex id must be >= 1, got {self.id}")
        if not self.label:
            raise ValidationError(f"vertex {self.id} has an empty label")
        if not isinstance(self.kind, VertexKind):
            object.__setattr__(self, "kind", VertexKind(self.kind))


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int


@dataclass(frozen=True)
class Predicate:
    name: str
    args: tuple[str, ...] = ()


_INT_RE = re.compile(r"\s*(-?[0-9]+)\s*")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _split_lines(text: str | bytes, source: str | None) -> list[tuple[int, str]]:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            lineno = bytes(text)[: exc.start].count(b"\n") + 1
            raise ParseError("invalid UTF-8 byte sequence", lineno, source) from None
    if text.startswith("\ufeff"):
        text = text[1:]
    lines = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if line.strip():
            lines.append((lineno, line))
    return lines


def _parse_int(field_text: str, what: str, lineno: int, source: str | None) -> int:
    m = _INT_RE.fullmatch(field_text)
    if m is None:
        raise ParseError(f"{what} is not an integer: {field_text!r}", lineno, source)
    return int(m.group(1))


def _csv_fields(line: str, lineno: int, source: str | None) -> list[str]:
    if line.count('"') % 2:
        raise ParseError("unbalanced quotes", lineno, source)
    try:
        rows = list(csv.reader([line], strict=True))
    except csv.Error as exc:
        raise ParseError(f"malformed record ({exc})", lineno, source) from None
    return rows[0] if rows else []


def parse_vertices(text: str | bytes, source: str | None = None) -> list[Vertex]:
    """Parse VERTICES.CSV content into vertices, in file order.

    Raises ParseError (with the 1-based line number) on a malformed record and
    DuplicateIdError when an id repeats.
    """
    vertices: list[Vertex] = []
    seen: dict[int, int] = {}
    for lineno, line in _split_lines(text, source):
        fields = _csv_fields(line, lineno, source)
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, found {len(fields)}", lineno, source)
        raw_id, label, raw_kind, raw_metric = fields
        vid = _parse_int(raw_id, "vertex id", lineno, source)
        if vid < 1:
            raise ParseError(f"vertex id must be >= 1, got {vid}", lineno, source)
        if not label:
            raise ParseError("empty label", lineno, source)
        try:
            kind = VertexKind(raw_kind.strip().upper())
        except ValueError:
            raise ParseError(f"unknown vertex kind {raw_kind!r}", lineno, source) from None
        try:
            metric = float(raw_metric)
        except ValueError:
            raise ParseError(f"metric is not a number: {raw_metric!r}", lineno, source) from None
        if not math.isfinite(metric):
            raise ParseError(f"metric is not finite: {raw_metric!r}", lineno, source)
        if vid in seen:
            raise DuplicateIdError(
                f"duplicate vertex id {vid} (first defined on line {seen[vid]})", lineno, source
            )
        seen[vid] = lineno
        vertices.append(Vertex(vid, label, kind, metric))
    return vertices


def parse_arcs(text: str | bytes, reverse: bool = True, source: str | None = None) -> list[Arc]:
    """Parse ARCS.CSV content.

    MULVAL stores ``child,parent[,-1]``; with ``reverse`` (the default) each
    record becomes ``Arc(src=parent, dst=child)``.
    """
    arcs: list[Arc] = []
    for lineno, line in _split_lines(text, source):
        fields = line.split(",")
        if len(fields) < 2:
            raise ParseError(f"expected at least 2 fields, found {len(fields)}", lineno, source)
        values = [_parse_int(f, f"field {i + 1}", lineno, source) for i, f in enumerate(fields)]
        first, second = values[0], values[1]
        if first < 1 or second < 1:
            raise ParseError("arc endpoints must be positive vertex ids", lineno, source)
        arcs.append(Arc(src=second, dst=first) if reverse else Arc(src=first, dst=second))
    return arcs


def _format_metric(metric: float) -> str:
    return str(int(metric)) if metric.is_integer() else repr(metric)


def serialize_vertices(vertices: Iterable[Vertex]) -> str:
    out = []
    for v in vertices:
        label = v.label.replace('"', '""')
        out.append(f'{v.id},"{label}","{v.kind.value}",{_format_metric(v.metric)}\n')
    return "".join(out)


def serialize_arcs(arcs: Iterable[Arc], reverse: bool = True) -> str:
    if reverse:
        return "".join(f"{a.dst},{a.src},-1\n" for a in arcs)
    return "".join(f"{a.src},{a.dst},-1\n" for a in arcs)


def _split_top_level(inner: str) -> list[str] | None:
    parts: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    depth = 0
    for ch in inner:
        if quote:
            buf.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return None
        elif ch == "," and depth == 0:
            parts.append("".join(buf).strip())
            buf = []
            continue
        buf.append(ch)
    if quote or depth:
        return None
    parts.append("".join(buf).strip())
    return parts


def parse_predicate(label: str) -> Predicate:
    """Split a MULVAL label like ``execCode(host,root)`` into name and args.

    Never raises: anything that is not ``identifier(args)`` comes back as a
    bare name with no args (MULVAL rule nodes such as
    ``RULE 2 (remote exploit of a server program)`` land here).
    """
    stripped = label.strip()
    open_at = stripped.find("(")
    if open_at <= 0 or not stripped.endswith(")"):
        return Predicate(label)
    name = stripped[:open_at].strip()
    if not _IDENT_RE.fullmatch(name):
        return Predicate(label)
    inner = stripped[open_at + 1 : -1]
    if not inner.strip():
        return Predicate(name)
    args = _split_top_level(inner)
    if args is None:
        return Predicate(label)
    return Predicate(name, tuple(args))


@dataclass(frozen=True)
class AttackGraph:
    """Validated, read-only attack graph.

    ``vertices`` and ``successors`` iterate in ascending id order; successor
    lists are sorted ascending as well.
    """

    vertices: Mapping[int, Vertex]
    arcs: tuple[Arc, ...]
    successors: Mapping[int, tuple[int, ...]]
    predecessors: Mapping[int, tuple[int, ...]]
    topological_order: tuple[int, ...] | None = field(default=None, repr=False)

    @property
    def acyclic(self) -> bool:
        return self.topological_order is not None

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(self.vertices)

    def __contains__(self, vid: object) -> bool:
        return vid in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)

    def has_arc(self, src: int, dst: int) -> bool:
        return dst in self.successors.get(src, ())

    def predicate(self, vid: int) -> Predicate:
        return parse_predicate(self.vertices[vid].label)

    def reachable_from(self, start: int) -> set[int]:
        """Vertices reachable from ``start`` by one or more arcs."""
        seen: set[int] = set()
        stack = list(self.successors[start])
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.successors[v])
        return seen

    def can_reach(self, target: int) -> set[int]:
        """Vertices from which ``target`` is reachable, ``target`` included."""
        seen = {target}
        stack = [target]
        while stack:
            v = stack.pop()
            for p in self.predecessors[v]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def with_arcs(self, arcs: Iterable[Arc]) -> "AttackGraph":
        """Same vertices, a different arc set (used for time-step snapshots)."""
        return build_graph(self.vertices.values(), arcs)


def _topological_order(ids: Sequence[int], succ: Mapping[int, Sequence[int]]) -> tuple[int, ...] | None:
    indegree = dict.fromkeys(ids, 0)
    for v in ids:
        for w in succ[v]:
            indegree[w] += 1
    ready = [v for v in ids if indegree[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in succ[v]:
            indegree[w] -= 1
            if indegree[w] == 0:
                heapq.heappush(ready, w)
    return tuple(order) if len(order) == len(ids) else None


def build_graph(vertices: Iterable[Vertex], arcs: Iterable[Arc]) -> AttackGraph:
    by_id: dict[int, Vertex] = {}
    for v in vertices:
        if v.id in by_id:
            raise ValidationError(f"duplicate vertex id {v.id}")
        by_id[v.id] = v
    ordered = {vid: by_id[vid] for vid in sorted(by_id)}

    arc_list = tuple(arcs)
    dangling = [a for a in arc_list if a.src not in ordered or a.dst not in ordered]
    if dangling:
        listed = ", ".join(f"{a.src}->{a.dst}" for a in dangling)
        raise ValidationError(f"arcs reference unknown vertices: {listed}")
    loops = [a for a in arc_list if a.src == a.dst]
    if loops:
        listed = ", ".join(f"{a.src}->{a.dst}" for a in loops)
        raise ValidationError(f"self-loop arcs are not allowed: {listed}")
    seen: set[Arc] = set()
    for a in arc_list:
        if a in seen:
            raise ValidationError(f"duplicate arc {a.src}->{a.dst}")
        seen.add(a)

    succ: dict[int, list[int]] = {vid: [] for vid in ordered}
    pred: dict[int, list[int]] = {vid: [] for vid in ordered}
    for a in arc_list:
        succ[a.src].append(a.dst)
        pred[a.dst].append(a.src)
    successors = {vid: tuple(sorted(s)) for vid, s in succ.items()}
    predecessors = {vid: tuple(sorted(p)) for vid, p in pred.items()}
    return AttackGraph(
        vertices=ordered,
        arcs=arc_list,
        successors=successors,
        predecessors=predecessors,
        topological_order=_topological_order(list(ordered), successors),
    )


def load_graph(
    vertices_text: str | bytes,
    arcs_text: str | bytes,
    reverse: bool = True,
    vertices_source: str | None = None,
    arcs_source: str | None = None,
) -> AttackGraph:
    return build_graph(
        parse_vertices(vertices_text, vertices_source),
        parse_arcs(arcs_text, reverse=reverse, source=arcs_source),
    )


_SHAPES = {VertexKind.LEAF: "box", VertexKind.AND: "ellipse", VertexKind.OR: "diamond"}


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def format_score(value: float) -> str:
    return format(value, "g")


def export_dot(graph: AttackGraph, scores=None, highlight: Sequence[int] | None = None) -> str:
    """Render the graph as Graphviz DOT.

    ``scores`` may be a ScoreAssignment or a plain ``{id: value}`` mapping.
    Arcs along ``highlight`` are drawn red; the output is a pure function of
    the inputs.
    """
    values = scores if scores is None or isinstance(scores, Mapping) else scores.values
    red: set[tuple[int, int]] = set()
    on_path: set[int] = set()
    if highlight:
        for u, v in zip(highlight, highlight[1:]):
            if not graph.has_arc(u, v):
                raise ValidationError(f"highlight step {u}->{v} is not an arc of the graph")
            red.add((u, v))
        on_path = set(highlight)

    lines = ["digraph attack_graph {"]
    for vid, vertex in graph.vertices.items():
        text = f"{vid}: {vertex.label}"
        if values is not None:
            text += f" [{format_score(values[vid])}]"
        attrs = [f'label="{_dot_escape(text)}"', f"shape={_SHAPES[vertex.kind]}"]
        if vid in on_path:
            attrs.append("style=bold")
        lines.append(f"  {vid} [{', '.join(attrs)}];")
    for src in graph.vertices:
        for dst in graph.successors[src]:
            if (src, dst) in red:
                lines.append(f"  {src} -> {dst} [color=red, penwidth=2];")
            else:
                lines.append(f"  {src} -> {dst};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def adjacency_matrix(wg) -> list[list[float]]:
    """Dense weight matrix over vertices in ascending-id order.

    Entry ``[i][j]`` holds the weight of arc i->j, or -1 where there is no arc
    (the diagonal included).
    """
    ids = wg.graph.ids
    index = {vid: i for i, vid in enumerate(ids)}
    matrix = [[-1.0] * len(ids) for _ in ids]
    for (src, dst), w in wg.weight.items():
        matrix[index[src]][index[dst]] = w
    return matrix

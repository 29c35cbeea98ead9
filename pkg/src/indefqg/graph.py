"""Signed finite metric graphs and the indexing of their boundary space.

Edges carry a sign: the operator acts as ``-d^2/dx^2`` on positive edges and
as ``+d^2/dx^2`` on negative ones.  Internal edges are intervals ``[0, a]``,
external edges are half-lines ``[0, inf)`` attached at their initial vertex.

Boundary slots are ordered as::

    [E+ origins | I+ origins | I+ termini | E- origins | I- origins | I- termini]

and every other module relies on that ordering.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

MAX_SLOTS = 10_000

ORIGIN = "origin"
TERMINUS = "terminus"


class GraphError(ValueError):
    """Raised for malformed graph descriptions or invalid gluing requests."""


def _check_sign(sign: str) -> str:
    if sign not in ("+", "-"):
        raise GraphError(f"edge sign must be '+' or '-', got {sign!r}")
    return sign


@dataclass(frozen=True)
class ExternalEdge:
    id: str
    sign: str
    at: str


@dataclass(frozen=True)
class InternalEdge:
    id: str
    sign: str
    origin: str
    terminus: str
    length: float


@dataclass(frozen=True)
class BoundaryIndex:
    """Dimensions of ``K = K+ (+) K-`` and the slot of each edge endpoint."""

    n: int
    m: int
    slot_map: Mapping[tuple[str, str], int]
    slot_edges: tuple[tuple[str, str], ...]
    slot_signs: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.n + self.m

    def slot(self, edge_id: str, endpoint: str = ORIGIN) -> int:
        return self.slot_map[(edge_id, endpoint)]


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[str, ...]
    external_edges: tuple[ExternalEdge, ...] = ()
    internal_edges: tuple[InternalEdge, ...] = ()
    _index: BoundaryIndex | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "external_edges", tuple(self.external_edges))
        object.__setattr__(self, "internal_edges", tuple(self.internal_edges))
        _validate(self)

    # -- sign partitions ---------------------------------------------------
    def externals(self, sign: str) -> tuple[ExternalEdge, ...]:
        return tuple(e for e in self.external_edges if e.sign == sign)

    def internals(self, sign: str) -> tuple[InternalEdge, ...]:
        return tuple(e for e in self.internal_edges if e.sign == sign)

    @property
    def is_compact(self) -> bool:
        return not self.external_edges

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.external_edges) + tuple(e.id for e in self.internal_edges)

    def edge(self, edge_id: str) -> ExternalEdge | InternalEdge:
        for e in self.external_edges:
            if e.id == edge_id:
                return e
        for e in self.internal_edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def external_order(self) -> tuple[ExternalEdge, ...]:
        """External edges in column order of the scattering data: E+ then E-."""
        return self.externals("+") + self.externals("-")

    @property
    def index(self) -> BoundaryIndex:
        if self._index is None:
            object.__setattr__(self, "_index", boundary_index(self))
        return self._index

    def to_document(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "external": [{"id": e.id, "sign": e.sign, "at": e.at} for e in self.external_edges],
            "internal": [
                {"id": e.id, "sign": e.sign, "from": e.origin, "to": e.terminus, "length": e.length}
                for e in self.internal_edges
            ],
        }


def _validate(g: MetricGraph) -> None:
    if not g.vertices:
        raise GraphError("graph has no vertices")
    if not g.external_edges and not g.internal_edges:
        raise GraphError("graph has no edges")
    if len(set(g.vertices)) != len(g.vertices):
        raise GraphError("duplicate vertex id")
    vset = set(g.vertices)
    seen: set[str] = set()
    for e in g.external_edges:
        _check_sign(e.sign)
        if e.id in seen:
            raise GraphError(f"duplicate edge id {e.id!r}")
        seen.add(e.id)
        if e.at not in vset:
            raise GraphError(f"external edge {e.id!r} attached to undeclared vertex {e.at!r}")
    for e in g.internal_edges:
        _check_sign(e.sign)
        if e.id in seen:
            raise GraphError(f"duplicate edge id {e.id!r}")
        seen.add(e.id)
        for v in (e.origin, e.terminus):
            if v not in vset:
                raise GraphError(f"internal edge {e.id!r} references undeclared vertex {v!r}")
        if not (isinstance(e.length, (int, float)) and math.isfinite(e.length) and e.length > 0):
            raise GraphError(f"internal edge {e.id!r} needs a positive finite length, got {e.length!r}")
    slots = len(g.external_edges) + 2 * len(g.internal_edges)
    if slots > MAX_SLOTS:
        raise GraphError(f"graph has {slots} boundary slots, cap is {MAX_SLOTS}")


def boundary_index(g: MetricGraph) -> BoundaryIndex:
    slots: list[tuple[str, str]] = []
    signs: list[int] = []
    for sign, s in (("+", 1), ("-", -1)):
        block = [(e.id, ORIGIN) for e in g.externals(sign)]
        block += [(e.id, ORIGIN) for e in g.internals(sign)]
        block += [(e.id, TERMINUS) for e in g.internals(sign)]
        slots += block
        signs += [s] * len(block)
    n = signs.count(1)
    return BoundaryIndex(
        n=n,
        m=len(signs) - n,
        slot_map={key: i for i, key in enumerate(slots)},
        slot_edges=tuple(slots),
        slot_signs=tuple(signs),
    )


def build_graph(doc: Mapping | str | Path) -> MetricGraph:
    """Build a graph from a description document (mapping, JSON text or path)."""
    if isinstance(doc, Path):
        doc = json.loads(doc.read_text())
    elif isinstance(doc, str):
        doc = json.loads(doc)
    try:
        vertices = [str(v) for v in doc["vertices"]]
        ext = [ExternalEdge(str(e["id"]), e["sign"], str(e["at"])) for e in doc.get("external", [])]
        internal = [
            InternalEdge(str(e["id"]), e["sign"], str(e["from"]), str(e["to"]), e["length"])
            for e in doc.get("internal", [])
        ]
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph document: {exc!r}") from exc
    return MetricGraph(vertices, ext, internal)


def write_graph(g: MetricGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_document(), indent=2) + "\n")


def read_graph(path: str | Path) -> MetricGraph:
    return build_graph(Path(path))


# -- gluing ----------------------------------------------------------------

def glue_renamers(g1: MetricGraph, g2: MetricGraph):
    names1 = set(g1.vertices) | set(g1.edge_ids)
    names2 = set(g2.vertices) | set(g2.edge_ids)
    if names1 & names2:
        return (lambda s: f"1.{s}"), (lambda s: f"2.{s}")
    return (lambda s: s), (lambda s: s)


def glue_edge_name(e1: str, e2: str) -> str:
    return f"{e1}~{e2}"


def glue_graphs(
    g1: MetricGraph,
    g2: MetricGraph,
    ident: Mapping[str, str] | Sequence[tuple[str, str]],
    lengths: Sequence[float],
) -> MetricGraph:
    """Join external edges of ``g1`` to external edges of ``g2``.

    Each pair ``(e1, e2)`` in ``ident`` becomes an internal edge running from the
    vertex of ``e1`` to the vertex of ``e2`` with the matching entry of
    ``lengths``.  If vertex or edge ids of the two graphs collide, all ids are
    prefixed with ``"1."`` and ``"2."``.  New edges are named ``"e1~e2"``.
    """
    pairs = list(ident.items()) if isinstance(ident, Mapping) else [tuple(p) for p in ident]
    lengths = list(lengths)
    if len(pairs) != len(lengths):
        raise GraphError(f"{len(pairs)} identified pairs but {len(lengths)} lengths")
    ext1 = {e.id: e for e in g1.external_edges}
    ext2 = {e.id: e for e in g2.external_edges}
    used1 = [p[0] for p in pairs]
    used2 = [p[1] for p in pairs]
    if len(set(used1)) != len(used1) or len(set(used2)) != len(used2):
        raise GraphError("identification is not a bijection")
    for a, b in pairs:
        if a not in ext1:
            raise GraphError(f"{a!r} is not an external edge of the first graph")
        if b not in ext2:
            raise GraphError(f"{b!r} is not an external edge of the second graph")
        if ext1[a].sign != ext2[b].sign:
            raise GraphError(f"cannot glue edges of different sign: {a!r} and {b!r}")
    r1, r2 = glue_renamers(g1, g2)
    vertices = [r1(v) for v in g1.vertices] + [r2(v) for v in g2.vertices]
    externals = [ExternalEdge(r1(e.id), e.sign, r1(e.at)) for e in g1.external_edges if e.id not in used1]
    externals += [ExternalEdge(r2(e.id), e.sign, r2(e.at)) for e in g2.external_edges if e.id not in used2]
    internals = [InternalEdge(r1(e.id), e.sign, r1(e.origin), r1(e.terminus), e.length) for e in g1.internal_edges]
    internals += [InternalEdge(r2(e.id), e.sign, r2(e.origin), r2(e.terminus), e.length) for e in g2.internal_edges]
    for (a, b), length in zip(pairs, lengths):
        internals.append(
            InternalEdge(glue_edge_name(r1(a), r2(b)), ext1[a].sign, r1(ext1[a].at), r2(ext2[b].at), length)
        )
    return MetricGraph(vertices, externals, internals)


def glue_slot_maps(
    g1: MetricGraph,
    g2: MetricGraph,
    ident: Mapping[str, str] | Sequence[tuple[str, str]],
    glued: MetricGraph,
) -> tuple[list[int], list[int]]:
    """Slot of ``glued`` that each slot of ``g1`` and ``g2`` turns into."""
    pairs = list(ident.items()) if isinstance(ident, Mapping) else [tuple(p) for p in ident]
    r1, r2 = glue_renamers(g1, g2)
    new_edge1 = {a: glue_edge_name(r1(a), r2(b)) for a, b in pairs}
    new_edge2 = {b: glue_edge_name(r1(a), r2(b)) for a, b in pairs}
    idx = glued.index
    map1 = []
    for eid, end in g1.index.slot_edges:
        key = (new_edge1[eid], ORIGIN) if eid in new_edge1 else (r1(eid), end)
        map1.append(idx.slot_map[key])
    map2 = []
    for eid, end in g2.index.slot_edges:
        key = (new_edge2[eid], TERMINUS) if eid in new_edge2 else (r2(eid), end)
        map2.append(idx.slot_map[key])
    return map1, map2


# -- a few named graphs used throughout tests and scripts --------------------

def real_line() -> MetricGraph:
    """One positive and one negative half-line meeting at a vertex."""
    return MetricGraph(["v"], [ExternalEdge("e1", "+", "v"), ExternalEdge("e2", "-", "v")])


def two_vertex(a: float) -> MetricGraph:
    """Two positive half-lines joined by a negative interval of length ``a``."""
    return MetricGraph(
        ["v1", "v2"],
        [ExternalEdge("e1", "+", "v1"), ExternalEdge("e2", "+", "v2")],
        [InternalEdge("i3", "-", "v1", "v2", a)],
    )


def three_star() -> MetricGraph:
    return MetricGraph(
        ["v"],
        [ExternalEdge("e1", "+", "v"), ExternalEdge("e2", "+", "v"), ExternalEdge("e3", "-", "v")],
    )


def star(signs: Iterable[str], vertex: str = "v", prefix: str = "e") -> MetricGraph:
    signs = list(signs)
    return MetricGraph([vertex], [ExternalEdge(f"{prefix}{i + 1}", s, vertex) for i, s in enumerate(signs)])


def compact_pair(a_plus: float, a_minus: float) -> MetricGraph:
    """Two vertices joined by a positive edge and a negative edge."""
    return MetricGraph(
        ["u", "w"],
        [],
        [InternalEdge("p", "+", "u", "w", a_plus), InternalEdge("q", "-", "u", "w", a_minus)],
    )


def close_graph_edges(
    g: MetricGraph,
    pairs: Sequence[tuple[str, str]],
    lengths: Sequence[float],
) -> tuple[MetricGraph, list[int]]:
    """Join pairs of external edges of one graph into internal edges.

    Returns the new graph and, for every slot of ``g``, the slot it becomes.
    The first edge of a pair supplies the origin, the second the terminus.
    """
    pairs = [tuple(p) for p in pairs]
    if len(pairs) != len(lengths):
        raise GraphError(f"{len(pairs)} pairs but {len(lengths)} lengths")
    ext = {e.id: e for e in g.external_edges}
    used = [e for p in pairs for e in p]
    if len(set(used)) != len(used):
        raise GraphError("an edge appears in two pairs")
    for a, b in pairs:
        for e in (a, b):
            if e not in ext:
                raise GraphError(f"{e!r} is not an external edge")
        if ext[a].sign != ext[b].sign:
            raise GraphError(f"cannot glue edges of different sign: {a!r} and {b!r}")
    externals = [e for e in g.external_edges if e.id not in used]
    internals = list(g.internal_edges)
    for (a, b), length in zip(pairs, lengths):
        internals.append(InternalEdge(glue_edge_name(a, b), ext[a].sign, ext[a].at, ext[b].at, length))
    closed = MetricGraph(g.vertices, externals, internals)
    origin_of = {a: glue_edge_name(a, b) for a, b in pairs}
    terminus_of = {b: glue_edge_name(a, b) for a, b in pairs}
    slot_map = []
    for eid, end in g.index.slot_edges:
        if eid in origin_of:
            key = (origin_of[eid], ORIGIN)
        elif eid in terminus_of:
            key = (terminus_of[eid], TERMINUS)
        else:
            key = (eid, end)
        slot_map.append(closed.index.slot_map[key])
    return closed, slot_map

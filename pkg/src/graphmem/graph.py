"""The combined knowledge graph.

Three node layers live in one store:

* object nodes hold entity labels and are joined by *simple* relations,
* thesis nodes hold self-contained statements and act as hubs whose *hyper*
  edges point at the object nodes the statement mentions,
* episodic nodes hold the original source text and act as hubs whose
  *episodic* edges point at every object and thesis produced from it.

Every node carries a unit-norm embedding computed once at insertion.
"""

from __future__ import annotations

import base64
import copy
import logging
import os
import tempfile
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .embedding import EmbeddingProvider, HashingEmbedder, normalize
from .errors import (
    EmptyField,
    EmptyLabel,
    EmptyStatement,
    FormatError,
    KnowledgeKindError,
    MemberKindViolation,
    UnknownId,
    UnknownMember,
)

logger = logging.getLogger(__name__)

FORMAT_HEADER = "graphmem-v1"

NodeId = str
EdgeId = str


class NodeKind(str, Enum):
    OBJECT = "object"
    THESIS = "thesis"
    EPISODIC = "episodic"


class EdgeKind(str, Enum):
    SIMPLE = "simple"
    HYPER = "hyper"
    EPISODIC = "episodic"


ALL_NODE_KINDS = frozenset(NodeKind)


def normalize_label(label: str) -> str:
    """Identity key for object labels: case-folded, whitespace collapsed."""
    return " ".join(label.casefold().split())


@dataclass(frozen=True)
class Triplet:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        for name in ("subject", "relation", "object"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise EmptyField(f"triplet {name} is empty")
            object.__setattr__(self, name, value.strip())

    def __str__(self) -> str:
        return f"({self.subject}, {self.relation}, {self.object})"

    @property
    def canonical(self) -> str:
        return str(self)

    def as_text(self) -> str:
        return f"{self.subject} {self.relation} {self.object}"


@dataclass(frozen=True, eq=False)
class Node:
    id: NodeId
    kind: NodeKind
    content: str
    embedding: np.ndarray = field(repr=False)
    created_at: str | None = None


@dataclass(frozen=True)
class Edge:
    """An undirected link.

    For simple edges ``source``/``target`` are subject/object and
    ``relation`` is the label. For hyper and episodic edges ``source`` is the
    hub (thesis or episodic node) and ``target`` the member.
    """

    id: EdgeId
    kind: EdgeKind
    source: NodeId
    target: NodeId
    relation: str | None = None

    @property
    def hub(self) -> NodeId:
        return self.source

    @property
    def member(self) -> NodeId:
        return self.target

    def other(self, node_id: NodeId) -> NodeId:
        if node_id == self.source:
            return self.target
        if node_id == self.target:
            return self.source
        raise ValueError(f"{node_id} is not an endpoint of edge {self.id}")

    def key(self) -> tuple:
        return (self.kind.value, self.source, self.relation or "", self.target)


@dataclass
class RemovalReport:
    removed_nodes: list[NodeId] = field(default_factory=list)
    removed_edges: dict[str, int] = field(
        default_factory=lambda: {k.value: 0 for k in EdgeKind}
    )

    @property
    def edges_removed(self) -> int:
        return sum(self.removed_edges.values())


@dataclass(frozen=True)
class GraphStats:
    episodic_nodes: int = 0
    thesis_nodes: int = 0
    object_nodes: int = 0
    episodic_relations: int = 0
    hyper_relations: int = 0
    simple_relations: int = 0
    objects_per_episodic: float = 0.0
    theses_per_episodic: float = 0.0
    objects_per_thesis: float = 0.0
    objects_per_object: float = 0.0
    contexts: int = 0
    parse_errors: int = 0

    COLUMNS = (
        ("contexts", "contexts"),
        ("episodic_nodes", "episodic"),
        ("thesis_nodes", "thesis"),
        ("object_nodes", "object"),
        ("episodic_relations", "episodic_rel"),
        ("hyper_relations", "hyper_rel"),
        ("simple_relations", "simple_rel"),
        ("objects_per_episodic", "obj_per_episodic"),
        ("theses_per_episodic", "thesis_per_episodic"),
        ("objects_per_thesis", "obj_per_thesis"),
        ("objects_per_object", "obj_per_obj"),
        ("parse_errors", "parse_errors"),
    )

    def as_dict(self) -> dict:
        return asdict(self)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name, _ in self.COLUMNS)


_SIMPLE_ENDPOINTS = (NodeKind.OBJECT, NodeKind.OBJECT)
_HUB_MEMBER_KINDS = {
    EdgeKind.HYPER: (NodeKind.THESIS, {NodeKind.OBJECT}),
    EdgeKind.EPISODIC: (NodeKind.EPISODIC, {NodeKind.OBJECT, NodeKind.THESIS}),
}


class KnowledgeGraph:
    """Tri-layer hypergraph with label-normalized object identity.

    Mutations are single-writer. Use :meth:`snapshot` to hand an independent
    copy to concurrent readers.
    """

    def __init__(self, embedder: EmbeddingProvider | None = None):
        self.embedder = embedder if embedder is not None else HashingEmbedder()
        self.nodes: dict[NodeId, Node] = {}
        self.edges: dict[EdgeId, Edge] = {}
        # insertion-ordered adjacency, values unused
        self._adj: dict[NodeId, dict[EdgeId, None]] = {}
        self._objects: dict[str, NodeId] = {}
        self._theses: dict[str, NodeId] = {}
        self._edge_keys: dict[tuple, EdgeId] = {}
        self._next_node = 1
        self._next_edge = 1
        self.contexts = 0
        self.parse_errors = 0

    # ------------------------------------------------------------------ ids

    def _new_node_id(self) -> NodeId:
        nid = f"n{self._next_node}"
        self._next_node += 1
        return nid

    def _new_edge_id(self) -> EdgeId:
        eid = f"e{self._next_edge}"
        self._next_edge += 1
        return eid

    # ------------------------------------------------------------- queries

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def object_count(self) -> int:
        return len(self._objects)

    @property
    def thesis_count(self) -> int:
        return len(self._theses)

    def node(self, node_id: NodeId) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownId(node_id) from None

    def edge(self, edge_id: EdgeId) -> Edge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownId(edge_id) from None

    def find_object(self, label: str) -> NodeId | None:
        return self._objects.get(normalize_label(label))

    def nodes_of_kind(self, kind: NodeKind) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == kind]

    def edges_of_kind(self, kind: EdgeKind) -> list[Edge]:
        return [e for e in self.edges.values() if e.kind == kind]

    def incident(self, node_id: NodeId) -> list[Edge]:
        if node_id not in self._adj:
            raise UnknownId(node_id)
        return [self.edges[eid] for eid in self._adj[node_id]]

    def edge_triplet(self, edge: Edge) -> Triplet:
        """String triplet for any edge kind.

        Hyper and episodic edges render as ``(member, <kind>, hub text)``.
        """
        src = self.nodes[edge.source].content
        dst = self.nodes[edge.target].content
        if edge.kind == EdgeKind.SIMPLE:
            return Triplet(src, edge.relation, dst)
        return Triplet(dst, edge.kind.value, src)

    def triplets(self) -> list[Triplet]:
        return [self.edge_triplet(e) for e in self.edges_of_kind(EdgeKind.SIMPLE)]

    # ----------------------------------------------------------- mutation

    def _add_node(self, kind: NodeKind, content: str, created_at: str | None = None) -> NodeId:
        nid = self._new_node_id()
        emb = self.embedder.embed(content)
        self.nodes[nid] = Node(nid, kind, content, emb, created_at)
        self._adj[nid] = {}
        return nid

    def _add_edge(self, kind: EdgeKind, source: NodeId, target: NodeId, relation: str | None = None) -> EdgeId:
        key = (kind.value, source, relation or "", target)
        existing = self._edge_keys.get(key)
        if existing is not None:
            return existing
        eid = self._new_edge_id()
        edge = Edge(eid, kind, source, target, relation)
        self.edges[eid] = edge
        self._edge_keys[key] = eid
        self._adj[source][eid] = None
        self._adj[target][eid] = None
        return eid

    def _drop_edge(self, eid: EdgeId) -> Edge:
        edge = self.edges.pop(eid)
        self._edge_keys.pop(edge.key(), None)
        self._adj[edge.source].pop(eid, None)
        self._adj[edge.target].pop(eid, None)
        return edge

    def upsert_object(self, label: str) -> NodeId:
        if not isinstance(label, str) or not label.strip():
            raise EmptyLabel("object label is empty")
        key = normalize_label(label)
        nid = self._objects.get(key)
        if nid is None:
            nid = self._add_node(NodeKind.OBJECT, " ".join(label.split()))
            self._objects[key] = nid
        return nid

    def add_simple_relation(self, t: Triplet) -> EdgeId:
        subj = self.upsert_object(t.subject)
        obj = self.upsert_object(t.object)
        return self._add_edge(EdgeKind.SIMPLE, subj, obj, t.relation)

    def add_thesis(self, statement: str, entities: Iterable[str] = ()) -> NodeId:
        """Create (or reuse) a thesis hub and link it to its entities.

        Statements are deduplicated by normalized text; repeated calls only
        add hyper edges for entities not yet linked.
        """
        if not isinstance(statement, str) or not statement.strip():
            raise EmptyStatement("thesis statement is empty")
        statement = statement.strip()
        key = normalize_label(statement)
        hub = self._theses.get(key)
        if hub is None:
            hub = self._add_node(NodeKind.THESIS, statement)
            self._theses[key] = hub
        for ent in entities:
            if isinstance(ent, str) and ent.strip():
                self._add_edge(EdgeKind.HYPER, hub, self.upsert_object(ent))
        return hub

    def add_episode(self, text: str, member_ids: Iterable[NodeId] = (), timestamp: str | None = None) -> NodeId:
        """Append an episodic hub over existing object/thesis members.

        Episodes are append-only: identical text yields a new node each call.
        """
        if not isinstance(text, str) or not text.strip():
            raise EmptyStatement("episode text is empty")
        members = list(dict.fromkeys(member_ids))
        for m in members:
            if m not in self.nodes:
                raise UnknownMember(m)
            if self.nodes[m].kind == NodeKind.EPISODIC:
                raise MemberKindViolation(f"episodic node {m} cannot be an episode member")
        hub = self._add_node(NodeKind.EPISODIC, text, timestamp)
        for m in members:
            self._add_edge(EdgeKind.EPISODIC, hub, m)
        return hub

    def remove_knowledge(self, ids: Iterable[str]) -> RemovalReport:
        """Remove simple edges and thesis nodes (with every edge touching them).

        Object nodes stay even when orphaned; episodic nodes are never
        removed. All ids are validated before anything is deleted.
        """
        ids = list(dict.fromkeys(ids))
        for i in ids:
            if i in self.edges:
                continue
            if i in self.nodes:
                kind = self.nodes[i].kind
                if kind != NodeKind.THESIS:
                    raise KnowledgeKindError(f"{kind.value} node {i} is not removable knowledge")
                continue
            raise UnknownId(i)
        report = RemovalReport()
        for i in ids:
            if i in self.edges:
                edge = self._drop_edge(i)
                report.removed_edges[edge.kind.value] += 1
            elif i in self.nodes:
                for eid in list(self._adj[i]):
                    edge = self._drop_edge(eid)
                    report.removed_edges[edge.kind.value] += 1
                node = self.nodes.pop(i)
                del self._adj[i]
                self._theses.pop(normalize_label(node.content), None)
                report.removed_nodes.append(i)
        return report

    # ---------------------------------------------------------- traversal

    def neighborhood(
        self,
        seeds: Iterable[NodeId],
        allowed_kinds: Iterable[NodeKind] | None = None,
        depth: int = 1,
    ) -> dict[NodeId, list[Edge]]:
        """Breadth-first expansion from ``seeds`` up to ``depth`` hops.

        Only nodes whose kind is in ``allowed_kinds`` are visited, and only
        edges with both endpoints allowed are reported.
        """
        allowed = ALL_NODE_KINDS if allowed_kinds is None else frozenset(allowed_kinds)
        seeds = list(seeds)
        for s in seeds:
            if s not in self.nodes:
                raise UnknownId(s)
        result: dict[NodeId, list[Edge]] = {}
        dist: dict[NodeId, int] = {}
        queue: deque[NodeId] = deque()
        for s in seeds:
            if s not in dist and self.nodes[s].kind in allowed:
                dist[s] = 0
                queue.append(s)
        while queue:
            u = queue.popleft()
            edges = []
            for eid in self._adj[u]:
                edge = self.edges[eid]
                v = edge.other(u)
                if self.nodes[v].kind not in allowed:
                    continue
                edges.append(edge)
                if v not in dist and dist[u] < depth:
                    dist[v] = dist[u] + 1
                    queue.append(v)
            result[u] = edges
        return result

    # --------------------------------------------------------------- stats

    def stats(self) -> GraphStats:
        counts = {k: 0 for k in NodeKind}
        for n in self.nodes.values():
            counts[n.kind] += 1
        rel = {k: 0 for k in EdgeKind}
        ep_obj = ep_thesis = 0
        for e in self.edges.values():
            rel[e.kind] += 1
            if e.kind == EdgeKind.EPISODIC:
                if self.nodes[e.member].kind == NodeKind.OBJECT:
                    ep_obj += 1
                else:
                    ep_thesis += 1
        obj_neighbours = 0
        for n in self.nodes.values():
            if n.kind != NodeKind.OBJECT:
                continue
            neigh = {
                self.edges[eid].other(n.id)
                for eid in self._adj[n.id]
                if self.edges[eid].kind == EdgeKind.SIMPLE
            }
            obj_neighbours += len(neigh)

        def ratio(a: int, b: int) -> float:
            return a / b if b else 0.0

        return GraphStats(
            episodic_nodes=counts[NodeKind.EPISODIC],
            thesis_nodes=counts[NodeKind.THESIS],
            object_nodes=counts[NodeKind.OBJECT],
            episodic_relations=rel[EdgeKind.EPISODIC],
            hyper_relations=rel[EdgeKind.HYPER],
            simple_relations=rel[EdgeKind.SIMPLE],
            objects_per_episodic=ratio(ep_obj, counts[NodeKind.EPISODIC]),
            theses_per_episodic=ratio(ep_thesis, counts[NodeKind.EPISODIC]),
            objects_per_thesis=ratio(rel[EdgeKind.HYPER], counts[NodeKind.THESIS]),
            objects_per_object=ratio(obj_neighbours, counts[NodeKind.OBJECT]),
            contexts=self.contexts,
            parse_errors=self.parse_errors,
        )

    def snapshot(self) -> "KnowledgeGraph":
        """Independent copy sharing the (immutable) embeddings and embedder."""
        clone = copy.copy(self)
        clone.nodes = dict(self.nodes)
        clone.edges = dict(self.edges)
        clone._adj = {k: dict(v) for k, v in self._adj.items()}
        clone._objects = dict(self._objects)
        clone._theses = dict(self._theses)
        clone._edge_keys = dict(self._edge_keys)
        return clone

    def check_invariants(self) -> None:
        """Full scan of edge typing and referential integrity; raises AssertionError."""
        for e in self.edges.values():
            assert e.source in self.nodes and e.target in self.nodes, e
            sk, tk = self.nodes[e.source].kind, self.nodes[e.target].kind
            if e.kind == EdgeKind.SIMPLE:
                assert (sk, tk) == _SIMPLE_ENDPOINTS, e
                assert e.relation, e
            else:
                hub_kind, member_kinds = _HUB_MEMBER_KINDS[e.kind]
                assert sk == hub_kind and tk in member_kinds, e
        assert len(self._edge_keys) == len(self.edges)

    # --------------------------------------------------------- persistence

    def save(self, path: str | os.PathLike) -> None:
        path = os.fspath(path)
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".graphmem-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for line in self._dump_lines():
                    fh.write(line + "\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _dump_lines(self) -> Iterator[str]:
        yield FORMAT_HEADER
        yield (
            f"meta next_node={self._next_node} next_edge={self._next_edge} "
            f"contexts={self.contexts} parse_errors={self.parse_errors}"
        )
        for n in self.nodes.values():
            floats = " ".join(repr(float(x)) for x in n.embedding)
            yield f"node {n.id} {n.kind.value} {_b64(n.content)} {floats}"
            if n.created_at is not None:
                yield f"time {n.id} {_b64(n.created_at)}"
        for e in self.edges.values():
            if e.kind == EdgeKind.SIMPLE:
                yield f"edge {e.id} simple {e.source} {_b64(e.relation)} {e.target}"
            else:
                yield f"edge {e.id} {e.kind.value} {e.source} {e.target}"
        yield f"end {len(self.nodes)} {len(self.edges)}"

    @classmethod
    def load(cls, path: str | os.PathLike, embedder: EmbeddingProvider | None = None) -> "KnowledgeGraph":
        path = os.fspath(path)
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        return cls._parse(lines, embedder, path)

    @classmethod
    def _parse(cls, lines: list[str], embedder, path: str | None) -> "KnowledgeGraph":
        g = cls(embedder)
        if not lines or lines[0] != FORMAT_HEADER:
            raise FormatError(f"missing {FORMAT_HEADER!r} header", 1, path)
        ended = False
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            if ended:
                raise FormatError("content after end record", lineno, path)
            parts = line.split(" ")
            tag = parts[0]
            try:
                if tag == "meta":
                    fields = dict(p.split("=", 1) for p in parts[1:])
                    g._next_node = int(fields["next_node"])
                    g._next_edge = int(fields["next_edge"])
                    g.contexts = int(fields.get("contexts", 0))
                    g.parse_errors = int(fields.get("parse_errors", 0))
                elif tag == "node":
                    nid, kind = parts[1], NodeKind(parts[2])
                    content = _unb64(parts[3])
                    if not content.strip():
                        raise ValueError("empty node content")
                    emb = normalize([float(x) for x in parts[4:]])
                    if nid in g.nodes:
                        raise ValueError(f"duplicate node id {nid}")
                    g.nodes[nid] = Node(nid, kind, content, emb)
                    g._adj[nid] = {}
                    if kind == NodeKind.OBJECT:
                        g._objects[normalize_label(content)] = nid
                    elif kind == NodeKind.THESIS:
                        g._theses[normalize_label(content)] = nid
                elif tag == "time":
                    nid = parts[1]
                    old = g.nodes[nid]
                    g.nodes[nid] = Node(nid, old.kind, old.content, old.embedding, _unb64(parts[2]))
                elif tag == "edge":
                    eid, kind = parts[1], EdgeKind(parts[2])
                    if kind == EdgeKind.SIMPLE:
                        if len(parts) != 6:
                            raise ValueError("simple edge needs 6 fields")
                        source, relation, target = parts[3], _unb64(parts[4]), parts[5]
                    else:
                        if len(parts) != 5:
                            raise ValueError(f"{kind.value} edge needs 5 fields")
                        source, relation, target = parts[3], None, parts[4]
                    if source not in g.nodes or target not in g.nodes:
                        raise ValueError(f"edge {eid} references an unknown node")
                    edge = Edge(eid, kind, source, target, relation)
                    g.edges[eid] = edge
                    g._edge_keys[edge.key()] = eid
                    g._adj[source][eid] = None
                    g._adj[target][eid] = None
                elif tag == "end":
                    if (int(parts[1]), int(parts[2])) != (len(g.nodes), len(g.edges)):
                        raise ValueError("record counts do not match end trailer")
                    ended = True
                else:
                    raise ValueError(f"unknown record type {tag!r}")
            except FormatError:
                raise
            except (ValueError, KeyError, IndexError) as exc:
                raise FormatError(str(exc), lineno, path) from None
        if not ended:
            raise FormatError("truncated file: no end record", len(lines), path)
        try:
            g.check_invariants()
        except AssertionError as exc:
            raise FormatError(f"edge typing violated: {exc}", None, path) from None
        return g


def _b64(text: str) -> str:
    return base64.b64encode(text.encode("utf-8")).decode("ascii")


def _unb64(token: str) -> str:
    return base64.b64decode(token.encode("ascii"), validate=True).decode("utf-8")

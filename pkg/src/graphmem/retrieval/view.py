"""Node-type restrictions and the restricted traversal view."""

from __future__ import annotations

from collections import deque
from enum import Enum

from ..graph import ALL_NODE_KINDS, Edge, KnowledgeGraph, NodeId, NodeKind


class NodeRestriction(str, Enum):
    ALL = "All"
    NO_EPISODIC = "E"
    NO_THESIS = "T"
    NO_OBJECT = "O"

    @property
    def prohibited(self) -> frozenset[NodeKind]:
        return _PROHIBITED[self]

    @property
    def allowed(self) -> frozenset[NodeKind]:
        return ALL_NODE_KINDS - self.prohibited

    @classmethod
    def parse(cls, value: "str | NodeRestriction") -> "NodeRestriction":
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for member in cls:
            if text.casefold() in (member.value.casefold(), member.name.casefold()):
                return member
        raise ValueError(f"unknown node restriction {value!r}; expected one of All, E, T, O")


_PROHIBITED = {
    NodeRestriction.ALL: frozenset(),
    NodeRestriction.NO_EPISODIC: frozenset({NodeKind.EPISODIC}),
    NodeRestriction.NO_THESIS: frozenset({NodeKind.THESIS}),
    NodeRestriction.NO_OBJECT: frozenset({NodeKind.OBJECT}),
}


class GraphView:
    """Read-only view in which prohibited-kind nodes do not exist.

    Hubs (thesis and episodic nodes) are ordinary vertices here, so a path may
    pass through them. Adjacency lists are memoized; the underlying graph must
    not be mutated while the view is in use.
    """

    def __init__(self, graph: KnowledgeGraph, restriction: NodeRestriction | str = NodeRestriction.ALL):
        self.graph = graph
        self.restriction = NodeRestriction.parse(restriction)
        self._allowed = self.restriction.allowed
        self._adj: dict[NodeId, list[tuple[Edge, NodeId]]] = {}

    def visible(self, node_id: NodeId) -> bool:
        node = self.graph.nodes.get(node_id)
        return node is not None and node.kind in self._allowed

    def nodes(self) -> list[NodeId]:
        return [nid for nid, n in self.graph.nodes.items() if n.kind in self._allowed]

    def neighbors(self, node_id: NodeId) -> list[tuple[Edge, NodeId]]:
        cached = self._adj.get(node_id)
        if cached is not None:
            return cached
        if not self.visible(node_id):
            out: list[tuple[Edge, NodeId]] = []
        else:
            out = []
            for edge in self.graph.incident(node_id):
                other = edge.other(node_id)
                if self.visible(other):
                    out.append((edge, other))
        self._adj[node_id] = out
        return out

    def bfs_distances(self, source: NodeId) -> dict[NodeId, int]:
        if not self.visible(source):
            return {}
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for _, v in self.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


def apply_restriction(graph: KnowledgeGraph, restriction: NodeRestriction | str) -> GraphView:
    return GraphView(graph, restriction)

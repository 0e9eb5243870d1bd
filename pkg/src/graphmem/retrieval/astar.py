"""A* shortest paths between question entities.

The graph is treated as unweighted and undirected (every hop costs 1).
Similarities between unit embeddings are turned into costs as
``(1 - dot) / 2`` so the heuristic lives on the same [0, 1] scale as a hop.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from typing import Sequence

import numpy as np

from ..graph import Edge, KnowledgeGraph, NodeId
from .config import AStarConfig
from .items import RetrievedTriplets, item_from_edge
from .view import GraphView, NodeRestriction

logger = logging.getLogger(__name__)


class NoPath(Exception):
    """No path within the depth and expansion budgets."""


def ip_cost(a: np.ndarray, b: np.ndarray) -> float:
    return (1.0 - float(np.dot(a, b))) / 2.0


class Heuristic:
    """Estimated remaining cost from ``current`` to ``goal``.

    ``ip``
        embedding cost between current and goal.
    ``weighted_sp``
        BFS hop distance to the goal times the ``ip`` cost.
    ``avg_weighted_sp``
        mean of the costs of consecutive nodes along the path walked so far
        plus the current-to-goal cost, times the BFS hop distance.
    ``zero``
        always 0; plain uniform-cost search.

    Goals unreachable in the view get ``inf``. BFS distances are cached per
    goal.
    """

    def __init__(self, view: GraphView, h_metric: str):
        self.view = view
        self.h_metric = h_metric
        self._dist: dict[NodeId, dict[NodeId, int]] = {}

    def _emb(self, node_id: NodeId) -> np.ndarray:
        return self.view.graph.nodes[node_id].embedding

    def hops(self, current: NodeId, goal: NodeId) -> float:
        if goal not in self._dist:
            self._dist[goal] = self.view.bfs_distances(goal)
        d = self._dist[goal].get(current)
        return math.inf if d is None else float(d)

    def __call__(
        self,
        current: NodeId,
        goal: NodeId,
        path_so_far: Sequence[NodeId] = (),
        q_embedding: np.ndarray | None = None,
    ) -> float:
        # q_embedding is accepted for interface symmetry; none of the metrics use it
        if self.h_metric == "zero":
            return 0.0 if self.hops(current, goal) < math.inf else math.inf
        if self.h_metric == "ip":
            if self.hops(current, goal) == math.inf:
                return math.inf
            return ip_cost(self._emb(current), self._emb(goal))
        length = self.hops(current, goal)
        if length == math.inf:
            return math.inf
        if self.h_metric == "weighted_sp":
            return length * ip_cost(self._emb(current), self._emb(goal))
        if self.h_metric == "avg_weighted_sp":
            path = list(path_so_far) or [current]
            if path[-1] != current:
                path.append(current)
            costs = [ip_cost(self._emb(a), self._emb(b)) for a, b in zip(path, path[1:])]
            costs.append(ip_cost(self._emb(current), self._emb(goal)))
            return length * (sum(costs) / len(costs))
        raise ValueError(f"unknown h_metric {self.h_metric!r}")


def heuristic(
    view: GraphView,
    h_metric: str,
    current: NodeId,
    goal: NodeId,
    path_so_far: Sequence[NodeId] = (),
    q_embedding: np.ndarray | None = None,
) -> float:
    return Heuristic(view, h_metric)(current, goal, path_so_far, q_embedding)


def _walk_back(parent: dict, node: NodeId) -> tuple[list[NodeId], list[Edge]]:
    nodes, edges = [node], []
    while parent[node] is not None:
        prev, edge = parent[node]
        nodes.append(prev)
        edges.append(edge)
        node = prev
    return nodes[::-1], edges[::-1]


def astar_path(
    view: GraphView,
    start: NodeId,
    goal: NodeId,
    h: Heuristic,
    max_depth: int,
    max_passed_nodes: int,
    q_embedding: np.ndarray | None = None,
) -> list[Edge]:
    """Edges of the path found from ``start`` to ``goal``.

    At most ``max_passed_nodes`` nodes are expanded and no path longer than
    ``max_depth`` hops is considered; :class:`NoPath` otherwise.
    """
    if not (view.visible(start) and view.visible(goal)):
        raise NoPath(f"{start} or {goal} is not visible")
    if start == goal:
        return []
    tie = itertools.count()
    g = {start: 0}
    parent: dict[NodeId, tuple[NodeId, Edge] | None] = {start: None}
    h0 = h(start, goal, [start], q_embedding)
    if h0 == math.inf:
        raise NoPath(f"{goal} unreachable from {start}")
    heap = [(h0, next(tie), start)]
    closed: set[NodeId] = set()
    expanded = 0
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == goal:
            return _walk_back(parent, u)[1]
        if expanded >= max_passed_nodes:
            raise NoPath(f"expansion budget of {max_passed_nodes} exhausted")
        expanded += 1
        closed.add(u)
        if g[u] >= max_depth:
            continue
        path_u = None
        for edge, v in view.neighbors(u):
            if v in closed:
                continue
            ng = g[u] + 1
            if ng >= g.get(v, math.inf):
                continue
            if path_u is None:
                path_u = _walk_back(parent, u)[0]
            hv = h(v, goal, path_u + [v], q_embedding)
            if hv == math.inf:
                continue
            g[v] = ng
            parent[v] = (u, edge)
            heapq.heappush(heap, (ng + hv, next(tie), v))
    raise NoPath(f"no path from {start} to {goal} within {max_depth} hops")


def astar_retrieve(
    graph: KnowledgeGraph,
    start_nodes: Sequence[NodeId],
    goal_nodes: Sequence[NodeId],
    q_embedding: np.ndarray | None,
    cfg: AStarConfig | None = None,
    restriction: NodeRestriction | str = NodeRestriction.ALL,
    view: GraphView | None = None,
) -> RetrievedTriplets:
    """Triplets on the A* paths for every (start, goal) pair with start != goal."""
    cfg = cfg or AStarConfig()
    view = view or GraphView(graph, restriction)
    h = Heuristic(view, cfg.h_metric)
    result = RetrievedTriplets(algorithm="astar", provenance={"paths": [], "no_path": []})
    for s in dict.fromkeys(start_nodes):
        for t in dict.fromkeys(goal_nodes):
            if s == t:
                continue
            try:
                path = astar_path(view, s, t, h, cfg.max_depth, cfg.max_passed_nodes, q_embedding)
            except NoPath as exc:
                logger.debug("A* %s -> %s: %s", s, t, exc)
                result.provenance["no_path"].append((s, t))
                continue
            result.provenance["paths"].append((s, t, [e.id for e in path]))
            result.extend(item_from_edge(graph, e) for e in path)
    return result

"""BeamSearch over the graph, scoring paths by similarity to the question.

A path's relevance is an exponentially weighted mean of its per-edge scores
(inner product between the question embedding and the edge's evidence
embedding), weighting the k-th of d edges by ``mean_alpha ** (d - k)`` so the
most recent hop counts most.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..graph import Edge, EdgeId, KnowledgeGraph, NodeId
from .config import BeamSearchConfig
from .items import RetrievedTriplets, item_embedding, item_from_edge
from .view import GraphView, NodeRestriction

logger = logging.getLogger(__name__)


def weighted_relevance(scores: Sequence[float], alpha: float) -> float:
    if not scores:
        return float("-inf")
    depth = len(scores)
    weights = [alpha ** (depth - k) for k in range(1, depth + 1)]
    return sum(w * s for w, s in zip(weights, scores)) / sum(weights)


@dataclass(frozen=True)
class BeamPath:
    start: NodeId
    nodes: tuple[NodeId, ...]
    edges: tuple[Edge, ...]
    scores: tuple[float, ...]
    labels: tuple[str, ...]
    relevance: float

    @property
    def last(self) -> NodeId:
        return self.nodes[-1]

    @property
    def edge_ids(self) -> tuple[EdgeId, ...]:
        return tuple(e.id for e in self.edges)

    def __len__(self) -> int:
        return len(self.edges)


def path_sort_key(path) -> tuple:
    """Best first: higher relevance, then fewer edges, then lexicographic text."""
    return (-path.relevance, len(path.edges), tuple(getattr(path, "labels", ())))


def select_paths(ended: Sequence, continuous: Sequence, mode: str, max_paths: int) -> list:
    """Final path selection.

    ``ended_first`` takes the best ended paths and tops up with the best
    continuous ones; ``continuous_first`` is the mirror image; ``mixed`` pools
    both and takes the best ``max_paths``.
    """
    ended = sorted(ended, key=path_sort_key)
    continuous = sorted(continuous, key=path_sort_key)
    if mode == "ended_first":
        chosen = ended[:max_paths]
        return chosen + continuous[: max_paths - len(chosen)]
    if mode == "continuous_first":
        chosen = continuous[:max_paths]
        return chosen + ended[: max_paths - len(chosen)]
    if mode == "mixed":
        return sorted([*ended, *continuous], key=path_sort_key)[:max_paths]
    raise ValueError(f"unknown final_sorting_mode {mode!r}")


class _Scorer:
    def __init__(self, graph: KnowledgeGraph, q_embedding: np.ndarray):
        self.graph = graph
        self.q = q_embedding
        self._cache: dict[EdgeId, tuple[float, str]] = {}

    def __call__(self, edge: Edge) -> tuple[float, str]:
        hit = self._cache.get(edge.id)
        if hit is None:
            item = item_from_edge(self.graph, edge)
            hit = (float(np.dot(self.q, item_embedding(self.graph, item))), item.key)
            self._cache[edge.id] = hit
        return hit


def _shares(a: BeamPath, b: BeamPath, by_node: bool, by_rel: bool) -> bool:
    """True if ``a`` and ``b`` intersect in a way the flags forbid."""
    if not by_node:
        common = set(a.nodes) & set(b.nodes)
        common.discard(a.start)
        if common:
            return True
    if not by_rel and set(a.edge_ids) & set(b.edge_ids):
        return True
    return False


def beam_paths(view: GraphView, start: NodeId, scorer: _Scorer, cfg: BeamSearchConfig) -> tuple[list[BeamPath], list[BeamPath]]:
    """Grow the beam from ``start``; returns ``(ended, continuous)`` paths."""
    if not view.visible(start):
        return [], []
    beam = [BeamPath(start, (start,), (), (), (), float("-inf"))]
    ended: list[BeamPath] = []
    check_intersections = not (cfg.diff_paths_intersection_by_node and cfg.diff_paths_intersection_by_rel)
    for _ in range(cfg.max_depth):
        candidates: list[tuple[int, BeamPath]] = []
        for pi, p in enumerate(beam):
            used_edges = set(p.edge_ids)
            visited = set(p.nodes)
            for edge, v in view.neighbors(p.last):
                if edge.id in used_edges:
                    continue
                if not cfg.same_path_intersection_by_node and v in visited:
                    continue
                score, label = scorer(edge)
                scores = p.scores + (score,)
                candidates.append(
                    (pi, BeamPath(start, p.nodes + (v,), p.edges + (edge,), scores, p.labels + (label,),
                                  weighted_relevance(scores, cfg.mean_alpha)))
                )
        candidates.sort(key=lambda c: path_sort_key(c[1]))
        accepted: list[BeamPath] = []
        extended: set[int] = set()
        for pi, cand in candidates:
            if len(accepted) >= cfg.max_paths:
                break
            if check_intersections:
                others = [*ended, *accepted, *(q for j, q in enumerate(beam) if j != pi and j not in extended)]
                if any(
                    _shares(cand, o, cfg.diff_paths_intersection_by_node, cfg.diff_paths_intersection_by_rel)
                    for o in others
                ):
                    continue
            accepted.append(cand)
            extended.add(pi)
        ended.extend(p for j, p in enumerate(beam) if j not in extended and p.edges)
        beam = accepted
        if not beam:
            break
    return ended, beam


def beamsearch_retrieve(
    graph: KnowledgeGraph,
    start_nodes: Sequence[NodeId],
    q_embedding: np.ndarray,
    cfg: BeamSearchConfig | None = None,
    restriction: NodeRestriction | str = NodeRestriction.ALL,
    view: GraphView | None = None,
) -> RetrievedTriplets:
    """Run one beam per start node and collect the triplets of the selected paths."""
    cfg = cfg or BeamSearchConfig()
    view = view or GraphView(graph, restriction)
    scorer = _Scorer(graph, q_embedding)
    result = RetrievedTriplets(algorithm="beamsearch", provenance={"paths": []})
    for start in dict.fromkeys(start_nodes):
        ended, continuous = beam_paths(view, start, scorer, cfg)
        ended_set = {id(p) for p in ended}
        for path in select_paths(ended, continuous, cfg.final_sorting_mode, cfg.max_paths):
            result.provenance["paths"].append(
                {
                    "start": start,
                    "nodes": list(path.nodes),
                    "edges": list(path.edge_ids),
                    "relevance": path.relevance,
                    "status": "ended" if id(path) in ended_set else "continuous",
                }
            )
            result.extend(item_from_edge(graph, e) for e in path.edges)
    return result

"""WaterCircles: lockstep ring expansion from every question entity.

Each entity grows its own breadth-first "circle" one ring per step, all
entities advancing together. Once the circles of two entities touch, every
edge on a shortest path between them is a *chain* edge: these form the
primary list. Other simple edges crossed by any circle form the secondary
list. Thesis and episodic hubs the circles reach are ranked by how many of
the other question entities their text mentions.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..graph import Edge, EdgeId, EdgeKind, KnowledgeGraph, NodeId, NodeKind
from .config import WaterCirclesConfig
from .items import RetrievedItem, RetrievedTriplets, item_from_edge
from .view import GraphView, NodeRestriction

logger = logging.getLogger(__name__)


@dataclass
class _Circle:
    source: NodeId
    dist: dict[NodeId, int]
    preds: dict[NodeId, list[tuple[Edge, NodeId]]]
    frontier: list[NodeId]


@dataclass
class HubHit:
    hub: NodeId
    edge: Edge
    source: NodeId
    ring: int
    n_intersections: int = 0


@dataclass
class Expansion:
    """Everything one WaterCircles run saw, before truncation."""

    chain: list[EdgeId] = field(default_factory=list)
    traversed: list[EdgeId] = field(default_factory=list)
    hubs: list[HubHit] = field(default_factory=list)
    meetings: dict[tuple[NodeId, NodeId], int] = field(default_factory=dict)
    rings: int = 0


def count_intersections(text: str, labels: Sequence[str], exclude: str | None = None) -> int:
    """Distinct ``labels`` (other than ``exclude``) occurring in ``text``, case-insensitively."""
    haystack = text.casefold()
    skip = exclude.casefold() if exclude is not None else None
    seen = set()
    for label in labels:
        key = label.casefold()
        if key == skip or key in seen or not key:
            continue
        if key in haystack:
            seen.add(key)
    return len(seen)


def _backtrack(circle: _Circle, starts: set[NodeId], out: dict[EdgeId, None]) -> None:
    stack = list(starts)
    seen = set(stack)
    while stack:
        v = stack.pop()
        for edge, u in circle.preds.get(v, ()):
            out.setdefault(edge.id, None)
            if u not in seen:
                seen.add(u)
                stack.append(u)


def expand(
    view: GraphView,
    entity_nodes: Sequence[NodeId],
    cfg: WaterCirclesConfig,
) -> Expansion:
    sources = [n for n in dict.fromkeys(entity_nodes) if view.visible(n)]
    result = Expansion()
    if not sources:
        return result
    circles = [_Circle(s, {s: 0}, {s: []}, [s]) for s in sources]
    pending = set(itertools.combinations(range(len(circles)), 2))
    chain: dict[EdgeId, None] = {}
    traversed: dict[EdgeId, None] = {}
    hubs: dict[NodeId, HubHit] = {}
    n_simple = 0
    n_hub = {NodeKind.THESIS: 0, NodeKind.EPISODIC: 0}

    def satisfied() -> bool:
        return (
            not pending
            and n_simple >= cfg.other_triplets_num + cfg.chain_triplets_num
            and n_hub[NodeKind.THESIS] >= cfg.hyper_num
            and n_hub[NodeKind.EPISODIC] >= cfg.episodic_num
        )

    ring = 0
    while any(c.frontier for c in circles) and not (ring > 0 and satisfied()):
        ring += 1
        for c in circles:
            nxt = []
            for u in c.frontier:
                for edge, v in view.neighbors(u):
                    if edge.id not in traversed:
                        traversed[edge.id] = None
                        if edge.kind == EdgeKind.SIMPLE:
                            n_simple += 1
                    kind = view.graph.nodes[v].kind
                    if kind in n_hub and v not in hubs:
                        hubs[v] = HubHit(v, edge, c.source, ring)
                        n_hub[kind] += 1
                    d = c.dist.get(v)
                    if d is None:
                        c.dist[v] = ring
                        c.preds[v] = [(edge, u)]
                        nxt.append(v)
                    elif d == ring:
                        c.preds[v].append((edge, u))
            c.frontier = nxt
        for i, j in sorted(pending):
            a, b = circles[i], circles[j]
            common = a.dist.keys() & b.dist.keys()
            if not common:
                continue
            length = min(a.dist[m] + b.dist[m] for m in common)
            middle = {m for m in common if a.dist[m] + b.dist[m] == length}
            _backtrack(a, middle, chain)
            _backtrack(b, middle, chain)
            result.meetings[(a.source, b.source)] = length
            pending.discard((i, j))

    result.rings = ring
    result.chain = list(chain)
    result.traversed = list(traversed)
    labels = [view.graph.nodes[s].content for s in sources]
    for hit in hubs.values():
        arriving = view.graph.nodes[hit.source].content
        hit.n_intersections = count_intersections(view.graph.nodes[hit.hub].content, labels, arriving)
    result.hubs = list(hubs.values())
    return result


def watercircles_retrieve(
    graph: KnowledgeGraph,
    entity_nodes: Sequence[NodeId],
    q_embedding: np.ndarray | None = None,
    cfg: WaterCirclesConfig | None = None,
    restriction: NodeRestriction | str = NodeRestriction.ALL,
    view: GraphView | None = None,
) -> RetrievedTriplets:
    cfg = cfg or WaterCirclesConfig()
    view = view or GraphView(graph, restriction)
    exp = expand(view, entity_nodes, cfg)
    prune = cfg.text_pruning_chars if cfg.do_text_pruning else None

    chain_ids = list(exp.chain)
    if not cfg.strict_filter:
        strict_ids = set(chain_ids)
        chain_nodes = set()
        for eid in chain_ids:
            e = graph.edges[eid]
            chain_nodes.update((e.source, e.target))
        extra = [
            eid for eid in exp.traversed
            if eid not in strict_ids
            and graph.edges[eid].kind == EdgeKind.SIMPLE
            and {graph.edges[eid].source, graph.edges[eid].target} & chain_nodes
        ]
        chain_ids += extra
    chain_set = set(chain_ids)
    other_ids = [
        eid for eid in exp.traversed
        if eid not in chain_set and graph.edges[eid].kind == EdgeKind.SIMPLE
    ]

    def as_item(eid: EdgeId) -> RetrievedItem:
        return item_from_edge(graph, graph.edges[eid], prune_chars=prune)

    primary = [as_item(e) for e in chain_ids]
    secondary = [as_item(e) for e in other_ids]
    ranked = sorted(exp.hubs, key=lambda h: -h.n_intersections)
    hyper = [h for h in ranked if graph.nodes[h.hub].kind == NodeKind.THESIS]
    episodic = [h for h in ranked if graph.nodes[h.hub].kind == NodeKind.EPISODIC]

    def hub_item(hit: HubHit) -> RetrievedItem:
        return item_from_edge(graph, hit.edge, hub=hit.hub, prune_chars=prune)

    result = RetrievedTriplets(algorithm="watercircles")
    result.extend(primary[: cfg.chain_triplets_num])
    result.extend(secondary[: cfg.other_triplets_num])
    result.extend(hub_item(h) for h in hyper[: cfg.hyper_num])
    result.extend(hub_item(h) for h in episodic[: cfg.episodic_num])
    result.provenance = {
        "chain": chain_ids,
        "other": other_ids,
        "hyper": [(h.hub, h.n_intersections) for h in hyper],
        "episodic": [(h.hub, h.n_intersections) for h in episodic],
        "meetings": exp.meetings,
        "rings": exp.rings,
    }
    return result

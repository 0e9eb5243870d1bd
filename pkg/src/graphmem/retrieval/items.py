"""Retrieval result types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from ..graph import Edge, EdgeId, EdgeKind, KnowledgeGraph, NodeId, NodeKind, Triplet


@dataclass(frozen=True)
class RetrievedItem:
    """One piece of evidence.

    Simple edges are plain triplets. Hyper and episodic items stand for the
    hub they lead to: ``text`` is the hub content and ``key`` is derived from
    the hub, so one thesis or episode appears at most once however many of
    its edges were walked.
    """

    kind: EdgeKind
    edge_id: EdgeId
    triplet: Triplet
    text: str
    hub_id: NodeId | None = None

    @property
    def key(self) -> str:
        if self.hub_id is None:
            return self.triplet.canonical
        return f"<{self.hub_id}> {self.text}"

    def __str__(self) -> str:
        return self.text


def item_from_edge(graph: KnowledgeGraph, edge: Edge, hub: NodeId | None = None, prune_chars: int | None = None) -> RetrievedItem:
    triplet = graph.edge_triplet(edge)
    if edge.kind == EdgeKind.SIMPLE and hub is None:
        return RetrievedItem(edge.kind, edge.id, triplet, triplet.canonical)
    hub = hub if hub is not None else edge.hub
    text = graph.nodes[hub].content
    if prune_chars is not None and graph.nodes[hub].kind == NodeKind.EPISODIC and len(text) > prune_chars:
        text = text[:prune_chars].rstrip() + " ..."
    return RetrievedItem(edge.kind, edge.id, triplet, text, hub)


def item_embedding(graph: KnowledgeGraph, item: RetrievedItem) -> np.ndarray:
    """Embedding used to rank an item against a question.

    Hub items reuse the hub node's stored embedding; simple triplets embed
    their ``subject relation object`` text.
    """
    if item.hub_id is not None and item.hub_id in graph.nodes:
        return graph.nodes[item.hub_id].embedding
    return graph.embedder.embed(item.triplet.as_text())


@dataclass
class RetrievedTriplets:
    items: list[RetrievedItem] = field(default_factory=list)
    algorithm: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        unique: dict[str, RetrievedItem] = {}
        for item in self.items:
            unique.setdefault(item.key, item)
        self.items = list(unique.values())

    def extend(self, items: Iterable[RetrievedItem]) -> None:
        seen = {i.key for i in self.items}
        for item in items:
            if item.key not in seen:
                seen.add(item.key)
                self.items.append(item)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[RetrievedItem]:
        return iter(self.items)

    def keys(self) -> list[str]:
        return [i.key for i in self.items]

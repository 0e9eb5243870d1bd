"""Run several retrieval algorithms and take the union of their outputs."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from ..graph import KnowledgeGraph, NodeId
from .astar import astar_retrieve
from .beamsearch import beamsearch_retrieve
from .config import AlgorithmConfig, AStarConfig, BeamSearchConfig, WaterCirclesConfig
from .items import RetrievedTriplets
from .view import GraphView, NodeRestriction
from .watercircles import watercircles_retrieve

logger = logging.getLogger(__name__)


def retrieve(
    graph: KnowledgeGraph,
    entity_nodes: Sequence[NodeId],
    q_embedding: np.ndarray,
    cfg: AlgorithmConfig,
    restriction: NodeRestriction | str = NodeRestriction.ALL,
    view: GraphView | None = None,
) -> RetrievedTriplets:
    """Dispatch on the config type. A* pairs every entity with every other one."""
    view = view or GraphView(graph, restriction)
    if isinstance(cfg, AStarConfig):
        return astar_retrieve(graph, entity_nodes, entity_nodes, q_embedding, cfg, view=view)
    if isinstance(cfg, WaterCirclesConfig):
        return watercircles_retrieve(graph, entity_nodes, q_embedding, cfg, view=view)
    if isinstance(cfg, BeamSearchConfig):
        return beamsearch_retrieve(graph, entity_nodes, q_embedding, cfg, view=view)
    raise ConfigError(f"not a retrieval config: {cfg!r}")


def mixed_retrieve(
    graph: KnowledgeGraph,
    entity_nodes: Sequence[NodeId],
    q_embedding: np.ndarray,
    combo: Sequence[AlgorithmConfig],
    restriction: NodeRestriction | str = NodeRestriction.ALL,
) -> RetrievedTriplets:
    """Order-preserving union of each component's output, in combo order.

    A failing component is logged and skipped.
    """
    if not combo:
        raise ConfigError("empty retrieval combo")
    view = GraphView(graph, restriction)
    result = RetrievedTriplets(algorithm="+".join(c.name for c in combo), provenance={"components": []})
    for cfg in combo:
        try:
            part = retrieve(graph, entity_nodes, q_embedding, cfg, view=view)
        except Exception:
            logger.exception("%s retrieval failed", cfg.name)
            result.provenance["components"].append({"algorithm": cfg.name, "error": True})
            continue
        result.provenance["components"].append(
            {"algorithm": cfg.name, "count": len(part), "provenance": part.provenance}
        )
        result.extend(part)
    return result

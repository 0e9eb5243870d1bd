"""Graph-traversal retrieval: A*, WaterCircles, BeamSearch and their unions."""

from .astar import Heuristic, NoPath, astar_path, astar_retrieve, heuristic, ip_cost
from .beamsearch import BeamPath, beamsearch_retrieve, path_sort_key, select_paths, weighted_relevance
from .config import (
    AStarConfig,
    AlgorithmConfig,
    BeamSearchConfig,
    WaterCirclesConfig,
    combo_label,
    config_from_mapping,
    parse_combo,
)
from .items import RetrievedItem, RetrievedTriplets, item_embedding, item_from_edge
from .mixed import mixed_retrieve, retrieve
from .view import GraphView, NodeRestriction, apply_restriction
from .watercircles import count_intersections, expand, watercircles_retrieve

__all__ = [
    "AStarConfig",
    "AlgorithmConfig",
    "BeamPath",
    "BeamSearchConfig",
    "GraphView",
    "Heuristic",
    "NoPath",
    "NodeRestriction",
    "RetrievedItem",
    "RetrievedTriplets",
    "WaterCirclesConfig",
    "apply_restriction",
    "astar_path",
    "astar_retrieve",
    "beamsearch_retrieve",
    "combo_label",
    "config_from_mapping",
    "count_intersections",
    "expand",
    "heuristic",
    "ip_cost",
    "item_embedding",
    "item_from_edge",
    "mixed_retrieve",
    "parse_combo",
    "path_sort_key",
    "retrieve",
    "select_paths",
    "watercircles_retrieve",
    "weighted_relevance",
]

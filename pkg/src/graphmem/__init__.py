"""Hypergraph knowledge memory with graph-traversal retrieval for question answering."""

from .embedding import HashingEmbedder
from .graph import EdgeKind, GraphStats, KnowledgeGraph, NodeKind, Triplet
from .memorize import Memorizer
from .qa import Answer, AnswerKind, QAConfig, QAPipeline

__all__ = [
    "Answer",
    "AnswerKind",
    "EdgeKind",
    "GraphStats",
    "HashingEmbedder",
    "KnowledgeGraph",
    "Memorizer",
    "NodeKind",
    "QAConfig",
    "QAPipeline",
    "Triplet",
]
__version__ = "0.1.0"

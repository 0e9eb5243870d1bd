import random
from pathlib import Path

import pytest

from graphmem.embedding import HashingEmbedder
from graphmem.graph import KnowledgeGraph, NodeKind, Triplet
from graphmem.llm import load_mock_script
from graphmem.memorize import Memorizer

FIXTURES = Path(__file__).parent / "fixtures"
MOCK_SCRIPT = FIXTURES / "mona_lisa_mock.yaml"
CORPUS = FIXTURES / "mona_lisa_corpus.jsonl"

MONA_LISA = (
    "Mona Lisa, oil painting on a poplar wood panel by Leonardo da Vinci, probably the world’s most "
    "famous painting. It was painted sometime between 1503 and 1519."
)
MONA_LISA_TRIPLETS = [
    Triplet("Mona Lisa", "is a", "oil painting"),
    Triplet("Mona Lisa", "painted on", "poplar wood"),
    Triplet("Mona Lisa", "creator", "Leonardo da Vinci"),
    Triplet("Mona Lisa", "inception", "1503-1519"),
]
MONA_LISA_THESES = [
    ("Mona Lisa is an oil painting", ["Mona Lisa", "oil painting"]),
    ("Mona Lisa was painted on poplar wood", ["Mona Lisa", "poplar wood"]),
    ("Mona Lisa was painted by Leonardo da Vinci between 1503 and 1519", ["Mona Lisa", "Leonardo da Vinci", "1503-1519"]),
]


def fenced(*lines: str) -> str:
    return "```\n" + "\n".join(lines) + "\n```"


@pytest.fixture
def mocks():
    return load_mock_script(MOCK_SCRIPT)


@pytest.fixture
def mona_lisa_graph(mocks):
    g = KnowledgeGraph()
    Memorizer(g, mocks["extractor"]).memorize(MONA_LISA, "2024-01-01T00:00:00")
    return g


def build_mona_lisa_by_hand() -> KnowledgeGraph:
    g = KnowledgeGraph()
    for t in MONA_LISA_TRIPLETS:
        g.add_simple_relation(t)
    theses = [g.add_thesis(s, ents) for s, ents in MONA_LISA_THESES]
    objects = [n.id for n in g.nodes_of_kind(NodeKind.OBJECT)]
    g.add_episode(MONA_LISA, objects + theses)
    return g


def random_graph(rng: random.Random, max_nodes: int = 50, embedder=None) -> KnowledgeGraph:
    """Random mixed-kind graph with ≤ max_nodes nodes and typed edges only."""
    g = KnowledgeGraph(embedder or HashingEmbedder(dim=32))
    n_total = rng.randint(1, max_nodes)
    n_obj = max(1, int(n_total * rng.uniform(0.4, 0.8)))
    n_thesis = rng.randint(0, max(0, (n_total - n_obj) // 2 + 1))
    n_ep = max(0, n_total - n_obj - n_thesis)
    labels = [f"obj{i}" for i in range(n_obj)]
    objects = [g.upsert_object(label) for label in labels]
    for _ in range(rng.randint(0, 2 * n_obj)):
        a, b = rng.choice(labels), rng.choice(labels)
        g.add_simple_relation(Triplet(a, rng.choice(["r1", "r2", "r3"]), b))
    theses = []
    for i in range(n_thesis):
        ents = rng.sample(labels, k=rng.randint(0, min(3, len(labels))))
        theses.append(g.add_thesis(f"thesis {i} about " + " and ".join(ents or ["nothing"]), ents))
    for i in range(n_ep):
        pool = objects + theses
        members = rng.sample(pool, k=rng.randint(0, min(4, len(pool))))
        g.add_episode(f"episode {i} text " + " ".join(g.nodes[m].content for m in members), members)
    return g


TOY_MOCK = FIXTURES / "toy_mock.yaml"
TOY_QUESTIONS = FIXTURES / "toy_questions.jsonl"
# hand labels for the scripted toy suite: id -> (kind, em, judge_label, flagged)
TOY_LABELS = {
    "q01": ("Text", True, 1, False),
    "q02": ("Text", True, 1, False),
    "q03": ("Text", False, 1, False),
    "q04": ("Text", False, 1, False),
    "q05": ("NoAnswer", False, 0, False),
    "q06": ("NoAnswer", False, 0, False),
    "q07": ("Text", False, 0, False),
    "q08": ("Text", True, 1, False),
    "q09": ("Text", False, 0, True),
    "q10": ("Text", False, 0, False),
}


def toy_setup():
    """Mona Lisa graph built with the toy script, plus its clients."""
    mocks = load_mock_script(TOY_MOCK)
    g = KnowledgeGraph()
    Memorizer(g, mocks["extractor"]).memorize(MONA_LISA, "2024-01-01T00:00:00")
    return g, mocks

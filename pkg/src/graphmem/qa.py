"""Question answering over the memory graph.

Four stages: the LLM lists the question's key entities, the entities are
matched to object nodes, the configured retrieval combo collects candidate
evidence which is then cut down to the items closest to the question, and
finally the LLM answers from that evidence or emits the no-answer token.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .embedding import top_n
from .errors import ConfigError, NoMatches, ParseError
from .graph import EdgeKind, KnowledgeGraph, NodeId, NodeKind
from .llm import ChatRequest, GenerationParams, LLMClient
from .parsing import fenced_lines, parse_item_lines
from .retrieval import (
    AlgorithmConfig,
    NodeRestriction,
    RetrievedItem,
    RetrievedTriplets,
    item_embedding,
    mixed_retrieve,
    parse_combo,
)
from . import prompts

logger = logging.getLogger(__name__)

NO_ANSWER_TOKEN = "[NO_ANSWER]"

_QUOTED = re.compile(r"\"([^\"]+)\"|“([^”]+)”|'([^']{2,})'")
_CAPITALIZED = re.compile(r"\b[A-Z][\w'-]*(?:\s+[A-Z][\w'-]*)*")
_QUESTION_WORDS = frozenset(
    "who what when where which why how whom whose is are was were do does did can could "
    "should would will the a an in on of".split()
)


class AnswerKind(str, Enum):
    TEXT = "Text"
    NO_ANSWER = "NoAnswer"


@dataclass(frozen=True)
class ParsedQuery:
    question: str
    entities: tuple[str, ...]
    degraded: bool = False

    def __post_init__(self):
        clean = tuple(dict.fromkeys(e.strip() for e in self.entities if e and e.strip()))
        object.__setattr__(self, "entities", clean)


@dataclass
class QAConfig:
    combo: list[AlgorithmConfig] = field(default_factory=lambda: parse_combo("wc+bs"))
    restriction: NodeRestriction = NodeRestriction.ALL
    top_n_triplets: int = 15
    entity_match_k: int = 3
    no_answer_token: str = NO_ANSWER_TOKEN
    min_similarity: float = 0.0
    record_timings: bool = True

    def __post_init__(self):
        if isinstance(self.combo, str):
            self.combo = parse_combo(self.combo)
        self.restriction = NodeRestriction.parse(self.restriction)
        if not self.combo:
            raise ConfigError("retrieval combo is empty")
        if self.top_n_triplets < 1 or self.entity_match_k < 1:
            raise ConfigError("top_n_triplets and entity_match_k must be >= 1")
        if not self.no_answer_token:
            raise ConfigError("no_answer_token is empty")


@dataclass
class Answer:
    kind: AnswerKind
    text: str | None = None
    evidence: RetrievedTriplets = field(default_factory=RetrievedTriplets)
    trace: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == AnswerKind.TEXT and not (self.text and self.text.strip()):
            raise ValueError("a Text answer needs text")
        if self.kind == AnswerKind.NO_ANSWER:
            self.text = None

    @property
    def is_no_answer(self) -> bool:
        return self.kind == AnswerKind.NO_ANSWER

    def as_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "text": self.text,
            "evidence": [item.key for item in self.evidence],
            "trace": self.trace,
        }


def fallback_entities(question: str) -> list[str]:
    """Quoted spans and runs of capitalized words, minus question words."""
    found = []
    for m in _QUOTED.finditer(question):
        found.append(next(g for g in m.groups() if g))
    for m in _CAPITALIZED.finditer(question):
        words = m.group(0).split()
        while words and words[0].casefold() in _QUESTION_WORDS:
            words.pop(0)
        if words:
            found.append(" ".join(words))
    return list(dict.fromkeys(found))


def _ask(llm: LLMClient, template: str, params: GenerationParams, prompt_dir: str | None, **values: str) -> str:
    system, user = prompts.load(template, prompt_dir).render(**values)
    return llm.complete(ChatRequest(user=user, system=system, params=params))


def parse_query(
    question: str,
    llm: LLMClient,
    params: GenerationParams | None = None,
    prompt_dir: str | None = None,
) -> ParsedQuery:
    if not question or not question.strip():
        raise ValueError("question is empty")
    response = _ask(llm, "query_entities", params or GenerationParams(), prompt_dir, question=question)
    try:
        entities = parse_item_lines(fenced_lines(response))
    except ParseError as exc:
        logger.info("entity list unparseable (%s); using fallback extraction", exc)
        entities = []
    if entities:
        return ParsedQuery(question, tuple(entities))
    return ParsedQuery(question, tuple(fallback_entities(question)), degraded=True)


def match_entities(
    entities: Sequence[str],
    graph: KnowledgeGraph,
    k: int = 3,
    min_similarity: float = 0.0,
) -> list[NodeId]:
    """Object nodes for the entities: an exact label match, else the k most similar.

    Similarities must exceed ``min_similarity``. Raises :class:`NoMatches` if
    no entity matched anything.
    """
    objects = [(n.id, n.embedding) for n in graph.nodes_of_kind(NodeKind.OBJECT)]
    matched: dict[NodeId, None] = {}
    for entity in entities:
        exact = graph.find_object(entity)
        if exact is not None:
            matched.setdefault(exact)
            continue
        if not objects:
            continue
        for nid, score in top_n(graph.embedder.embed(entity), objects, k):
            if score > min_similarity:
                matched.setdefault(nid)
    if not matched:
        raise NoMatches(f"no graph node matches {list(entities)!r}")
    return list(matched)


def filter_triplets(
    candidates: RetrievedTriplets,
    question: str,
    n: int,
    graph: KnowledgeGraph,
) -> RetrievedTriplets:
    """Top ``n`` candidates by inner product with the question; ties keep input order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q = graph.embedder.embed(question)
    ranked = top_n(q, ((item, item_embedding(graph, item)) for item in candidates), n)
    return RetrievedTriplets(
        [item for item, _ in ranked],
        algorithm=candidates.algorithm,
        provenance={"scores": [round(s, 6) for _, s in ranked]},
    )


def render_evidence(evidence: RetrievedTriplets) -> str:
    lines = []
    for item in evidence:
        if item.kind == EdgeKind.SIMPLE and item.hub_id is None:
            lines.append(item.triplet.canonical)
        else:
            lines.append(item.text)
    return "\n".join(lines)


def generate_answer(
    question: str,
    evidence: RetrievedTriplets,
    llm: LLMClient,
    no_answer_token: str = NO_ANSWER_TOKEN,
    params: GenerationParams | None = None,
    prompt_dir: str | None = None,
) -> Answer:
    if not len(evidence):
        return Answer(AnswerKind.NO_ANSWER, evidence=evidence, trace={"reason": "EmptyEvidence"})
    response = _ask(
        llm,
        "answer",
        params or GenerationParams(),
        prompt_dir,
        context=render_evidence(evidence),
        question=question,
        no_answer_token=no_answer_token,
    ).strip()
    if not response or no_answer_token in response:
        reason = "NoAnswerToken" if response else "EmptyResponse"
        return Answer(AnswerKind.NO_ANSWER, evidence=evidence, trace={"reason": reason})
    return Answer(AnswerKind.TEXT, response, evidence)


class QAPipeline:
    """Binds a graph, LLM clients and a :class:`QAConfig`.

    ``parser`` handles entity extraction and defaults to ``generator``.
    Transport failures propagate; every other stage failure becomes a
    NoAnswer with the reason in the trace.
    """

    def __init__(
        self,
        graph: KnowledgeGraph,
        generator: LLMClient,
        cfg: QAConfig | None = None,
        *,
        parser: LLMClient | None = None,
        params: GenerationParams | None = None,
        prompt_dir: str | None = None,
    ):
        self.graph = graph
        self.generator = generator
        self.parser = parser or generator
        self.cfg = cfg or QAConfig()
        self.params = params or GenerationParams()
        self.prompt_dir = prompt_dir

    def answer(self, question: str) -> Answer:
        cfg = self.cfg
        trace: dict = {}
        clock = _Clock(trace, cfg.record_timings)

        with clock("parse"):
            parsed = parse_query(question, self.parser, self.params, self.prompt_dir)
        trace["entities"] = list(parsed.entities)
        trace["degraded"] = parsed.degraded

        try:
            with clock("match"):
                nodes = match_entities(parsed.entities, self.graph, cfg.entity_match_k, cfg.min_similarity)
        except NoMatches:
            trace["reason"] = "NoMatches"
            return Answer(AnswerKind.NO_ANSWER, trace=trace)
        trace["matched"] = nodes

        with clock("retrieve"):
            q = self.graph.embedder.embed(question)
            candidates = mixed_retrieve(self.graph, nodes, q, cfg.combo, cfg.restriction)
        trace["retrieved"] = len(candidates)

        with clock("filter"):
            evidence = filter_triplets(candidates, question, cfg.top_n_triplets, self.graph)
        trace["filtered"] = len(evidence)

        with clock("generate"):
            result = generate_answer(
                question, evidence, self.generator, cfg.no_answer_token, self.params, self.prompt_dir
            )
        result.trace = {**trace, **result.trace}
        return result


def answer(
    question: str,
    graph: KnowledgeGraph,
    cfg: QAConfig,
    llm: LLMClient,
    **kwargs,
) -> Answer:
    return QAPipeline(graph, llm, cfg, **kwargs).answer(question)


class _Clock:
    """Context manager factory recording per-stage wall time in ms."""

    def __init__(self, trace: dict, enabled: bool):
        self.trace = trace
        self.enabled = enabled
        self._stage = None
        self._t0 = 0.0

    def __call__(self, stage: str) -> "_Clock":
        self._stage = stage
        return self

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        if self.enabled:
            ms = (time.perf_counter() - self._t0) * 1000.0
            self.trace.setdefault("timings_ms", {})[self._stage] = round(ms, 3)
        return False


__all__ = [
    "NO_ANSWER_TOKEN",
    "Answer",
    "AnswerKind",
    "ParsedQuery",
    "QAConfig",
    "QAPipeline",
    "RetrievedItem",
    "answer",
    "fallback_entities",
    "filter_triplets",
    "generate_answer",
    "match_entities",
    "parse_query",
    "render_evidence",
]

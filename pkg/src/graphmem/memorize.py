"""The memorize pipeline: text -> triplets + theses -> graph update.

One call to :meth:`Memorizer.memorize` extracts knowledge with the LLM,
asks the LLM which neighbouring stored knowledge the new facts supersede,
removes it, commits the new simple relations and theses and finally appends
an episodic node over everything the text produced.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import EmptyField, ParseError, SchemaError
from .graph import EdgeKind, KnowledgeGraph, NodeId, NodeKind, Triplet, normalize_label
from .llm import ChatRequest, GenerationParams, LLMClient
from .parsing import fenced_lines, parse_item_lines, parse_thesis_line, parse_triplet_line
from . import prompts

logger = logging.getLogger(__name__)

__all__ = [
    "Triplet",
    "ThesisExtraction",
    "MemorizeReport",
    "Memorizer",
    "read_corpus",
    "build_from_corpus",
]


@dataclass(frozen=True)
class ThesisExtraction:
    statement: str
    entities: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.statement.strip():
            raise EmptyField("thesis statement is empty")
        object.__setattr__(self, "entities", tuple(dict.fromkeys(e.strip() for e in self.entities if e.strip())))


@dataclass
class MemorizeReport:
    triplets_added: int = 0
    theses_added: int = 0
    objects_added: int = 0
    edges_removed: int = 0
    parse_errors: int = 0
    episodic_id: NodeId | None = None
    removed_ids: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


class Memorizer:
    def __init__(
        self,
        graph: KnowledgeGraph,
        llm: LLMClient,
        *,
        params: GenerationParams | None = None,
        prompt_dir: str | None = None,
        similarity_threshold: float = 0.9,
    ):
        self.graph = graph
        self.llm = llm
        self.params = params or GenerationParams()
        self.prompt_dir = prompt_dir
        self.similarity_threshold = similarity_threshold

    def _ask(self, template: str, **values: str) -> str:
        system, user = prompts.load(template, self.prompt_dir).render(**values)
        return self.llm.complete(ChatRequest(user=user, system=system, params=self.params))

    # ---------------------------------------------------------- extraction

    def extract_triplets(self, text: str) -> list[Triplet]:
        lines = fenced_lines(self._ask("extract_triplets", text=text))
        out: dict[str, Triplet] = {}
        for line in lines:
            parts = parse_triplet_line(line)
            if parts is None:
                logger.debug("skipping malformed triplet line %r", line)
                continue
            t = Triplet(*parts)
            out.setdefault(t.canonical, t)
        if lines and not out:
            raise ParseError("no line of the triplet block could be parsed")
        return list(out.values())

    def extract_theses(self, text: str) -> list[ThesisExtraction]:
        lines = fenced_lines(self._ask("extract_theses", text=text))
        out: dict[str, ThesisExtraction] = {}
        parsed_any = False
        for line in lines:
            parsed = parse_thesis_line(line)
            if parsed is None:
                logger.debug("skipping malformed thesis line %r", line)
                continue
            parsed_any = True
            statement, entities = parsed
            if not statement:
                continue
            out.setdefault(normalize_label(statement), ThesisExtraction(statement, tuple(entities)))
        if lines and not parsed_any:
            raise ParseError("no line of the thesis block could be parsed")
        return list(out.values())

    # ------------------------------------------------------------ outdated

    def _match_entity(self, label: str) -> NodeId | None:
        nid = self.graph.find_object(label)
        if nid is not None:
            return nid
        objects = self.graph.nodes_of_kind(NodeKind.OBJECT)
        if not objects:
            return None
        q = self.graph.embedder.embed(label)
        sims = np.array([float(np.dot(q, n.embedding)) for n in objects])
        best = int(np.argmax(sims))
        return objects[best].id if sims[best] >= self.similarity_threshold else None

    def find_outdated(
        self,
        new_triplets: Iterable[Triplet],
        new_theses: Iterable[ThesisExtraction],
        report: MemorizeReport | None = None,
    ) -> list[str]:
        """Ids of stored simple edges / thesis nodes the new knowledge replaces.

        The result is always a subset of the knowledge incident to the
        matched entities, whatever the model answers.
        """
        new_triplets = list(new_triplets)
        new_theses = list(new_theses)
        labels: list[str] = []
        for t in new_triplets:
            labels += [t.subject, t.object]
        for th in new_theses:
            labels += list(th.entities)
        matched = list(dict.fromkeys(m for m in map(self._match_entity, dict.fromkeys(labels)) if m))
        if not matched:
            return []

        seeds = set(matched)
        hood = self.graph.neighborhood(matched, {NodeKind.OBJECT, NodeKind.THESIS}, depth=1)
        simple_candidates: dict[str, Triplet] = {}
        thesis_candidates: dict[str, str] = {}
        for nid in matched:
            for edge in hood.get(nid, []):
                if edge.kind == EdgeKind.SIMPLE and (edge.source in seeds or edge.target in seeds):
                    simple_candidates.setdefault(edge.id, self.graph.edge_triplet(edge))
                elif edge.kind == EdgeKind.HYPER:
                    thesis_candidates.setdefault(edge.hub, self.graph.nodes[edge.hub].content)

        outdated: list[str] = []
        if new_triplets and simple_candidates:
            existing = "\n".join(
                f"[{eid}] ({t.subject} | {t.relation} | {t.object})" for eid, t in simple_candidates.items()
            )
            new = "\n".join(f"({t.subject} | {t.relation} | {t.object})" for t in new_triplets)
            by_text = {t.canonical: eid for eid, t in simple_candidates.items()}
            outdated += self._ask_outdated("outdated_simple", existing, new, simple_candidates, by_text, report)
        if new_theses and thesis_candidates:
            existing = "\n".join(f"[{nid}] {s}" for nid, s in thesis_candidates.items())
            new = "\n".join(th.statement for th in new_theses)
            by_text = {normalize_label(s): nid for nid, s in thesis_candidates.items()}
            outdated += self._ask_outdated("outdated_thesis", existing, new, thesis_candidates, by_text, report)
        return list(dict.fromkeys(outdated))

    def _ask_outdated(self, template, existing, new, candidates, by_text, report) -> list[str]:
        try:
            lines = fenced_lines(self._ask(template, existing=existing, new=new))
        except ParseError:
            if report is not None:
                report.parse_errors += 1
            return []
        found = []
        for item in parse_item_lines(lines):
            ident = item.strip("[]").strip()
            if ident in candidates:
                found.append(ident)
                continue
            if item in by_text:
                found.append(by_text[item])
                continue
            parts = parse_triplet_line(item)
            if parts is not None:
                try:
                    key = Triplet(*parts).canonical
                except EmptyField:
                    key = None
            else:
                key = normalize_label(item)
            if key in by_text:
                found.append(by_text[key])
            else:
                logger.debug("ignoring outdated item outside candidate set: %r", item)
        return found

    # ------------------------------------------------------------ memorize

    def memorize(self, text: str, timestamp: str | None = None) -> MemorizeReport:
        if not text or not text.strip():
            raise ValueError("cannot memorize empty text")
        g = self.graph
        report = MemorizeReport()
        g.contexts += 1

        failed = 0
        try:
            triplets = self.extract_triplets(text)
        except ParseError as exc:
            logger.warning("triplet extraction failed: %s", exc)
            triplets, failed = [], failed + 1
        try:
            theses = self.extract_theses(text)
        except ParseError as exc:
            logger.warning("thesis extraction failed: %s", exc)
            theses, failed = [], failed + 1
        report.parse_errors += failed

        outdated = self.find_outdated(triplets, theses, report)
        if outdated:
            removal = g.remove_knowledge(outdated)
            report.edges_removed = removal.edges_removed
            report.removed_ids = outdated

        objects_before, theses_before = g.object_count, g.thesis_count
        members: list[NodeId] = []
        edges_before = len(g.edges)
        for t in triplets:
            g.add_simple_relation(t)
            members += [g.find_object(t.subject), g.find_object(t.object)]
        report.triplets_added = len(g.edges) - edges_before
        thesis_ids = []
        for th in theses:
            thesis_ids.append(g.add_thesis(th.statement, th.entities))
            members += [g.find_object(e) for e in th.entities]
        report.theses_added = g.thesis_count - theses_before
        report.objects_added = g.object_count - objects_before

        if failed < 2:
            members += thesis_ids
            report.episodic_id = g.add_episode(text, [m for m in members if m], timestamp)
        g.parse_errors += report.parse_errors
        return report


def read_corpus(path: str | os.PathLike) -> Iterator[dict]:
    """Records ``{"id", "text", "timestamp"?}`` from a JSON-lines file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(rec, dict) or not isinstance(rec.get("text"), str):
                raise SchemaError(f"{path}:{lineno}: record needs a 'text' string")
            rec.setdefault("id", str(lineno))
            yield rec


def build_from_corpus(
    memorizer: Memorizer,
    records: Iterable[dict],
    log_path: str | os.PathLike | None = None,
) -> list[MemorizeReport]:
    """Memorize every record, appending one JSON line per record to ``log_path``."""
    reports = []
    log = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        for rec in records:
            text = rec["text"]
            if not text.strip():
                logger.warning("record %s has empty text; skipped", rec["id"])
                continue
            report = memorizer.memorize(text, rec.get("timestamp"))
            reports.append(report)
            if log:
                log.write(json.dumps({"id": rec["id"], **report.as_dict()}, sort_keys=True) + "\n")
                log.flush()
    finally:
        if log:
            log.close()
    return reports

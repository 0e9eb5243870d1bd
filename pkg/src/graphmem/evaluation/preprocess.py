"""Turn raw QA datasets into a question file and a context corpus.

Raw data is read from local JSON / JSONL exports (either the original
HotpotQA layout or the column layout of the public dataset hubs). Outputs
are ``<kind>_qa.jsonl`` with ``{id, question, gold_answer, context_ids}`` and
``<kind>_contexts.jsonl`` with ``{id, text}``, the corpus format ``build``
reads.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from ..errors import MissingRawData, SchemaError
from .splitter import split_text

logger = logging.getLogger(__name__)

MIN_CHARS = 64
MAX_CHARS = 1024
HOTPOT_QA_LIMIT = 2000
TRIVIA_QA_LIMIT = 500
CHUNK_SIZE = 1024
CHUNK_OVERLAP = 64
SEPARATORS = ("\n\n",)

ENV_VARS = {
    "hotpotqa": "GRAPHMEM_HOTPOTQA",
    "triviaqa": "GRAPHMEM_TRIVIAQA",
    "diaasq": "GRAPHMEM_DIAASQ",
}


@dataclass
class QAPair:
    id: str
    question: str
    gold_answer: str
    contexts: list[str]


@dataclass
class PreprocessResult:
    qa_path: Path
    context_path: Path
    counts: dict = field(default_factory=dict)


def in_range(text: str, lo: int = MIN_CHARS, hi: int = MAX_CHARS) -> bool:
    return lo <= len(text) <= hi


def context_id(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:16]


def _iter_records(path: Path) -> Iterator[dict]:
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix in (".json", ".jsonl"))
        for p in files:
            yield from _iter_records(p)
        return
    with open(path, encoding="utf-8") as fh:
        if path.suffix == ".jsonl":
            for line in fh:
                if line.strip():
                    yield json.loads(line)
            return
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("data", data.get("Data", data.get("rows")))
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a list of records")
    for rec in data:
        yield rec.get("row", rec) if isinstance(rec, dict) else rec


def resolve_raw(kind: str, raw_path: str | os.PathLike | None) -> Path:
    if raw_path is None:
        env = ENV_VARS.get(kind)
        raw_path = os.environ.get(env) if env else None
        if raw_path is None:
            raise MissingRawData(f"no raw path given for {kind} and ${env} is unset")
    path = Path(raw_path)
    if not path.exists():
        raise MissingRawData(f"{path} does not exist")
    return path


# HotpotQA


def _hotpot_pair(rec: dict) -> QAPair:
    try:
        qid = str(rec.get("id", rec.get("_id")))
        ctx, facts = rec["context"], rec["supporting_facts"]
        if isinstance(ctx, dict):
            paragraphs = dict(zip(ctx["title"], ctx["sentences"]))
            titles = facts["title"]
        else:
            paragraphs = {title: sents for title, sents in ctx}
            titles = [t for t, _ in facts]
        texts = ["".join(paragraphs[t]) for t in dict.fromkeys(titles)]
        return QAPair(qid, rec["question"], str(rec["answer"]), texts)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad HotpotQA record: {exc!r}") from None


def hotpotqa_pairs(records, limit: int = HOTPOT_QA_LIMIT) -> tuple[list[QAPair], dict]:
    pairs = [_hotpot_pair(r) for r in records]
    kept = [p for p in pairs if p.contexts and all(in_range(c) for c in p.contexts)]
    selected = kept[:limit]
    counts = {
        "qa_pairs": len(pairs),
        "contexts": len({c for p in pairs for c in p.contexts}),
        "contexts_after_filter": len({c for p in kept for c in p.contexts}),
        "qa_pairs_kept": len(selected),
        "contexts_kept": len({c for p in selected for c in p.contexts}),
    }
    return selected, counts


# TriviaQA


def _trivia_pair(rec: dict) -> QAPair:
    try:
        qid = str(rec.get("question_id", rec.get("id")))
        answer = rec["answer"]
        gold = answer.get("value") if isinstance(answer, dict) else answer
        pages = rec["entity_pages"]
        contexts = list(pages["wiki_context"]) if isinstance(pages, dict) else [p["wiki_context"] for p in pages]
        return QAPair(qid, rec["question"], str(gold), contexts)
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"bad TriviaQA record: {exc!r}") from None


def triviaqa_pairs(records, limit: int = TRIVIA_QA_LIMIT) -> tuple[list[QAPair], dict]:
    """Split every context; a context group survives only if all its fragments are in range.

    A qa-pair is kept when it has at least one context and every one of its
    groups survived, so no group is ever partially present.
    """
    pairs = [_trivia_pair(r) for r in records]
    groups: dict[str, list[str]] = {}
    for p in pairs:
        for c in p.contexts:
            if c not in groups:
                groups[c] = [f.text for f in split_text(c, CHUNK_SIZE, CHUNK_OVERLAP, SEPARATORS)]
    survives = {c: bool(frags) and all(in_range(f) for f in frags) for c, frags in groups.items()}
    fragmented = [
        QAPair(p.id, p.question, p.gold_answer, [f for c in p.contexts for f in groups[c]])
        for p in pairs
        if p.contexts and all(survives[c] for c in p.contexts)
    ]
    selected = fragmented[:limit]
    counts = {
        "qa_pairs": len(pairs),
        "fragments": len({f for frags in groups.values() for f in frags}),
        "fragments_in_range": len({f for frags in groups.values() for f in frags if in_range(f)}),
        "fragments_after_filter": len({f for p in fragmented for f in p.contexts}),
        "qa_pairs_kept": len(selected),
        "fragments_kept": len({f for p in selected for f in p.contexts}),
    }
    return selected, counts


# DiaASQ


def diaasq_pairs(path: Path) -> tuple[list[QAPair], list[dict], dict]:
    """Pass-through of prepared ``qa.json[l]`` and ``contexts.json[l]`` files."""

    def find(stem: str) -> Path:
        for suffix in (".jsonl", ".json"):
            p = path / f"{stem}{suffix}"
            if p.exists():
                return p
        raise MissingRawData(f"{path} has no {stem}.jsonl or {stem}.json")

    pairs = []
    for rec in _iter_records(find("qa")):
        try:
            gold = rec.get("gold_answer", rec.get("answer"))
            pairs.append(QAPair(str(rec["id"]), rec["question"], str(gold), list(rec.get("context_ids", []))))
        except (KeyError, TypeError, AttributeError) as exc:
            raise SchemaError(f"bad DiaASQ qa record: {exc!r}") from None
    contexts = []
    for rec in _iter_records(find("contexts")):
        if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
            raise SchemaError("DiaASQ context records need 'id' and 'text'")
        contexts.append({k: rec[k] for k in ("id", "text", "timestamp") if k in rec})
    return pairs, contexts, {"qa_pairs": len(pairs), "contexts": len(contexts)}


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def preprocess_corpus(kind: str, raw_path: str | os.PathLike | None, out_dir: str | os.PathLike) -> PreprocessResult:
    kind = kind.casefold()
    if kind not in ENV_VARS:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {sorted(ENV_VARS)}")
    path = resolve_raw(kind, raw_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    qa_path, ctx_path = out / f"{kind}_qa.jsonl", out / f"{kind}_contexts.jsonl"

    if kind == "diaasq":
        pairs, contexts, counts = diaasq_pairs(path)
        qa_rows = [
            {"id": p.id, "question": p.question, "gold_answer": p.gold_answer, "context_ids": p.contexts}
            for p in pairs
        ]
    else:
        try:
            records = list(_iter_records(path))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
        if kind == "hotpotqa":
            pairs, counts = hotpotqa_pairs(records)
        else:
            pairs, counts = triviaqa_pairs(records)
        texts = list(dict.fromkeys(c for p in pairs for c in p.contexts))
        contexts = [{"id": context_id(t), "text": t} for t in texts]
        qa_rows = [
            {
                "id": p.id,
                "question": p.question,
                "gold_answer": p.gold_answer,
                "context_ids": list(dict.fromkeys(context_id(c) for c in p.contexts)),
            }
            for p in pairs
        ]
    _write_jsonl(qa_path, qa_rows)
    _write_jsonl(ctx_path, contexts)
    logger.info("%s: %s", kind, counts)
    return PreprocessResult(qa_path, ctx_path, counts)

"""Batch evaluation with an incremental, resumable JSONL report.

The report holds one JSON object per question in input order, followed by a
single ``{"aggregate": {...}}`` line. Re-running against an existing report
keeps the finished records, evaluates only the missing ids and rewrites the
aggregate.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from ..errors import SchemaError
from ..llm import GenerationParams, LLMClient
from ..qa import AnswerKind, QAPipeline
from .judge import judge
from .metrics import exact_match

logger = logging.getLogger(__name__)

ERROR_KIND = "Error"


@dataclass(frozen=True)
class Question:
    id: str
    question: str
    gold_answer: str | None = None


@dataclass
class EvalRecord:
    id: str
    question: str
    gold_answer: str | None
    kind: str
    prediction: str | None
    evidence: list[str] = field(default_factory=list)
    em: bool = False
    judge_label: int | None = None
    judge_flagged: bool = False
    degraded: bool = False
    error: str | None = None
    trace: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.judge_label not in (None, 0, 1):
            raise ValueError(f"judge_label must be 0 or 1, got {self.judge_label!r}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvalReport:
    records: list[EvalRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.records)

    def _rate(self, count: int) -> float:
        return count / self.total if self.total else 0.0

    @property
    def judged(self) -> int:
        return sum(r.judge_label is not None for r in self.records)

    @property
    def accuracy(self) -> float:
        labels = [r.judge_label for r in self.records if r.judge_label is not None]
        return sum(labels) / len(labels) if labels else 0.0

    @property
    def em_rate(self) -> float:
        return self._rate(sum(r.em for r in self.records))

    @property
    def no_answer_rate(self) -> float:
        return self._rate(sum(r.kind == AnswerKind.NO_ANSWER.value for r in self.records))

    @property
    def parse_error_rate(self) -> float:
        return self._rate(sum(r.degraded or r.judge_flagged for r in self.records))

    @property
    def error_count(self) -> int:
        return sum(r.error is not None for r in self.records)

    def aggregate(self) -> dict:
        return {
            "total": self.total,
            "judged": self.judged,
            "errors": self.error_count,
            "accuracy": self.accuracy,
            "em_rate": self.em_rate,
            "no_answer_rate": self.no_answer_rate,
            "parse_error_rate": self.parse_error_rate,
            "config": self.config,
        }


def read_questions(path: str | os.PathLike) -> list[Question]:
    """JSONL records ``{id, question, gold_answer?}`` (``answer`` is accepted too)."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                gold = rec.get("gold_answer", rec.get("answer"))
                out.append(Question(str(rec["id"]), rec["question"], None if gold is None else str(gold)))
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad question record ({exc})") from None
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def read_report(path: str | os.PathLike) -> tuple[list[EvalRecord], dict | None]:
    records, aggregate = [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError:
                logger.warning("dropping partial line in %s", path)
                continue
            if "aggregate" in data:
                aggregate = data["aggregate"]
            else:
                records.append(EvalRecord(**data))
    return records, aggregate


def evaluate_one(
    q: Question,
    pipeline: QAPipeline,
    judge_client: LLMClient | None = None,
    judge_params: GenerationParams | None = None,
) -> EvalRecord:
    try:
        ans = pipeline.answer(q.question)
    except Exception as exc:
        logger.warning("question %s failed: %s", q.id, exc)
        return EvalRecord(q.id, q.question, q.gold_answer, ERROR_KIND, None, error=f"{type(exc).__name__}: {exc}")
    rec = EvalRecord(
        q.id,
        q.question,
        q.gold_answer,
        ans.kind.value,
        ans.text,
        evidence=[item.key for item in ans.evidence],
        em=exact_match(ans.text, q.gold_answer),
        degraded=bool(ans.trace.get("degraded")),
        trace=ans.trace,
    )
    if judge_client is not None and q.gold_answer is not None:
        try:
            verdict = judge(q.question, q.gold_answer, ans, judge_client, judge_params, pipeline.prompt_dir)
            rec.judge_label, rec.judge_flagged = verdict.label, verdict.flagged
        except Exception as exc:
            logger.warning("judging %s failed: %s", q.id, exc)
            rec.error = f"judge {type(exc).__name__}: {exc}"
    return rec


def _ordered(items: Sequence[Question], fn, parallelism: int) -> Iterator[EvalRecord]:
    if parallelism <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        # map() yields in submission order, which keeps the report deterministic
        yield from pool.map(fn, items)


def run_eval(
    questions: Iterable[Question],
    pipeline: QAPipeline,
    judge_client: LLMClient | None = None,
    *,
    report_path: str | os.PathLike | None = None,
    resume: bool = True,
    parallelism: int = 1,
    judge_params: GenerationParams | None = None,
    config: dict | None = None,
) -> EvalReport:
    questions = list(questions)
    done: dict[str, EvalRecord] = {}
    path = Path(report_path) if report_path is not None else None
    if path is not None and resume and path.exists():
        for rec in read_report(path)[0]:
            done[rec.id] = rec
        logger.info("resuming: %d of %d questions already done", len(done), len(questions))
    todo = [q for q in questions if q.id not in done]

    lock = threading.Lock()
    fh = None
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(path, "w", encoding="utf-8")
        for rec in done.values():
            fh.write(_dumps(rec.as_dict()) + "\n")
        fh.flush()
    try:
        for rec in _ordered(todo, lambda q: evaluate_one(q, pipeline, judge_client, judge_params), parallelism):
            done[rec.id] = rec
            if fh is not None:
                with lock:
                    fh.write(_dumps(rec.as_dict()) + "\n")
                    fh.flush()
        order = {q.id: i for i, q in enumerate(questions)}
        records = sorted(done.values(), key=lambda r: order.get(r.id, len(order)))
        report = EvalReport(records, dict(config or {}))
        if fh is not None:
            # rewrite in question order with the aggregate last
            fh.seek(0)
            fh.truncate()
            for rec in records:
                fh.write(_dumps(rec.as_dict()) + "\n")
            fh.write(_dumps({"aggregate": report.aggregate()}) + "\n")
    finally:
        if fh is not None:
            fh.close()
    return report

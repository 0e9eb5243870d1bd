"""LLM-as-a-judge scoring."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from ..llm import ChatRequest, GenerationParams, LLMClient
from ..qa import Answer
from .. import prompts

logger = logging.getLogger(__name__)

_LABEL = re.compile(r"\s*([01])\s*\.?\s*")


@dataclass(frozen=True)
class JudgeResult:
    label: int
    flagged: bool = False
    calls: int = 0


def parse_label(response: str) -> int | None:
    m = _LABEL.fullmatch(response or "")
    return int(m.group(1)) if m else None


def judge(
    question: str,
    gold: str,
    pred: Answer,
    client: LLMClient,
    params: GenerationParams | None = None,
    prompt_dir: str | None = None,
) -> JudgeResult:
    """Score ``pred`` 0 or 1.

    A NoAnswer scores 0 without a call. An unparseable verdict is retried
    once; a second failure scores 0 and sets ``flagged``.
    """
    if pred.is_no_answer:
        return JudgeResult(0)
    system, user = prompts.load("judge", prompt_dir).render(question=question, gold=gold, prediction=pred.text)
    req = ChatRequest(user=user, system=system, params=params or GenerationParams())
    for attempt in (1, 2):
        label = parse_label(client.complete(req))
        if label is not None:
            return JudgeResult(label, calls=attempt)
        logger.debug("unparseable judge verdict (attempt %d)", attempt)
    return JudgeResult(0, flagged=True, calls=2)

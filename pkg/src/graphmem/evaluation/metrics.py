"""String metrics."""

from __future__ import annotations

import unicodedata


def normalize_answer(text: str) -> str:
    """Case-fold, drop Unicode punctuation (categories P*), collapse whitespace."""
    folded = "".join(ch for ch in text.casefold() if not unicodedata.category(ch).startswith("P"))
    return " ".join(folded.split())


def exact_match(pred: str | None, gold: str | None) -> bool:
    if pred is None or gold is None:
        return False
    return normalize_answer(pred) == normalize_answer(gold)

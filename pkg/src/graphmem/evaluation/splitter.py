"""Recursive separator-based text splitting that keeps exact offsets.

Separators stay attached to the piece before them, so fragments are exact
substrings of the input and the input can be rebuilt from them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

Span = tuple[int, int]


@dataclass(frozen=True)
class Fragment:
    text: str
    start: int
    end: int

    def __len__(self) -> int:
        return self.end - self.start


def _pieces(text: str, start: int, end: int, sep: str) -> list[Span]:
    out = []
    s = start
    while s < end:
        i = text.find(sep, s, end)
        if i < 0:
            out.append((s, end))
            break
        out.append((s, i + len(sep)))
        s = i + len(sep)
    return out


def _atoms(text: str, start: int, end: int, separators: Sequence[str], chunk_size: int) -> list[tuple[int, int, bool]]:
    """Spans no longer than ``chunk_size``, except ``hard`` ones that no separator could break."""
    if end - start <= chunk_size:
        return [(start, end, False)]
    for level, sep in enumerate(separators):
        if not sep or text.find(sep, start, end) < 0:
            continue
        out = []
        for s, e in _pieces(text, start, end, sep):
            if e - s <= chunk_size:
                out.append((s, e, False))
            else:
                out.extend(_atoms(text, s, e, separators[level + 1:], chunk_size))
        return out
    return [(start, end, True)]


def split_spans(text: str, chunk_size: int = 1024, overlap: int = 64, separators: Sequence[str] = ("\n\n",)) -> list[Span]:
    if not 0 <= overlap < chunk_size:
        raise ValueError("need chunk_size > overlap >= 0")
    if not text:
        return []
    chunks: list[Span] = []
    cur: list[Span] = []
    fresh = False

    def total() -> int:
        return cur[-1][1] - cur[0][0] if cur else 0

    for s, e, hard in _atoms(text, 0, len(text), list(separators), chunk_size):
        if hard:
            if cur and fresh:
                chunks.append((cur[0][0], cur[-1][1]))
            # character windows over a piece with no usable separator
            ws = s
            while True:
                we = min(ws + chunk_size, e)
                if we == e:
                    cur, fresh = [(ws, e)], True
                    break
                chunks.append((ws, we))
                ws = we - overlap
            continue
        size = e - s
        if cur and total() + size > chunk_size:
            if fresh:
                chunks.append((cur[0][0], cur[-1][1]))
            while cur and (total() > overlap or total() + size > chunk_size):
                cur.pop(0)
            fresh = False
        cur.append((s, e))
        fresh = True
    if cur and fresh:
        chunks.append((cur[0][0], cur[-1][1]))
    return chunks


def split_text(text: str, chunk_size: int = 1024, overlap: int = 64, separators: Sequence[str] = ("\n\n",)) -> list[Fragment]:
    """Fragments of at most ``chunk_size`` characters.

    Consecutive fragments overlap by at most ``overlap`` characters.
    """
    return [Fragment(text[s:e], s, e) for s, e in split_spans(text, chunk_size, overlap, separators)]


def reconstruct(fragments: Sequence[Fragment]) -> str:
    """Concatenate fragments with their overlaps removed."""
    out = []
    pos = 0
    for f in fragments:
        if f.start > pos:
            raise ValueError(f"gap between offsets {pos} and {f.start}")
        out.append(f.text[pos - f.start:])
        pos = f.end
    return "".join(out)

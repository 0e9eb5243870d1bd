"""Parsers for the line formats the prompts ask the model to produce."""

from __future__ import annotations

import re

from .errors import ParseError

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
_EMPTY_FENCE = re.compile(r"``````|```\s*```")
_TRIPLET = re.compile(r"^\(?\s*([^|()]+?)\s*\|\s*([^|]+?)\s*\|\s*([^|]+?)\s*\)?$")
_THESIS = re.compile(r"^(.*?)\s*::\s*\[(.*)\]\s*$")
_BULLET = re.compile(r"^(?:[-*•]|\d+[.)])\s+")


def fenced_lines(response: str) -> list[str]:
    """Non-blank lines of the first fenced block in ``response``.

    Surrounding prose is ignored. A response without any fenced block is a
    :class:`ParseError`.
    """
    if response is None:
        raise ParseError("no response")
    m = _FENCE.search(response)
    if m is None:
        if _EMPTY_FENCE.search(response):
            return []
        raise ParseError("response has no fenced block")
    return [line.strip() for line in m.group(1).splitlines() if line.strip()]


def parse_triplet_line(line: str) -> tuple[str, str, str] | None:
    m = _TRIPLET.match(_BULLET.sub("", line))
    if m is None:
        return None
    parts = tuple(p.strip() for p in m.groups())
    return parts if all(parts) else None


def parse_thesis_line(line: str) -> tuple[str, list[str]] | None:
    m = _THESIS.match(_BULLET.sub("", line))
    if m is None:
        return None
    statement = m.group(1).strip()
    entities = [e.strip() for e in m.group(2).split(";")]
    return statement, list(dict.fromkeys(e for e in entities if e))


def parse_item_lines(lines: list[str]) -> list[str]:
    """Plain list items (entities, ids), bullets stripped, order-preserving dedup."""
    items = []
    for line in lines:
        item = _BULLET.sub("", line).strip().strip('"').strip()
        if item:
            items.append(item)
    return list(dict.fromkeys(items))

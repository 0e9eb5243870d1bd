"""Prompt templates shipped as data files.

Each ``<name>.txt`` holds a ``### system`` and a ``### user`` section with
``$placeholders`` filled through :class:`string.Template`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from string import Template

PROMPT_DIR = Path(__file__).resolve().parent

NAMES = (
    "extract_triplets",
    "extract_theses",
    "outdated_simple",
    "outdated_thesis",
    "query_entities",
    "answer",
    "judge",
)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system: str
    user: str

    def render(self, **values: str) -> tuple[str, str]:
        return (
            Template(self.system).safe_substitute(values),
            Template(self.user).substitute(values),
        )


def parse_template(name: str, raw: str) -> PromptTemplate:
    sections: dict[str, list[str]] = {}
    current = None
    for line in raw.splitlines():
        if line.startswith("### "):
            current = line[4:].strip().lower()
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    if "user" not in sections:
        raise ValueError(f"prompt {name!r} has no '### user' section")
    return PromptTemplate(
        name,
        "\n".join(sections.get("system", [])).strip(),
        "\n".join(sections["user"]).strip(),
    )


@lru_cache(maxsize=None)
def load(name: str, directory: str | None = None) -> PromptTemplate:
    """Load a template, preferring ``directory`` over the packaged copies."""
    candidates = []
    if directory:
        candidates.append(Path(directory) / f"{name}.txt")
    candidates.append(PROMPT_DIR / f"{name}.txt")
    for path in candidates:
        if path.is_file():
            return parse_template(name, path.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no prompt template named {name!r}")


def prompt_dir_from_env() -> str | None:
    return os.environ.get("GRAPHMEM_PROMPTS")

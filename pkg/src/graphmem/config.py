"""Run configuration loaded from one YAML file.

Example::

    graph: out/graph.gm
    prompts: null
    embedding: {provider: hashing, dim: 256, seed: 0}
    llm:
      default: {url: http://localhost:11434/api/chat, model: qwen2.5:7b}
      judge: {model: qwen2.5:7b}
    retrieval:
      combo: wc+bs
      restriction: All
      beamsearch: {max_depth: 5, max_paths: 10}
    qa: {top_n_triplets: 15, entity_match_k: 3}
    memorize: {similarity_threshold: 0.9}
    eval: {parallelism: 1}

Roles ``extractor``, ``generator`` and ``judge`` inherit missing keys from
``default``. Secrets come from the environment only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any

import yaml

from .embedding import CachedEmbedder, EmbeddingProvider, HashingEmbedder, RemoteEmbedder
from .errors import ConfigError
from .llm import GenerationParams, HttpLLMClient, LLMClient, MockLLMClient, params_from_mapping
from .qa import QAConfig
from .retrieval import NodeRestriction, parse_combo

ROLES = ("extractor", "generator", "judge")
_TOP_LEVEL = {"graph", "corpus", "prompts", "embedding", "llm", "retrieval", "qa", "memorize", "eval"}
_CLIENT_KEYS = {"url", "model", "timeout", "retries", "backoff", "max_in_flight", "params"}


@dataclass
class RunConfig:
    graph: str | None = None
    corpus: str | None = None
    prompts: str | None = None
    embedding: dict = field(default_factory=lambda: {"provider": "hashing"})
    llm: dict = field(default_factory=dict)
    retrieval: dict = field(default_factory=dict)
    qa: dict = field(default_factory=dict)
    memorize: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data: dict | None) -> "RunConfig":
        data = dict(data or {})
        unknown = set(data) - _TOP_LEVEL
        if unknown:
            raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in data.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for role, section in self.llm.items():
            if role not in (*ROLES, "default"):
                raise ConfigError(f"unknown llm role {role!r}")
            bad = set(section or {}) - _CLIENT_KEYS
            if bad:
                raise ConfigError(f"unknown keys for llm.{role}: {sorted(bad)}")
        self.retrieval_combo()
        NodeRestriction.parse(self.retrieval.get("restriction", "All"))

    # retrieval / qa

    def retrieval_combo(self, combo: str | None = None) -> list:
        combo = combo or self.retrieval.get("combo", "wc+bs")
        sections = {k: v for k, v in self.retrieval.items() if k not in ("combo", "restriction")}
        return parse_combo(combo, sections)

    def qa_config(self, combo: str | None = None, restriction: str | None = None, **overrides: Any) -> QAConfig:
        values = dict(self.qa)
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return QAConfig(
                combo=self.retrieval_combo(combo),
                restriction=NodeRestriction.parse(restriction or self.retrieval.get("restriction", "All")),
                **values,
            )
        except TypeError as exc:
            raise ConfigError(f"bad qa section: {exc}") from None

    # providers

    def build_embedder(self) -> EmbeddingProvider:
        settings = dict(self.embedding)
        provider = settings.pop("provider", "hashing")
        cache = settings.pop("cache", None)
        if provider == "hashing":
            emb: EmbeddingProvider = HashingEmbedder(**settings)
        elif provider == "remote":
            emb = RemoteEmbedder(**settings)
        else:
            raise ConfigError(f"unknown embedding provider {provider!r}")
        return CachedEmbedder(emb, cache) if cache else emb

    def client_settings(self, role: str) -> dict:
        merged = dict(self.llm.get("default") or {})
        merged.update(self.llm.get(role) or {})
        return merged

    def params(self, role: str) -> GenerationParams:
        return params_from_mapping(self.client_settings(role).get("params"))

    def build_llm(self, role: str, mocks: dict[str, MockLLMClient] | None = None) -> LLMClient | None:
        """The client for ``role``: a scripted mock if one is loaded, else HTTP, else None."""
        if mocks is not None:
            return mocks.get(role) or mocks.get("default")
        settings = self.client_settings(role)
        if not settings.get("url") or not settings.get("model"):
            return None
        kwargs = {k: v for k, v in settings.items() if k in _CLIENT_KEYS - {"url", "model", "params"}}
        return HttpLLMClient(settings["url"], settings["model"], **kwargs)


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_mapping(data)

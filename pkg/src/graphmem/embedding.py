"""Text embedding providers and similarity ranking.

Two providers are shipped: :class:`HashingEmbedder`, a deterministic offline
bag-of-tokens embedder used by the tests and mock runs, and
:class:`RemoteEmbedder`, a thin client for an HTTP embedding service.
:class:`CachedEmbedder` wraps either one with a persistent text cache.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import unicodedata
from typing import Iterable, Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .errors import DimensionMismatch, EmptyText, ProviderUnavailable

logger = logging.getLogger(__name__)

Vector = np.ndarray


@runtime_checkable
class EmbeddingProvider(Protocol):
    provider_id: str

    def embed(self, text: str) -> Vector: ...

    def dimension(self) -> int: ...


def normalize(vec: Sequence[float] | np.ndarray) -> Vector:
    v = np.asarray(vec, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("embedding contains non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    out = v / norm
    out.flags.writeable = False
    return out


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Case-folded whitespace tokens with leading/trailing punctuation removed."""
    tokens = (_strip_punct(t) for t in text.casefold().split())
    return [t for t in tokens if t]


class HashingEmbedder:
    """Deterministic signed feature-hashing embedder.

    Each token lands in one of ``dim`` buckets with a +1/-1 sign taken from an
    independent part of a keyed BLAKE2 digest, so vectors are identical across
    processes. Token-disjoint texts have zero inner product unless two tokens
    collide in the same bucket.

    ``char_ngrams`` optionally adds character n-grams of every token as extra
    features, which gives partial similarity between e.g. ``"MonaLisa"`` and
    ``"Mona Lisa"``.
    """

    def __init__(self, dim: int = 256, seed: int = 0, char_ngrams: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.char_ngrams = char_ngrams
        self._key = seed.to_bytes(8, "little", signed=True)
        self.provider_id = f"hashing-{dim}-{seed}-{char_ngrams}"

    def dimension(self) -> int:
        return self.dim

    def _features(self, text: str) -> list[str]:
        tokens = tokenize(text)
        if not tokens:
            # punctuation-only input still needs a stable, non-zero vector
            tokens = [text.strip()]
        feats = [f"w:{t}" for t in tokens]
        n = self.char_ngrams
        if n > 0:
            for t in tokens:
                if len(t) <= n:
                    feats.append(f"c:{t}")
                else:
                    feats.extend(f"c:{t[i:i + n]}" for i in range(len(t) - n + 1))
        return feats

    def _bucket(self, feature: str) -> tuple[int, float]:
        digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=16, key=self._key).digest()
        index = int.from_bytes(digest[:8], "little") % self.dim
        sign = 1.0 if digest[8] & 1 else -1.0
        return index, sign

    def embed(self, text: str) -> Vector:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        for feat in self._features(text):
            i, s = self._bucket(feat)
            vec[i] += s
        if not vec.any():
            # every feature cancelled out; fall back to the first feature alone
            i, s = self._bucket(self._features(text)[0])
            vec[i] = s
        return normalize(vec)


class RemoteEmbedder:
    """Client for an HTTP embedding endpoint.

    The request body is ``{"model": ..., "input": [texts]}``. Accepted
    response shapes: a bare list of vectors, ``{"embeddings": [...]}`` or
    ``{"data": [{"embedding": [...]}, ...]}``.
    """

    def __init__(
        self,
        url: str,
        model: str,
        *,
        batch_size: int = 32,
        timeout: float = 60.0,
        token: str | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url
        self.model = model
        self.batch_size = max(1, batch_size)
        self.provider_id = f"remote-{model}"
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self._dim: int | None = None

    def dimension(self) -> int:
        if self._dim is None:
            self._dim = int(self.embed("dimension probe").shape[0])
        return self._dim

    def embed(self, text: str) -> Vector:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[Vector]:
        for t in texts:
            if not t or not t.strip():
                raise EmptyText("cannot embed empty text")
        out: list[Vector] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            try:
                resp = self._client.post(self.url, json={"model": self.model, "input": batch})
                resp.raise_for_status()
                payload = resp.json()
            except (httpx.HTTPError, ValueError) as exc:
                raise ProviderUnavailable(f"embedding service failed: {exc}") from exc
            vectors = _vectors_from_payload(payload)
            if len(vectors) != len(batch):
                raise ProviderUnavailable(
                    f"embedding service returned {len(vectors)} vectors for {len(batch)} texts"
                )
            out.extend(normalize(v) for v in vectors)
        if out and self._dim is None:
            self._dim = int(out[0].shape[0])
        return out


def _vectors_from_payload(payload) -> list[list[float]]:
    if isinstance(payload, dict):
        if "embeddings" in payload:
            return payload["embeddings"]
        if "data" in payload:
            return [item["embedding"] for item in payload["data"]]
        raise ProviderUnavailable(f"unrecognised embedding response keys: {sorted(payload)}")
    if isinstance(payload, list):
        return payload
    raise ProviderUnavailable("unrecognised embedding response")


class CachedEmbedder:
    """Memoizes another provider, optionally persisting to a JSON-lines file.

    Cache keys are ``(provider_id, text)``, so one file can serve several
    providers without mixing vectors.
    """

    def __init__(self, provider: EmbeddingProvider, path: str | os.PathLike | None = None):
        self.provider = provider
        self.provider_id = provider.provider_id
        self.path = os.fspath(path) if path is not None else None
        self._lock = threading.Lock()
        self._cache: dict[tuple[str, str], Vector] = {}
        self._dirty = False
        if self.path and os.path.exists(self.path):
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._cache[(rec["p"], rec["t"])] = normalize(rec["v"])

    def dimension(self) -> int:
        return self.provider.dimension()

    def embed(self, text: str) -> Vector:
        key = (self.provider_id, text)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        vec = self.provider.embed(text)
        with self._lock:
            self._cache.setdefault(key, vec)
            self._dirty = True
            return self._cache[key]

    def __len__(self) -> int:
        return len(self._cache)

    def save(self) -> None:
        if not self.path:
            return
        with self._lock:
            if not self._dirty and os.path.exists(self.path):
                return
            items = list(self._cache.items())
            self._dirty = False
        directory = os.path.dirname(os.path.abspath(self.path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".emb-cache-")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for (pid, text), vec in items:
                fh.write(json.dumps({"p": pid, "t": text, "v": vec.tolist()}) + "\n")
        os.replace(tmp, self.path)


def inner_product(a: Vector, b: Vector) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def top_n(query: Vector, items: Iterable[tuple[object, Vector]], n: int) -> list[tuple[object, float]]:
    """Rank ``items`` by inner product with ``query``, best first.

    Ties keep input order. Returns ``(id, score)`` pairs, at most ``n``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    scored = [(ident, inner_product(query, vec)) for ident, vec in items]
    if n == 0:
        return []
    # sorted() is stable, so equal scores stay in input order
    scored.sort(key=lambda pair: -pair[1])
    return scored[:n]

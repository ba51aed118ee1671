"""Text embeddings: frozen encoders, pooling, and a trainable projection.

Texts produced by the reasoning pipeline are encoded by a frozen encoder
into R^{D_E}, mean-pooled, then mapped by a small trainable matrix P to a
unit vector m in R^d that rides along with each agent's observation. Only
P receives gradients; encoders are pure functions of their input.

The default local encoder hashes character n-grams (n = 2, 3) into 256
signed buckets with a keyed hash, so the same (text, seed) pair gives the
same vector on any platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

D_E_DEFAULT = 256
EMBED_DIM_DEFAULT = 5


class HashingEncoder:
    """Deterministic char n-gram feature hashing, L2-normalized."""

    def __init__(self, d_e: int = D_E_DEFAULT, seed: int = 0, ngrams: tuple[int, ...] = (2, 3)):
        if d_e < 2:
            raise ValueError("d_e must be at least 2")
        self.d_e = d_e
        self.ngrams = ngrams
        self._key = int(seed).to_bytes(8, "little", signed=False)

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.d_e)
        for n in self.ngrams:
            for k in range(len(text) - n + 1):
                gram = text[k : k + n]
                digest = hashlib.blake2b(gram.encode("utf-8"), key=self._key, digest_size=8)
                val = int.from_bytes(digest.digest(), "little")
                bucket = (val >> 1) % self.d_e
                sign = 1.0 if val & 1 else -1.0
                vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec


class RemoteEncoder:
    """Client for an external embeddings endpoint.

    Sends {"input": text} and accepts either {"embedding": [...]} or an
    OpenAI-style {"data": [{"embedding": [...]}]} reply. A probe request
    at construction verifies the advertised dimension; a mismatch aborts
    the run before any training starts.
    """

    def __init__(self, endpoint: str, d_e: int = D_E_DEFAULT, api_key: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.d_e = d_e
        self.api_key = api_key
        self.timeout = timeout
        probe = self.encode("dimension probe")
        if probe.shape != (d_e,):
            raise RuntimeError(
                f"remote encoder returned dimension {probe.shape[0]}, configured D_E is {d_e}"
            )

    def encode(self, text: str) -> np.ndarray:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(self.endpoint, json={"input": text}, headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        body = resp.json()
        if "embedding" in body:
            raw = body["embedding"]
        else:
            raw = body["data"][0]["embedding"]
        return np.asarray(raw, dtype=np.float64)


class CachingEncoder:
    """Memoizing wrapper; reasoning texts repeat heavily across steps."""

    def __init__(self, inner):
        self.inner = inner
        self.d_e = inner.d_e
        self._cache: dict[str, np.ndarray] = {}

    def encode(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = self.inner.encode(text)
            vec.flags.writeable = False
            self._cache[text] = vec
        return vec


@dataclass
class ProjectionParams:
    """Trainable map R^{D_E} -> R^d applied before unit normalization."""

    matrix: np.ndarray

    @classmethod
    def init(cls, d_e: int, d: int, rng: np.random.Generator) -> "ProjectionParams":
        bound = 1.0 / np.sqrt(d_e)
        return cls(matrix=rng.uniform(-bound, bound, (d_e, d)))

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    @property
    def d_e(self) -> int:
        return self.matrix.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [self.matrix]

    def copy(self) -> "ProjectionParams":
        return ProjectionParams(self.matrix.copy())


def pool_texts(encoder, texts: list[str]) -> np.ndarray:
    """Mean of the encoded texts; an empty list pools to the zero vector."""
    if not texts:
        return np.zeros(encoder.d_e)
    acc = np.zeros(encoder.d_e)
    for text in texts:
        acc += encoder.encode(text)
    return acc / len(texts)


def project_normalize(p: ProjectionParams, pooled: np.ndarray) -> np.ndarray:
    """m = P(h) / ||P(h)||; the zero vector maps to zero."""
    pooled = np.asarray(pooled, dtype=np.float64)
    if not np.all(np.isfinite(pooled)):
        raise ValueError("pooled vector must be finite")
    u = pooled @ p.matrix
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        return np.zeros(p.d)
    return u / norm


def project_normalize_vjp(
    p: ProjectionParams, pooled: np.ndarray, grad_m: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Backward pass of project_normalize.

    For u = h P and m = u/||u||, dL/du = (g - m (m.g)) / ||u||; zero input
    (or zero image) contributes no gradient.
    """
    pooled = np.asarray(pooled, dtype=np.float64)
    u = pooled @ p.matrix
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        return np.zeros_like(p.matrix), np.zeros_like(pooled)
    m = u / norm
    grad_u = (grad_m - m * float(m @ grad_m)) / norm
    grad_matrix = np.outer(pooled, grad_u)
    grad_pooled = p.matrix @ grad_u
    return grad_matrix, grad_pooled


def project_normalize_batch(p: ProjectionParams, pooled: np.ndarray) -> np.ndarray:
    """Row-wise project_normalize over a (B, D_E) batch."""
    u = pooled @ p.matrix
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return np.where(norms == 0.0, 0.0, u / safe)


def project_normalize_batch_vjp(
    p: ProjectionParams, pooled: np.ndarray, grad_m: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batched backward pass; rows with a zero image contribute nothing."""
    u = pooled @ p.matrix
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    m = u / safe
    inner = np.sum(m * grad_m, axis=1, keepdims=True)
    grad_u = np.where(norms == 0.0, 0.0, (grad_m - m * inner) / safe)
    grad_matrix = pooled.T @ grad_u
    grad_pooled = grad_u @ p.matrix.T
    return grad_matrix, grad_pooled


@dataclass(frozen=True)
class EmbedSources:
    """Which text streams feed the agent embedding."""

    reasoning: bool = True
    reflection: bool = True
    statement: bool = True
    news: bool = True

    @classmethod
    def from_mode(cls, mode: str) -> "EmbedSources":
        # "union" pools everything; "think" and "algorithm" are the two
        # narrower readings selectable for fidelity comparisons.
        if mode == "union":
            return cls()
        if mode == "think":
            return cls(reasoning=True, reflection=True, statement=False, news=False)
        if mode == "algorithm":
            return cls(reasoning=False, reflection=False, statement=True, news=True)
        raise ValueError(f"unknown embed-sources mode {mode!r}")


def gather_texts(
    sources: EmbedSources,
    reasoning: str | None,
    reflection: str | None,
    statement: str | None,
    news: str | None,
) -> list[str]:
    texts = []
    if sources.reasoning and reasoning:
        texts.append(reasoning)
    if sources.reflection and reflection:
        texts.append(reflection)
    if sources.statement and statement:
        texts.append(statement)
    if sources.news and news:
        texts.append(news)
    return texts


def build_agent_embedding(
    reasoning: str | None,
    reflection: str | None,
    statement: str | None,
    news: str | None,
    p: ProjectionParams,
    encoder,
    sources: EmbedSources = EmbedSources(),
) -> tuple[np.ndarray, np.ndarray]:
    """Pool the enabled text streams and project to the unit embedding.

    Returns (m, pooled); the pooled pre-projection vector is kept so the
    trainer can push gradients into P later.
    """
    texts = gather_texts(sources, reasoning, reflection, statement, news)
    pooled = pool_texts(encoder, texts)
    return project_normalize(p, pooled), pooled

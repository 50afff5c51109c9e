"""Text-to-vector encoders.

Both encoders emit unit-normalized float64 rows of a fixed dimension. The
hashed bag-of-tokens encoder is fully deterministic and local, which is what
the offline mock pipeline and the tests run on; the remote encoder posts to
a sentence-embedding HTTP endpoint.
"""

from __future__ import annotations

import hashlib
import re
from typing import Iterable, Protocol, Sequence

import numpy as np
import requests

from .errors import TransportError

_TOKEN = re.compile(r"[a-z0-9']+")


class Embedder(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


class HashedTokenEmbedder:
    """Signed feature-hashing of lowercased tokens, unit-normalized.

    Deterministic across runs and platforms (token hashes come from
    sha256, not Python's randomized hash). Texts with no tokens map to
    the first basis vector so the output is always unit-norm.
    """

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise ValueError("embedding dimension must be >= 2")
        self.dim = dim

    def _embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in _TOKEN.findall(text.lower()):
            h = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
            sign = 1.0 if (h >> 63) & 1 else -1.0
            vec[h % self.dim] += sign
        if not vec.any():
            vec[0] = 1.0
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        return normalize_rows(np.vstack([self._embed_one(t) for t in texts]))


class RemoteEmbedder:
    """Sentence-embedding endpoint speaking the common {"input": [...]} shape."""

    def __init__(self, base_url: str, model_tag: str = "", *,
                 credentials_env: str | None = None,
                 environ=None, timeout: float = 60.0, session=None):
        import os

        self.url = base_url.rstrip("/") + "/embeddings"
        self.model_tag = model_tag
        env = environ if environ is not None else os.environ
        self.api_key = env.get(credentials_env, "") if credentials_env else ""
        self.timeout = timeout
        self.session = session if session is not None else requests.Session()
        self.dim = -1  # discovered from the first response

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, max(self.dim, 0)))
        payload: dict = {"input": list(texts)}
        if self.model_tag:
            payload["model"] = self.model_tag
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self.session.post(
                self.url, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"embedding request failed: {exc}") from exc
        if not 200 <= response.status_code < 300:
            raise TransportError(f"embedding endpoint returned HTTP {response.status_code}")
        rows = [item["embedding"] for item in response.json()["data"]]
        matrix = normalize_rows(np.asarray(rows, dtype=float))
        self.dim = matrix.shape[1]
        return matrix


def embed_in_batches(embedder: Embedder, texts: Iterable[str],
                     batch_size: int = 64) -> np.ndarray:
    texts = list(texts)
    if not texts:
        return np.zeros((0, getattr(embedder, "dim", 0)))
    chunks = [
        embedder.embed(texts[i:i + batch_size])
        for i in range(0, len(texts), batch_size)
    ]
    return np.vstack(chunks)

"""Scenario derivation: iterative mini-set generation with embedding dedup.

Each round asks the backend for a mini-set of k scenario lines, embeds the
union of kept and new scenarios, clusters the embeddings with a greedy
community-detection pass, and keeps one scenario per cluster (the earliest
generated member). The loop stops once n scenarios survive, or aborts when
twenty consecutive rounds make no net progress.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embedding import Embedder
from .errors import DimensionMismatch, StagnationError
from .gateway import LlmGateway
from .model import Scenario, single_line
from .parsing import parse_numbered_list

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.75
MAX_STAGNANT_ITERATIONS = 20


@dataclass(frozen=True)
class Cluster:
    members: tuple[int, ...]
    representative: int

    def __post_init__(self):
        if self.representative not in self.members:
            raise ValueError("representative must be a member")


def scenario_bindings(k: int) -> dict[str, str]:
    return {"count": str(k)}


def scenario_id(description: str) -> str:
    digest = hashlib.sha256(description.encode("utf-8")).hexdigest()[:12]
    return f"scn-{digest}"


def cluster_communities(vectors: np.ndarray | Sequence[Sequence[float]],
                        threshold: float, min_size: int = 1) -> list[Cluster]:
    """Greedy community detection over unit vectors.

    Candidate communities are seeded by the vector with the most neighbors
    at cosine similarity >= threshold; assignment is exclusive, processed in
    decreasing candidate size, so every vector lands in exactly one cluster.
    Communities smaller than min_size contribute only their seed, leaving
    the rest free to join later communities (with min_size=1, nothing is
    ever dropped).
    """
    matrix = np.asarray(vectors, dtype=float)
    if matrix.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d array of vectors, got ndim={matrix.ndim}")
    count = matrix.shape[0]
    if count == 0:
        return []

    sims = matrix @ matrix.T
    above = sims >= threshold
    candidate_sizes = above.sum(axis=1)
    order = sorted(range(count), key=lambda i: (-int(candidate_sizes[i]), i))

    assigned = np.zeros(count, dtype=bool)
    clusters: list[Cluster] = []
    for seed in order:
        if assigned[seed]:
            continue
        members = [j for j in np.flatnonzero(above[seed]) if not assigned[j]]
        if len(members) < min_size:
            members = [seed]
        for j in members:
            assigned[j] = True
        clusters.append(Cluster(members=tuple(int(m) for m in members),
                                representative=seed))
    return clusters


def _check_dims(matrix: np.ndarray, dim: int | None) -> int:
    if dim is not None and matrix.shape[1] != dim:
        raise DimensionMismatch(
            f"embedder produced dimension {matrix.shape[1]}, expected {dim}"
        )
    return matrix.shape[1]


class ScenarioDeriver:
    def __init__(self, gateway: LlmGateway, embedder: Embedder, *,
                 threshold: float = DEFAULT_THRESHOLD, min_size: int = 1,
                 max_stagnant: int = MAX_STAGNANT_ITERATIONS):
        self.gateway = gateway
        self.embedder = embedder
        self.threshold = threshold
        self.min_size = min_size
        self.max_stagnant = max_stagnant
        self._cache: dict[str, np.ndarray] = {}

    def _embed(self, scenarios: Sequence[Scenario]) -> np.ndarray:
        missing = [s.description for s in scenarios if s.description not in self._cache]
        if missing:
            rows = self.embedder.embed(missing)
            for text, row in zip(missing, rows):
                self._cache[text] = row
        return np.vstack([self._cache[s.description] for s in scenarios])

    def derive(self, k: int, n: int) -> list[Scenario]:
        """Run the derivation loop until exactly n deduplicated scenarios remain."""
        if k < 1 or n < 1:
            raise ValueError("k and n must be >= 1")
        kept: list[Scenario] = []
        stagnant = 0
        dim: int | None = None
        iteration = 0
        while len(kept) < n:
            iteration += 1
            lines = self.gateway.complete_parsed(
                "scenarios", scenario_bindings(k), parse_numbered_list
            )
            new = [
                Scenario(id=scenario_id(text), description=text)
                for text in (single_line(raw) for raw in lines)
            ]
            combined = kept + new
            matrix = self._embed(combined)
            dim = _check_dims(matrix, dim)
            clusters = cluster_communities(matrix, self.threshold, self.min_size)
            survivors = sorted(min(c.members) for c in clusters)
            previous = len(kept)
            kept = [combined[i] for i in survivors]
            log.debug("iteration %d: %d -> %d scenarios", iteration, previous, len(kept))
            if len(kept) <= previous:
                stagnant += 1
                if stagnant >= self.max_stagnant:
                    raise StagnationError(
                        f"{stagnant} consecutive iterations added no scenarios "
                        f"(kept {len(kept)} of {n})"
                    )
            else:
                stagnant = 0
        kept = kept[:n]
        return [
            replace(s, embedding=tuple(float(x) for x in self._cache[s.description]))
            for s in kept
        ]


# --- on-disk format ----------------------------------------------------------

def write_scenarios(path: str | Path, scenarios: Sequence[Scenario]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scenario in scenarios:
            fh.write(json.dumps(scenario.to_record(), ensure_ascii=False) + "\n")


def read_scenarios(path: str | Path) -> list[Scenario]:
    scenarios = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                scenarios.append(Scenario.from_record(json.loads(line)))
    return scenarios


def write_embeddings(path: str | Path, scenarios: Sequence[Scenario]) -> None:
    """Sidecar with the embedding matrix, keyed by scenario id."""
    with_vectors = [s for s in scenarios if s.embedding is not None]
    ids = np.array([s.id for s in with_vectors])
    vectors = (
        np.array([s.embedding for s in with_vectors])
        if with_vectors else np.zeros((0, 0))
    )
    np.savez(path, ids=ids, vectors=vectors)


def read_embeddings(path: str | Path) -> Mapping[str, np.ndarray]:
    data = np.load(path, allow_pickle=False)
    return {str(i): v for i, v in zip(data["ids"], data["vectors"])}

"""Fully automatic in-context demonstration mining.

Every filled slot-value update pair becomes a "slot: value" key. Keys are
embedded, density-clustered, and each training example draws up to k
demonstrations from keys in its own cluster and scenario but a different
dialogue. Noise points (label -1) neither give nor receive demonstrations.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from sklearn.cluster import HDBSCAN

from .assembly import Corpus
from .embedding import Embedder
from .evaluation import render_demo_line, render_slot_query
from .model import Demonstration, SlotSpec, TrainingExample, canonical_slot

log = logging.getLogger(__name__)

DEFAULT_MIN_CLUSTER_SIZE = 5
DEFAULT_MAX_DEMONSTRATIONS = 3
NOISE_LABEL = -1


@dataclass(frozen=True)
class SlotValueKey:
    """One filled update pair, encoded as the token sequence "slot: value"."""

    text: str
    scenario_id: str
    dialogue_id: str
    turn_index: int
    slot: str
    value: str
    turn_text: str


def build_slot_value_keys(corpus: Corpus) -> list[SlotValueKey]:
    keys = []
    for dialogue in corpus.dialogues:
        for update in corpus.updates_for(dialogue.id):
            for pair in update.pairs:
                if not pair.is_filled:
                    continue
                keys.append(
                    SlotValueKey(
                        text=f"{pair.slot}: {pair.value}",
                        scenario_id=dialogue.scenario_id,
                        dialogue_id=dialogue.id,
                        turn_index=update.turn_index,
                        slot=pair.slot,
                        value=pair.value,
                        turn_text=dialogue.turns[update.turn_index].text,
                    )
                )
    return keys


def cluster_slot_values(keys: Sequence[SlotValueKey], embedder: Embedder,
                        min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE) -> list[int]:
    """Density-cluster the key embeddings; -1 labels noise points.

    Deterministic given identical inputs. Inputs smaller than
    min_cluster_size are all noise by definition.
    """
    if not keys:
        raise ValueError("cluster_slot_values needs at least one key")
    if len(keys) < min_cluster_size:
        return [NOISE_LABEL] * len(keys)
    vectors = embedder.embed([k.text for k in keys])
    clusterer = HDBSCAN(
        min_cluster_size=min_cluster_size,
        metric="euclidean",
        allow_single_cluster=True,
    )
    return [int(label) for label in clusterer.fit_predict(vectors)]


def _example_label(example: TrainingExample, keys: Sequence[SlotValueKey],
                   labels: Sequence[int]) -> int:
    """Cluster of the key whose "slot: value" text matches the example's target.

    A same-dialogue key wins over a global match; examples with no matching
    key (in particular "none" targets) count as noise.
    """
    text = f"{example.target.slot}: {example.target.value}"
    fallback = NOISE_LABEL
    for key, label in zip(keys, labels):
        if key.text != text:
            continue
        if key.dialogue_id == example.dialogue_id:
            return label
        if fallback == NOISE_LABEL:
            fallback = label
    return fallback


def _example_rng(seed: int, example: TrainingExample) -> random.Random:
    ident = f"{seed}|{example.dialogue_id}|{example.turn_index}|{example.target.slot}|{example.target.value}"
    digest = hashlib.sha256(ident.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def sample_demonstrations(example: TrainingExample, keys: Sequence[SlotValueKey],
                          labels: Sequence[int],
                          max_k: int = DEFAULT_MAX_DEMONSTRATIONS,
                          seed: int = 0) -> list[Demonstration]:
    """Up to max_k same-cluster, same-scenario, different-dialogue demonstrations."""
    if max_k < 0:
        raise ValueError("max_k must be >= 0")
    if max_k == 0:
        return []
    label = _example_label(example, keys, labels)
    if label == NOISE_LABEL:
        return []
    pool = [
        key
        for key, key_label in zip(keys, labels)
        if key_label == label
        and key.scenario_id == example.scenario_id
        and key.dialogue_id != example.dialogue_id
    ]
    rng = _example_rng(seed, example)
    chosen = rng.sample(pool, min(max_k, len(pool)))
    return [Demonstration(turn_text=k.turn_text, slot=k.slot, value=k.value) for k in chosen]


def augment_description(spec: SlotSpec, demos: Sequence[Demonstration]) -> str:
    """The rendered slot query plus one "ex." line per demonstration."""
    lines = [render_slot_query(spec)]
    lines.extend(render_demo_line(demo) for demo in demos)
    return "\n".join(lines)


def augment_dataset(examples: Sequence[TrainingExample], corpus: Corpus,
                    embedder: Embedder, *,
                    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE,
                    max_k: int = DEFAULT_MAX_DEMONSTRATIONS,
                    seed: int = 0) -> list[TrainingExample]:
    """Attach mined demonstrations to every example of a dataset."""
    keys = build_slot_value_keys(corpus)
    if not keys:
        log.warning("no filled slot-values to mine demonstrations from")
        return list(examples)
    labels = cluster_slot_values(keys, embedder, min_cluster_size)
    clustered = sum(1 for l in labels if l != NOISE_LABEL)
    log.info("clustered %d/%d slot-value keys into %d clusters",
             clustered, len(keys), len({l for l in labels if l != NOISE_LABEL}))
    return [
        replace(
            example,
            demos=tuple(sample_demonstrations(example, keys, labels, max_k, seed)),
        )
        for example in examples
    ]


# --- hand-authored demonstrations (benchmark side) ---------------------------

def read_manual_demonstrations(path: str | Path) -> dict[str, list[Demonstration]]:
    """Load {slot, turn_text, value} records grouped by canonical slot name."""
    by_slot: dict[str, list[Demonstration]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            demo = Demonstration(
                turn_text=record["turn_text"],
                slot=record["slot"],
                value=record["value"],
            )
            by_slot.setdefault(canonical_slot(record["slot"]), []).append(demo)
    return by_slot


def apply_manual_demonstrations(examples: Sequence[TrainingExample],
                                by_slot: Mapping[str, list[Demonstration]],
                                max_k: int = DEFAULT_MAX_DEMONSTRATIONS
                                ) -> list[TrainingExample]:
    return [
        replace(
            example,
            demos=tuple(by_slot.get(canonical_slot(example.target.slot), [])[:max_k]),
        )
        for example in examples
    ]

"""Dataset assembly: state compilation, downsampling, statistics, and I/O.

Downsampling keeps slot-type diversity: every filled slot-value update pair
yields exactly one training example, whose context ends at a uniformly
sampled turn at which the compiled state still holds that slot filled. Empty
("none") examples are drawn from (turn, slot) positions where a slot known
to the dialogue is absent from the compiled state, at half the filled count.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyCorpus, MissingInput, SchemaError
from .model import (
    EMPTY_STATE,
    Dialogue,
    DialogueState,
    Scenario,
    SlotSpec,
    SlotValue,
    StateUpdate,
    TrainingExample,
    canonical_slot,
    compile_state,
    render_context,
)

log = logging.getLogger(__name__)


def compile_dialogue(updates: Sequence[StateUpdate]) -> list[DialogueState]:
    """Fold updates into one compiled state per turn."""
    states = []
    state = EMPTY_STATE
    for update in updates:
        state = compile_state(state, update)
        states.append(state)
    return states


@dataclass(frozen=True)
class SamplingPlan:
    """Filled-example count n, empty-example count m = floor(n/2), and seed."""

    n: int
    m: int
    seed: int

    def __post_init__(self):
        if self.m != self.n // 2:
            raise ValueError(f"m must be floor(0.5 * n): n={self.n} m={self.m}")

    @classmethod
    def for_filled_count(cls, n: int, seed: int) -> "SamplingPlan":
        return cls(n=n, m=n // 2, seed=seed)


@dataclass
class Corpus:
    """All per-stage artifacts joined in memory."""

    scenarios: tuple[Scenario, ...]
    dialogues: tuple[Dialogue, ...]
    updates: Mapping[str, tuple[StateUpdate, ...]]
    specs: Mapping[tuple[str, int, str], SlotSpec] = field(default_factory=dict)

    def updates_for(self, dialogue_id: str) -> tuple[StateUpdate, ...]:
        return self.updates.get(dialogue_id, ())

    def spec_for(self, dialogue_id: str, turn_index: int, slot: str) -> SlotSpec:
        key = (dialogue_id, turn_index, canonical_slot(slot))
        spec = self.specs.get(key)
        if spec is None:
            raise MissingInput(f"no slot spec for {key}")
        return spec

    def filled_update_count(self) -> int:
        return sum(
            1
            for updates in self.updates.values()
            for update in updates
            for pair in update.pairs
            if pair.is_filled
        )


def _filled_turns(states: Sequence[DialogueState], key: str) -> list[int]:
    out = []
    for t, state in enumerate(states):
        pair = state.slots.get(key)
        if pair is not None and pair.is_filled:
            out.append(t)
    return out


def downsample(corpus: Corpus, plan: SamplingPlan) -> list[TrainingExample]:
    """Sample the training set: plan.n filled plus plan.m empty examples.

    Filled examples are emitted in corpus iteration order, one per original
    filled update pair. Deterministic for a given corpus and seed.
    """
    filled_count = corpus.filled_update_count()
    if filled_count == 0:
        raise EmptyCorpus("no filled slot-value updates to sample from")
    if plan.n != filled_count:
        raise ValueError(
            f"plan.n={plan.n} but the corpus holds {filled_count} filled updates"
        )
    rng = random.Random(plan.seed)
    examples: list[TrainingExample] = []
    empty_pool: list[tuple[Dialogue, int, str, int]] = []  # dialogue, turn, slot, spec turn

    for dialogue in corpus.dialogues:
        updates = corpus.updates_for(dialogue.id)
        if not updates:
            continue
        states = compile_dialogue(updates)

        for update in updates:
            for pair in update.pairs:
                if not pair.is_filled:
                    continue
                key = canonical_slot(pair.slot)
                candidates = [
                    t for t in _filled_turns(states, key) if t >= update.turn_index
                ]
                t = rng.choice(candidates)
                compiled = states[t].slots[key]
                examples.append(
                    TrainingExample(
                        scenario_id=dialogue.scenario_id,
                        dialogue_id=dialogue.id,
                        turn_index=t,
                        context=render_context(dialogue.turns[: t + 1]),
                        spec=corpus.spec_for(dialogue.id, update.turn_index, pair.slot),
                        target=SlotValue(slot=pair.slot, value=compiled.value),
                    )
                )

        # slots known to this dialogue, with where they first appear
        vocabulary: dict[str, tuple[str, int]] = {}
        for update in updates:
            for pair in update.pairs:
                vocabulary.setdefault(canonical_slot(pair.slot), (pair.slot, update.turn_index))
        for t, state in enumerate(states):
            for key, (display, first_turn) in vocabulary.items():
                if key not in state.slots:
                    empty_pool.append((dialogue, t, display, first_turn))

    if plan.m:
        if not empty_pool:
            log.warning("empty-slot pool is empty; skipping %d empty examples", plan.m)
            chosen = []
        elif len(empty_pool) >= plan.m:
            chosen = rng.sample(empty_pool, plan.m)
        else:
            chosen = rng.choices(empty_pool, k=plan.m)
        for dialogue, t, slot, first_turn in chosen:
            examples.append(
                TrainingExample(
                    scenario_id=dialogue.scenario_id,
                    dialogue_id=dialogue.id,
                    turn_index=t,
                    context=render_context(dialogue.turns[: t + 1]),
                    spec=corpus.spec_for(dialogue.id, first_turn, slot),
                    target=SlotValue.empty(slot),
                )
            )
    return examples


# --- statistics ----------------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    scenarios: int
    dialogues: int
    turns: int
    turns_per_dialogue: float
    tokens: int
    tokens_per_turn: float
    slot_values: int
    unique_slots: int
    unique_slots_per_scenario: float
    unique_slots_per_dialogue: float
    unique_slots_per_turn: float
    turns_without_sv: int
    tokens_per_slot_name: float
    tokens_per_slot_value: float

    def as_report(self) -> str:
        rows = []
        for name, value in vars(self).items():
            rendered = f"{value:.4f}" if isinstance(value, float) else str(value)
            rows.append(f"{name}\t{rendered}")
        return "\n".join(rows) + "\n"


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def _tokens(text: str) -> int:
    return len(text.split())


def compute_stats(corpus: Corpus) -> DatasetStats:
    """Corpus statistics; tokens are whitespace counts over utterance text."""
    dialogues = corpus.dialogues
    turns = sum(len(d.turns) for d in dialogues)
    tokens = sum(_tokens(t.text) for d in dialogues for t in d.turns)

    all_pairs: list[SlotValue] = []
    turns_without = 0
    per_dialogue_unique: list[int] = []
    per_turn_unique: list[int] = []
    scenario_slots: dict[str, set[str]] = {s.id: set() for s in corpus.scenarios}
    global_slots: set[str] = set()

    for dialogue in dialogues:
        dialogue_slots: set[str] = set()
        for update in corpus.updates_for(dialogue.id):
            names = {p.slot for p in update.pairs}
            all_pairs.extend(update.pairs)
            per_turn_unique.append(len(names))
            if not update.pairs:
                turns_without += 1
            dialogue_slots |= names
        per_dialogue_unique.append(len(dialogue_slots))
        scenario_slots.setdefault(dialogue.scenario_id, set()).update(dialogue_slots)
        global_slots |= dialogue_slots

    return DatasetStats(
        scenarios=len(corpus.scenarios),
        dialogues=len(dialogues),
        turns=turns,
        turns_per_dialogue=turns / len(dialogues) if dialogues else 0.0,
        tokens=tokens,
        tokens_per_turn=tokens / turns if turns else 0.0,
        slot_values=len(all_pairs),
        unique_slots=len(global_slots),
        unique_slots_per_scenario=_mean(len(v) for v in scenario_slots.values()),
        unique_slots_per_dialogue=_mean(per_dialogue_unique),
        unique_slots_per_turn=_mean(per_turn_unique),
        turns_without_sv=turns_without,
        tokens_per_slot_name=_mean(_tokens(p.slot) for p in all_pairs),
        tokens_per_slot_value=_mean(_tokens(p.value) for p in all_pairs),
    )


# --- dataset file format ---------------------------------------------------------

DATASET_FIELDS = frozenset(
    {"scenario_id", "dialogue_id", "turn_index", "context", "slot",
     "description", "examples", "target", "demos"}
)


def write_dataset(examples: Sequence[TrainingExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example.to_record(), ensure_ascii=False) + "\n")


def read_dataset(path: str | Path) -> list[TrainingExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {number}: invalid JSON ({exc})") from exc
            keys = set(record)
            missing = DATASET_FIELDS - keys
            unknown = keys - DATASET_FIELDS
            if missing:
                raise SchemaError(f"line {number}: missing field(s) {sorted(missing)}")
            if unknown:
                raise SchemaError(f"line {number}: unknown field(s) {sorted(unknown)}")
            try:
                examples.append(TrainingExample.from_record(record))
            except (ValueError, TypeError, KeyError) as exc:
                raise SchemaError(f"line {number}: {exc}") from exc
    return examples

"""Shared value objects for the pipeline.

Everything here is an immutable value object, safe to share across worker
threads. Slot values use two sentinel encodings that survive serialization
as-is: "?" marks a slot that was requested but not yet filled, and "none"
marks an explicitly empty slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

REQUESTED_VALUE = "?"
EMPTY_VALUE = "none"

_EMBEDDING_NORM_TOL = 1e-6


def canonical_slot(name: str) -> str:
    """Key used when merging slots: trimmed, casefolded, spaces collapsed."""
    return " ".join(name.casefold().split())


def single_line(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class Scenario:
    """A one-line task-domain description, optionally with its embedding."""

    id: str
    description: str
    embedding: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.description.strip():
            raise ValueError("scenario description must be non-empty")
        if "\n" in self.description:
            raise ValueError("scenario description must be a single line")
        if self.embedding is not None:
            norm = math.sqrt(sum(x * x for x in self.embedding))
            if abs(norm - 1.0) > _EMBEDDING_NORM_TOL:
                raise ValueError(f"scenario embedding is not unit-norm ({norm})")

    def to_record(self) -> dict[str, Any]:
        return {"id": self.id, "description": self.description}

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "Scenario":
        return cls(id=record["id"], description=record["description"])


@dataclass(frozen=True)
class Turn:
    index: int
    speaker: str
    text: str

    def __post_init__(self):
        if not self.speaker.strip():
            raise ValueError("speaker tag must be non-empty")

    def render(self) -> str:
        return f"{self.speaker}: {self.text}"


def render_context(turns: Iterable[Turn]) -> str:
    """Turns as speaker-tagged lines; one turn per line."""
    return "\n".join(t.render() for t in turns)


@dataclass(frozen=True)
class Dialogue:
    """Speaker-tagged turns belonging to one scenario.

    Exactly two speaker tags alternate; turn indices run 0..len-1.
    """

    id: str
    scenario_id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if len(self.turns) < 2:
            raise ValueError("a dialogue needs at least 2 turns")
        for i, turn in enumerate(self.turns):
            if turn.index != i:
                raise ValueError("turn indices must be consecutive from 0")
        tags = {t.speaker for t in self.turns}
        if len(tags) != 2:
            raise ValueError(f"a dialogue needs exactly two speakers, got {sorted(tags)}")
        for prev, cur in zip(self.turns, self.turns[1:]):
            if prev.speaker == cur.speaker:
                raise ValueError("speakers must alternate")

    def speaker_tags(self) -> tuple[str, str]:
        return self.turns[0].speaker, self.turns[1].speaker

    def other_speaker(self, tag: str) -> str:
        a, b = self.speaker_tags()
        return b if tag == a else a

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "scenario_id": self.scenario_id,
            "turns": [{"speaker": t.speaker, "text": t.text} for t in self.turns],
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "Dialogue":
        turns = tuple(
            Turn(index=i, speaker=t["speaker"], text=t["text"])
            for i, t in enumerate(record["turns"])
        )
        return cls(id=record["id"], scenario_id=record["scenario_id"], turns=turns)


@dataclass(frozen=True)
class QAPair:
    """One question-answer pair; answer None encodes Unknown (a request)."""

    question: str
    answer: str | None

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError("question must be non-empty")
        if self.answer is not None and not self.answer.strip():
            raise ValueError("an answered pair needs non-empty text")

    @property
    def is_unknown(self) -> bool:
        return self.answer is None


@dataclass(frozen=True)
class SlotValue:
    """A slot name with its serialized value.

    "?" encodes a requested slot, "none" an explicitly empty one; anything
    else is a filled value.
    """

    slot: str
    value: str

    def __post_init__(self):
        if not self.slot.strip():
            raise ValueError("slot name must be non-empty")
        if not self.value:
            raise ValueError("slot value must be non-empty (use '?' or 'none')")

    @property
    def is_requested(self) -> bool:
        return self.value == REQUESTED_VALUE

    @property
    def is_empty(self) -> bool:
        return self.value == EMPTY_VALUE

    @property
    def is_filled(self) -> bool:
        return not (self.is_requested or self.is_empty)

    @classmethod
    def requested(cls, slot: str) -> "SlotValue":
        return cls(slot, REQUESTED_VALUE)

    @classmethod
    def empty(cls, slot: str) -> "SlotValue":
        return cls(slot, EMPTY_VALUE)


@dataclass(frozen=True)
class StateUpdate:
    """Slot-value pairs newly asserted or requested at one turn."""

    turn_index: int
    pairs: tuple[SlotValue, ...]

    def __post_init__(self):
        seen = set()
        for pair in self.pairs:
            key = canonical_slot(pair.slot)
            if key in seen:
                raise ValueError(f"duplicate slot {pair.slot!r} within one update")
            seen.add(key)

    def to_record(self, dialogue_id: str) -> dict[str, Any]:
        return {
            "dialogue_id": dialogue_id,
            "turn_index": self.turn_index,
            "pairs": [{"slot": p.slot, "value": p.value} for p in self.pairs],
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "StateUpdate":
        pairs = tuple(SlotValue(p["slot"], p["value"]) for p in record["pairs"])
        return cls(turn_index=record["turn_index"], pairs=pairs)


@dataclass(frozen=True)
class DialogueState:
    """Compiled slot map after a turn; keys are canonical slot names."""

    turn_index: int
    slots: Mapping[str, SlotValue] = field(default_factory=dict)

    def get(self, slot: str) -> SlotValue | None:
        return self.slots.get(canonical_slot(slot))

    def __contains__(self, slot: str) -> bool:
        return canonical_slot(slot) in self.slots


EMPTY_STATE = DialogueState(turn_index=-1, slots={})


def compile_state(prev: DialogueState, update: StateUpdate) -> DialogueState:
    """Fold one update into a state: last writer wins per slot.

    Slots absent from the update carry forward unchanged; a later value
    (filled or not) overwrites an earlier one for the same canonical name.
    """
    if update.turn_index != prev.turn_index + 1:
        raise ValueError(
            f"update for turn {update.turn_index} cannot follow state at turn {prev.turn_index}"
        )
    slots = dict(prev.slots)
    for pair in update.pairs:
        slots[canonical_slot(pair.slot)] = pair
    return DialogueState(turn_index=update.turn_index, slots=slots)


@dataclass(frozen=True)
class SlotSpec:
    """A slot name with its description phrase and example values."""

    slot: str
    description: str
    examples: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.description.strip():
            raise ValueError("slot description must be non-empty")
        if any(not e.strip() for e in self.examples):
            raise ValueError("example values must be non-empty")


@dataclass(frozen=True)
class Demonstration:
    """A worked example: the turn where a slot took a value, from another dialogue."""

    turn_text: str
    slot: str
    value: str

    def __post_init__(self):
        if not self.value.strip():
            raise ValueError("demonstration value must be non-empty")


@dataclass(frozen=True)
class TrainingExample:
    """A rendered (context, slot spec, target) record with provenance."""

    scenario_id: str
    dialogue_id: str
    turn_index: int
    context: str
    spec: SlotSpec
    target: SlotValue
    demos: tuple[Demonstration, ...] = ()

    def __post_init__(self):
        lines = self.context.split("\n")
        if len(lines) != self.turn_index + 1:
            raise ValueError(
                f"context has {len(lines)} turns, expected {self.turn_index + 1}"
            )
        if canonical_slot(self.target.slot) != canonical_slot(self.spec.slot):
            raise ValueError("target slot and spec slot must agree")

    def to_record(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "dialogue_id": self.dialogue_id,
            "turn_index": self.turn_index,
            "context": self.context,
            "slot": self.target.slot,
            "description": self.spec.description,
            "examples": list(self.spec.examples),
            "target": self.target.value,
            "demos": [
                {"turn_text": d.turn_text, "slot": d.slot, "value": d.value}
                for d in self.demos
            ],
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "TrainingExample":
        demos = tuple(
            Demonstration(d["turn_text"], d["slot"], d["value"])
            for d in record["demos"]
        )
        return cls(
            scenario_id=record["scenario_id"],
            dialogue_id=record["dialogue_id"],
            turn_index=record["turn_index"],
            context=record["context"],
            spec=SlotSpec(
                slot=record["slot"],
                description=record["description"],
                examples=tuple(record["examples"]),
            ),
            target=SlotValue(record["slot"], record["target"]),
            demos=demos,
        )

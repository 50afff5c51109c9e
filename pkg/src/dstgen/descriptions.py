"""Slot-description generation: one prompt per state update.

Every slot of the update receives a short description phrase plus example
values. Slots the completion misses fall back to a spec built from the
question and the observed value, so each update slot always ends up with
exactly one SlotSpec.
"""

from __future__ import annotations

import logging

from .errors import DescriptionFailed, ParseError
from .gateway import LlmGateway
from .model import SlotSpec, StateUpdate, canonical_slot
from .parsing import parse_slot_spec_block

log = logging.getLogger(__name__)

MAX_EXAMPLE_VALUES = 6


def spec_bindings(entries: list[tuple[str, str, str]]) -> dict[str, str]:
    """(slot, value, question) triples rendered for the description prompt."""
    return {
        "slot_entries": "\n\n".join(
            f"Info Type: {slot}\nQuestion: {question}\nValue: {value}"
            for slot, value, question in entries
        )
    }


def _fallback_spec(slot: str, value: str, question: str) -> SlotSpec:
    examples = (value,) if value not in ("?", "none") else ()
    return SlotSpec(slot=slot, description=question, examples=examples)


def generate_slot_specs(gateway: LlmGateway, update: StateUpdate,
                        questions: list[str], *,
                        max_examples: int = MAX_EXAMPLE_VALUES) -> list[SlotSpec]:
    """One SlotSpec per update pair, aligned by case-insensitive name match."""
    if len(questions) != len(update.pairs):
        raise ValueError("questions must align with update pairs")
    if not update.pairs:
        return []
    entries = [
        (pair.slot, pair.value, question)
        for pair, question in zip(update.pairs, questions)
    ]
    try:
        records = gateway.complete_parsed(
            "slot_specs", spec_bindings(entries), parse_slot_spec_block
        )
    except ParseError as exc:
        raise DescriptionFailed(
            f"description prompt for turn {update.turn_index} yielded no records: {exc}"
        ) from exc

    by_slot: dict[str, SlotSpec] = {}
    for record in records:
        by_slot.setdefault(canonical_slot(record.slot), record)

    specs = []
    for pair, question in zip(update.pairs, questions):
        found = by_slot.get(canonical_slot(pair.slot))
        if found is None:
            log.debug("no description for %r; falling back to its question", pair.slot)
            specs.append(_fallback_spec(pair.slot, pair.value, question))
            continue
        specs.append(
            SlotSpec(
                slot=pair.slot,
                description=found.description,
                examples=found.examples[:max_examples],
            )
        )
    return specs

"""Automatic per-turn state annotation.

For every turn: break the turn down into question-answer pairs over a
two-turn window, collect the questions that went unanswered (requests),
try to answer them against the next turn, translate questions into slot
names and answers into concise values, and assemble one state update per
turn. Requested slots carry the "?" value until the matching answer
arrives; the slot name for a request is translated once, at request time,
and reused when the answer is merged into the next update, so the
requested and filled entries always share a name.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import AnnotationFailed, MalformedBlock, ParseError
from .gateway import LlmGateway
from .model import Dialogue, QAPair, SlotValue, StateUpdate, canonical_slot
from .parsing import parse_arrow_mapping, parse_qa_block, parse_qvav_block

log = logging.getLogger(__name__)

MAX_QA_PAIRS = 16


@dataclass(frozen=True)
class CarryoverPair:
    """A request from turn t-1 answered in turn t, with its cached slot name."""

    pair: QAPair
    slot: str

    def __post_init__(self):
        if self.pair.is_unknown:
            raise ValueError("carryover pairs must be answered")


@dataclass(frozen=True)
class AnnotationCursor:
    dialogue_id: str
    t: int
    carryover: tuple[CarryoverPair, ...] = ()


@dataclass(frozen=True)
class TurnAnnotation:
    """One turn's update plus the question behind each pair (for §-later prompts)."""

    update: StateUpdate
    questions: tuple[str, ...]

    def __post_init__(self):
        if len(self.questions) != len(self.update.pairs):
            raise ValueError("questions must align with update pairs")


# --- prompt bindings ----------------------------------------------------------

def qa_bindings(dialogue: Dialogue, t: int,
                carryover: tuple[CarryoverPair, ...]) -> dict[str, str]:
    turns = dialogue.turns
    speaker = turns[t].speaker
    listener = dialogue.other_speaker(speaker)
    answered = "\n".join(
        f"{listener}: {c.pair.question}\n{speaker}: {c.pair.answer}"
        for c in carryover
    )
    return {
        "speaker": speaker,
        "listener": listener,
        "dialogue_context": turns[t - 1].render() if t > 0 else "",
        "last_turn": turns[t].text,
        "answered_qa_pairs": answered,
    }


def answer_bindings(dialogue: Dialogue, t: int, questions: list[str]) -> dict[str, str]:
    """Bindings for answering turn t's open questions against turn t+1."""
    turns = dialogue.turns
    speaker = turns[t + 1].speaker
    listener = turns[t].speaker
    return {
        "speaker": speaker,
        "listener": listener,
        "dialogue_context": turns[t].render(),
        "last_turn": turns[t + 1].text,
        "questions": "\n".join(questions),
    }


def slot_name_bindings(questions: list[str]) -> dict[str, str]:
    return {"questions": "\n".join(questions)}


def value_bindings(triples: list[tuple[str, str, str]]) -> dict[str, str]:
    """(question, slot name, answer) triples rendered for value translation."""
    return {
        "qav_tuples": "\n\n".join(
            f"Question: {q}\nVariable: {s}\nAnswer: {a}" for q, s, a in triples
        )
    }


# --- operations -----------------------------------------------------------------

def generate_qa_pairs(gateway: LlmGateway, dialogue: Dialogue, t: int,
                      carryover: tuple[CarryoverPair, ...] = (), *,
                      max_pairs: int = MAX_QA_PAIRS) -> list[QAPair]:
    """New QA pairs for turn t; carryover questions are excluded from the result."""
    speaker = dialogue.turns[t].speaker
    listener = dialogue.other_speaker(speaker)
    try:
        pairs = gateway.complete_parsed(
            "qa_pairs",
            qa_bindings(dialogue, t, carryover),
            lambda text: parse_qa_block(text, speaker, listener),
        )
    except ParseError as exc:
        raise AnnotationFailed(
            f"QA generation failed: {exc}", dialogue_id=dialogue.id, turn_index=t
        ) from exc
    known = {canonical_question(c.pair.question) for c in carryover}
    fresh = [p for p in pairs if canonical_question(p.question) not in known]
    if len(fresh) > max_pairs:
        log.warning("turn %d of %s produced %d QA pairs; keeping %d",
                    t, dialogue.id, len(fresh), max_pairs)
        fresh = fresh[:max_pairs]
    return fresh


def canonical_question(question: str) -> str:
    return " ".join(question.casefold().split())


def collect_unanswered(pairs: list[QAPair]) -> list[str]:
    return [p.question for p in pairs if p.is_unknown]


def resolve_requests(gateway: LlmGateway, dialogue: Dialogue, t: int,
                     questions: list[str]) -> list[QAPair]:
    """Answer turn t's open questions against turn t+1; unanswered ones drop out."""
    if not questions:
        return []
    if t + 1 >= len(dialogue.turns):
        raise ValueError("cannot resolve requests on the final turn")
    speaker = dialogue.turns[t + 1].speaker
    listener = dialogue.turns[t].speaker
    try:
        pairs = gateway.complete_parsed(
            "qa_answers",
            answer_bindings(dialogue, t, questions),
            lambda text: parse_qa_block(text, speaker, listener),
        )
    except ParseError as exc:
        raise AnnotationFailed(
            f"request resolution failed: {exc}", dialogue_id=dialogue.id, turn_index=t
        ) from exc
    by_question = {canonical_question(q): q for q in questions}
    resolved = []
    for pair in pairs:
        if pair.is_unknown:
            continue
        original = by_question.get(canonical_question(pair.question))
        if original is None:
            log.debug("dropping unrequested answer for %r", pair.question)
            continue
        resolved.append(QAPair(question=original, answer=pair.answer))
    return resolved


def translate_slot_names(gateway: LlmGateway, questions: list[str]) -> list[str]:
    """One slot name per question, lowercased and whitespace-normalized."""
    if not questions:
        raise ValueError("translate_slot_names needs at least one question")

    def parser(text: str) -> list[tuple[str, str]]:
        mappings = parse_arrow_mapping(text)
        if len(mappings) != len(questions):
            raise MalformedBlock(
                f"expected {len(questions)} mappings, got {len(mappings)}"
            )
        return mappings

    try:
        mappings = gateway.complete_parsed("slot_names", slot_name_bindings(questions), parser)
    except ParseError as exc:
        raise AnnotationFailed(f"slot-name translation failed: {exc}") from exc
    return [" ".join(name.lower().split()) for _, name in mappings]


def _unique_slot_names(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for name in names:
        key = canonical_slot(name)
        count = seen.get(key, 0) + 1
        seen[key] = count
        out.append(name if count == 1 else f"{name}#{count}")
    return out


def translate_values(gateway: LlmGateway, pairs: list[QAPair], names: list[str],
                     turn_index: int) -> TurnAnnotation:
    """Build the state update for one turn from aligned pairs and slot names.

    Unknown pairs bypass the backend and become requested ("?") slots;
    answered pairs go through value translation. Translated values are
    matched back by question text (falling back to the variable name, then
    to the raw answer), and duplicate slot names get a #N suffix.
    """
    if len(pairs) != len(names):
        raise ValueError("pairs and slot names must align")
    answered = [(p.question, name, p.answer) for p, name in zip(pairs, names)
                if not p.is_unknown]
    by_question: dict[str, str] = {}
    by_variable: dict[str, str] = {}
    if answered:
        try:
            records = gateway.complete_parsed(
                "slot_values",
                value_bindings([(q, s, a) for q, s, a in answered]),
                parse_qvav_block,
            )
        except ParseError as exc:
            raise AnnotationFailed(
                f"value translation failed: {exc}", turn_index=turn_index
            ) from exc
        for question, variable, _, value in records:
            by_question.setdefault(canonical_question(question), value)
            by_variable.setdefault(canonical_slot(variable), value)

    unique_names = _unique_slot_names(names)
    slot_values = []
    for pair, name in zip(pairs, unique_names):
        if pair.is_unknown:
            slot_values.append(SlotValue.requested(name))
            continue
        value = by_question.get(canonical_question(pair.question))
        if value is None:
            value = by_variable.get(canonical_slot(name))
        if not value or value == "?":
            log.debug("no translated value for %r; using the raw answer", name)
            value = pair.answer
        slot_values.append(SlotValue(slot=name, value=value))
    update = StateUpdate(turn_index=turn_index, pairs=tuple(slot_values))
    return TurnAnnotation(update=update, questions=tuple(p.question for p in pairs))


def annotate_dialogue(gateway: LlmGateway, dialogue: Dialogue, *,
                      max_pairs: int = MAX_QA_PAIRS) -> list[TurnAnnotation]:
    """Annotate every turn; returns one (update, questions) record per turn."""
    annotations: list[TurnAnnotation] = []
    cursor = AnnotationCursor(dialogue_id=dialogue.id, t=0)
    for t in range(len(dialogue.turns)):
        try:
            fresh = generate_qa_pairs(gateway, dialogue, t, cursor.carryover,
                                      max_pairs=max_pairs)
            fresh_names = (
                translate_slot_names(gateway, [p.question for p in fresh])
                if fresh else []
            )
            pairs = [c.pair for c in cursor.carryover] + fresh
            names = [c.slot for c in cursor.carryover] + fresh_names
            annotation = translate_values(gateway, pairs, names, t)
            annotations.append(annotation)

            carryover: tuple[CarryoverPair, ...] = ()
            open_questions = collect_unanswered(fresh)
            if open_questions and t + 1 < len(dialogue.turns):
                # cache the names as they landed in U_t (suffixes included) so
                # the requested and filled entries share one slot name
                final_names = [
                    sv.slot for sv in annotation.update.pairs[len(cursor.carryover):]
                ]
                name_of = {
                    canonical_question(p.question): name
                    for p, name in zip(fresh, final_names)
                }
                resolved = resolve_requests(gateway, dialogue, t, open_questions)
                carryover = tuple(
                    CarryoverPair(pair=p, slot=name_of[canonical_question(p.question)])
                    for p in resolved
                )
            cursor = AnnotationCursor(dialogue_id=dialogue.id, t=t + 1, carryover=carryover)
        except AnnotationFailed as exc:
            if exc.dialogue_id is None:
                exc.dialogue_id = dialogue.id
            if exc.turn_index is None:
                exc.turn_index = t
            raise
    return annotations

"""Authoring fixture corpora for the scripted mock backend.

A scripted scenario declares its dialogues turn by turn: what each turn
shares, requests, and resolves, with the slot names and concise values the
"model" should produce. The builder walks the exact call sequence the
pipeline makes (same binding builders, same carryover bookkeeping) and
writes one fixture file per expected completion, so a full offline run
replays deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .annotation import (
    CarryoverPair,
    answer_bindings,
    qa_bindings,
    slot_name_bindings,
    value_bindings,
)
from .descriptions import spec_bindings
from .dialogues import InfoTypeList, dialogue_bindings, info_type_bindings
from .gateway import write_fixture
from .model import Dialogue, QAPair, Scenario, Turn
from .scenarios import scenario_bindings, scenario_id


@dataclass(frozen=True)
class Share:
    """Information stated in a turn: its question, answer, slot, and value."""

    question: str
    answer: str
    slot: str
    value: str


@dataclass(frozen=True)
class Request:
    """Information asked for in a turn; annotated as (slot, "?")."""

    question: str
    slot: str


@dataclass(frozen=True)
class Resolution:
    """An answer, in this turn, to a question requested in the previous turn."""

    question: str
    answer: str
    value: str


@dataclass(frozen=True)
class ScriptedTurn:
    speaker: str
    text: str
    shares: tuple[Share, ...] = ()
    requests: tuple[Request, ...] = ()
    resolutions: tuple[Resolution, ...] = ()


@dataclass(frozen=True)
class ScriptedScenario:
    description: str
    info_types: tuple[str, ...]
    dialogues: tuple[tuple[ScriptedTurn, ...], ...]
    # slot -> (description, example values); anything missing gets a default
    slot_specs: Mapping[str, tuple[str, tuple[str, ...]]] = field(default_factory=dict)

    @property
    def id(self) -> str:
        return scenario_id(self.description)


@dataclass(frozen=True)
class _Carry:
    """A resolved request headed into the next turn's prompts."""

    pair: QAPair
    slot: str
    value: str


def scripted_dialogue(scenario: ScriptedScenario, index: int,
                      turns: Sequence[ScriptedTurn]) -> Dialogue:
    return Dialogue(
        id=f"{scenario.id}-d{index}",
        scenario_id=scenario.id,
        turns=tuple(
            Turn(index=i, speaker=t.speaker, text=t.text) for i, t in enumerate(turns)
        ),
    )


def _qa_fixture_text(turn: ScriptedTurn, speaker: str, listener: str) -> str:
    lines = []
    for share in turn.shares:
        lines.append(f"{listener}: {share.question}")
        lines.append(f"{speaker}: {share.answer}")
    for request in turn.requests:
        lines.append(f"{speaker}: {request.question}")
        lines.append(f"{listener}: Unknown.")
    return "\n".join(lines)  # empty when the turn carries no information


def _qvav_fixture_text(rows: Sequence[tuple[str, str, str, str]]) -> str:
    return "\n\n".join(
        f"Question: {q}\nVariable: {slot}\nAnswer: {answer}\nValue: {value}"
        for q, slot, answer, value in rows
    )


def _spec_record(scenario: ScriptedScenario, slot: str, question: str, value: str) -> str:
    if slot in scenario.slot_specs:
        description, examples = scenario.slot_specs[slot]
    else:
        description = f"the {slot} under discussion"
        examples = (value,) if value not in ("?", "none") else ()
    values_line = ", ".join(examples) if examples else "various"
    return f"Info Type: {slot}\nPossible Values: {values_line}\nDescription: {description}"


def install_dialogue_fixtures(root: str | Path, scenario: ScriptedScenario,
                              turns: Sequence[ScriptedTurn]) -> None:
    """Write every annotation-stage fixture one dialogue will consume.

    Bindings depend on turn text and carryover only, never on the dialogue
    id, so dialogues that share a scenario reuse nothing by accident.
    """
    dialogue = scripted_dialogue(scenario, 0, turns)
    carry: list[_Carry] = []
    for t, turn in enumerate(turns):
        speaker = turn.speaker
        listener = dialogue.other_speaker(speaker)
        carryover = tuple(CarryoverPair(pair=c.pair, slot=c.slot) for c in carry)

        write_fixture(root, "qa_pairs", qa_bindings(dialogue, t, carryover),
                      _qa_fixture_text(turn, speaker, listener))

        new_questions = [s.question for s in turn.shares] + [r.question for r in turn.requests]
        if new_questions:
            arrows = [f"{s.question} -> {s.slot}" for s in turn.shares]
            arrows += [f"{r.question} -> {r.slot}" for r in turn.requests]
            write_fixture(root, "slot_names", slot_name_bindings(new_questions),
                          "\n".join(arrows))

        # value translation covers carryover pairs plus this turn's shares
        answered = [(c.pair.question, c.slot, c.pair.answer) for c in carry]
        answered += [(s.question, s.slot, s.answer) for s in turn.shares]
        if answered:
            rows = [(c.pair.question, c.slot, c.pair.answer, c.value) for c in carry]
            rows += [(s.question, s.slot, s.answer, s.value) for s in turn.shares]
            write_fixture(root, "slot_values", value_bindings(answered),
                          _qvav_fixture_text(rows))

        # the description prompt covers every pair of the update, "?" included
        entries = [(c.slot, c.value, c.pair.question) for c in carry]
        entries += [(s.slot, s.value, s.question) for s in turn.shares]
        entries += [(r.slot, "?", r.question) for r in turn.requests]
        if entries:
            records = [
                _spec_record(scenario, slot, question, value)
                for slot, value, question in entries
            ]
            write_fixture(root, "slot_specs", spec_bindings(entries),
                          "\n\n".join(records))

        carry = []
        if turn.requests and t + 1 < len(turns):
            next_turn = turns[t + 1]
            resolved = {r.question: r for r in next_turn.resolutions}
            questions = [r.question for r in turn.requests]
            lines = []
            for request in turn.requests:
                answer = resolved.get(request.question)
                lines.append(f"{turns[t].speaker}: {request.question}")
                lines.append(
                    f"{next_turn.speaker}: {answer.answer}" if answer
                    else f"{next_turn.speaker}: Unknown."
                )
            write_fixture(root, "qa_answers", answer_bindings(dialogue, t, questions),
                          "\n".join(lines))
            for request in turn.requests:
                answer = resolved.get(request.question)
                if answer:
                    carry.append(
                        _Carry(
                            pair=QAPair(question=request.question, answer=answer.answer),
                            slot=request.slot,
                            value=answer.value,
                        )
                    )


def install_corpus_fixtures(root: str | Path,
                            scenarios: Sequence[ScriptedScenario]) -> list[Scenario]:
    """Write fixtures for a whole run: scenario list, info types, dialogues,
    and every annotation/description completion. Returns the Scenario objects
    the derivation stage will produce (in order)."""
    k = len(scenarios)
    listing = "\n".join(
        f"{i}. {scenario.description}" for i, scenario in enumerate(scenarios, 1)
    )
    write_fixture(root, "scenarios", scenario_bindings(k), listing)

    produced = []
    for scripted in scenarios:
        scenario = Scenario(id=scripted.id, description=scripted.description)
        produced.append(scenario)
        info_types = InfoTypeList(scenario_id=scenario.id, items=scripted.info_types)
        write_fixture(
            root, "info_types", info_type_bindings(scenario),
            "\n".join(f"{i}. {item}" for i, item in enumerate(scripted.info_types, 1)),
        )
        for index, turns in enumerate(scripted.dialogues, 1):
            text = "\n".join(f"{t.speaker}: {t.text}" for t in turns)
            write_fixture(root, "dialogue", dialogue_bindings(scenario, info_types),
                          text, call_index=index)
        for turns in scripted.dialogues:
            install_dialogue_fixtures(root, scripted, turns)
    return produced

"""Two-step dialogue generation: information types, then the dialogue.

The dialogue completion is parsed into speaker-tagged turns. Untagged lines
at the top (narration, preamble) are dropped; untagged lines after a turn
are treated as continuations and folded in; consecutive lines from the same
speaker merge into one turn so that the result alternates between exactly
two tags.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import EmptyParse, InfoTypesFailed, ParseError, TooShort, TurnParseError
from .gateway import LlmGateway
from .model import Dialogue, Scenario, Turn, single_line
from .parsing import parse_numbered_list

log = logging.getLogger(__name__)

MIN_INFO_TYPES = 3
MIN_TURNS = 6

_TURN_LINE = re.compile(r"^\s*([A-Za-z][\w .'-]{0,24}?)\s*:\s*(\S.*)$")


@dataclass(frozen=True)
class InfoTypeList:
    scenario_id: str
    items: tuple[str, ...]

    def __post_init__(self):
        if any(not item.strip() for item in self.items):
            raise ValueError("information types must be non-empty")


def info_type_bindings(scenario: Scenario) -> dict[str, str]:
    return {"domain": scenario.description}


def dialogue_bindings(scenario: Scenario, info_types: InfoTypeList) -> dict[str, str]:
    return {
        "domain": scenario.description,
        "info_types": "\n".join(info_types.items),
    }


def generate_info_types(gateway: LlmGateway, scenario: Scenario, *,
                        min_items: int = MIN_INFO_TYPES) -> InfoTypeList:
    def parser(text: str) -> list[str]:
        items = parse_numbered_list(text)
        if len(items) < min_items:
            raise EmptyParse(f"only {len(items)} information types, need {min_items}")
        return items

    try:
        items = gateway.complete_parsed("info_types", info_type_bindings(scenario), parser)
    except ParseError as exc:
        raise InfoTypesFailed(f"scenario {scenario.id}: {exc}") from exc
    return InfoTypeList(scenario_id=scenario.id, items=tuple(items))


def parse_dialogue_turns(text: str) -> list[tuple[str, str]]:
    """(speaker, utterance) pairs from a dialogue completion.

    Raises TurnParseError unless exactly two distinct speaker tags appear.
    """
    raw: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _TURN_LINE.match(line)
        if match:
            raw.append((match.group(1).strip(), match.group(2).strip()))
        elif raw:
            speaker, prior = raw[-1]
            raw[-1] = (speaker, f"{prior} {line.strip()}")
        # untagged lines before the first turn are narration; drop them

    if not raw:
        raise TurnParseError("no speaker-tagged lines in dialogue completion")
    tags = sorted({speaker for speaker, _ in raw})
    if len(tags) != 2:
        raise TurnParseError(f"expected exactly two speakers, got {tags}")

    merged: list[tuple[str, str]] = []
    for speaker, utterance in raw:
        if merged and merged[-1][0] == speaker:
            merged[-1] = (speaker, f"{merged[-1][1]} {utterance}")
        else:
            merged.append((speaker, utterance))
    return merged


def generate_dialogue(gateway: LlmGateway, scenario: Scenario,
                      info_types: InfoTypeList, *, dialogue_id: str,
                      min_turns: int = MIN_TURNS) -> Dialogue:
    """Generate and parse one dialogue; structural failures retry once."""
    bindings = dialogue_bindings(scenario, info_types)
    reminder_next = False
    failure: Exception | None = None
    for attempt in range(2):
        text = gateway.complete_template("dialogue", bindings, with_reminder=reminder_next)
        try:
            turns = parse_dialogue_turns(text)
        except TurnParseError as exc:
            failure, reminder_next = exc, True
            log.info("dialogue %s attempt %d: %s", dialogue_id, attempt + 1, exc)
            continue
        if len(turns) < min_turns:
            failure = TooShort(
                f"dialogue {dialogue_id} has {len(turns)} turns, need {min_turns}"
            )
            reminder_next = False
            log.info("dialogue %s attempt %d too short (%d turns)",
                     dialogue_id, attempt + 1, len(turns))
            continue
        return Dialogue(
            id=dialogue_id,
            scenario_id=scenario.id,
            turns=tuple(
                Turn(index=i, speaker=speaker, text=single_line(utterance))
                for i, (speaker, utterance) in enumerate(turns)
            ),
        )
    assert failure is not None
    raise failure


def generate_dialogues(gateway: LlmGateway, scenario: Scenario,
                       info_types: InfoTypeList, count: int, *,
                       min_turns: int = MIN_TURNS) -> list[Dialogue]:
    return [
        generate_dialogue(
            gateway, scenario, info_types,
            dialogue_id=f"{scenario.id}-d{i}", min_turns=min_turns,
        )
        for i in range(count)
    ]

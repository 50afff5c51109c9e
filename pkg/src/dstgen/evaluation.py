"""Sequence rendering, value normalization, and Joint Goal Accuracy.

The input sequence format is the independent-slot formulation: the dialogue
context, a blank line, the instruction line, then one "slot: description
(e.g. v1, v2)?" query optionally followed by "ex." demonstration lines. JGA
counts a turn correct only when the normalized predicted and gold states are
equal as sets of slot-value pairs, absent-valued slots removed from both.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyGold, SchemaError, UnknownDomain
from .model import Demonstration, SlotSpec, Turn, render_context

log = logging.getLogger(__name__)

INSTRUCTION_LINE = "Identify the information from the above dialogue:"

# The dontcare/any equivalence class collapses to one canonical form.
_DONTCARE = frozenset({"dontcare", "dont care", "don't care", "do not care", "any"})
_ABSENT = frozenset({"", "none"})
_TRAILING_PUNCT = ".,!?;:"


def render_slot_query(spec: SlotSpec) -> str:
    """One line: "slot: description (e.g. v1, v2)?" (no parenthetical if no examples)."""
    parenthetical = f" (e.g. {', '.join(spec.examples)})" if spec.examples else ""
    return f"{spec.slot}: {spec.description}{parenthetical}?"


def render_demo_line(demo: Demonstration) -> str:
    return f"ex. {demo.turn_text} {demo.slot}? -> {demo.value}"


def render_sequence(context_turns: Sequence[Turn], spec: SlotSpec,
                    demos: Sequence[Demonstration] = ()) -> str:
    """The full input token sequence for one (context, slot) pair; byte-stable."""
    lines = [render_context(context_turns), "", INSTRUCTION_LINE, render_slot_query(spec)]
    lines.extend(render_demo_line(demo) for demo in demos)
    return "\n".join(lines)


def normalize_value(text: str | None, aliases: Mapping[str, str] | None = None) -> str | None:
    """Canonical form of a value; None means "absent slot"."""
    if text is None:
        return None
    value = " ".join(str(text).lower().split()).rstrip(_TRAILING_PUNCT).strip()
    if aliases and value in aliases:
        value = aliases[value]
    if value in _DONTCARE:
        return "dontcare"
    if value in _ABSENT:
        return None
    return value


def normalize_state(state: Mapping[str, str],
                    aliases: Mapping[str, str] | None = None) -> frozenset[tuple[str, str]]:
    """A state as a comparable set of (slot, value); absent-valued slots dropped."""
    pairs = []
    for slot, value in state.items():
        normalized = normalize_value(value, aliases)
        if normalized is not None:
            pairs.append((" ".join(slot.lower().split()), normalized))
    return frozenset(pairs)


@dataclass(frozen=True)
class TurnGold:
    dialogue_id: str
    turn_index: int
    state: Mapping[str, str]

    @property
    def domains(self) -> frozenset[str]:
        return frozenset(slot_domain(s) for s in self.state)


@dataclass(frozen=True)
class Prediction:
    dialogue_id: str
    turn_index: int
    state: Mapping[str, str]


def slot_domain(slot: str) -> str:
    """Domain prefix of a schema-qualified "domain-slot" name."""
    return slot.split("-", 1)[0]


def joint_goal_accuracy(preds: Sequence[Prediction], golds: Sequence[TurnGold],
                        aliases: Mapping[str, str] | None = None) -> float:
    """Fraction of gold turns whose entire state is matched exactly.

    A missing prediction counts as an empty state, so partial prediction
    files remain scorable.
    """
    if not golds:
        raise EmptyGold("no gold turns to score")
    by_turn: dict[tuple[str, int], Mapping[str, str]] = {}
    for pred in preds:
        by_turn[(pred.dialogue_id, pred.turn_index)] = pred.state
    correct = 0
    for gold in golds:
        predicted = by_turn.get((gold.dialogue_id, gold.turn_index), {})
        if normalize_state(predicted, aliases) == normalize_state(gold.state, aliases):
            correct += 1
    return correct / len(golds)


# --- benchmark corpus and leave-one-out splitting ------------------------------

@dataclass(frozen=True)
class BenchmarkDialogue:
    """Interchange record: speaker-tagged turns plus per-turn gold states."""

    dialogue_id: str
    turns: tuple[tuple[str, str], ...]            # (speaker, text)
    states: Mapping[int, Mapping[str, str]]       # turn index -> slot -> value

    def domains(self) -> frozenset[str]:
        return frozenset(
            slot_domain(slot) for state in self.states.values() for slot in state
        )


def corpus_domains(corpus: Sequence[BenchmarkDialogue]) -> frozenset[str]:
    out: set[str] = set()
    for dialogue in corpus:
        out |= dialogue.domains()
    return frozenset(out)


def _restrict(state: Mapping[str, str], domain: str) -> dict[str, str]:
    return {s: v for s, v in state.items() if slot_domain(s) == domain}


def leave_one_out_split(corpus: Sequence[BenchmarkDialogue], holdout_domain: str
                        ) -> tuple[list[TurnGold], list[TurnGold]]:
    """(train turns, test turns) for one holdout domain.

    Test turns come from dialogues that touch the holdout domain, with gold
    states restricted to holdout-domain slots; train turns come from the
    remaining dialogues, unrestricted.
    """
    domains = corpus_domains(corpus)
    if holdout_domain not in domains:
        raise UnknownDomain(f"{holdout_domain!r} not among {sorted(domains)}")
    train: list[TurnGold] = []
    test: list[TurnGold] = []
    for dialogue in corpus:
        if holdout_domain in dialogue.domains():
            for t, state in sorted(dialogue.states.items()):
                test.append(TurnGold(dialogue.dialogue_id, t, _restrict(state, holdout_domain)))
        else:
            for t, state in sorted(dialogue.states.items()):
                train.append(TurnGold(dialogue.dialogue_id, t, dict(state)))
    return train, test


def evaluate_by_domain(corpus: Sequence[BenchmarkDialogue], preds: Sequence[Prediction],
                       domains: Iterable[str] | None = None,
                       aliases: Mapping[str, str] | None = None) -> dict[str, float]:
    """Zero-shot style scoring: per holdout domain, JGA over its test split.

    Predictions are restricted to holdout-domain slots the same way gold
    states are, so a prediction file identical to the gold states scores 1.0.
    """
    chosen = sorted(domains) if domains is not None else sorted(corpus_domains(corpus))
    results = {}
    for domain in chosen:
        _, test = leave_one_out_split(corpus, domain)
        restricted_preds = [
            Prediction(p.dialogue_id, p.turn_index, _restrict(p.state, domain))
            for p in preds
        ]
        results[domain] = joint_goal_accuracy(restricted_preds, test, aliases)
    return results


@dataclass(frozen=True)
class DomainReport:
    per_domain: Mapping[str, float]
    average: float

    def to_tsv(self) -> str:
        names = sorted(self.per_domain)
        header = "\t".join(["avg"] + names)
        row = "\t".join(
            [f"{self.average:.4f}"] + [f"{self.per_domain[n]:.4f}" for n in names]
        )
        return f"{header}\n{row}\n"


def per_domain_report(results: Mapping[str, float]) -> DomainReport:
    """Per-domain scores plus their unweighted mean (the tables' "avg." column)."""
    if not results:
        raise EmptyGold("no per-domain results to report")
    return DomainReport(
        per_domain=dict(results),
        average=sum(results.values()) / len(results),
    )


# --- file formats ----------------------------------------------------------------

def _require(record: Mapping, fields: tuple[str, ...], number: int) -> None:
    missing = [f for f in fields if f not in record]
    if missing:
        raise SchemaError(f"line {number}: missing field(s) {missing}")


def read_benchmark(path: str | Path) -> list[BenchmarkDialogue]:
    """Read the dialogue+state interchange format (one JSON object per line)."""
    dialogues = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            _require(record, ("dialogue_id", "turns", "states"), number)
            turns = tuple((t["speaker"], t["text"]) for t in record["turns"])
            states = {s["turn_index"]: dict(s["slots"]) for s in record["states"]}
            dialogues.append(
                BenchmarkDialogue(record["dialogue_id"], turns, states)
            )
    return dialogues


def write_benchmark(path: str | Path, corpus: Sequence[BenchmarkDialogue]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in corpus:
            record = {
                "dialogue_id": dialogue.dialogue_id,
                "turns": [{"speaker": s, "text": t} for s, t in dialogue.turns],
                "states": [
                    {"turn_index": t, "slots": dict(state)}
                    for t, state in sorted(dialogue.states.items())
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> list[Prediction]:
    """Read prediction records {dialogue_id, turn_index, slots}."""
    preds = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            _require(record, ("dialogue_id", "turn_index", "slots"), number)
            preds.append(
                Prediction(record["dialogue_id"], record["turn_index"], dict(record["slots"]))
            )
    return preds


def read_aliases(path: str | Path) -> dict[str, str]:
    """Value-alias table: {"variant": "canonical"}, applied after normalization."""
    with open(path, encoding="utf-8") as fh:
        table = json.load(fh)
    if not isinstance(table, dict):
        raise SchemaError("alias file must hold a JSON object")
    return {str(k).lower(): str(v).lower() for k, v in table.items()}


def convert_multiwoz(path: str | Path) -> list[BenchmarkDialogue]:
    """Convert the common preprocessed MultiWOZ shape to the interchange format.

    Expects a JSON list of dialogues with a "dialogue" list of exchanges,
    each carrying "system_transcript", "transcript" (the user turn), and a
    "belief_state" of {"slots": [[name, value], ...]} entries. The belief
    state is attached to the user turn's index in the flattened turn list.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    dialogues = []
    for entry in data:
        dialogue_id = str(entry.get("dialogue_idx") or entry.get("dialogue_id"))
        turns: list[tuple[str, str]] = []
        states: dict[int, dict[str, str]] = {}
        for exchange in entry["dialogue"]:
            system = exchange.get("system_transcript", "")
            if system:
                turns.append(("system", system))
            turns.append(("user", exchange.get("transcript", "")))
            state = {}
            for item in exchange.get("belief_state", []):
                for slot, value in item.get("slots", []):
                    state[slot] = value
            states[len(turns) - 1] = state
        dialogues.append(BenchmarkDialogue(dialogue_id, tuple(turns), states))
    return dialogues

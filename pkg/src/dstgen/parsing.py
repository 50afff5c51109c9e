"""Parsers for the structured completion formats the prompts elicit.

Every parser is total over arbitrary text: it returns a parsed value or
raises a typed ParseError, never anything else. Tolerances (bullet markers,
dropped incomplete records, ignored prose) are part of the contract and
exercised by the malformed-completion corpus in the tests.
"""

from __future__ import annotations

import logging
import re

from .errors import EmptyParse, MalformedBlock
from .model import QAPair, SlotSpec

log = logging.getLogger(__name__)

_LIST_MARKER = re.compile(r"^\s*(?:\d+\s*[.):]\s*|[-*•]\s+)")
_UNKNOWN = "unknown"


def _is_unknown(answer: str) -> bool:
    return answer.strip().rstrip(".").strip().casefold() == _UNKNOWN


def parse_numbered_list(text: str) -> list[str]:
    """Items of a numbered or bulleted list, markers stripped.

    Lines without a marker count as items too, so unnumbered completions
    still parse; blank lines are ignored.
    """
    items = []
    for line in text.splitlines():
        stripped = _LIST_MARKER.sub("", line).strip()
        if stripped:
            items.append(stripped)
    if not items:
        raise EmptyParse("no list items recovered")
    return items


def _tagged_lines(text: str, tags: tuple[str, ...]) -> list[tuple[str, str]]:
    pattern = re.compile(
        r"^\s*(%s)\s*:\s*(.*\S)\s*$" % "|".join(re.escape(t) for t in tags),
        re.IGNORECASE,
    )
    out = []
    for line in text.splitlines():
        m = pattern.match(line)
        if m:
            out.append((m.group(1), m.group(2)))
    return out


def parse_qa_block(text: str, speaker: str, listener: str) -> list[QAPair]:
    """Question-answer pairs from alternating speaker-tagged lines.

    Pairs are consecutive tagged lines: question first, answer second. The
    asking tag varies (the listener asks about shared information, the
    speaker asks requests), so no tag order is assumed. An answer of
    "Unknown." (case and trailing period tolerated) yields an unknown pair.
    Untagged prose lines are ignored. A blank completion parses as zero
    pairs: turns can legitimately carry no information.
    """
    lines = _tagged_lines(text, (speaker, listener))
    if not lines:
        if not text.strip():
            return []
        raise MalformedBlock("no speaker-tagged lines found")
    if len(lines) % 2 != 0:
        raise MalformedBlock(f"{len(lines)} tagged lines cannot pair two-by-two")
    pairs = []
    for (_, question), (_, answer) in zip(lines[0::2], lines[1::2]):
        if _is_unknown(answer):
            pairs.append(QAPair(question=question, answer=None))
        else:
            pairs.append(QAPair(question=question, answer=answer))
    return pairs


def parse_arrow_mapping(text: str) -> list[tuple[str, str]]:
    """"<question> -> <name>" lines, split on the first arrow.

    Lines without an arrow (or with an empty side) are ignored.
    """
    mappings = []
    for line in text.splitlines():
        if "->" not in line:
            continue
        left, right = line.split("->", 1)
        left, right = left.strip(), right.strip()
        if left and right:
            mappings.append((left, right))
    if not mappings:
        raise EmptyParse("no arrow mappings recovered")
    return mappings


_QVAV_LABEL = re.compile(r"^\s*(question|variable|answer|value)\s*:\s*(.*\S)?\s*$", re.IGNORECASE)
_QVAV_FIELDS = ("question", "variable", "answer", "value")


def parse_qvav_block(text: str) -> list[tuple[str, str, str, str]]:
    """Repeated Question/Variable/Answer/Value records.

    Labels match case-insensitively; a new "Question:" starts a new record.
    Records missing any field are dropped (and counted in the log).
    """
    records: list[tuple[str, str, str, str]] = []
    current: dict[str, str] = {}
    dropped = 0

    def flush():
        nonlocal dropped
        if not current:
            return
        if all(current.get(f) for f in _QVAV_FIELDS):
            records.append(tuple(current[f] for f in _QVAV_FIELDS))  # type: ignore[arg-type]
        else:
            dropped += 1
        current.clear()

    for line in text.splitlines():
        m = _QVAV_LABEL.match(line)
        if not m:
            continue
        label = m.group(1).lower()
        value = (m.group(2) or "").strip()
        if label == "question" and current:
            flush()
        current[label] = value
    flush()

    if dropped:
        log.debug("parse_qvav_block dropped %d incomplete record(s)", dropped)
    if not records:
        raise EmptyParse("no complete question/variable/answer/value records")
    return records


_SPEC_LABEL = re.compile(
    r"^\s*(info\s*type|possible\s*values|description)\s*:\s*(.*\S)?\s*$", re.IGNORECASE
)
_ETC = re.compile(r"^etc\.?$", re.IGNORECASE)


def _split_values(raw: str) -> tuple[str, ...]:
    values = []
    for part in raw.split(","):
        part = part.strip()
        if part and not _ETC.match(part):
            values.append(part)
    return tuple(values)


def parse_slot_spec_block(text: str) -> list[SlotSpec]:
    """Info Type / Possible Values / Description records.

    Possible values split on commas with a trailing "etc." marker stripped;
    the description is captured verbatim. Records without both an info type
    and a description are dropped.
    """
    specs: list[SlotSpec] = []
    current: dict[str, str] = {}

    def flush():
        if current.get("info type") and current.get("description"):
            specs.append(
                SlotSpec(
                    slot=current["info type"],
                    description=current["description"],
                    examples=_split_values(current.get("possible values", "")),
                )
            )
        current.clear()

    for line in text.splitlines():
        m = _SPEC_LABEL.match(line)
        if not m:
            continue
        label = " ".join(m.group(1).lower().split())
        value = (m.group(2) or "").strip()
        if label == "info type" and current:
            flush()
        current[label] = value
    flush()

    if not specs:
        raise EmptyParse("no slot-spec records recovered")
    return specs

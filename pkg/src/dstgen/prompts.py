"""Prompt templates and their rendering.

Templates live as plain-text files with ``{name}`` placeholders, one file
per pipeline prompt; they are packaged under ``dstgen/templates/`` and can
be overridden by pointing at another directory. Rendering is deterministic:
identical template and bindings give identical prompt text.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import TemplateError

TEMPLATE_IDS = (
    "scenarios",
    "info_types",
    "dialogue",
    "qa_pairs",
    "qa_answers",
    "slot_names",
    "slot_values",
    "slot_specs",
)

# Appended to the prompt on the one parse-feedback retry.
FORMAT_REMINDERS: Mapping[str, str] = {
    "scenarios": "Remember to format each list item on its own line as: "
                 "N. <Role of person 1> talks to <role of person 2> in order to <task goal>",
    "info_types": "Remember to list each type of information on its own line.",
    "dialogue": "Remember to write the dialogue as alternating lines of the form "
                "<Speaker>: <utterance>, using exactly two speakers.",
    "qa_pairs": "Remember to write each question-answer pair as exactly two lines, "
                "each of the form <speaker tag>: <text>.",
    "qa_answers": "Remember to answer each question as exactly two lines, "
                  "each of the form <speaker tag>: <text>.",
    "slot_names": "Remember to write one line per question, in the format: "
                  "<question> -> <variable name>",
    "slot_values": "Remember to write each record as four lines labeled "
                   "Question:, Variable:, Answer:, and Value:.",
    "slot_specs": "Remember to write each record as three lines labeled "
                  "Info Type:, Possible Values:, and Description:.",
}


def _placeholders(body: str) -> frozenset[str]:
    names = set()
    try:
        for _, name, _, _ in string.Formatter().parse(body):
            if name is not None:
                if not name.isidentifier():
                    raise TemplateError(f"placeholder {{{name}}} is not a plain name")
                names.add(name)
    except ValueError as exc:
        raise TemplateError(f"unbalanced braces in template: {exc}") from exc
    return frozenset(names)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    placeholders: frozenset[str] = field(init=False, compare=False, default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "placeholders", _placeholders(self.body))

    def render(self, bindings: Mapping[str, str]) -> str:
        missing = self.placeholders - set(bindings)
        if missing:
            raise TemplateError(
                f"template {self.id!r} is missing bindings: {sorted(missing)}"
            )
        return self.body.format_map({k: str(v) for k, v in bindings.items()})


def load_templates(directory: str | Path | None = None) -> dict[str, PromptTemplate]:
    """Load all templates from a directory (default: the packaged set)."""
    templates = {}
    for template_id in TEMPLATE_IDS:
        if directory is None:
            ref = resources.files("dstgen") / "templates" / f"{template_id}.txt"
            body = ref.read_text(encoding="utf-8")
        else:
            path = Path(directory) / f"{template_id}.txt"
            if not path.exists():
                raise TemplateError(f"no template file for {template_id!r} at {path}")
            body = path.read_text(encoding="utf-8")
        templates[template_id] = PromptTemplate(id=template_id, body=body.rstrip("\n"))
    return templates

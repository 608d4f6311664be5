"""Prompt templates with {name} slot substitution.

Templates live in an editable plain-text file: blocks keyed by a
[TemplateId] header line, body = everything until the next header.
Slot names may contain spaces ("{final answer}"). Rendering is exact
substitution, nothing else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import UnboundSlotError

TEMPLATE_IDS = (
    "QA",
    "DirectQA",
    "AnswerFusion",
    "ReExtract",
    "VQA",
    "CoTReason",
    "CoTExtract",
)

_HEADER_RE = re.compile(r"^\[([A-Za-z0-9_]+)\]\s*$")
_SLOT_RE = re.compile(r"\{([^{}]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    def slots(self) -> tuple:
        seen = []
        for match in _SLOT_RE.finditer(self.body):
            name = match.group(1)
            if name not in seen:
                seen.append(name)
        return tuple(seen)

    def render(self, slots: dict) -> str:
        def substitute(match):
            name = match.group(1)
            if name not in slots:
                raise UnboundSlotError(name)
            return str(slots[name])

        return _SLOT_RE.sub(substitute, self.body)


def parse_templates(text: str) -> dict:
    """Parse [TemplateId] blocks; wrapped body lines join with one space."""
    templates = {}
    current_id = None
    current_lines = []

    def close_block():
        if current_id is not None:
            body = " ".join(part.strip() for part in current_lines if part.strip())
            templates[current_id] = PromptTemplate(current_id, body)

    for line in text.splitlines():
        header = _HEADER_RE.match(line)
        if header:
            close_block()
            current_id = header.group(1)
            if current_id in templates:
                raise ValueError(f"duplicate template id {current_id!r}")
            current_lines = []
        elif current_id is not None:
            current_lines.append(line)
        elif line.strip() and not line.lstrip().startswith("#"):
            raise ValueError(f"text before first template header: {line.strip()!r}")
    close_block()
    return templates


def load_templates(path) -> dict:
    return parse_templates(Path(path).read_text(encoding="utf-8"))


def default_templates() -> dict:
    text = (
        resources.files("moqa").joinpath("templates/default.txt").read_text("utf-8")
    )
    return parse_templates(text)


def render_prompt(template_id: str, slots: dict, templates: dict = None) -> str:
    if templates is None:
        templates = default_templates()
    if template_id not in templates:
        raise KeyError(f"unknown template id {template_id!r}")
    return templates[template_id].render(slots)

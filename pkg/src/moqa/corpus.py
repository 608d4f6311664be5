"""Knowledge-collection ingestion: references, questions, table linearization.

References arrive as line-delimited JSON, one object per line:
``{id, modality, title?, text? | table{headers,rows}? | image_uri?}``.
Questions: ``{qid, question, gold_answers[], gold_modality?,
candidates{text[],table[],image[]}?}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .errors import DuplicateIdError, RaggedTableError, SchemaError


class Modality(str, Enum):
    TEXT = "text"
    TABLE = "table"
    IMAGE = "image"


@dataclass(frozen=True)
class Table:
    """A rectangular table; headers may be empty for headerless tables."""

    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        width = len(self.headers) if self.headers else None
        for row in self.rows:
            if width is None:
                width = len(row)
            if len(row) != width:
                raise RaggedTableError(
                    f"row has {len(row)} cells, expected {width}"
                )

    @classmethod
    def from_lists(cls, headers, rows) -> "Table":
        return cls(
            headers=tuple(str(h) for h in headers),
            rows=tuple(tuple(str(c) for c in row) for row in rows),
        )


def _escape_cell(value: str) -> str:
    # Backslash must be escaped first to keep linearization injective.
    return value.replace("\\", "\\\\").replace("|", "\\|").replace("\n", "\\n")


def linearize_table(table: Table) -> str:
    """Render a table as deterministic text, one line per row.

    With headers each cell becomes ``header: value``; cells are joined by
    `` | `` and rows by newlines. Headerless tables render bare values.
    """
    lines = []
    for row in table.rows:
        if table.headers:
            cells = [
                f"{_escape_cell(h)}: {_escape_cell(v)}"
                for h, v in zip(table.headers, row)
            ]
        else:
            cells = [_escape_cell(v) for v in row]
        lines.append(" | ".join(cells))
    return "\n".join(lines)


@dataclass(frozen=True)
class Reference:
    """One knowledge item; exactly one payload field matches the modality."""

    id: str
    modality: Modality
    title: Optional[str] = None
    text_body: Optional[str] = None
    table: Optional[Table] = None
    image_uri: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("reference id must be non-empty")
        payloads = {
            Modality.TEXT: self.text_body,
            Modality.TABLE: self.table,
            Modality.IMAGE: self.image_uri,
        }
        populated = [m for m, v in payloads.items() if v is not None]
        if populated != [self.modality]:
            raise ValueError(
                f"reference {self.id!r}: payload fields {populated} do not "
                f"match modality {self.modality.value}"
            )

    def content_text(self) -> str:
        """The reference rendered as prompt-ready text."""
        if self.modality is Modality.TEXT:
            return self.text_body
        if self.modality is Modality.TABLE:
            return linearize_table(self.table)
        return self.image_uri

    def to_record(self) -> dict:
        record = {"id": self.id, "modality": self.modality.value}
        if self.title is not None:
            record["title"] = self.title
        if self.modality is Modality.TEXT:
            record["text"] = self.text_body
        elif self.modality is Modality.TABLE:
            record["table"] = {
                "headers": list(self.table.headers),
                "rows": [list(r) for r in self.table.rows],
            }
        else:
            record["image_uri"] = self.image_uri
        return record


@dataclass
class ReferenceStore:
    """Immutable-after-ingestion, ordered collection for one modality."""

    modality: Modality
    references: list[Reference] = field(default_factory=list)

    def __post_init__(self):
        self._by_id = {}
        for ref in self.references:
            if ref.id in self._by_id:
                raise DuplicateIdError(ref.id)
            self._by_id[ref.id] = ref

    def __len__(self):
        return len(self.references)

    def __iter__(self):
        return iter(self.references)

    def __eq__(self, other):
        if not isinstance(other, ReferenceStore):
            return NotImplemented
        return self.modality == other.modality and self.references == other.references

    def get(self, ref_id: str) -> Optional[Reference]:
        return self._by_id.get(ref_id)

    def ids(self) -> list[str]:
        return [r.id for r in self.references]


def _parse_reference(record: dict, path, line_no) -> Reference:
    try:
        ref_id = record["id"]
        modality = Modality(record["modality"])
    except (KeyError, ValueError) as exc:
        raise SchemaError(path, line_no, f"bad reference record: {exc}") from exc
    kwargs = {"id": ref_id, "modality": modality, "title": record.get("title")}
    if modality is Modality.TEXT:
        kwargs["text_body"] = record.get("text")
    elif modality is Modality.TABLE:
        raw = record.get("table")
        if raw is not None:
            try:
                kwargs["table"] = Table.from_lists(
                    raw.get("headers", []), raw.get("rows", [])
                )
            except (RaggedTableError, AttributeError) as exc:
                raise SchemaError(path, line_no, str(exc)) from exc
    else:
        kwargs["image_uri"] = record.get("image_uri")
    try:
        return Reference(**kwargs)
    except ValueError as exc:
        raise SchemaError(path, line_no, str(exc)) from exc


def ingest_references(path, modality: Modality) -> ReferenceStore:
    """Load a line-delimited reference file for one modality.

    Record order is preserved. Raises SchemaError with the offending line
    number, or DuplicateIdError on a repeated id.
    """
    path = Path(path)
    references = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, line_no, f"malformed JSON: {exc}") from exc
            ref = _parse_reference(record, path, line_no)
            if ref.modality is not modality:
                raise SchemaError(
                    path,
                    line_no,
                    f"record modality {ref.modality.value!r} does not match "
                    f"requested {modality.value!r}",
                )
            if ref.id in seen:
                raise DuplicateIdError(ref.id)
            seen.add(ref.id)
            references.append(ref)
    return ReferenceStore(modality=modality, references=references)


def write_references(store: ReferenceStore, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ref in store:
            fh.write(json.dumps(ref.to_record(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class QuestionRecord:
    qid: str
    question: str
    gold_answers: tuple[str, ...]
    # "text"/"table"/"image" for MMCoQA; "single"/"multi" for MultiModalQA
    gold_modality: Optional[str] = None
    # per-modality candidate reference ids (MultiModalQA supplies these)
    candidate_reference_ids: Optional[dict] = None

    def __post_init__(self):
        if not self.qid:
            raise ValueError("qid must be non-empty")
        if not self.question:
            raise ValueError(f"question {self.qid!r}: question text is empty")
        if not self.gold_answers:
            raise ValueError(f"question {self.qid!r}: gold_answers is empty")

    def to_record(self) -> dict:
        record = {
            "qid": self.qid,
            "question": self.question,
            "gold_answers": list(self.gold_answers),
        }
        if self.gold_modality is not None:
            record["gold_modality"] = self.gold_modality
        if self.candidate_reference_ids is not None:
            record["candidates"] = {
                k: list(v) for k, v in self.candidate_reference_ids.items()
            }
        return record


def ingest_questions(path) -> list[QuestionRecord]:
    """Load a line-delimited question file; order preserved."""
    path = Path(path)
    questions = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, line_no, f"malformed JSON: {exc}") from exc
            missing = [
                k for k in ("qid", "question", "gold_answers") if not record.get(k)
            ]
            if missing:
                raise SchemaError(
                    path, line_no, f"missing required fields: {', '.join(missing)}"
                )
            candidates = record.get("candidates")
            if candidates is not None:
                candidates = {k: list(v) for k, v in candidates.items()}
            try:
                question = QuestionRecord(
                    qid=record["qid"],
                    question=record["question"],
                    gold_answers=tuple(record["gold_answers"]),
                    gold_modality=record.get("gold_modality"),
                    candidate_reference_ids=candidates,
                )
            except ValueError as exc:
                raise SchemaError(path, line_no, str(exc)) from exc
            if question.qid in seen:
                raise DuplicateIdError(question.qid)
            seen.add(question.qid)
            questions.append(question)
    return questions


def write_questions(questions, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for q in questions:
            fh.write(json.dumps(q.to_record(), ensure_ascii=False) + "\n")

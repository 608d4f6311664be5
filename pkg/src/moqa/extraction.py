"""Per-modality answer extraction plus direct (no-reference) QA.

Images go through the VQA prompt with the image attached; text and
linearized tables share the extractive QA prompt. Failures degrade to
"Unknown" per reference so the downstream invalid-span filter handles
them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .corpus import Modality, QuestionRecord, ReferenceStore
from .errors import BackendRefusalError, TransportError
from .gateway import BackendSpec, ModelGateway, compute_fingerprint
from .indexing import RetrievedItem
from .prompts import default_templates


class AnswerModality(str, Enum):
    IMAGE = "image"
    TEXT = "text"
    TABLE = "table"
    DIRECT = "direct"


STAGE_FOR_MODALITY = {
    AnswerModality.IMAGE: "vqa",
    AnswerModality.TEXT: "textual_qa",
    AnswerModality.TABLE: "table_qa",
    AnswerModality.DIRECT: "direct_qa",
}


@dataclass(frozen=True)
class RawAnswer:
    text: str
    modality: AnswerModality
    source_reference_id: Optional[str] = None
    source_rank: Optional[int] = None
    exchange_fingerprint: str = ""
    aux_fingerprints: tuple = ()
    error: bool = False

    def __post_init__(self):
        has_source = self.source_reference_id is not None and self.source_rank is not None
        if self.modality is AnswerModality.DIRECT:
            if self.source_reference_id is not None or self.source_rank is not None:
                raise ValueError("direct answers carry no source reference")
        elif not has_source:
            raise ValueError("non-direct answers require a source reference and rank")

    def to_record(self) -> dict:
        return {
            "text": self.text,
            "modality": self.modality.value,
            "source_reference_id": self.source_reference_id,
            "source_rank": self.source_rank,
            "exchange_fingerprint": self.exchange_fingerprint,
            "aux_fingerprints": list(self.aux_fingerprints),
            "error": self.error,
        }


@dataclass
class CandidateSet:
    """All raw answers for one question, grouped by modality."""

    image: list = field(default_factory=list)
    text: list = field(default_factory=list)
    table: list = field(default_factory=list)
    direct: Optional[RawAnswer] = None

    def modality_lists(self):
        return (
            (AnswerModality.IMAGE, self.image),
            (AnswerModality.TEXT, self.text),
            (AnswerModality.TABLE, self.table),
        )

    def all_answers(self) -> list:
        answers = list(self.image) + list(self.text) + list(self.table)
        if self.direct is not None:
            answers.append(self.direct)
        return answers


def _degraded(modality: AnswerModality, ref_id, rank) -> RawAnswer:
    return RawAnswer(
        text="Unknown",
        modality=modality,
        source_reference_id=ref_id,
        source_rank=rank,
        exchange_fingerprint="",
        error=True,
    )


def cot_answer(
    question: QuestionRecord,
    reference_text: str,
    backend: BackendSpec,
    gateway: ModelGateway,
    templates: dict,
    stage: str,
    modality: AnswerModality,
    source_reference_id: Optional[str] = None,
    source_rank: Optional[int] = None,
) -> RawAnswer:
    """Two chained calls: free-form reasoning, then short-answer extraction."""
    reason_prompt = templates["CoTReason"].render(
        {"reference": reference_text, "question": question.question}
    )
    try:
        reasoning = gateway.chat(backend, reason_prompt, stage)
        extract_prompt = templates["CoTExtract"].render(
            {"reasoning": reasoning.response_text, "question": question.question}
        )
        extracted = gateway.chat(backend, extract_prompt, stage)
    except (TransportError, BackendRefusalError):
        return _degraded(modality, source_reference_id, source_rank)
    return RawAnswer(
        text=extracted.response_text,
        modality=modality,
        source_reference_id=source_reference_id,
        source_rank=source_rank,
        exchange_fingerprint=extracted.fingerprint,
        aux_fingerprints=(reasoning.fingerprint,),
        error=not extracted.response_text.strip(),
    )


def answer_from_references(
    question: QuestionRecord,
    refs: list,
    modality: AnswerModality,
    backend: BackendSpec,
    gateway: ModelGateway,
    store: ReferenceStore,
    templates: Optional[dict] = None,
    cot: bool = False,
) -> list:
    """One RawAnswer per retrieved reference, in rank order."""
    if modality is AnswerModality.DIRECT:
        raise ValueError("use direct_answer for the no-reference path")
    if templates is None:
        templates = default_templates()
    stage = STAGE_FOR_MODALITY[modality]
    answers = []
    for item in refs:
        reference = store.get(item.reference_id)
        if modality is AnswerModality.IMAGE:
            prompt = templates["VQA"].render({"Q": question.question})
            image_uri = reference.image_uri
            try:
                exchange = gateway.chat(backend, prompt, stage, image_uri=image_uri)
            except (TransportError, BackendRefusalError):
                answers.append(_degraded(modality, item.reference_id, item.rank))
                continue
            answers.append(
                RawAnswer(
                    text=exchange.response_text,
                    modality=modality,
                    source_reference_id=item.reference_id,
                    source_rank=item.rank,
                    exchange_fingerprint=exchange.fingerprint,
                    error=not exchange.response_text.strip(),
                )
            )
            continue
        content = reference.content_text()
        if cot:
            answers.append(
                cot_answer(
                    question,
                    content,
                    backend,
                    gateway,
                    templates,
                    stage,
                    modality,
                    source_reference_id=item.reference_id,
                    source_rank=item.rank,
                )
            )
            continue
        prompt = templates["QA"].render({"reference": content, "Q": question.question})
        try:
            exchange = gateway.chat(backend, prompt, stage)
        except (TransportError, BackendRefusalError):
            answers.append(_degraded(modality, item.reference_id, item.rank))
            continue
        answers.append(
            RawAnswer(
                text=exchange.response_text,
                modality=modality,
                source_reference_id=item.reference_id,
                source_rank=item.rank,
                exchange_fingerprint=exchange.fingerprint,
                error=not exchange.response_text.strip(),
            )
        )
    return answers


def direct_answer(
    question: QuestionRecord,
    backend: BackendSpec,
    gateway: ModelGateway,
    templates: Optional[dict] = None,
) -> RawAnswer:
    if templates is None:
        templates = default_templates()
    prompt = templates["DirectQA"].render({"questions": question.question})
    try:
        exchange = gateway.chat(backend, prompt, "direct_qa")
    except (TransportError, BackendRefusalError):
        return RawAnswer(
            text="Unknown",
            modality=AnswerModality.DIRECT,
            exchange_fingerprint="",
            error=True,
        )
    return RawAnswer(
        text=exchange.response_text,
        modality=AnswerModality.DIRECT,
        exchange_fingerprint=exchange.fingerprint,
        error=not exchange.response_text.strip(),
    )


def extraction_modality(modality: Modality) -> AnswerModality:
    return AnswerModality(modality.value)

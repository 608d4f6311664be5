"""Final answer selection among valid candidates, plus long-span re-extraction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .corpus import QuestionRecord
from .errors import BackendRefusalError, TransportError
from .gateway import BackendSpec, ModelGateway
from .prompts import default_templates
from .strategy import ValidCandidateSet

CANDIDATE_SEPARATOR = ", "
MAX_FINAL_WORDS = 3


class Provenance(str, Enum):
    RULE1_SHORT_CIRCUIT = "rule1_short_circuit"
    FUSION = "fusion"
    FUSION_REEXTRACTED = "fusion_reextracted"
    SOLE_CANDIDATE = "sole_candidate"
    NO_ANSWER = "no_answer"


@dataclass
class FinalAnswer:
    text: str
    provenance: Provenance
    fused_raw: Optional[str] = None
    candidate_list: Optional[ValidCandidateSet] = None
    fusion_fingerprint: Optional[str] = None
    reextract_fingerprint: Optional[str] = None
    error: bool = False

    def __post_init__(self):
        if self.provenance is Provenance.FUSION_REEXTRACTED:
            if self.fused_raw is None or len(self.fused_raw.split()) <= MAX_FINAL_WORDS:
                raise ValueError(
                    "re-extracted answers require a fused output over "
                    f"{MAX_FINAL_WORDS} words"
                )


@dataclass(frozen=True)
class ReExtractResult:
    text: str
    fingerprint: Optional[str]
    fired: bool
    error: bool = False


def reextract_if_long(
    question: QuestionRecord,
    fused: str,
    backend: BackendSpec,
    gateway: ModelGateway,
    templates: Optional[dict] = None,
) -> ReExtractResult:
    """Re-extract the span when the fused answer runs over three words."""
    if len(fused.split()) <= MAX_FINAL_WORDS:
        return ReExtractResult(text=fused, fingerprint=None, fired=False)
    if templates is None:
        templates = default_templates()
    prompt = templates["ReExtract"].render(
        {"Q": question.question, "final answer": fused}
    )
    try:
        exchange = gateway.chat(backend, prompt, "reextract")
    except (TransportError, BackendRefusalError):
        return ReExtractResult(text=fused, fingerprint=None, fired=True, error=True)
    return ReExtractResult(
        text=exchange.response_text, fingerprint=exchange.fingerprint, fired=True
    )


def fuse(
    question: QuestionRecord,
    valid: ValidCandidateSet,
    backend: BackendSpec,
    gateway: ModelGateway,
    templates: Optional[dict] = None,
    sole_candidate_bypass: bool = True,
    reextract_backend: Optional[BackendSpec] = None,
) -> FinalAnswer:
    if not valid.candidates:
        raise ValueError("fuse requires a non-empty candidate set")
    if templates is None:
        templates = default_templates()
    if reextract_backend is None:
        reextract_backend = backend

    if len(valid.candidates) == 1 and sole_candidate_bypass:
        return FinalAnswer(
            text=valid.candidates[0].text,
            provenance=Provenance.SOLE_CANDIDATE,
            candidate_list=valid,
        )

    prompt = templates["AnswerFusion"].render(
        {
            "Q": question.question,
            "Candidates": CANDIDATE_SEPARATOR.join(valid.texts()),
        }
    )
    try:
        exchange = gateway.chat(backend, prompt, "fusion")
    except (TransportError, BackendRefusalError):
        return FinalAnswer(
            text=valid.candidates[0].text,
            provenance=Provenance.FUSION,
            candidate_list=valid,
            error=True,
        )

    fused_raw = exchange.response_text
    extracted = reextract_if_long(
        question, fused_raw, reextract_backend, gateway, templates
    )
    text = extracted.text
    reextracted = extracted.fired and not extracted.error
    provenance = Provenance.FUSION_REEXTRACTED if reextracted else Provenance.FUSION
    error = extracted.error
    if not text.strip():
        # empty reasoner output: keep the top candidate so a non-empty valid
        # set always yields a non-empty final answer
        text = valid.candidates[0].text
        provenance = Provenance.FUSION
        error = True
    return FinalAnswer(
        text=text,
        provenance=provenance,
        fused_raw=fused_raw,
        candidate_list=valid,
        fusion_fingerprint=exchange.fingerprint,
        reextract_fingerprint=extracted.fingerprint,
        error=error,
    )

"""Sequential rule-based candidate filtering.

Rule 1: a direct answer that matches any modality answer (normalized
exact match against the raw, pre-filter lists) short-circuits fusion.
Rule 2: spans containing "unknown"/"sorry" (and empty spans) are dropped.
Rule 3: per modality, keep the most frequent answer by normalized form;
all distinct keeps the top-1-ranked one.

All equality tests go through the normalization profile, so stemming
configuration affects rule behavior consistently. Candidate texts
themselves stay raw.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .extraction import AnswerModality, CandidateSet, RawAnswer
from .textnorm import normalize


@dataclass(frozen=True)
class RulesEnabled:
    rule1: bool = True
    rule2: bool = True
    rule3: bool = True


class OutcomeKind(str, Enum):
    SHORT_CIRCUIT = "short_circuit"
    NEEDS_FUSION = "needs_fusion"
    NO_CANDIDATES = "no_candidates"


@dataclass(frozen=True)
class ValidCandidateSet:
    """Candidates entering fusion, in canonical image/text/table/direct order."""

    candidates: tuple

    def __len__(self):
        return len(self.candidates)

    def texts(self) -> list:
        return [c.text for c in self.candidates]


@dataclass
class StrategyOutcome:
    kind: OutcomeKind
    final: Optional[str] = None
    valid_set: Optional[ValidCandidateSet] = None
    rule_log: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind is OutcomeKind.SHORT_CIRCUIT and self.final is None:
            raise ValueError("short-circuit outcome requires a final answer")
        if self.kind is OutcomeKind.NEEDS_FUSION and not self.valid_set:
            raise ValueError("needs-fusion outcome requires a non-empty valid set")
        if self.kind is OutcomeKind.NO_CANDIDATES and (
            self.final is not None or self.valid_set is not None
        ):
            raise ValueError("no-candidates outcome carries no payload")


INVALID_MARKERS = ("unknown", "sorry")


def filter_invalid(answers: list) -> list:
    """Drop spans containing an invalid marker, and empty spans."""
    kept = []
    for answer in answers:
        text = answer.text.strip()
        if not text:
            continue
        lowered = answer.text.lower()
        if any(marker in lowered for marker in INVALID_MARKERS):
            continue
        kept.append(answer)
    return kept


def select_modal_candidate(answers: list, profile: str = "mmcoqa") -> Optional[RawAnswer]:
    """Most frequent answer by normalized form; ties and singletons go to
    the lowest source rank."""
    if not answers:
        return None
    groups = {}
    for answer in answers:
        groups.setdefault(normalize(answer.text, profile), []).append(answer)
    best_group = min(
        groups.values(),
        key=lambda group: (-len(group), min(a.source_rank for a in group)),
    )
    return min(best_group, key=lambda a: a.source_rank)


def apply_strategy(
    cands: CandidateSet,
    profile: str = "mmcoqa",
    rules: RulesEnabled = RulesEnabled(),
) -> StrategyOutcome:
    rule_log = []
    direct = cands.direct

    if rules.rule1 and direct is not None:
        direct_norm = normalize(direct.text, profile)
        for modality, answers in cands.modality_lists():
            for answer in answers:
                if normalize(answer.text, profile) == direct_norm:
                    rule_log.append(
                        {
                            "rule": "rule1",
                            "decision": "short_circuit",
                            "matched_modality": modality.value,
                            "matched_reference_id": answer.source_reference_id,
                            "matched_rank": answer.source_rank,
                            "direct_text": direct.text,
                        }
                    )
                    return StrategyOutcome(
                        kind=OutcomeKind.SHORT_CIRCUIT,
                        final=direct.text,
                        rule_log=rule_log,
                    )
        rule_log.append({"rule": "rule1", "decision": "no_match"})
    elif not rules.rule1:
        rule_log.append({"rule": "rule1", "decision": "disabled"})

    selected = []
    for modality, answers in cands.modality_lists():
        if rules.rule2:
            valid = filter_invalid(answers)
            rule_log.append(
                {
                    "rule": "rule2",
                    "modality": modality.value,
                    "removed": len(answers) - len(valid),
                    "kept": len(valid),
                }
            )
        else:
            valid = list(answers)
            rule_log.append(
                {"rule": "rule2", "modality": modality.value, "decision": "disabled"}
            )
        if rules.rule3:
            choice = select_modal_candidate(valid, profile)
            if choice is not None:
                selected.append(choice)
                rule_log.append(
                    {
                        "rule": "rule3",
                        "modality": modality.value,
                        "chosen": choice.text,
                        "chosen_rank": choice.source_rank,
                    }
                )
        else:
            selected.extend(valid)
            if valid:
                rule_log.append(
                    {
                        "rule": "rule3",
                        "modality": modality.value,
                        "decision": "disabled",
                        "kept": len(valid),
                    }
                )

    if direct is not None:
        direct_valid = filter_invalid([direct]) if rules.rule2 else [direct]
        if direct_valid:
            selected.append(direct)

    if not selected:
        return StrategyOutcome(kind=OutcomeKind.NO_CANDIDATES, rule_log=rule_log)
    return StrategyOutcome(
        kind=OutcomeKind.NEEDS_FUSION,
        valid_set=ValidCandidateSet(candidates=tuple(selected)),
        rule_log=rule_log,
    )

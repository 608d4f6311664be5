"""Answer scoring (EM, token F1, Recall@Kx3) and retrieval metrics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .errors import EvalAlignmentError
from .extraction import CandidateSet
from .indexing import RetrievedSet
from .textnorm import norm_tokens, normalize


def exact_match(pred: str, golds: list, profile: str = "mmcoqa") -> int:
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_norm = normalize(pred, profile)
    return int(any(pred_norm == normalize(g, profile) for g in golds))


def _f1_single(pred_tokens: list, gold_tokens: list) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(pred: str, golds: list, profile: str = "mmcoqa") -> float:
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_tokens = norm_tokens(pred, profile)
    return max(_f1_single(pred_tokens, norm_tokens(g, profile)) for g in golds)


def _contains_span(haystack: list, needle: list) -> bool:
    if not needle:
        return False
    limit = len(haystack) - len(needle)
    return any(haystack[i : i + len(needle)] == needle for i in range(limit + 1))


def answer_recall_kx3(cands: CandidateSet, golds: list, profile: str = "mmcoqa") -> int:
    """1 iff some gold appears as a contiguous token run in any candidate."""
    gold_token_lists = [norm_tokens(g, profile) for g in golds]
    for answer in cands.all_answers():
        answer_tokens = norm_tokens(answer.text, profile)
        for gold_tokens in gold_token_lists:
            if _contains_span(answer_tokens, gold_tokens):
                return 1
    return 0


def first_gold_rank(items: list, gold_ids, k: int) -> Optional[int]:
    for item in items[:k]:
        if item.reference_id in gold_ids:
            return item.rank
    return None


def _rank_scores(rank: Optional[int]) -> tuple:
    if rank is None:
        return 0.0, 0.0, 0.0
    return 1.0, 1.0 / rank, 1.0 / math.log2(1 + rank)


def retrieval_metrics(entries: list, k: int) -> dict:
    """Per-modality Recall@K/MRR/NDCG plus overall Recall@Kx3, all x100.

    ``entries``: (retrieved: RetrievedSet, gold_ids, gold_modality) triples;
    questions with an unknown gold modality only count toward the overall
    number.
    """
    per_modality = {m: {"recall": [], "mrr": [], "ndcg": []} for m in ("text", "table", "image")}
    overall_hits = []
    for retrieved, gold_ids, gold_modality in entries:
        gold_ids = set(gold_ids)
        concatenated = retrieved.image[:k] + retrieved.text[:k] + retrieved.table[:k]
        overall_hits.append(
            1.0 if any(item.reference_id in gold_ids for item in concatenated) else 0.0
        )
        if gold_modality not in per_modality:
            continue
        rank = first_gold_rank(getattr(retrieved, gold_modality), gold_ids, k)
        recall, mrr, ndcg = _rank_scores(rank)
        bucket = per_modality[gold_modality]
        bucket["recall"].append(recall)
        bucket["mrr"].append(mrr)
        bucket["ndcg"].append(ndcg)

    def mean100(values):
        return 100.0 * sum(values) / len(values) if values else 0.0

    result = {"k": k, "overall": {"recall_at_kx3": mean100(overall_hits), "count": len(entries)}}
    for modality, bucket in per_modality.items():
        result[modality] = {
            "recall_at_k": mean100(bucket["recall"]),
            "mrr": mean100(bucket["mrr"]),
            "ndcg": mean100(bucket["ndcg"]),
            "count": len(bucket["recall"]),
        }
    return result


@dataclass
class EvalReport:
    """Per-question EM/F1 plus aggregates, overall and per group."""

    per_question: list = field(default_factory=list)
    overall: dict = field(default_factory=dict)
    groups: dict = field(default_factory=dict)
    retrieval: Optional[dict] = None
    answer_recall_kx3: Optional[float] = None

    def to_records(self) -> list:
        records = [dict(row, kind="question") for row in self.per_question]
        aggregate = {
            "kind": "aggregate",
            "overall": self.overall,
            "groups": self.groups,
        }
        if self.retrieval is not None:
            aggregate["retrieval"] = self.retrieval
        if self.answer_recall_kx3 is not None:
            aggregate["answer_recall_kx3"] = self.answer_recall_kx3
        records.append(aggregate)
        return records


def _aggregate(rows: list) -> dict:
    if not rows:
        return {"em": 0.0, "f1": 0.0, "count": 0}
    return {
        "em": 100.0 * sum(r["em"] for r in rows) / len(rows),
        "f1": 100.0 * sum(r["f1"] for r in rows) / len(rows),
        "count": len(rows),
    }


def build_eval_report(
    predictions: dict,
    questions: list,
    profile: str = "mmcoqa",
) -> EvalReport:
    """Score {qid: answer} against QuestionRecords; qids must align exactly."""
    gold_qids = {q.qid for q in questions}
    missing = sorted(gold_qids - set(predictions)) + sorted(set(predictions) - gold_qids)
    if missing:
        raise EvalAlignmentError(missing)
    per_question = []
    for question in sorted(questions, key=lambda q: q.qid):
        pred = predictions[question.qid]
        golds = list(question.gold_answers)
        row = {
            "qid": question.qid,
            "em": exact_match(pred, golds, profile),
            "f1": token_f1(pred, golds, profile),
            "group": question.gold_modality or "ungrouped",
        }
        per_question.append(row)
    groups = {}
    for row in per_question:
        groups.setdefault(row["group"], []).append(row)
    return EvalReport(
        per_question=per_question,
        overall=_aggregate(per_question),
        groups={name: _aggregate(rows) for name, rows in sorted(groups.items())},
    )


def format_report(report: EvalReport) -> str:
    lines = []
    header = f"{'group':<12} {'count':>6} {'EM':>8} {'F1':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    overall = report.overall
    lines.append(
        f"{'overall':<12} {overall['count']:>6} {overall['em']:>8.2f} {overall['f1']:>8.2f}"
    )
    for name, agg in report.groups.items():
        lines.append(f"{name:<12} {agg['count']:>6} {agg['em']:>8.2f} {agg['f1']:>8.2f}")
    if report.retrieval is not None:
        lines.append("")
        lines.append(f"retrieval (k={report.retrieval['k']}):")
        for modality in ("text", "table", "image"):
            bucket = report.retrieval[modality]
            lines.append(
                f"  {modality:<8} recall@k {bucket['recall_at_k']:>7.2f}"
                f"  mrr {bucket['mrr']:>7.2f}  ndcg {bucket['ndcg']:>7.2f}"
                f"  (n={bucket['count']})"
            )
        lines.append(
            f"  overall recall@kx3 {report.retrieval['overall']['recall_at_kx3']:.2f}"
        )
    if report.answer_recall_kx3 is not None:
        lines.append(f"answer recall@kx3: {report.answer_recall_kx3:.2f}")
    return "\n".join(lines)

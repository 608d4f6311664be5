"""End-to-end run orchestration: retrieve, extract, filter, fuse, trace.

Questions are processed by a worker pool sharing one gateway; outputs are
merged in qid order so runs are deterministic regardless of scheduling.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .corpus import Modality, QuestionRecord, ReferenceStore, ingest_questions, ingest_references
from .errors import ConfigError, ReplayMissError
from .extraction import (
    AnswerModality,
    CandidateSet,
    answer_from_references,
    direct_answer,
)
from .fusion import FinalAnswer, Provenance, fuse
from .gateway import (
    BackendKind,
    BackendParams,
    BackendSpec,
    CallCounters,
    ModelGateway,
)
from .indexing import RetrievedSet, load_index
from .metrics import EvalReport, build_eval_report
from .prompts import default_templates, load_templates
from .strategy import OutcomeKind, RulesEnabled, apply_strategy

MODALITY_NAMES = ("text", "table", "image")
EXTRACTION_STAGE = {"text": "textual_qa", "table": "table_qa", "image": "vqa"}
REQUIRED_STAGES = ("direct_qa", "fusion", "reextract")


@dataclass
class RunConfig:
    backends: dict
    stages: dict
    questions_path: Optional[str] = None
    reference_paths: dict = field(default_factory=dict)
    index_paths: dict = field(default_factory=dict)
    k: int = 5
    profile: str = "mmcoqa"
    rules: RulesEnabled = field(default_factory=RulesEnabled)
    cot: bool = False
    sole_candidate_bypass: bool = True
    cache_path: Optional[str] = None
    replay: bool = False
    parallelism: int = 4
    output_dir: str = "out"
    templates_path: Optional[str] = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.replay and not self.cache_path:
            raise ConfigError("replay mode requires a cache path")
        unknown = set(self.index_paths) - set(MODALITY_NAMES)
        if unknown:
            raise ConfigError(f"unknown index modalities: {sorted(unknown)}")
        needed = list(REQUIRED_STAGES)
        for modality in self.index_paths:
            if modality not in self.reference_paths:
                raise ConfigError(f"index for {modality!r} needs a reference file")
            needed.append(EXTRACTION_STAGE[modality])
            needed.append(f"embed_{modality}")
        for stage in needed:
            if stage not in self.stages:
                raise ConfigError(f"missing backend assignment for stage {stage!r}")
            backend_id = self.stages[stage]
            if backend_id not in self.backends:
                raise ConfigError(
                    f"stage {stage!r} references undefined backend {backend_id!r}"
                )
            expected = (
                BackendKind.EMBEDDING if stage.startswith("embed_") else BackendKind.CHAT
            )
            if self.backends[backend_id].kind is not expected:
                raise ConfigError(
                    f"stage {stage!r} needs a {expected.value} backend, got "
                    f"{self.backends[backend_id].kind.value}"
                )

    def backend_for(self, stage: str) -> BackendSpec:
        return self.backends[self.stages[stage]]


def _resolve(base_dir: Optional[Path], value):
    if value is None or base_dir is None:
        return value
    path = Path(value)
    return str(path if path.is_absolute() else base_dir / path)


def config_from_dict(data: dict, base_dir=None) -> RunConfig:
    base_dir = Path(base_dir) if base_dir is not None else None
    backends = {}
    for backend_id, spec in (data.get("backends") or {}).items():
        try:
            backends[backend_id] = BackendSpec(
                backend_id=backend_id,
                kind=BackendKind(spec["kind"]),
                endpoint=spec.get("endpoint", ""),
                model_name=spec.get("model", ""),
                params=BackendParams(
                    temperature=float(spec.get("temperature", 0.0)),
                    max_tokens=int(spec.get("max_tokens", 256)),
                    timeout_s=float(spec.get("timeout_s", 30.0)),
                    max_retries=int(spec.get("max_retries", 3)),
                ),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad backend {backend_id!r}: {exc}") from exc
    rules_data = data.get("rules") or {}
    rules = RulesEnabled(
        rule1=bool(rules_data.get("rule1", True)),
        rule2=bool(rules_data.get("rule2", True)),
        rule3=bool(rules_data.get("rule3", True)),
    )
    return RunConfig(
        backends=backends,
        stages=dict(data.get("stages") or {}),
        questions_path=_resolve(base_dir, data.get("questions")),
        reference_paths={
            m: _resolve(base_dir, p) for m, p in (data.get("references") or {}).items()
        },
        index_paths={
            m: _resolve(base_dir, p) for m, p in (data.get("indexes") or {}).items()
        },
        k=int(data.get("k", 5)),
        profile=data.get("profile", "mmcoqa"),
        rules=rules,
        cot=bool(data.get("cot", False)),
        sole_candidate_bypass=bool(data.get("sole_candidate_bypass", True)),
        cache_path=_resolve(base_dir, data.get("cache")),
        replay=bool(data.get("replay", False)),
        parallelism=int(data.get("parallelism", 4)),
        output_dir=_resolve(base_dir, data.get("output_dir", "out")),
        templates_path=_resolve(base_dir, data.get("templates")),
    )


def config_from_yaml(path) -> RunConfig:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    return config_from_dict(data, base_dir=path.parent)


@dataclass
class AnswerTrace:
    qid: str
    retrieved: dict = field(default_factory=dict)
    answers: list = field(default_factory=list)
    rule_log: list = field(default_factory=list)
    outcome_kind: str = ""
    fused_raw: Optional[str] = None
    final: str = ""
    provenance: str = ""
    fingerprints: dict = field(default_factory=dict)
    timings_ms: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_record(self) -> dict:
        return {
            "qid": self.qid,
            "retrieved": self.retrieved,
            "answers": self.answers,
            "rule_log": self.rule_log,
            "outcome_kind": self.outcome_kind,
            "fused_raw": self.fused_raw,
            "final": self.final,
            "provenance": self.provenance,
            "fingerprints": self.fingerprints,
            "timings_ms": self.timings_ms,
            "error": self.error,
        }


@dataclass
class RunResult:
    results_path: Path
    traces_path: Path
    counters: CallCounters
    failures: list
    finals: dict


def _answer_one(
    question: QuestionRecord,
    config: RunConfig,
    stores: dict,
    indexes: dict,
    gateway: ModelGateway,
    templates: dict,
):
    timings = {}
    started = time.monotonic()

    retrieved = RetrievedSet(text=[], table=[], image=[])
    for modality, index in indexes.items():
        vector = gateway.embed(config.backend_for(f"embed_{modality}"), question.question)
        restrict = None
        if question.candidate_reference_ids:
            restrict = question.candidate_reference_ids.get(modality)
        items = index.search(vector, config.k, restrict_ids=restrict)
        setattr(retrieved, modality, items)
    timings["retrieval"] = int((time.monotonic() - started) * 1000)

    stage_start = time.monotonic()
    cands = CandidateSet()
    for modality in MODALITY_NAMES:
        items = retrieved.for_modality(Modality(modality))
        if not items:
            continue
        answers = answer_from_references(
            question,
            items,
            AnswerModality(modality),
            config.backend_for(EXTRACTION_STAGE[modality]),
            gateway,
            stores[modality],
            templates,
            cot=config.cot,
        )
        setattr(cands, modality, answers)
    cands.direct = direct_answer(
        question, config.backend_for("direct_qa"), gateway, templates
    )
    timings["extraction"] = int((time.monotonic() - stage_start) * 1000)

    stage_start = time.monotonic()
    outcome = apply_strategy(cands, config.profile, config.rules)
    timings["strategy"] = int((time.monotonic() - stage_start) * 1000)

    stage_start = time.monotonic()
    if outcome.kind is OutcomeKind.SHORT_CIRCUIT:
        final = FinalAnswer(text=outcome.final, provenance=Provenance.RULE1_SHORT_CIRCUIT)
    elif outcome.kind is OutcomeKind.NO_CANDIDATES:
        final = FinalAnswer(text="", provenance=Provenance.NO_ANSWER)
    else:
        final = fuse(
            question,
            outcome.valid_set,
            config.backend_for("fusion"),
            gateway,
            templates,
            sole_candidate_bypass=config.sole_candidate_bypass,
            reextract_backend=config.backend_for("reextract"),
        )
    timings["fusion"] = int((time.monotonic() - stage_start) * 1000)
    if config.replay:
        timings = {name: 0 for name in timings}

    fingerprints = {}
    if final.fusion_fingerprint:
        fingerprints["fusion"] = final.fusion_fingerprint
    if final.reextract_fingerprint:
        fingerprints["reextract"] = final.reextract_fingerprint
    trace = AnswerTrace(
        qid=question.qid,
        retrieved={
            modality: [
                {"reference_id": i.reference_id, "score": i.score, "rank": i.rank}
                for i in retrieved.for_modality(Modality(modality))
            ]
            for modality in indexes
        },
        answers=[a.to_record() for a in cands.all_answers()],
        rule_log=outcome.rule_log,
        outcome_kind=outcome.kind.value,
        fused_raw=final.fused_raw,
        final=final.text,
        provenance=final.provenance.value,
        fingerprints=fingerprints,
        timings_ms=timings,
    )
    return final, trace


def _write_jsonl(path: Path, records: list) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def run_pipeline(
    config: RunConfig,
    questions: Optional[list] = None,
    gateway: Optional[ModelGateway] = None,
    out_dir=None,
) -> RunResult:
    if questions is None:
        if not config.questions_path:
            raise ConfigError("no questions file configured")
        questions = ingest_questions(config.questions_path)
    else:
        questions = list(questions)

    templates = (
        load_templates(config.templates_path)
        if config.templates_path
        else default_templates()
    )
    stores = {
        modality: ingest_references(path, Modality(modality))
        for modality, path in config.reference_paths.items()
    }
    indexes = {
        modality: load_index(path, Modality(modality))
        for modality, path in config.index_paths.items()
    }
    if gateway is None:
        gateway = ModelGateway(
            cache_path=config.cache_path,
            replay=config.replay,
            max_in_flight=config.parallelism,
        )

    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    finals = {}
    traces = {}
    failures = []

    def work(q):
        return _answer_one(q, config, stores, indexes, gateway, templates)

    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures = {pool.submit(work, q): q for q in questions}
        try:
            for future in as_completed(futures):
                question = futures[future]
                try:
                    final, trace = future.result()
                except ReplayMissError:
                    raise
                except Exception as exc:  # per-question failure; run continues
                    failures.append({"qid": question.qid, "error": str(exc)})
                    final = FinalAnswer(text="", provenance=Provenance.NO_ANSWER)
                    trace = AnswerTrace(
                        qid=question.qid,
                        outcome_kind="error",
                        provenance=Provenance.NO_ANSWER.value,
                        error=str(exc),
                    )
                finals[question.qid] = final
                traces[question.qid] = trace
        except ReplayMissError:
            pool.shutdown(cancel_futures=True)
            raise

    qids = sorted(finals)
    results_path = out / "results.jsonl"
    traces_path = out / "traces.jsonl"
    _write_jsonl(
        results_path,
        [
            {
                "qid": qid,
                "answer": finals[qid].text,
                "provenance": finals[qid].provenance.value,
            }
            for qid in qids
        ],
    )
    _write_jsonl(traces_path, [traces[qid].to_record() for qid in qids])
    return RunResult(
        results_path=results_path,
        traces_path=traces_path,
        counters=gateway.call_stats(),
        failures=failures,
        finals={qid: finals[qid] for qid in qids},
    )


def evaluate(results_path, questions_path, profile: str = "mmcoqa") -> EvalReport:
    predictions = {}
    with Path(results_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            predictions[record["qid"]] = record["answer"]
    questions = ingest_questions(questions_path)
    return build_eval_report(predictions, questions, profile)


def ablate(
    config: RunConfig,
    disable: list,
    questions: Optional[list] = None,
    gateway_factory=None,
) -> dict:
    """Run the full pipeline and a rules-disabled variant, side by side."""
    disable = sorted(set(disable))
    valid = {"rule1", "rule2", "rule3"}
    unknown = set(disable) - valid
    if unknown:
        raise ConfigError(f"unknown rules: {sorted(unknown)}")
    if not disable:
        raise ConfigError("nothing to ablate: no rules listed")
    ablated = RulesEnabled(
        rule1=config.rules.rule1 and "rule1" not in disable,
        rule2=config.rules.rule2 and "rule2" not in disable,
        rule3=config.rules.rule3 and "rule3" not in disable,
    )
    variants = [("full", config.rules), ("no_" + "_".join(disable), ablated)]
    if questions is None:
        if not config.questions_path:
            raise ConfigError("no questions file configured")
        questions = ingest_questions(config.questions_path)

    report = {"k": config.k, "variants": []}
    for name, rules in variants:
        variant_config = replace(config, rules=rules)
        gateway = gateway_factory(variant_config) if gateway_factory else None
        result = run_pipeline(
            variant_config,
            questions=questions,
            gateway=gateway,
            out_dir=Path(config.output_dir) / f"ablate_{name}",
        )
        predictions = {qid: ans.text for qid, ans in result.finals.items()}
        eval_report = build_eval_report(predictions, questions, config.profile)
        report["variants"].append(
            {
                "name": name,
                "rules": {
                    "rule1": rules.rule1,
                    "rule2": rules.rule2,
                    "rule3": rules.rule3,
                },
                "em": eval_report.overall["em"],
                "f1": eval_report.overall["f1"],
                "fusion_calls": result.counters.fusion_calls,
                "reextract_calls": result.counters.reextract_calls,
                "api_calls_total": result.counters.grand_total(),
                "failures": len(result.failures),
            }
        )
    return report


def format_ablation(report: dict) -> str:
    header = (
        f"{'variant':<16} {'EM':>8} {'F1':>8} {'fusion':>8} {'reextract':>10} {'total':>8}"
    )
    lines = [header, "-" * len(header)]
    for variant in report["variants"]:
        lines.append(
            f"{variant['name']:<16} {variant['em']:>8.2f} {variant['f1']:>8.2f} "
            f"{variant['fusion_calls']:>8} {variant['reextract_calls']:>10} "
            f"{variant['api_calls_total']:>8}"
        )
    return "\n".join(lines)

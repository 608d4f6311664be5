"""Replays the three recorded walkthrough questions end to end.

The fixture freezes every model response in a transcript; the run must
reproduce the recorded candidate sets and final answers byte for byte.
"""

import json

import pytest

from fixtures.appendix import EXAMPLES, build_appendix
from moqa.pipeline import evaluate, run_pipeline


@pytest.fixture(scope="module")
def replayed(tmp_path_factory):
    fixture = build_appendix(tmp_path_factory.mktemp("appendix"))
    result = run_pipeline(fixture.config)
    traces = {}
    with open(result.traces_path, encoding="utf-8") as fh:
        for line in fh:
            trace = json.loads(line)
            traces[trace["qid"]] = trace
    return fixture, result, traces


def test_no_failures(replayed):
    _, result, _ = replayed
    assert result.failures == []


def test_final_answers_byte_for_byte(replayed):
    fixture, result, _ = replayed
    for qid, expected in fixture.expected.items():
        assert result.finals[qid].text == expected["final"]


def test_provenance(replayed):
    fixture, result, _ = replayed
    for qid, expected in fixture.expected.items():
        assert result.finals[qid].provenance.value == expected["provenance"]


def test_candidate_sets_byte_for_byte(replayed):
    fixture, result, _ = replayed
    for qid, expected in fixture.expected.items():
        texts = [c.text for c in result.finals[qid].candidate_list.candidates]
        assert texts == expected["candidates"]


def test_fused_raw_recorded_in_traces(replayed):
    fixture, _, traces = replayed
    for qid, expected in fixture.expected.items():
        assert traces[qid]["fused_raw"] == expected["fused_raw"]


def test_reextraction_only_for_long_fusions(replayed):
    fixture, _, traces = replayed
    for qid, expected in fixture.expected.items():
        fired = expected["provenance"] == "fusion_reextracted"
        assert (len(expected["fused_raw"].split()) > 3) == fired
        assert ("reextract" in traces[qid]["fingerprints"]) == fired


def test_every_answer_resolves_to_reference_or_direct(replayed):
    _, _, traces = replayed
    for trace in traces.values():
        assert len(trace["answers"]) == 16
        for answer in trace["answers"]:
            if answer["modality"] == "direct":
                assert answer["source_reference_id"] is None
            else:
                assert answer["source_reference_id"] is not None


def test_retrieval_order_matches_recording(replayed):
    _, _, traces = replayed
    for trace in traces.values():
        qid = trace["qid"]
        for modality in ("image", "text", "table"):
            items = trace["retrieved"][modality]
            assert [item["rank"] for item in items] == [1, 2, 3, 4, 5]
            assert [item["reference_id"] for item in items] == [
                f"{qid}-{modality}-{rank}" for rank in range(1, 6)
            ]


def test_modal_answers_match_recorded_tables(replayed):
    _, _, traces = replayed
    recorded = {ex.qid: ex for ex in EXAMPLES}
    for qid, trace in traces.items():
        ex = recorded[qid]
        by_modality = {}
        for answer in trace["answers"]:
            by_modality.setdefault(answer["modality"], []).append(answer["text"])
        assert by_modality["image"] == list(ex.image_answers)
        assert by_modality["text"] == list(ex.text_answers)
        assert by_modality["table"] == list(ex.table_answers)
        assert by_modality["direct"] == [ex.direct_answer]


def test_call_counters(replayed):
    _, result, _ = replayed
    counters = result.counters
    assert counters.total("vqa") == 15
    assert counters.total("textual_qa") == 15
    assert counters.total("table_qa") == 15
    assert counters.total("direct_qa") == 3
    assert counters.total("fusion") == 3
    assert counters.total("reextract") == 2


def test_scores_match_hand_oracle(replayed):
    fixture, result, _ = replayed
    report = evaluate(result.results_path, fixture.config.questions_path)
    assert report.overall["em"] == pytest.approx(100 / 3, abs=1e-9)
    assert report.overall["f1"] == pytest.approx(
        (40.0 + 200 / 3 + 100.0) / 3, abs=1e-9
    )

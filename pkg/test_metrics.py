"""
Evaluation metrics and report rendering
"""
import json

import pytest
from hypothesis import given, strategies as st

from common.exceptions import LengthMismatch, MetricError, MissingConstituent, MissingFile, MissingGold
from common.schemas import Stage
from corpus_service import AlignmentEntry, AnswerEntry, EvidenceEntry, InterpretationEntry
from corpus_service.schemas import AlignmentLink, EvidenceTier, GoldAnnotation
from metrics_service import (
    AverageLevel,
    EvidenceEvalConfig,
    EvidenceMode,
    MetricReport,
    PrfScores,
    alignment_prf,
    bleu,
    evaluate_predictions,
    evidence_prf,
    load_sidecar,
    overall_score,
    render_aggregate_table,
    render_summary_table,
    rouge_lsum,
    rouge_lsum_pair,
    sari,
    sari_sentence,
    write_report,
)

STRICT_MICRO = EvidenceEvalConfig(mode=EvidenceMode.STRICT, level=AverageLevel.MICRO)
STRICT_MACRO = EvidenceEvalConfig(mode=EvidenceMode.STRICT, level=AverageLevel.MACRO)
LENIENT_MICRO = EvidenceEvalConfig(mode=EvidenceMode.LENIENT, level=AverageLevel.MICRO)


# Precision / recall / F1

def test_prf_from_counts():
    scores = PrfScores.from_counts(2, 1, 1)
    assert scores.precision == pytest.approx(2 / 3)
    assert scores.recall == pytest.approx(2 / 3)
    assert scores.f1 == pytest.approx(2 / 3)
    assert scores.scaled() == {"precision": 66.7, "recall": 66.7, "f1": 66.7}

    assert PrfScores.from_counts(0, 0, 0) == PrfScores(precision=1.0, recall=1.0, f1=1.0)
    assert PrfScores.from_counts(0, 3, 0).precision == 0.0
    assert PrfScores.from_counts(0, 0, 2).recall == 0.0


def test_evidence_prf_example():
    gold = {"c": GoldAnnotation(essential=frozenset({2, 3, 4}))}
    scores = evidence_prf({"c": {1, 2, 3}}, gold, STRICT_MICRO)
    assert scores.precision == pytest.approx(2 / 3)
    assert scores.recall == pytest.approx(2 / 3)
    # a single case: micro and macro agree
    assert evidence_prf({"c": {1, 2, 3}}, gold, STRICT_MACRO) == scores


def test_micro_and_macro_differ():
    gold = {"a": GoldAnnotation(essential=frozenset({1})), "b": GoldAnnotation(essential=frozenset({4}))}
    preds = {"a": {1}, "b": {2, 3}}

    micro = evidence_prf(preds, gold, STRICT_MICRO)
    assert micro.precision == pytest.approx(1 / 3)
    assert micro.recall == pytest.approx(1 / 2)
    assert micro.f1 == pytest.approx(0.4)

    macro = evidence_prf(preds, gold, STRICT_MACRO)
    assert macro.precision == pytest.approx(0.5)
    assert macro.recall == pytest.approx(0.5)
    assert macro.f1 == pytest.approx(0.5)


def test_lenient_adds_supplementary():
    gold = {"c": GoldAnnotation(essential=frozenset({3}), supplementary=frozenset({1, 2}))}
    assert evidence_prf({"c": {1, 2, 3}}, gold, STRICT_MICRO).precision == pytest.approx(1 / 3)
    assert evidence_prf({"c": {1, 2, 3}}, gold, LENIENT_MICRO).precision == pytest.approx(1.0)


@given(
    st.sets(st.integers(min_value=1, max_value=10), min_size=1),
    st.sets(st.integers(min_value=1, max_value=10)),
    st.sets(st.integers(min_value=1, max_value=10)),
)
def test_lenient_precision_never_below_strict(predicted, essential, extra):
    gold = {"c": GoldAnnotation(essential=frozenset(essential), supplementary=frozenset(extra - essential))}
    strict = evidence_prf({"c": predicted}, gold, STRICT_MICRO)
    lenient = evidence_prf({"c": predicted}, gold, LENIENT_MICRO)
    assert lenient.precision >= strict.precision


def test_evidence_prf_missing_gold():
    with pytest.raises(MissingGold):
        evidence_prf({"c": {1}}, {}, STRICT_MICRO)


def test_alignment_prf():
    reference = {"c": [AlignmentLink(answer_sentence=1, evidence=(2, 3)), AlignmentLink(answer_sentence=2, evidence=(4,))]}
    exact = {"c": list(reference["c"])}
    assert alignment_prf(exact, reference).f1 == pytest.approx(1.0)

    predicted = {"c": [AlignmentLink(answer_sentence=1, evidence=(3,)), AlignmentLink(answer_sentence=2, evidence=(4, 5))]}
    scores = alignment_prf(predicted, reference)
    assert scores.precision == pytest.approx(2 / 3)
    assert scores.recall == pytest.approx(2 / 3)


# Text metrics

def _triples(fixtures_dir):
    return json.loads((fixtures_dir / "metric_triples.json").read_text(encoding="utf-8"))


def test_text_metric_triples(fixtures_dir):
    for triple in _triples(fixtures_dir):
        source, candidate, reference = triple["source"], triple["candidate"], triple["reference"]
        if triple["bleu"] is not None:
            assert bleu([candidate], [reference]) == pytest.approx(triple["bleu"], abs=1e-6)
        assert rouge_lsum_pair(candidate, reference) == pytest.approx(triple["rouge_lsum"], abs=1e-6)
        assert sari_sentence(source, candidate, [reference]) * 100 == pytest.approx(triple["sari"], abs=1e-4)


def test_corpus_level_text_metrics(fixtures_dir):
    identity = [t for t in _triples(fixtures_dir) if t["source"] == t["candidate"]]
    candidates = [t["candidate"] for t in identity]
    assert bleu(candidates, candidates) == pytest.approx(100.0)
    assert rouge_lsum(candidates, candidates) == pytest.approx(1.0)
    assert sari(candidates, candidates, [[c] for c in candidates]) == pytest.approx(100 / 3, abs=1e-4)


def test_text_metric_errors():
    with pytest.raises(LengthMismatch):
        bleu(["a"], ["a", "b"])
    with pytest.raises(MetricError):
        rouge_lsum([], [])
    with pytest.raises(MetricError):
        bleu(["a"], [" "])
    with pytest.raises(MetricError):
        sari_sentence("a", "a", [])


# Overall score and sidecar metrics

def test_overall_score(fixtures_dir):
    sidecar = load_sidecar(fixtures_dir / "sidecar.json")
    constituents = ["ROUGELsum", "BERTScore", "AlignScore", "MEDCON"]
    assert overall_score({"ROUGELsum": 35.3}, sidecar, constituents) == pytest.approx(30.6)

    with pytest.raises(MissingConstituent):
        overall_score({}, sidecar, constituents)


@pytest.mark.parametrize("payload", ['{"BERTScore": 120}', '{"BERTScore": "high"}', "[1, 2]", "{"])
def test_load_sidecar_errors(tmp_path, payload):
    path = tmp_path / "sidecar.json"
    path.write_text(payload, encoding="utf-8")
    with pytest.raises(MetricError):
        load_sidecar(path)


def test_load_sidecar_missing(tmp_path):
    with pytest.raises(MissingFile):
        load_sidecar(tmp_path / "absent.json")


def test_metric_report_requires_constituents_for_overall():
    with pytest.raises(ValueError):
        MetricReport(stage=1, primary_metric="Overall", overall=10.0)


# Stage evaluation

def test_evaluate_queries_with_sidecar(cases, fixtures_dir):
    entries = [InterpretationEntry(case_id=c.case_id, query=c.gold.reference_query) for c in cases]
    report = evaluate_predictions(Stage.INTERPRET, entries, cases, load_sidecar(fixtures_dir / "sidecar.json"))
    assert report.value("ROUGELsum") == pytest.approx(100.0)
    assert report.primary_metric == "Overall"
    assert report.overall == pytest.approx((100.0 + 46.8 + 23.1 + 17.2) / 4)
    assert set(report.per_case) == {"101", "102", "103", "104", "105"}


def test_evaluate_queries_without_sidecar(cases):
    entries = [InterpretationEntry(case_id="101", query="Why was a stent placed?")]
    report = evaluate_predictions(Stage.INTERPRET, entries, cases)
    assert report.overall is None
    assert report.primary_metric == "ROUGELsum"


def test_evaluate_evidence(cases):
    entries = [EvidenceEntry(case_id="101", evidence=(2, 3, 4), tier=EvidenceTier.STRICT)]
    report = evaluate_predictions(Stage.EVIDENCE, entries, cases)
    assert report.primary_metric == "Strict Micro F1"
    assert report.value("Strict Micro Precision") == pytest.approx(200 / 3)
    assert report.value("Lenient Micro Precision") == pytest.approx(100.0)
    assert report.per_case["101"]["Strict Recall"] == pytest.approx(100.0)


def test_evaluate_answers(cases):
    entries = [AnswerEntry(case_id=c.case_id, answer=c.gold.reference_answer) for c in cases]
    report = evaluate_predictions(Stage.GENERATE, entries, cases, constituents=["BLEU", "ROUGELsum"])
    assert report.value("BLEU") == pytest.approx(100.0)
    assert report.value("ROUGELsum") == pytest.approx(100.0)
    assert 0 <= report.value("SARI") <= 100
    assert report.overall == pytest.approx(100.0)


def test_evaluate_alignment(cases):
    entries = [AlignmentEntry(case_id="104", alignment=cases[3].gold.reference_alignment)]
    report = evaluate_predictions(Stage.ALIGN, entries, cases)
    assert report.value("Micro F1") == pytest.approx(100.0)


def test_evaluate_missing_gold(cases):
    with pytest.raises(MissingGold) as exc_info:
        evaluate_predictions(Stage.INTERPRET, [InterpretationEntry(case_id="999", query="why")], cases)
    assert str(exc_info.value) == "MissingGold(999)"


# Rendering

def test_summary_table(cases, fixtures_dir):
    evidence = evaluate_predictions(
        Stage.EVIDENCE, [EvidenceEntry(case_id="104", evidence=(2, 3), tier=EvidenceTier.STRICT)], cases
    )
    queries = evaluate_predictions(
        Stage.INTERPRET, [InterpretationEntry(case_id="101", query="Why was a stent placed?")], cases
    )
    text = render_summary_table([evidence, queries])
    assert "Evidence Scoring" in text
    assert "Strict Micro F1" in text
    assert "100.0" in text
    assert text.index("Question Interpretation") < text.index("Evidence Scoring")


def test_aggregate_table_and_report_file(cases, fixtures_dir, tmp_path):
    entries = [InterpretationEntry(case_id="101", query="Why was a stent placed?")]
    report = evaluate_predictions(Stage.INTERPRET, entries, cases, load_sidecar(fixtures_dir / "sidecar.json"))
    text = render_aggregate_table(report)
    assert "MEDCON (sidecar)" in text
    assert "Overall" in text

    path = write_report(report, tmp_path / "reports" / "stage1.json")
    saved = json.loads(open(path, encoding="utf-8").read())
    assert saved["overall"] == pytest.approx(report.overall)
    assert saved["sidecar"]["BERTScore"] == 46.8

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence
import logging

from common.exceptions import MissingConstituent, MissingGold
from common.schemas import Stage
from corpus_service.loader import load_corpus
from corpus_service.schemas import CaseRecord, GoldAnnotation
from corpus_service.submissions import read_submission
from metrics_service.overall import DEFAULT_CONSTITUENTS, load_sidecar, overall_score
from metrics_service.prf import alignment_pairs, alignment_prf, evidence_case_scores, evidence_prf, set_counts
from metrics_service.schemas import AverageLevel, EvidenceEvalConfig, EvidenceMode, MetricReport, PrfScores
from metrics_service.text_metrics import bleu, rouge_lsum, rouge_lsum_pair, sari, sari_sentence

logger = logging.getLogger(__name__)

PRIMARY_METRICS = {
    Stage.INTERPRET: "Overall",
    Stage.EVIDENCE: "Strict Micro F1",
    Stage.GENERATE: "SARI",
    Stage.ALIGN: "Micro F1",
}


def _gold_for(case_id: str, gold: Mapping[str, GoldAnnotation], attribute: str):
    annotation = gold.get(case_id)
    value = getattr(annotation, attribute, None) if annotation is not None else None
    if value is None:
        raise MissingGold(case_id)
    return value


def _prf_metrics(prefix: str, scores: PrfScores) -> Dict[str, float]:
    return {
        f"{prefix} Precision": scores.precision * 100,
        f"{prefix} Recall": scores.recall * 100,
        f"{prefix} F1": scores.f1 * 100,
    }


def _evaluate_queries(entries: Sequence, gold: Mapping[str, GoldAnnotation], report: MetricReport) -> None:
    references = [_gold_for(e.case_id, gold, "reference_query") for e in entries]
    candidates = [e.query for e in entries]
    report.aggregate["ROUGELsum"] = rouge_lsum(candidates, references) * 100
    for entry, candidate, reference in zip(entries, candidates, references):
        report.per_case[entry.case_id] = {"ROUGELsum": rouge_lsum_pair(candidate, reference) * 100}


def _evaluate_evidence(entries: Sequence, gold: Mapping[str, GoldAnnotation], report: MetricReport) -> None:
    preds = {e.case_id: set(e.evidence) for e in entries}
    for mode in EvidenceMode:
        for level in AverageLevel:
            cfg = EvidenceEvalConfig(mode=mode, level=level)
            report.aggregate.update(_prf_metrics(cfg.label, evidence_prf(preds, gold, cfg)))
        for case_id, scores in evidence_case_scores(preds, gold, mode).items():
            report.per_case.setdefault(case_id, {}).update(_prf_metrics(mode.value.capitalize(), scores))


def _evaluate_answers(
    entries: Sequence,
    gold: Mapping[str, GoldAnnotation],
    notes: Mapping[str, str],
    report: MetricReport,
) -> None:
    references = [_gold_for(e.case_id, gold, "reference_answer") for e in entries]
    candidates = [e.answer for e in entries]
    # The source of the rewrite is the note the answer was drawn from
    sources = [notes[e.case_id] for e in entries]

    report.aggregate["BLEU"] = bleu(candidates, references)
    report.aggregate["ROUGELsum"] = rouge_lsum(candidates, references) * 100
    report.aggregate["SARI"] = sari(sources, candidates, [[r] for r in references])
    for entry, source, candidate, reference in zip(entries, sources, candidates, references):
        report.per_case[entry.case_id] = {
            "BLEU": bleu([candidate], [reference]),
            "ROUGELsum": rouge_lsum_pair(candidate, reference) * 100,
            "SARI": sari_sentence(source, candidate, [reference]) * 100,
        }


def _evaluate_alignment(entries: Sequence, gold: Mapping[str, GoldAnnotation], report: MetricReport) -> None:
    preds = {e.case_id: list(e.alignment) for e in entries}
    references = {case_id: _gold_for(case_id, gold, "reference_alignment") for case_id in preds}
    report.aggregate.update(_prf_metrics("Micro", alignment_prf(preds, references)))
    for case_id in sorted(preds):
        counts = set_counts(alignment_pairs(preds[case_id]), alignment_pairs(references[case_id]))
        report.per_case[case_id] = _prf_metrics("Micro", PrfScores.from_counts(*counts))


def evaluate_predictions(
    stage: Stage,
    entries: Sequence,
    gold_cases: Sequence[CaseRecord],
    sidecar: Optional[Mapping[str, float]] = None,
    constituents: Optional[Sequence[str]] = None,
) -> MetricReport:
    """Score one stage's submission entries against a gold-annotated corpus."""
    stage = Stage(stage)
    gold = {case.case_id: case.gold for case in gold_cases if case.gold is not None}
    for entry in entries:
        if entry.case_id not in gold:
            raise MissingGold(entry.case_id)

    entries = sorted(entries, key=lambda e: e.case_id)
    report = MetricReport(stage=stage.value, primary_metric=PRIMARY_METRICS[stage], sidecar=dict(sidecar or {}))
    if stage == Stage.INTERPRET:
        _evaluate_queries(entries, gold, report)
    elif stage == Stage.EVIDENCE:
        _evaluate_evidence(entries, gold, report)
    elif stage == Stage.GENERATE:
        notes = {case.case_id: case.note_text() for case in gold_cases}
        _evaluate_answers(entries, gold, notes, report)
    else:
        _evaluate_alignment(entries, gold, report)

    names: List[str] = list(constituents if constituents is not None else DEFAULT_CONSTITUENTS.get(stage, ()))
    report.constituents = names
    if names:
        try:
            report.overall = overall_score(report.aggregate, report.sidecar, names)
        except MissingConstituent as e:
            logger.warning(f"Stage {stage.value}: overall score omitted, {e}")
    if report.primary_metric == "Overall" and report.overall is None:
        report.primary_metric = "ROUGELsum"
    return report


def evaluate_files(
    stage: Stage,
    predictions_path: str | Path,
    gold_path: str | Path,
    sidecar_path: Optional[str | Path] = None,
    constituents: Optional[Sequence[str]] = None,
) -> MetricReport:
    entries = read_submission(stage, predictions_path)
    gold_cases = load_corpus(gold_path)
    sidecar = load_sidecar(sidecar_path) if sidecar_path else None
    report = evaluate_predictions(stage, entries, gold_cases, sidecar, constituents)
    logger.info(f"Evaluated {len(entries)} stage {int(stage)} predictions from {predictions_path}")
    return report

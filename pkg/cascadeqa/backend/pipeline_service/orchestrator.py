from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Set
import logging

import pandas as pd

from common.exceptions import CascadeQAException, StageError, handle_exception
from common.schemas import Stage
from common.storage import FileStorage
from common.utils import dump_pretty_json
from corpus_service.schemas import CaseRecord, PromptAssets
from corpus_service.submissions import SUBMISSION_FILENAMES, write_submission
from llm_service.backends import missing_replay_keys
from llm_service.replay import ChatBackend
from llm_service.schemas import GenerationConfig
from pipeline_service.align import align_answer
from pipeline_service.evidence import first_sentences, resolve_anchor, select_evidence
from pipeline_service.generate import generate_answer
from pipeline_service.interpret import interpret_question
from pipeline_service.prompt_builder import PromptBuilder
from pipeline_service.schemas import (
    AnchorMode,
    CaseResult,
    FallbackKind,
    InterpretMode,
    RunReport,
    RunSummary,
    StageEvent,
    StageFallback,
)
from text_service import ANSWER_POLICY, INTERPRET_POLICY, TruncationPolicy

logger = logging.getLogger(__name__)

REPORT_FILENAME = "run_report.json"

STAGE_RESULT_FIELDS = {
    Stage.INTERPRET: "query",
    Stage.EVIDENCE: "evidence",
    Stage.GENERATE: "answer",
    Stage.ALIGN: "alignment",
}


@dataclass(frozen=True)
class PipelineOptions:
    interpret_mode: InterpretMode = InterpretMode.FEW_SHOT
    workers: int = 1
    interpret_policy: TruncationPolicy = INTERPRET_POLICY
    answer_policy: TruncationPolicy = ANSWER_POLICY
    # Pre-segmented answers for the alignment stage, keyed by case_id
    external_answers: Optional[Mapping[str, Sequence[str]]] = None
    model_id: str = "mock"
    generation: Mapping[Stage, GenerationConfig] = field(default_factory=dict)

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    def generation_configs(self) -> Dict[Stage, GenerationConfig]:
        return {stage: self.generation.get(stage) or GenerationConfig.for_stage(stage, self.model_id) for stage in Stage}


def required_stages(requested: Sequence[Stage], anchor: AnchorMode, has_external_answers: bool = False) -> Set[Stage]:
    """Requested stages plus whatever upstream stages they consume"""
    needed = set(requested)
    if Stage.ALIGN in needed and not has_external_answers:
        needed.add(Stage.GENERATE)
    if Stage.GENERATE in needed:
        needed.update({Stage.INTERPRET, Stage.EVIDENCE})
    if Stage.EVIDENCE in needed and anchor == AnchorMode.INTERPRETED_QUERY:
        needed.add(Stage.INTERPRET)
    return needed


def _note_fallback(result: CaseResult, stage: Stage, fallback: Optional[StageFallback]) -> None:
    if fallback is None:
        return
    result.emit(stage, "fallback", f"{fallback.kind.value}: {fallback.detail}")
    # A strict replay miss means the transcript does not cover this run
    if fallback.kind == FallbackKind.REPLAY_MISS:
        result.failed = True
        result.error = fallback.detail


def process_case(
    case: CaseRecord,
    needed: Set[Stage],
    anchor: AnchorMode,
    builder: PromptBuilder,
    backend: ChatBackend,
    options: PipelineOptions,
) -> CaseResult:
    """Run the needed stages for one case, strictly in order; never raises."""
    result = CaseResult(case_id=case.case_id)
    stage = Stage.INTERPRET
    try:
        if Stage.INTERPRET in needed:
            result.query = interpret_question(case, builder, backend, options.interpret_mode, options.interpret_policy)
            if result.query.truncated:
                result.emit(stage, "truncated", f"query cut to {options.interpret_policy.max_words} words")
            _note_fallback(result, stage, result.query.fallback)

        stage = Stage.EVIDENCE
        if Stage.EVIDENCE in needed:
            anchor_text = resolve_anchor(case, anchor, result.query)
            result.evidence = select_evidence(case, anchor_text, builder, backend)
            result.emit(stage, "tier", result.evidence.tier.value)
            _note_fallback(result, stage, result.evidence.fallback)

        stage = Stage.GENERATE
        if Stage.GENERATE in needed:
            result.answer = generate_answer(
                case, result.query, result.evidence, builder, backend, options.answer_policy
            )
            if result.answer.soft_cut_applied:
                result.emit(stage, "soft_cut", f"answer cut to {len(result.answer.answer.split())} words")
            _note_fallback(result, stage, result.answer.fallback)

        stage = Stage.ALIGN
        if Stage.ALIGN in needed:
            if options.external_answers is not None:
                answer_sentences = list(options.external_answers.get(case.case_id) or [])
            else:
                answer_sentences = list(result.answer.answer_sentences)
            if not answer_sentences:
                raise StageError(f"No answer sentences for case {case.case_id}", case.case_id, stage.value)

            fallback_evidence = result.evidence.indices if result.evidence else first_sentences(case.note_len)
            result.alignment = align_answer(case, answer_sentences, builder, backend, fallback_evidence)
            for warning in result.alignment.warnings:
                result.emit(stage, "dropped_evidence", warning)
            _note_fallback(result, stage, result.alignment.fallback)

    except Exception as e:
        error = e if isinstance(e, CascadeQAException) else handle_exception(e, f"case {case.case_id}")
        if not isinstance(e, CascadeQAException):
            logger.exception(f"Unexpected failure in case {case.case_id}")
        logger.error(f"Case {case.case_id} failed at stage {stage.value}: {error}")
        result.failed = True
        result.error = str(error)
        result.emit(stage, "error", str(error))

    return result


def summarize(
    results: Sequence[CaseResult],
    events: Sequence[StageEvent],
    stages: Sequence[Stage],
    missing_keys: Sequence[str],
) -> RunSummary:
    frame = pd.DataFrame(
        [
            {
                "case_id": r.case_id,
                "tier": r.evidence.tier.value if r.evidence else None,
                "truncated": bool(r.query and r.query.truncated),
                "soft_cut": bool(r.answer and r.answer.soft_cut_applied),
            }
            for r in results
        ],
        columns=["case_id", "tier", "truncated", "soft_cut"],
    )
    tiers = frame["tier"].dropna().value_counts().sort_index()

    event_frame = pd.DataFrame([e.model_dump() for e in events], columns=["case_id", "stage", "event", "detail"])
    fallback_counts = event_frame[event_frame["event"] == "fallback"].groupby("stage").size()

    return RunSummary(
        cases=len(results),
        failed_cases=sorted(r.case_id for r in results if r.failed),
        stages=[int(stage) for stage in stages],
        tiers={str(tier): int(count) for tier, count in tiers.items()},
        fallbacks={Stage(int(s)).label: int(count) for s, count in fallback_counts.items()},
        truncated_queries=int(frame["truncated"].sum()),
        soft_cut_answers=int(frame["soft_cut"].sum()),
        missing_transcript_keys=list(missing_keys),
    )


def run_pipeline(
    corpus: Sequence[CaseRecord],
    stages: Sequence[Stage],
    anchor: AnchorMode,
    assets: Mapping[Stage, PromptAssets],
    backend: ChatBackend,
    out_dir: str | Path,
    options: Optional[PipelineOptions] = None,
) -> RunReport:
    """
    Process every case independently, then write one submission file per
    requested stage (entries sorted by case_id) and run_report.json.
    """
    options = options or PipelineOptions()
    stages = sorted(set(stages))
    needed = required_stages(stages, anchor, options.external_answers is not None)
    builder = PromptBuilder(assets, options.generation_configs())
    logger.info(
        f"Running stages {[int(s) for s in stages]} (computing {sorted(int(s) for s in needed)}) "
        f"over {len(corpus)} cases with {options.workers} workers, anchor={anchor.value}"
    )

    with ThreadPoolExecutor(max_workers=options.workers) as pool:
        results: List[CaseResult] = list(
            pool.map(lambda case: process_case(case, needed, anchor, builder, backend, options), corpus)
        )
    results.sort(key=lambda r: r.case_id)

    out_dir = Path(out_dir)
    case_ids = {case.case_id for case in corpus}
    files: Dict[str, str] = {}
    for stage in stages:
        attribute = STAGE_RESULT_FIELDS[stage]
        entries = [getattr(r, attribute).submission_entry() for r in results if getattr(r, attribute) is not None]
        filename = SUBMISSION_FILENAMES[stage]
        write_submission(stage, entries, out_dir / filename, case_ids)
        files[str(int(stage))] = filename

    events = [event for r in results for event in r.events]
    summary = summarize(results, events, stages, missing_replay_keys(backend))
    summary.files = files
    report = RunReport(events=events, summary=summary, results=results)

    FileStorage(out_dir).save_text(dump_pretty_json(report.model_dump(mode="json")), REPORT_FILENAME)
    logger.info(
        f"Run finished: {summary.cases} cases, {len(summary.failed_cases)} failed, "
        f"tiers {summary.tiers}, fallbacks {summary.fallbacks}"
    )
    return report

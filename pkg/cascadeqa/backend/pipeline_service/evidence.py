from typing import List, Optional, Sequence, Union
import logging

from common.exceptions import AnchorUnavailable, BackendFailure, StageError
from common.schemas import Stage
from corpus_service.schemas import CaseRecord, EvidenceTier
from llm_service.backends import complete
from llm_service.replay import ChatBackend
from llm_service.schemas import Text
from pipeline_service.parsing import parse_scores
from pipeline_service.prompt_builder import PromptBuilder
from pipeline_service.schemas import (
    AnchorMode,
    EvidenceSelection,
    FallbackKind,
    InterpretedQuery,
    SentenceScore,
    StageFallback,
)

logger = logging.getLogger(__name__)

STRICT_MIN_SCORE = 4
LENIENT_MIN_SCORE = 3
FALLBACK_SENTENCES = 3


def resolve_anchor(case: CaseRecord, anchor: AnchorMode, interpreted: Optional[InterpretedQuery] = None) -> str:
    """Text the scorer compares every note sentence against"""
    if anchor == AnchorMode.CLINICIAN_QUERY:
        if not case.clinician_question or not case.clinician_question.strip():
            raise AnchorUnavailable(f"Case {case.case_id} has no clinician question", case.case_id, Stage.EVIDENCE.value)
        return case.clinician_question
    if anchor == AnchorMode.INTERPRETED_QUERY:
        if interpreted is None:
            raise AnchorUnavailable(f"Case {case.case_id} has no interpreted query", case.case_id, Stage.EVIDENCE.value)
        return interpreted.query
    return case.patient_narrative if case.patient_narrative.strip() else case.patient_question


def score_sentences(case: CaseRecord, query: str, builder: PromptBuilder, backend: ChatBackend) -> List[SentenceScore]:
    """One 1..5 relevance score per note sentence; raises BackendFailure or ParseFailure."""
    outcome = complete(backend, builder.build_scoring_request(case, query))
    if not isinstance(outcome, Text):
        raise BackendFailure(outcome, case.case_id, Stage.EVIDENCE.value)
    return parse_scores(outcome.text, case.note_len, case.case_id)


def first_sentences(note_len: int, count: int = FALLBACK_SENTENCES) -> List[int]:
    return list(range(1, min(count, note_len) + 1))


def filter_evidence(
    scores: Union[Sequence[SentenceScore], Exception],
    note_len: int,
    case_id: str = "",
) -> EvidenceSelection:
    """
    Tiered recall-biased filter.

    Scores >= 4 form the strict tier; only when that is empty do scores >= 3
    form the lenient tier. With neither, or when scoring failed, the first
    three sentences of the note are used.
    """
    if note_len < 1:
        raise ValueError("note_len must be positive")

    if isinstance(scores, Exception):
        return EvidenceSelection(
            case_id=case_id,
            indices=tuple(first_sentences(note_len)),
            tier=EvidenceTier.FALLBACK,
            fallback=StageFallback.from_error(scores),
        )

    scores = tuple(scores)
    strict = sorted(s.index for s in scores if s.score >= STRICT_MIN_SCORE)
    if strict:
        return EvidenceSelection(case_id=case_id, indices=tuple(strict), tier=EvidenceTier.STRICT, scores=scores)

    lenient = sorted(s.index for s in scores if s.score >= LENIENT_MIN_SCORE)
    if lenient:
        return EvidenceSelection(case_id=case_id, indices=tuple(lenient), tier=EvidenceTier.LENIENT, scores=scores)

    return EvidenceSelection(
        case_id=case_id,
        indices=tuple(first_sentences(note_len)),
        tier=EvidenceTier.FALLBACK,
        scores=scores,
        fallback=StageFallback(kind=FallbackKind.LOW_SCORES, detail=f"no sentence scored >= {LENIENT_MIN_SCORE}"),
    )


def select_evidence(case: CaseRecord, query: str, builder: PromptBuilder, backend: ChatBackend) -> EvidenceSelection:
    try:
        scores: Union[List[SentenceScore], Exception] = score_sentences(case, query, builder, backend)
    except StageError as e:
        logger.warning(f"Case {case.case_id}: evidence scoring failed, using first sentences ({e})")
        scores = e
    selection = filter_evidence(scores, case.note_len, case.case_id)
    logger.debug(f"Case {case.case_id}: {selection.tier.value} evidence {list(selection.indices)}")
    return selection

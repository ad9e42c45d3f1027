from typing import Optional
import logging

from corpus_service.schemas import CaseRecord
from llm_service.backends import complete
from llm_service.replay import ChatBackend
from llm_service.schemas import Text
from pipeline_service.parsing import clean_model_text
from pipeline_service.prompt_builder import PromptBuilder
from pipeline_service.schemas import (
    EvidenceSelection,
    FallbackKind,
    GeneratedAnswer,
    InterpretedQuery,
    StageFallback,
)
from text_service import (
    ANSWER_POLICY,
    TruncationPolicy,
    ensure_terminal_punctuation,
    normalize_whitespace,
    segment_sentences,
    soft_cut,
)

logger = logging.getLogger(__name__)


def finalize_answer(
    case_id: str,
    draft: str,
    policy: TruncationPolicy = ANSWER_POLICY,
    fallback: Optional[StageFallback] = None,
) -> GeneratedAnswer:
    """Apply the word cap and closing punctuation, then segment"""
    normalized = normalize_whitespace(draft)
    cut = soft_cut(normalized, policy)
    answer = ensure_terminal_punctuation(cut)
    return GeneratedAnswer(
        case_id=case_id,
        answer=answer,
        answer_sentences=tuple(segment_sentences(answer)),
        soft_cut_applied=cut != normalized,
        fallback=fallback,
    )


def fallback_answer(
    case: CaseRecord,
    evidence: EvidenceSelection,
    fallback: StageFallback,
    policy: TruncationPolicy = ANSWER_POLICY,
) -> GeneratedAnswer:
    """The filtered evidence sentences themselves, under the same cap"""
    logger.warning(f"Case {case.case_id}: answer fallback ({fallback.kind.value}: {fallback.detail})")
    return finalize_answer(case.case_id, " ".join(case.sentences(evidence.indices)), policy, fallback)


def generate_answer(
    case: CaseRecord,
    query: InterpretedQuery,
    evidence: EvidenceSelection,
    builder: PromptBuilder,
    backend: ChatBackend,
    policy: TruncationPolicy = ANSWER_POLICY,
) -> GeneratedAnswer:
    outcome = complete(backend, builder.build_generation_request(case, query, evidence))
    if not isinstance(outcome, Text):
        return fallback_answer(case, evidence, StageFallback.from_outcome(outcome), policy)

    draft = clean_model_text(outcome.text)
    if not draft:
        return fallback_answer(case, evidence, StageFallback(kind=FallbackKind.EMPTY_OUTPUT, detail="no answer text"), policy)
    return finalize_answer(case.case_id, draft, policy)

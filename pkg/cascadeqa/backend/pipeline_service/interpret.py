import logging

from common.schemas import Stage
from corpus_service.assets import INTERPRET_EXAMPLE_COUNT, require_example_count
from corpus_service.schemas import CaseRecord
from llm_service.backends import complete
from llm_service.replay import ChatBackend
from llm_service.schemas import Text
from pipeline_service.parsing import clean_model_text
from pipeline_service.prompt_builder import PromptBuilder
from pipeline_service.schemas import FallbackKind, InterpretedQuery, InterpretMode, StageFallback
from text_service import INTERPRET_POLICY, TruncationPolicy, count_words, hard_truncate

logger = logging.getLogger(__name__)


def fallback_query(case: CaseRecord, fallback: StageFallback, policy: TruncationPolicy = INTERPRET_POLICY) -> InterpretedQuery:
    """The patient's own question, cut to the word cap"""
    logger.warning(f"Case {case.case_id}: interpretation fallback ({fallback.kind.value}: {fallback.detail})")
    return InterpretedQuery(
        case_id=case.case_id,
        query=hard_truncate(case.patient_question, policy.max_words),
        truncated=count_words(case.patient_question) > policy.max_words,
        fallback=fallback,
    )


def interpret_question(
    case: CaseRecord,
    builder: PromptBuilder,
    backend: ChatBackend,
    mode: InterpretMode = InterpretMode.FEW_SHOT,
    policy: TruncationPolicy = INTERPRET_POLICY,
) -> InterpretedQuery:
    require_example_count(builder.assets[Stage.INTERPRET], INTERPRET_EXAMPLE_COUNT)
    outcome = complete(backend, builder.build_interpret_request(case, mode))
    if not isinstance(outcome, Text):
        return fallback_query(case, StageFallback.from_outcome(outcome), policy)

    cleaned = clean_model_text(outcome.text, first_line_only=True)
    if not cleaned:
        return fallback_query(case, StageFallback(kind=FallbackKind.EMPTY_OUTPUT, detail="no query text"), policy)

    query = hard_truncate(cleaned, policy.max_words)
    return InterpretedQuery(case_id=case.case_id, query=query, truncated=query != cleaned)

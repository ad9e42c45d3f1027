from typing import Sequence
import logging

from common.exceptions import ParseFailure
from corpus_service.schemas import AlignmentLink, CaseRecord
from llm_service.backends import complete
from llm_service.replay import ChatBackend
from llm_service.schemas import Text
from pipeline_service.parsing import parse_alignment
from pipeline_service.prompt_builder import PromptBuilder
from pipeline_service.schemas import AlignmentMap, FallbackKind, StageFallback

logger = logging.getLogger(__name__)


def fallback_alignment(
    case: CaseRecord,
    answer_sentences: Sequence[str],
    evidence: Sequence[int],
    fallback: StageFallback,
) -> AlignmentMap:
    """Every answer sentence linked to the whole fallback evidence set"""
    logger.warning(f"Case {case.case_id}: alignment fallback ({fallback.kind.value}: {fallback.detail})")
    evidence = tuple(sorted(set(evidence)))
    links = [AlignmentLink(answer_sentence=n, evidence=evidence) for n in range(1, len(answer_sentences) + 1)]
    return AlignmentMap(case_id=case.case_id, links=tuple(links), fallback=fallback)


def align_answer(
    case: CaseRecord,
    answer_sentences: Sequence[str],
    builder: PromptBuilder,
    backend: ChatBackend,
    fallback_evidence: Sequence[int],
) -> AlignmentMap:
    """
    Link answer sentences to the note sentences that directly support them.

    A reply that cannot be parsed gets one corrective reprompt; a second
    failure, a block or a transport error falls back to fallback_evidence.
    """
    if not answer_sentences:
        raise ValueError(f"Case {case.case_id}: no answer sentences to align")

    request = builder.build_alignment_request(case, answer_sentences)
    reprompted = False
    while True:
        outcome = complete(backend, request)
        if not isinstance(outcome, Text):
            return fallback_alignment(case, answer_sentences, fallback_evidence, StageFallback.from_outcome(outcome))
        try:
            links, warnings = parse_alignment(outcome.text, len(answer_sentences), case.note_len, case.case_id)
        except ParseFailure as e:
            if reprompted:
                fallback = StageFallback(kind=FallbackKind.PARSE_FAILURE, detail=str(e))
                return fallback_alignment(case, answer_sentences, fallback_evidence, fallback)
            logger.info(f"Case {case.case_id}: unparseable alignment, reprompting once ({e})")
            request = builder.build_alignment_reprompt(request, outcome.text)
            reprompted = True
            continue
        return AlignmentMap(case_id=case.case_id, links=tuple(links), warnings=tuple(warnings))

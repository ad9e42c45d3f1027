"""
The four pipeline stages, one at a time
"""
import itertools
import json

import pytest

from common.exceptions import AnchorUnavailable, BackendFailure, ParseFailure
from corpus_service.schemas import EvidenceTier
from llm_service import Blocked, TransportError, TransportErrorCode
from pipeline_service import (
    AnchorMode,
    EvidenceSelection,
    FallbackKind,
    InterpretedQuery,
    InterpretMode,
    SentenceScore,
    align_answer,
    filter_evidence,
    finalize_answer,
    generate_answer,
    interpret_question,
    resolve_anchor,
    score_sentences,
    select_evidence,
)
from text_service import count_words, hard_truncate


# Question interpretation

def test_interpret_cleans_reply(case_by_id, builder, scripted):
    backend = scripted({"interpret": '"Why was a stent placed and dual antiplatelet therapy started?"'})
    query = interpret_question(case_by_id["101"], builder, backend)
    assert query.query == "Why was a stent placed and dual antiplatelet therapy started?"
    assert not query.truncated
    assert query.fallback is None


def test_interpret_truncates_long_reply(case_by_id, builder, scripted):
    reply = " ".join(f"w{i}" for i in range(1, 21)) + "?"
    query = interpret_question(case_by_id["101"], builder, scripted({"interpret": reply}))
    assert count_words(query.query) == 15
    assert query.truncated


def test_interpret_falls_back_to_patient_question(case_by_id, builder, scripted):
    case = case_by_id["102"]
    query = interpret_question(case, builder, scripted({"interpret": Blocked(reason="SAFETY")}))
    assert query.fallback.kind == FallbackKind.BLOCKED
    assert query.query == hard_truncate(case.patient_question, 15)
    assert count_words(query.query) == 15


def test_interpret_empty_reply_falls_back(case_by_id, builder, scripted):
    query = interpret_question(case_by_id["101"], builder, scripted({"interpret": '""'}))
    assert query.fallback.kind == FallbackKind.EMPTY_OUTPUT


def test_interpret_modes(case_by_id, builder, scripted):
    backend = scripted({"interpret": "Why?"})
    interpret_question(case_by_id["101"], builder, backend, InterpretMode.FEW_SHOT)
    interpret_question(case_by_id["101"], builder, backend, InterpretMode.ZERO_SHOT)
    few_shot, zero_shot = (call.messages[0].content for call in backend.calls)
    assert "Example 3" in few_shot
    assert "Example 1" not in zero_shot
    assert case_by_id["101"].patient_question in zero_shot


# Evidence scoring and filtering

def _scores(values):
    return [SentenceScore(index=i, score=s) for i, s in enumerate(values, start=1)]


def _expected_selection(values):
    strict = [i for i, s in enumerate(values, start=1) if s >= 4]
    if strict:
        return strict, EvidenceTier.STRICT
    lenient = [i for i, s in enumerate(values, start=1) if s >= 3]
    if lenient:
        return lenient, EvidenceTier.LENIENT
    return list(range(1, min(3, len(values)) + 1)), EvidenceTier.FALLBACK


@pytest.mark.parametrize("note_len", [1, 2, 3, 4, 5])
def test_filter_evidence_exhaustive(note_len):
    for values in itertools.product(range(1, 6), repeat=note_len):
        selection = filter_evidence(_scores(values), note_len, "c")
        indices, tier = _expected_selection(values)
        assert list(selection.indices) == indices, values
        assert selection.tier == tier


def test_filter_evidence_examples():
    selection = filter_evidence(_scores([5, 1, 1, 4, 1]), 5)
    assert selection.indices == (1, 4)
    assert selection.tier == EvidenceTier.STRICT

    selection = filter_evidence(_scores([2, 3, 1, 3]), 4)
    assert selection.indices == (2, 4)
    assert selection.tier == EvidenceTier.LENIENT

    selection = filter_evidence(_scores([1, 2, 1, 2, 1]), 5)
    assert selection.indices == (1, 2, 3)
    assert selection.fallback.kind == FallbackKind.LOW_SCORES


def test_filter_evidence_after_failure():
    selection = filter_evidence(ParseFailure("bad", "c", 2), 2, "c")
    assert selection.indices == (1, 2)
    assert selection.tier == EvidenceTier.FALLBACK
    assert selection.fallback.kind == FallbackKind.PARSE_FAILURE

    with pytest.raises(ValueError):
        filter_evidence([], 0)


def test_select_evidence_parses_reply(case_by_id, builder, scripted):
    backend = scripted({"evidence": json.dumps({"1": 1, "2": 3, "3": 5, "4": 4, "5": 1})})
    selection = select_evidence(case_by_id["101"], "Why was a stent placed?", builder, backend)
    assert selection.indices == (3, 4)
    assert selection.tier == EvidenceTier.STRICT
    assert len(selection.scores) == 5
    assert "[5] His vital signs remained stable overnight." in backend.calls[0].messages[0].content


def test_score_sentences(case_by_id, builder, scripted):
    backend = scripted({"evidence": "1: 2\n2: 2\n3: 5\n4: 4\n5: 1"})
    scores = score_sentences(case_by_id["101"], "Why was a stent placed?", builder, backend)
    assert [(s.index, s.score) for s in scores] == [(1, 2), (2, 2), (3, 5), (4, 4), (5, 1)]

    blocked = Blocked(reason="SAFETY")
    with pytest.raises(BackendFailure) as exc_info:
        score_sentences(case_by_id["101"], "q", builder, scripted({"evidence": blocked}))
    assert exc_info.value.outcome == blocked
    assert exc_info.value.case_id == "101"


@pytest.mark.parametrize(
    "reply,kind",
    [
        ('{"1": 9}', FallbackKind.PARSE_FAILURE),
        (Blocked(reason="SAFETY"), FallbackKind.BLOCKED),
        (TransportError(code=TransportErrorCode.HTTP_STATUS, detail="HTTP 503"), FallbackKind.TRANSPORT),
        (TransportError(code=TransportErrorCode.REPLAY_MISS, detail="no entry"), FallbackKind.REPLAY_MISS),
    ],
)
def test_select_evidence_fallbacks(case_by_id, builder, scripted, reply, kind):
    selection = select_evidence(case_by_id["101"], "q", builder, scripted({"evidence": reply}))
    assert selection.indices == (1, 2, 3)
    assert selection.tier == EvidenceTier.FALLBACK
    assert selection.fallback.kind == kind


def test_resolve_anchor(case_by_id, cases):
    case = case_by_id["101"]
    interpreted = InterpretedQuery(case_id="101", query="Why a stent?", truncated=False)
    assert resolve_anchor(case, AnchorMode.INTERPRETED_QUERY, interpreted) == "Why a stent?"
    assert resolve_anchor(case, AnchorMode.CLINICIAN_QUERY) == case.clinician_question
    assert resolve_anchor(case, AnchorMode.PATIENT_NARRATIVE) == case.patient_narrative
    # blank narrative
    assert resolve_anchor(case_by_id["105"], AnchorMode.PATIENT_NARRATIVE) == case_by_id["105"].patient_question

    with pytest.raises(AnchorUnavailable):
        resolve_anchor(case, AnchorMode.INTERPRETED_QUERY)
    without_clinician = case.model_copy(update={"clinician_question": None})
    with pytest.raises(AnchorUnavailable):
        resolve_anchor(without_clinician, AnchorMode.CLINICIAN_QUERY)


# Answer generation

def _query():
    return InterpretedQuery(case_id="101", query="Why was a stent placed?", truncated=False)


def _evidence():
    return EvidenceSelection(case_id="101", indices=(3, 4), tier=EvidenceTier.STRICT)


def test_finalize_answer_caps_and_closes():
    draft = " ".join(f"w{i}" for i in range(1, 81))
    answer = finalize_answer("c", draft)
    assert count_words(answer.answer) == 75
    assert answer.answer.endswith("w75.")
    assert answer.soft_cut_applied

    short = finalize_answer("c", "The stent keeps the artery open")
    assert short.answer == "The stent keeps the artery open."
    assert not short.soft_cut_applied
    assert short.answer_sentences == ("The stent keeps the artery open.",)


def test_generate_answer(case_by_id, builder, scripted):
    backend = scripted({"generate": "A stent was placed. Aspirin was started."})
    answer = generate_answer(case_by_id["101"], _query(), _evidence(), builder, backend)
    assert answer.answer_sentences == ("A stent was placed.", "Aspirin was started.")
    prompt = backend.calls[0].messages[0].content
    assert "[3] A drug eluting stent was placed in the blocked artery." in prompt
    assert "Why was a stent placed?" in prompt


def test_generate_answer_fallback_uses_evidence(case_by_id, builder, scripted):
    case = case_by_id["101"]
    answer = generate_answer(case, _query(), _evidence(), builder, scripted({"generate": Blocked(reason="SAFETY")}))
    assert answer.fallback.kind == FallbackKind.BLOCKED
    assert answer.answer == " ".join(case.sentences([3, 4]))
    assert len(answer.answer_sentences) == 2


# Alignment

ANSWER = ["A drug eluting stent was placed.", "Aspirin and clopidogrel were started."]


def test_align_answer(case_by_id, builder, scripted):
    reply = '[{"answer_sentence": 1, "evidence": [3]}, {"answer_sentence": 2, "evidence": [4, 3]}]'
    alignment = align_answer(case_by_id["101"], ANSWER, builder, scripted({"align": reply}), [3, 4])
    assert [link.pairs() for link in alignment.links] == [[(1, 3)], [(2, 3), (2, 4)]]
    assert alignment.fallback is None


def test_align_reprompts_once(case_by_id, builder, scripted):
    backend = scripted({"align": ["I think sentence three.", '[{"answer_sentence": 1, "evidence": [3]}]']})
    alignment = align_answer(case_by_id["101"], ANSWER, builder, backend, [3, 4])
    assert alignment.fallback is None
    calls = backend.calls_for("align")
    assert len(calls) == 2
    assert len(calls[1].messages) == 3
    assert calls[1].messages[1].content == "I think sentence three."


def test_align_falls_back_after_second_failure(case_by_id, builder, scripted):
    backend = scripted({"align": "still not json"})
    alignment = align_answer(case_by_id["101"], ANSWER, builder, backend, [4, 3])
    assert len(backend.calls_for("align")) == 2
    assert alignment.fallback.kind == FallbackKind.PARSE_FAILURE
    assert [link.evidence for link in alignment.links] == [(3, 4), (3, 4)]


def test_align_blocked_is_not_reprompted(case_by_id, builder, scripted):
    backend = scripted({"align": Blocked(reason="SAFETY")})
    alignment = align_answer(case_by_id["101"], ANSWER, builder, backend, [3])
    assert len(backend.calls) == 1
    assert alignment.fallback.kind == FallbackKind.BLOCKED


def test_align_needs_sentences(case_by_id, builder, scripted):
    with pytest.raises(ValueError):
        align_answer(case_by_id["101"], [], builder, scripted({}), [1])

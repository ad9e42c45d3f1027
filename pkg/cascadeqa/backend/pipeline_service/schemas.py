from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from common.exceptions import BackendFailure, ParseFailure
from common.schemas import FrozenModel, Stage
from corpus_service.schemas import AlignmentLink, EvidenceTier
from llm_service.schemas import Blocked, ChatOutcome, TransportError, TransportErrorCode
from text_service import ANSWER_POLICY, INTERPRET_POLICY, count_words, ends_sentence


class AnchorMode(str, Enum):
    """Text that drives evidence scoring"""

    PATIENT_NARRATIVE = "patient-narrative"
    CLINICIAN_QUERY = "clinician-query"
    INTERPRETED_QUERY = "interpreted-query"


class InterpretMode(str, Enum):
    FEW_SHOT = "few-shot"
    ZERO_SHOT = "zero-shot"


class FallbackKind(str, Enum):
    BLOCKED = "blocked"
    TRANSPORT = "transport"
    REPLAY_MISS = "replay_miss"
    PARSE_FAILURE = "parse_failure"
    LOW_SCORES = "low_scores"
    EMPTY_OUTPUT = "empty_output"


class StageFallback(FrozenModel):
    kind: FallbackKind
    detail: str

    @classmethod
    def from_outcome(cls, outcome: ChatOutcome) -> "StageFallback":
        if isinstance(outcome, Blocked):
            return cls(kind=FallbackKind.BLOCKED, detail=outcome.reason)
        if isinstance(outcome, TransportError) and outcome.code == TransportErrorCode.REPLAY_MISS:
            return cls(kind=FallbackKind.REPLAY_MISS, detail=outcome.detail)
        return cls(kind=FallbackKind.TRANSPORT, detail=outcome.describe())

    @classmethod
    def from_error(cls, error: Exception) -> "StageFallback":
        if isinstance(error, BackendFailure):
            return cls.from_outcome(error.outcome)
        if isinstance(error, ParseFailure):
            return cls(kind=FallbackKind.PARSE_FAILURE, detail=str(error))
        return cls(kind=FallbackKind.TRANSPORT, detail=str(error))


class InterpretedQuery(FrozenModel):
    case_id: str
    query: str
    truncated: bool
    fallback: Optional[StageFallback] = None

    @field_validator("query")
    @classmethod
    def _within_cap(cls, value: str) -> str:
        words = count_words(value)
        if not 0 < words <= INTERPRET_POLICY.max_words:
            raise ValueError(f"query must have 1..{INTERPRET_POLICY.max_words} words, has {words}")
        return value

    def submission_entry(self) -> Dict[str, Any]:
        return {"case_id": self.case_id, "query": self.query}


class SentenceScore(FrozenModel):
    index: int = Field(ge=1)
    score: int = Field(ge=1, le=5)


class EvidenceSelection(FrozenModel):
    case_id: str
    indices: Tuple[int, ...]
    tier: EvidenceTier
    scores: Tuple[SentenceScore, ...] = ()
    fallback: Optional[StageFallback] = None

    @model_validator(mode="after")
    def _ordered_non_empty(self) -> "EvidenceSelection":
        if not self.indices:
            raise ValueError("evidence selection is empty")
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("evidence indices must be unique and ascending")
        return self

    def submission_entry(self) -> Dict[str, Any]:
        return {"case_id": self.case_id, "evidence": list(self.indices), "tier": self.tier.value}


class GeneratedAnswer(FrozenModel):
    case_id: str
    answer: str
    answer_sentences: Tuple[str, ...]
    soft_cut_applied: bool
    fallback: Optional[StageFallback] = None

    @field_validator("answer")
    @classmethod
    def _capped_and_closed(cls, value: str) -> str:
        words = count_words(value)
        if not 0 < words <= ANSWER_POLICY.max_words:
            raise ValueError(f"answer must have 1..{ANSWER_POLICY.max_words} words, has {words}")
        if not ends_sentence(value):
            raise ValueError("answer must end in sentence-final punctuation")
        return value

    def submission_entry(self) -> Dict[str, Any]:
        return {"case_id": self.case_id, "answer": self.answer}


class AlignmentMap(FrozenModel):
    case_id: str
    links: Tuple[AlignmentLink, ...]
    warnings: Tuple[str, ...] = ()
    fallback: Optional[StageFallback] = None

    @field_validator("links")
    @classmethod
    def _unique_non_empty(cls, value: Tuple[AlignmentLink, ...]) -> Tuple[AlignmentLink, ...]:
        ids = [link.answer_sentence for link in value]
        if len(ids) != len(set(ids)):
            raise ValueError("answer_sentence ids must be unique")
        if any(not link.evidence for link in value):
            raise ValueError("links must carry evidence")
        return value

    def validate_against(self, answer_count: int, note_len: int) -> "AlignmentMap":
        for link in self.links:
            if link.answer_sentence > answer_count:
                raise ValueError(f"answer_sentence {link.answer_sentence} > {answer_count}")
            if any(index > note_len for index in link.evidence):
                raise ValueError(f"evidence outside 1..{note_len}")
        return self

    def submission_entry(self) -> Dict[str, Any]:
        return {
            "case_id": self.case_id,
            "alignment": [{"answer_sentence": link.answer_sentence, "evidence": list(link.evidence)} for link in self.links],
        }


class StageEvent(FrozenModel):
    case_id: str
    stage: int
    event: str
    detail: str = ""


class CaseResult(BaseModel):
    """Everything one case produced; stages that did not run stay None"""

    case_id: str
    query: Optional[InterpretedQuery] = None
    evidence: Optional[EvidenceSelection] = None
    answer: Optional[GeneratedAnswer] = None
    alignment: Optional[AlignmentMap] = None
    events: List[StageEvent] = Field(default_factory=list)
    failed: bool = False
    error: Optional[str] = None

    def emit(self, stage: Stage, event: str, detail: str = "") -> None:
        self.events.append(StageEvent(case_id=self.case_id, stage=int(stage), event=event, detail=detail))


class RunSummary(BaseModel):
    cases: int
    failed_cases: List[str] = Field(default_factory=list)
    stages: List[int] = Field(default_factory=list)
    tiers: Dict[str, int] = Field(default_factory=dict)
    fallbacks: Dict[str, int] = Field(default_factory=dict)
    truncated_queries: int = 0
    soft_cut_answers: int = 0
    missing_transcript_keys: List[str] = Field(default_factory=list)
    files: Dict[str, str] = Field(default_factory=dict)


class RunReport(BaseModel):
    events: List[StageEvent]
    summary: RunSummary
    results: List[CaseResult] = Field(default_factory=list, exclude=True)

    @property
    def ok(self) -> bool:
        return not self.summary.failed_cases

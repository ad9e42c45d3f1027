import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Type, Union
import logging

from pydantic import BaseModel, Field, ValidationError, field_validator

from common.exceptions import MalformedRecord, MissingFile, SchemaViolation, SubmissionIOError
from common.schemas import FrozenModel, Stage
from common.storage import FileStorage
from common.utils import dump_pretty_json
from corpus_service.schemas import AlignmentLink, CaseRecord, EvidenceTier
from text_service import ANSWER_POLICY, INTERPRET_POLICY, count_words, segment_sentences

logger = logging.getLogger(__name__)

SUBMISSION_FILENAMES = {
    Stage.INTERPRET: "stage1_interpretation.json",
    Stage.EVIDENCE: "stage2_evidence.json",
    Stage.GENERATE: "stage3_answers.json",
    Stage.ALIGN: "stage4_alignment.json",
}


class InterpretationEntry(FrozenModel):
    case_id: str = Field(min_length=1)
    query: str

    @field_validator("query")
    @classmethod
    def _within_cap(cls, value: str) -> str:
        words = count_words(value)
        if words == 0:
            raise ValueError("query is empty")
        if words > INTERPRET_POLICY.max_words:
            raise ValueError(f"query has {words} words (max {INTERPRET_POLICY.max_words})")
        return value


class EvidenceEntry(FrozenModel):
    case_id: str = Field(min_length=1)
    evidence: Tuple[int, ...]
    tier: EvidenceTier

    @field_validator("evidence")
    @classmethod
    def _positive_unique(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(index < 1 for index in value):
            raise ValueError("evidence ids must be positive")
        if len(set(value)) != len(value):
            raise ValueError("evidence ids must be unique")
        return value


class AnswerEntry(FrozenModel):
    case_id: str = Field(min_length=1)
    answer: str

    @field_validator("answer")
    @classmethod
    def _within_cap(cls, value: str) -> str:
        words = count_words(value)
        if words == 0:
            raise ValueError("answer is empty")
        if words > ANSWER_POLICY.max_words:
            raise ValueError(f"answer has {words} words (max {ANSWER_POLICY.max_words})")
        return value


class AlignmentEntry(FrozenModel):
    case_id: str = Field(min_length=1)
    alignment: Tuple[AlignmentLink, ...]

    @field_validator("alignment")
    @classmethod
    def _unique_non_empty(cls, value: Tuple[AlignmentLink, ...]) -> Tuple[AlignmentLink, ...]:
        seen = set()
        for link in value:
            if link.answer_sentence in seen:
                raise ValueError(f"answer_sentence {link.answer_sentence} listed twice")
            if not link.evidence:
                raise ValueError(f"answer_sentence {link.answer_sentence} has no evidence")
            if any(index < 1 for index in link.evidence):
                raise ValueError("evidence ids must be positive")
            seen.add(link.answer_sentence)
        return value


ENTRY_MODELS: Dict[Stage, Type[FrozenModel]] = {
    Stage.INTERPRET: InterpretationEntry,
    Stage.EVIDENCE: EvidenceEntry,
    Stage.GENERATE: AnswerEntry,
    Stage.ALIGN: AlignmentEntry,
}

SubmissionResult = Union[BaseModel, Mapping[str, Any]]


def _coerce(stage: Stage, result: SubmissionResult) -> FrozenModel:
    model = ENTRY_MODELS[stage]
    if isinstance(result, model):
        return result
    data = result.model_dump(mode="json") if isinstance(result, BaseModel) else dict(result)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        case_id = data.get("case_id")
        reasons = "; ".join(item["msg"] for item in e.errors())
        raise SchemaViolation(f"Stage {stage.value} entry {case_id}: {reasons}", stage.value, case_id)


def _check_against_corpus(stage: Stage, entries: Sequence[FrozenModel], corpus: Mapping[str, CaseRecord]) -> None:
    for entry in entries:
        case = corpus.get(entry.case_id)
        if case is None:
            raise SchemaViolation(f"Unknown case_id {entry.case_id}", stage.value, entry.case_id)
        cited: List[int] = []
        if isinstance(entry, EvidenceEntry):
            cited = list(entry.evidence)
        elif isinstance(entry, AlignmentEntry):
            cited = [index for link in entry.alignment for index in link.evidence]
        out_of_range = [index for index in cited if index > case.note_len]
        if out_of_range:
            raise SchemaViolation(
                f"Case {entry.case_id}: evidence {out_of_range} outside 1..{case.note_len}",
                stage.value,
                entry.case_id,
            )


def write_submission(
    stage: Stage,
    results: Iterable[SubmissionResult],
    path: str | Path,
    case_ids: Optional[Set[str]] = None,
) -> str:
    """Validate per-stage results and write them sorted by case_id."""
    stage = Stage(stage)
    entries = [_coerce(stage, result) for result in results]

    seen: Set[str] = set()
    for entry in entries:
        if entry.case_id in seen:
            raise SchemaViolation(f"Duplicate entry for {entry.case_id}", stage.value, entry.case_id)
        if case_ids is not None and entry.case_id not in case_ids:
            raise SchemaViolation(f"Unknown case_id {entry.case_id}", stage.value, entry.case_id)
        seen.add(entry.case_id)

    entries.sort(key=lambda entry: entry.case_id)
    payload = [entry.model_dump(mode="json") for entry in entries]

    path = Path(path)
    storage = FileStorage(path.parent)
    return storage.save_text(dump_pretty_json(payload), path.name)


def read_submission(stage: Stage, path: str | Path) -> List[FrozenModel]:
    stage = Stage(stage)
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise SubmissionIOError(f"Failed to read {path}: {e}", stage.value)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: invalid JSON ({e})", stage.value)
    if not isinstance(raw, list):
        raise SchemaViolation(f"{path}: expected a JSON array of entries", stage.value)
    return [_coerce(stage, item) for item in raw]


def validate_submission(
    stage: Stage,
    path: str | Path,
    corpus: Optional[Sequence[CaseRecord]] = None,
) -> List[FrozenModel]:
    """Schema-check a submission file; with a corpus also check case ids and index ranges."""
    stage = Stage(stage)
    entries = read_submission(stage, path)
    seen: Set[str] = set()
    for entry in entries:
        if entry.case_id in seen:
            raise SchemaViolation(f"Duplicate entry for {entry.case_id}", stage.value, entry.case_id)
        seen.add(entry.case_id)
    if corpus is not None:
        _check_against_corpus(stage, entries, {case.case_id: case for case in corpus})
    logger.info(f"{path}: {len(entries)} valid stage {stage.value} entries")
    return entries


def load_answers(path: str | Path) -> Dict[str, List[str]]:
    """
    Read externally supplied answers for the alignment stage.

    Accepts pre-segmented entries ({case_id, answer_sentences}) or a stage-3 file
    ({case_id, answer}), which is segmented here.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MalformedRecord(None, f"{path}: invalid JSON ({e})")
    if not isinstance(raw, list):
        raise MalformedRecord(None, f"{path}: expected a JSON array of answers")

    answers: Dict[str, List[str]] = {}
    for item in raw:
        case_id = item.get("case_id") if isinstance(item, dict) else None
        if not case_id:
            raise MalformedRecord(None, f"{path}: answer entry without case_id")
        if "answer_sentences" in item:
            sentences = [str(s).strip() for s in item["answer_sentences"] if str(s).strip()]
        elif "answer" in item:
            sentences = segment_sentences(str(item["answer"]))
        else:
            raise MalformedRecord(case_id, "answer entry needs answer_sentences or answer")
        if not sentences:
            raise MalformedRecord(case_id, "answer has no sentences")
        answers[case_id] = sentences
    return answers

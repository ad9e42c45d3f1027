from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from pydantic import Field, field_validator, model_validator

from common.exceptions import DuplicateLabel, IndexOutOfRange, MalformedRecord
from common.schemas import FrozenModel


class EvidenceTier(str, Enum):
    STRICT = "strict"
    LENIENT = "lenient"
    FALLBACK = "fallback"


class NoteSentence(FrozenModel):
    index: int = Field(ge=1)
    text: str

    @field_validator("text")
    @classmethod
    def _single_line(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("sentence text is empty")
        if "\n" in value or "\r" in value:
            raise ValueError("sentence text contains a newline")
        return value


class AlignmentLink(FrozenModel):
    answer_sentence: int = Field(ge=1)
    evidence: Tuple[int, ...]

    @field_validator("evidence", mode="before")
    @classmethod
    def _sorted_unique(cls, value: Iterable[int]) -> Tuple[int, ...]:
        return tuple(sorted(set(value)))

    def pairs(self) -> List[Tuple[int, int]]:
        return [(self.answer_sentence, index) for index in self.evidence]


class GoldAnnotation(FrozenModel):
    essential: FrozenSet[int] = frozenset()
    supplementary: FrozenSet[int] = frozenset()
    reference_query: Optional[str] = None
    reference_answer: Optional[str] = None
    reference_alignment: Optional[Tuple[AlignmentLink, ...]] = None

    @property
    def relevant_lenient(self) -> FrozenSet[int]:
        return self.essential | self.supplementary


class CaseRecord(FrozenModel):
    case_id: str = Field(min_length=1)
    patient_narrative: str
    patient_question: str
    clinician_question: Optional[str] = None
    note: Tuple[NoteSentence, ...]
    gold: Optional[GoldAnnotation] = None

    @field_validator("patient_question")
    @classmethod
    def _question_present(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("patient_question is empty")
        return value

    @model_validator(mode="after")
    def _check_invariants(self) -> "CaseRecord":
        if not self.note:
            raise MalformedRecord(self.case_id, "note is empty")
        indices = [sentence.index for sentence in self.note]
        if indices != list(range(1, len(indices) + 1)):
            raise MalformedRecord(self.case_id, f"note indices are not contiguous 1..{len(indices)}")

        if self.gold is not None:
            overlap = self.gold.essential & self.gold.supplementary
            if overlap:
                raise DuplicateLabel(self.case_id, overlap)
            cited = set(self.gold.essential | self.gold.supplementary)
            for link in self.gold.reference_alignment or ():
                cited.update(link.evidence)
            for index in sorted(cited):
                if not 1 <= index <= len(self.note):
                    raise IndexOutOfRange(self.case_id, index, len(self.note))
        return self

    @property
    def note_len(self) -> int:
        return len(self.note)

    def sentence(self, index: int) -> str:
        return self.note[index - 1].text

    def sentences(self, indices: Iterable[int]) -> List[str]:
        return [self.sentence(index) for index in indices]

    def note_text(self) -> str:
        return " ".join(sentence.text for sentence in self.note)


class FewShotExample(FrozenModel):
    input: str
    output: str


class PromptAssets(FrozenModel):
    template_id: str
    system_persona: str
    template: str
    few_shot_examples: Tuple[FewShotExample, ...] = ()


def gold_by_case(cases: Iterable[CaseRecord]) -> Dict[str, GoldAnnotation]:
    return {case.case_id: case.gold for case in cases if case.gold is not None}

from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict


class FrozenModel(BaseModel):
    """Immutable value object; safe to share between worker threads."""

    model_config = ConfigDict(frozen=True, extra="forbid")


class Stage(int, Enum):
    INTERPRET = 1
    EVIDENCE = 2
    GENERATE = 3
    ALIGN = 4

    @property
    def label(self) -> str:
        return STAGE_LABELS[self]

    @classmethod
    def parse_list(cls, value: str) -> List["Stage"]:
        """Parse "all" or a comma-separated list such as "1,2" or "evidence,align"."""
        value = value.strip().lower()
        if value == "all":
            return list(cls)
        stages = set()
        for part in value.split(","):
            part = part.strip()
            if not part:
                continue
            if part.isdigit():
                stages.add(cls(int(part)))
            else:
                stages.add(cls[part.upper()])
        return sorted(stages)


STAGE_LABELS = {
    Stage.INTERPRET: "Question Interpretation",
    Stage.EVIDENCE: "Evidence Scoring",
    Stage.GENERATE: "Answer Generation",
    Stage.ALIGN: "Alignment",
}

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from common.schemas import FrozenModel


class EvidenceMode(str, Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class AverageLevel(str, Enum):
    MICRO = "micro"
    MACRO = "macro"


class EvidenceEvalConfig(FrozenModel):
    mode: EvidenceMode = EvidenceMode.STRICT
    level: AverageLevel = AverageLevel.MICRO

    @property
    def label(self) -> str:
        return f"{self.mode.value.capitalize()} {self.level.value.capitalize()}"


class PrfScores(FrozenModel):
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    f1: float = Field(ge=0, le=1)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PrfScores":
        """
        Nothing predicted and nothing relevant scores 1 across the board;
        otherwise an empty denominator gives 0.
        """
        if tp == fp == fn == 0:
            return cls(precision=1.0, recall=1.0, f1=1.0)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return cls(precision=precision, recall=recall, f1=harmonic_f1(precision, recall))

    def scaled(self) -> Dict[str, float]:
        """x100, one decimal"""
        return {
            "precision": round(self.precision * 100, 1),
            "recall": round(self.recall * 100, 1),
            "f1": round(self.f1 * 100, 1),
        }


def harmonic_f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


class MetricReport(BaseModel):
    stage: int
    per_case: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    aggregate: Dict[str, float] = Field(default_factory=dict)
    sidecar: Dict[str, float] = Field(default_factory=dict)
    constituents: List[str] = Field(default_factory=list)
    overall: Optional[float] = None
    primary_metric: str

    @model_validator(mode="after")
    def _overall_needs_constituents(self) -> "MetricReport":
        if self.overall is not None:
            known = set(self.aggregate) | set(self.sidecar)
            missing = [name for name in self.constituents if name not in known]
            if not self.constituents or missing:
                raise ValueError(f"overall given but constituents missing: {missing}")
        return self

    def value(self, name: str) -> Optional[float]:
        if name == "Overall":
            return self.overall
        if name in self.aggregate:
            return self.aggregate[name]
        return self.sidecar.get(name)

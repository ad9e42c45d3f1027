import json
from pathlib import Path
from typing import Any, Callable, Dict, List
import logging

from pydantic import ValidationError

from common.exceptions import CorpusError, DuplicateCaseId, MalformedRecord, MissingFile
from corpus_service.schemas import CaseRecord

logger = logging.getLogger(__name__)

# A converter turns the raw decoded file into canonical case dictionaries
Converter = Callable[[Any], List[Dict[str, Any]]]


def _canonical(raw: Any) -> List[Dict[str, Any]]:
    if not isinstance(raw, list):
        raise MalformedRecord(None, "corpus file must contain a JSON array of cases")
    return raw


CORPUS_CONVERTERS: Dict[str, Converter] = {"canonical": _canonical}


def register_converter(name: str, converter: Converter) -> None:
    """Hook point for official distribution formats."""
    CORPUS_CONVERTERS[name] = converter


def _describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"])
        parts.append(f"{location}: {item['msg']}" if location else item["msg"])
    return "; ".join(parts)


def parse_case(raw: Any) -> CaseRecord:
    if not isinstance(raw, dict):
        raise MalformedRecord(None, f"expected an object, got {type(raw).__name__}")
    case_id = raw.get("case_id") if isinstance(raw.get("case_id"), str) else None
    try:
        return CaseRecord.model_validate(raw)
    except ValidationError as e:
        raise MalformedRecord(case_id, _describe_validation_error(e))


def load_corpus(path: str | Path, fmt: str = "canonical") -> List[CaseRecord]:
    """Load and validate every case of a corpus file, preserving file order."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    if fmt not in CORPUS_CONVERTERS:
        raise CorpusError(f"Unknown corpus format: {fmt}")

    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedRecord(None, f"{path}: invalid JSON ({e})")

    cases: List[CaseRecord] = []
    seen = set()
    for record in CORPUS_CONVERTERS[fmt](raw):
        case = parse_case(record)
        if case.case_id in seen:
            raise DuplicateCaseId(case.case_id)
        seen.add(case.case_id)
        cases.append(case)

    logger.info(f"Loaded {len(cases)} cases from {path}")
    return cases

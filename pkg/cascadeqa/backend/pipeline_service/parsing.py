"""
Parsers for model output: score blocks (stage 2) and alignment arrays (stage 4).
"""
import json
import re
from typing import Any, Dict, List, Optional, Set, Tuple
import logging

from common.exceptions import ParseFailure
from common.schemas import Stage
from corpus_service.schemas import AlignmentLink
from pipeline_service.schemas import SentenceScore
from text_service import normalize_whitespace

logger = logging.getLogger(__name__)

_FENCE = re.compile(r"^```[a-zA-Z]*\s*\n?(.*?)\n?```\s*$", re.DOTALL)
_SCORE_LINE = re.compile(r"^\s*(?:sentence\s*)?\[?(\d+)\]?\s*[:=\-]\s*(\d+)\s*$", re.IGNORECASE)
_QUOTES = "\"'`“”‘’"


def strip_code_fences(text: str) -> str:
    text = text.strip()
    match = _FENCE.match(text)
    return match.group(1).strip() if match else text


def extract_json(text: str) -> Any:
    """Decode the JSON value in a reply, tolerating fences and surrounding prose."""
    body = strip_code_fences(text)
    try:
        return json.loads(body)
    except json.JSONDecodeError:
        pass

    starts = [pos for pos in (body.find("{"), body.find("[")) if pos >= 0]
    if starts:
        start = min(starts)
        closer = "}" if body[start] == "{" else "]"
        end = body.rfind(closer)
        if end > start:
            try:
                return json.loads(body[start : end + 1])
            except json.JSONDecodeError:
                pass
    raise ValueError("no JSON value found")


def clean_model_text(text: str, first_line_only: bool = False) -> str:
    """Fences, surrounding quotes and whitespace runs removed"""
    body = strip_code_fences(text)
    if first_line_only:
        lines = [line for line in body.splitlines() if line.strip()]
        body = lines[0] if lines else ""
    body = normalize_whitespace(body)
    while len(body) >= 2 and body[0] in _QUOTES and body[-1] in _QUOTES:
        body = body[1:-1].strip()
    return body


def _as_int(value: Any) -> Optional[int]:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            return None
    return None


def _score_pairs_from_json(data: Any) -> Optional[List[Tuple[Any, Any]]]:
    if isinstance(data, dict):
        # {"scores": {...}} or {"1": 5, ...}
        if len(data) == 1 and isinstance(next(iter(data.values())), (dict, list)):
            return _score_pairs_from_json(next(iter(data.values())))
        return list(data.items())
    if isinstance(data, list):
        pairs = []
        for item in data:
            if isinstance(item, dict) and "index" in item and "score" in item:
                pairs.append((item["index"], item["score"]))
            elif isinstance(item, (list, tuple)) and len(item) == 2:
                pairs.append((item[0], item[1]))
            else:
                return None
        return pairs
    return None


def _score_pairs_from_lines(text: str) -> List[Tuple[Any, Any]]:
    pairs = []
    for line in strip_code_fences(text).splitlines():
        match = _SCORE_LINE.match(line)
        if match:
            pairs.append((match.group(1), match.group(2)))
    return pairs


def parse_scores(text: str, note_len: int, case_id: Optional[str] = None) -> List[SentenceScore]:
    """
    Exactly one 1..5 score per note sentence, from a JSON object/array or,
    failing that, from "index: score" lines.
    """
    pairs: Optional[List[Tuple[Any, Any]]] = None
    try:
        pairs = _score_pairs_from_json(extract_json(text))
    except ValueError:
        pairs = None
    if pairs is None:
        pairs = _score_pairs_from_lines(text)
    if not pairs:
        raise ParseFailure("no scores found in model output", case_id, Stage.EVIDENCE.value)

    scores: Dict[int, int] = {}
    for raw_index, raw_score in pairs:
        index, score = _as_int(raw_index), _as_int(raw_score)
        if index is None or score is None:
            raise ParseFailure(f"non-integer entry {raw_index!r}: {raw_score!r}", case_id, Stage.EVIDENCE.value)
        if not 1 <= index <= note_len:
            raise ParseFailure(f"sentence {index} outside 1..{note_len}", case_id, Stage.EVIDENCE.value)
        if not 1 <= score <= 5:
            raise ParseFailure(f"score {score} for sentence {index} outside 1..5", case_id, Stage.EVIDENCE.value)
        if index in scores:
            raise ParseFailure(f"sentence {index} scored twice", case_id, Stage.EVIDENCE.value)
        scores[index] = score

    missing = sorted(set(range(1, note_len + 1)) - set(scores))
    if missing:
        raise ParseFailure(f"sentences {missing} have no score", case_id, Stage.EVIDENCE.value)
    return [SentenceScore(index=index, score=scores[index]) for index in sorted(scores)]


def _link_items(data: Any) -> List[Tuple[Any, Any]]:
    """Accepts [{answer_sentence, evidence}], [{"1": [..]}] or {"1": [..]}"""
    if isinstance(data, dict):
        return list(data.items())
    if not isinstance(data, list):
        raise ValueError("expected a JSON array or object")
    items: List[Tuple[Any, Any]] = []
    for item in data:
        if not isinstance(item, dict):
            raise ValueError(f"unexpected entry {item!r}")
        if "answer_sentence" in item:
            items.append((item["answer_sentence"], item.get("evidence", [])))
        else:
            items.extend(item.items())
    return items


def parse_alignment(
    text: str,
    answer_count: int,
    note_len: int,
    case_id: Optional[str] = None,
) -> Tuple[List[AlignmentLink], List[str]]:
    """
    Validated links plus warnings for anything dropped.

    Out-of-range ids are dropped, duplicate answer sentences are merged and
    sentences left without evidence are omitted. Structural problems raise
    ParseFailure.
    """
    try:
        items = _link_items(extract_json(text))
    except ValueError as e:
        raise ParseFailure(f"alignment output is not usable JSON ({e})", case_id, Stage.ALIGN.value)

    merged: Dict[int, Set[int]] = {}
    warnings: List[str] = []
    for raw_sentence, raw_evidence in items:
        sentence = _as_int(raw_sentence)
        if sentence is None:
            raise ParseFailure(f"answer_sentence {raw_sentence!r} is not an integer", case_id, Stage.ALIGN.value)
        if isinstance(raw_evidence, (int, str)) and not isinstance(raw_evidence, bool):
            raw_evidence = [raw_evidence]
        if not isinstance(raw_evidence, list):
            raise ParseFailure(f"evidence for sentence {sentence} is not a list", case_id, Stage.ALIGN.value)
        if not 1 <= sentence <= answer_count:
            warnings.append(f"answer sentence {sentence} outside 1..{answer_count} dropped")
            continue

        for raw_index in raw_evidence:
            index = _as_int(raw_index)
            if index is None:
                raise ParseFailure(f"evidence id {raw_index!r} is not an integer", case_id, Stage.ALIGN.value)
            if not 1 <= index <= note_len:
                warnings.append(f"evidence {index} for answer sentence {sentence} outside 1..{note_len} dropped")
                continue
            merged.setdefault(sentence, set()).add(index)

    links = [
        AlignmentLink(answer_sentence=sentence, evidence=tuple(sorted(evidence)))
        for sentence, evidence in sorted(merged.items())
        if evidence
    ]
    for warning in warnings:
        logger.warning(f"Case {case_id}: {warning}")
    return links, warnings

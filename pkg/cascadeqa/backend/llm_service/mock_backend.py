import json
import re
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Set
import logging

from llm_service.schemas import ChatOutcome, ChatRequest, Text, TransportError, TransportErrorCode

logger = logging.getLogger(__name__)

STOPWORDS: FrozenSet[str] = frozenset(
    """
    a an and are as at be been but by can did do does for from had has have he her his how i
    if in into is it its me my no not of on or our she so that the their them then there these
    they this to was we were what when where which who why will with would you your
    """.split()
)

MIN_SHARED_CONTENT_WORDS = 2

_WORD = re.compile(r"[a-z0-9]+")
_TRAILING_PUNCT = ".!?;:,\"')]"


def content_words(text: str) -> Set[str]:
    return {word for word in _WORD.findall(text.lower()) if word not in STOPWORDS}


def _normalize_sentence(text: str) -> str:
    return " ".join(text.lower().split()).rstrip(_TRAILING_PUNCT)


class MockBackend:
    """
    Rule-based stand-in for the model, keyed on request.task and request.metadata.

    interpret: echoes the patient question
    evidence:  score 5 when a sentence shares at least two content words with the
               query, else 1 (or 5 exactly on the oracle indices for that case)
    generate:  concatenates the evidence sentences
    align:     links each answer sentence to note sentences with the same text
    """

    def __init__(self, oracle: Optional[Mapping[str, Iterable[int]]] = None):
        self.oracle = {case_id: frozenset(indices) for case_id, indices in (oracle or {}).items()}
        self._rules: Dict[str, Callable[[Dict[str, Any]], str]] = {
            "interpret": self._interpret,
            "evidence": self._score,
            "generate": self._generate,
            "align": self._align,
        }

    def complete(self, request: ChatRequest) -> ChatOutcome:
        rule = self._rules.get(request.task or "")
        if rule is None:
            return TransportError(code=TransportErrorCode.BAD_RESPONSE, detail=f"mock has no rule for task {request.task!r}")
        text = rule(request.metadata)
        if not text.strip():
            return TransportError(code=TransportErrorCode.EMPTY, detail=f"mock produced no text for {request.task}")
        return Text(text=text)

    def _interpret(self, metadata: Dict[str, Any]) -> str:
        return " ".join(str(metadata.get("question", "")).split())

    def sentence_scores(self, case_id: Optional[str], query: str, sentences: List[List[Any]]) -> Dict[int, int]:
        oracle = self.oracle.get(case_id) if case_id is not None else None
        if oracle is not None:
            return {int(index): 5 if int(index) in oracle else 1 for index, _ in sentences}
        query_words = content_words(query)
        return {
            int(index): 5 if len(query_words & content_words(text)) >= MIN_SHARED_CONTENT_WORDS else 1
            for index, text in sentences
        }

    def _score(self, metadata: Dict[str, Any]) -> str:
        scores = self.sentence_scores(metadata.get("case_id"), metadata.get("query", ""), metadata.get("sentences", []))
        # One score per line
        return json.dumps({str(index): score for index, score in scores.items()}, indent=0)

    def _generate(self, metadata: Dict[str, Any]) -> str:
        return " ".join(str(sentence) for sentence in metadata.get("evidence_sentences", []))

    def _align(self, metadata: Dict[str, Any]) -> str:
        by_text: Dict[str, List[int]] = {}
        for index, text in metadata.get("sentences", []):
            by_text.setdefault(_normalize_sentence(str(text)), []).append(int(index))

        links = []
        for position, sentence in enumerate(metadata.get("answer_sentences", []), start=1):
            matches = by_text.get(_normalize_sentence(str(sentence)))
            if matches:
                links.append({"answer_sentence": position, "evidence": matches})
        return json.dumps(links)

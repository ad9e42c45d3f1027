import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional
import logging

from config.settings import settings

logger = logging.getLogger(__name__)

SENTENCE_FINAL = (".", "!", "?")
CLOSING_CHARS = "\"')]"
HARD_CUT_STRIP = ",;:"


@dataclass(frozen=True)
class TruncationPolicy:
    max_words: int
    soft_cut_ratio: float = 1.0
    append_period_on_hard_cut: bool = False

    def __post_init__(self):
        if self.max_words < 1:
            raise ValueError(f"max_words must be positive, got {self.max_words}")
        if not 0 < self.soft_cut_ratio <= 1:
            raise ValueError(f"soft_cut_ratio must be in (0, 1], got {self.soft_cut_ratio}")

    @property
    def min_kept_words(self) -> int:
        """ceil(ratio * max_words), exact for decimal ratios such as 0.6."""
        return math.ceil(Fraction(str(self.soft_cut_ratio)) * self.max_words)


# Stage 1 is a plain hard cut; stage 3 prefers a sentence boundary
INTERPRET_POLICY = TruncationPolicy(max_words=15)
ANSWER_POLICY = TruncationPolicy(max_words=75, soft_cut_ratio=0.60, append_period_on_hard_cut=True)


def count_words(text: str) -> int:
    """Number of maximal whitespace-delimited tokens."""
    return len(text.split())


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def hard_truncate(text: str, max_words: int) -> str:
    if max_words < 1:
        raise ValueError(f"max_words must be positive, got {max_words}")
    return " ".join(text.split()[:max_words])


def ends_sentence(word: str) -> bool:
    """True when the text ends in ., ! or ?, ignoring closing quotes and brackets."""
    return word.rstrip(CLOSING_CHARS).endswith(SENTENCE_FINAL)


def soft_cut(text: str, policy: TruncationPolicy) -> str:
    """
    Enforce policy.max_words, preferring to stop at the last period inside the cap.

    Text under the cap is returned unchanged. Otherwise the cut lands on the last
    word ending in '.' provided that keeps at least policy.min_kept_words words;
    failing that the full prefix is kept and, if the policy says so, closed with '.'.
    """
    words = text.split()
    if len(words) <= policy.max_words:
        return text

    prefix = words[: policy.max_words]
    for position in range(len(prefix) - 1, -1, -1):
        if prefix[position].endswith("."):
            if position + 1 >= policy.min_kept_words:
                return " ".join(prefix[: position + 1])
            break

    cut = " ".join(prefix)
    if policy.append_period_on_hard_cut and not ends_sentence(cut):
        cut = cut.rstrip(HARD_CUT_STRIP).rstrip() + "."
    return cut


def ensure_terminal_punctuation(text: str) -> str:
    text = text.rstrip()
    if text and not ends_sentence(text):
        text = text.rstrip(HARD_CUT_STRIP).rstrip() + "."
    return text


@lru_cache(maxsize=None)
def _read_abbreviations(path: str) -> FrozenSet[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip().lower() for line in lines if line.strip())


def load_abbreviations(path: Optional[Path] = None) -> FrozenSet[str]:
    return _read_abbreviations(str(path or settings.ABBREVIATIONS_PATH))


def segment_sentences(text: str, abbreviations: Optional[Iterable[str]] = None) -> List[str]:
    """
    Split on '.', '!' or '?' at the end of a whitespace token, unless the token is a
    guarded abbreviation. Joining the result with single spaces gives back the
    whitespace-normalised input.
    """
    guard = load_abbreviations() if abbreviations is None else {a.lower() for a in abbreviations}

    sentences: List[str] = []
    current: List[str] = []
    for word in text.split():
        current.append(word)
        if ends_sentence(word) and word.lstrip("(\"'").lower() not in guard:
            sentences.append(" ".join(current))
            current = []
    if current:
        sentences.append(" ".join(current))
    return sentences

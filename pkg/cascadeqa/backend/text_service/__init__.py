# Deterministic text mechanics shared by the pipeline and the metrics
from .textproc import (
    TruncationPolicy,
    INTERPRET_POLICY,
    ANSWER_POLICY,
    count_words,
    normalize_whitespace,
    hard_truncate,
    soft_cut,
    ensure_terminal_punctuation,
    ends_sentence,
    segment_sentences,
    load_abbreviations,
)

__all__ = [
    "TruncationPolicy",
    "INTERPRET_POLICY",
    "ANSWER_POLICY",
    "count_words",
    "normalize_whitespace",
    "hard_truncate",
    "soft_cut",
    "ensure_terminal_punctuation",
    "ends_sentence",
    "segment_sentences",
    "load_abbreviations",
]

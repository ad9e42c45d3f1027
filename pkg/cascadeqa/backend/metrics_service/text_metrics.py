"""
Corpus-level text metrics for generated queries and answers: BLEU, ROUGE-Lsum and SARI.
"""
from collections import Counter
from functools import lru_cache
from typing import List, Sequence, Tuple
import logging

from rouge_score import rouge_scorer
from sacrebleu.metrics import BLEU

from common.exceptions import LengthMismatch, MetricError
from text_service import segment_sentences

logger = logging.getLogger(__name__)

SARI_MAX_ORDER = 4


def _check_lengths(what: str, left: Sequence, right: Sequence) -> None:
    if len(left) != len(right):
        raise LengthMismatch(what, len(left), len(right))
    if not left:
        raise MetricError(f"No {what} to score")


@lru_cache(maxsize=1)
def _bleu_metric() -> BLEU:
    # add-k with k=1 only touches the n>1 precisions
    return BLEU(tokenize="13a", smooth_method="add-k", smooth_value=1)


def bleu(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Corpus BLEU-4 on the 0..100 scale, one reference per candidate"""
    _check_lengths("candidates/references", candidates, references)
    if any(not reference.strip() for reference in references):
        raise MetricError("BLEU references must be non-empty")
    return float(_bleu_metric().corpus_score(list(candidates), [list(references)]).score)


@lru_cache(maxsize=1)
def _rouge_scorer() -> rouge_scorer.RougeScorer:
    return rouge_scorer.RougeScorer(["rougeLsum"], use_stemmer=False)


def _sentence_lines(text: str) -> str:
    """rougeLsum reads sentence boundaries from newlines"""
    return "\n".join(segment_sentences(text))


def rouge_lsum_pair(candidate: str, reference: str) -> float:
    score = _rouge_scorer().score(_sentence_lines(reference), _sentence_lines(candidate))
    return float(score["rougeLsum"].fmeasure)


def rouge_lsum(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Mean summary-level ROUGE-L F-measure on the 0..1 scale"""
    _check_lengths("candidates/references", candidates, references)
    scores = [rouge_lsum_pair(c, r) for c, r in zip(candidates, references)]
    return sum(scores) / len(scores)


def _ngrams(tokens: List[str], n: int) -> List[Tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _sari_ngram(
    source: List[Tuple[str, ...]],
    candidate: List[Tuple[str, ...]],
    references: List[List[Tuple[str, ...]]],
) -> Tuple[float, float, float]:
    """(keep F1, deletion precision, addition F1) for one n-gram order"""
    num_refs = len(references)
    ref_counts = Counter(gram for ref in references for gram in ref)
    src_counts = Counter({gram: count * num_refs for gram, count in Counter(source).items()})
    cand_counts = Counter({gram: count * num_refs for gram, count in Counter(candidate).items()})

    # keep
    kept = src_counts & cand_counts
    kept_good = kept & ref_counts
    kept_all = src_counts & ref_counts
    keep_precision = sum(kept_good[g] / kept[g] for g in kept) / len(kept) if kept else 0.0
    keep_recall = sum(kept_good[g] / kept_all[g] for g in kept_good) / len(kept_all) if kept_all else 0.0
    keep = _f1(keep_precision, keep_recall)

    # delete (precision only)
    deleted = src_counts - cand_counts
    deleted_good = deleted - ref_counts
    delete_precision = sum(deleted_good[g] / deleted[g] for g in deleted) / len(deleted) if deleted else 0.0

    # add, on n-gram types
    added = set(cand_counts) - set(src_counts)
    added_good = added & set(ref_counts)
    added_all = set(ref_counts) - set(src_counts)
    add_precision = len(added_good) / len(added) if added else 0.0
    add_recall = len(added_good) / len(added_all) if added_all else 0.0
    add = _f1(add_precision, add_recall)

    return keep, delete_precision, add


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def sari_sentence(source: str, candidate: str, references: Sequence[str]) -> float:
    """SARI of one triple on the 0..1 scale; lower-cased whitespace tokens, n = 1..4"""
    if not references:
        raise MetricError("SARI needs at least one reference")
    src, cand = source.lower().split(), candidate.lower().split()
    refs = [reference.lower().split() for reference in references]

    keeps, deletes, adds = [], [], []
    for n in range(1, SARI_MAX_ORDER + 1):
        keep, delete, add = _sari_ngram(_ngrams(src, n), _ngrams(cand, n), [_ngrams(ref, n) for ref in refs])
        keeps.append(keep)
        deletes.append(delete)
        adds.append(add)

    orders = float(SARI_MAX_ORDER)
    return (sum(keeps) / orders + sum(deletes) / orders + sum(adds) / orders) / 3


def sari(sources: Sequence[str], candidates: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    """Corpus SARI on the 0..100 scale: mean of sentence scores"""
    _check_lengths("sources/candidates", sources, candidates)
    _check_lengths("candidates/references", candidates, references)
    scores = [sari_sentence(s, c, r) for s, c, r in zip(sources, candidates, references)]
    return 100 * sum(scores) / len(scores)

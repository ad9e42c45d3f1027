from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Set, Tuple
import logging

import pandas as pd

from common.exceptions import MissingGold
from corpus_service.schemas import AlignmentLink, GoldAnnotation
from metrics_service.schemas import AverageLevel, EvidenceEvalConfig, EvidenceMode, PrfScores

logger = logging.getLogger(__name__)


def set_counts(predicted: Iterable, relevant: Iterable) -> Tuple[int, int, int]:
    """(tp, fp, fn) for two sets of hashable units"""
    predicted, relevant = set(predicted), set(relevant)
    return len(predicted & relevant), len(predicted - relevant), len(relevant - predicted)


def relevant_set(gold: GoldAnnotation, mode: EvidenceMode) -> FrozenSet[int]:
    return gold.essential if mode == EvidenceMode.STRICT else gold.relevant_lenient


def _require_gold(case_ids: Iterable[str], gold: Mapping[str, object]) -> None:
    for case_id in sorted(case_ids):
        if gold.get(case_id) is None:
            raise MissingGold(case_id)


def micro_prf(counts: Iterable[Tuple[int, int, int]]) -> PrfScores:
    tp = fp = fn = 0
    for case_tp, case_fp, case_fn in counts:
        tp, fp, fn = tp + case_tp, fp + case_fp, fn + case_fn
    return PrfScores.from_counts(tp, fp, fn)


def macro_prf(per_case: Iterable[PrfScores]) -> PrfScores:
    """Unweighted mean of per-case P, R and F1, each averaged on its own"""
    frame = pd.DataFrame([scores.model_dump() for scores in per_case], columns=["precision", "recall", "f1"])
    if frame.empty:
        return PrfScores.from_counts(0, 0, 0)
    means = frame.mean().clip(0.0, 1.0)
    return PrfScores(precision=float(means["precision"]), recall=float(means["recall"]), f1=float(means["f1"]))


def evidence_case_scores(
    preds: Mapping[str, Iterable[int]],
    gold: Mapping[str, GoldAnnotation],
    mode: EvidenceMode,
) -> Dict[str, PrfScores]:
    _require_gold(preds, gold)
    return {
        case_id: PrfScores.from_counts(*set_counts(preds[case_id], relevant_set(gold[case_id], mode)))
        for case_id in sorted(preds)
    }


def evidence_prf(
    preds: Mapping[str, Iterable[int]],
    gold: Mapping[str, GoldAnnotation],
    cfg: EvidenceEvalConfig,
) -> PrfScores:
    """
    Sentence-level evidence scores. Strict counts essential sentences as
    relevant; lenient adds the supplementary ones.
    """
    _require_gold(preds, gold)
    if cfg.level == AverageLevel.MICRO:
        return micro_prf(set_counts(preds[c], relevant_set(gold[c], cfg.mode)) for c in sorted(preds))
    return macro_prf(evidence_case_scores(preds, gold, cfg.mode).values())


def alignment_pairs(links: Optional[Sequence[AlignmentLink]]) -> Set[Tuple[int, int]]:
    return {pair for link in links or () for pair in link.pairs()}


def alignment_prf(
    preds: Mapping[str, Sequence[AlignmentLink]],
    gold: Mapping[str, Optional[Sequence[AlignmentLink]]],
) -> PrfScores:
    """Micro scores over (answer_sentence, evidence_id) pairs pooled across cases"""
    _require_gold(preds, gold)
    return micro_prf(set_counts(alignment_pairs(preds[c]), alignment_pairs(gold[c])) for c in sorted(preds))

# Evaluation harness: evidence and alignment PRF, BLEU, ROUGE-Lsum, SARI, overall scores
from .schemas import EvidenceMode, AverageLevel, EvidenceEvalConfig, PrfScores, MetricReport, harmonic_f1
from .prf import evidence_prf, alignment_prf, micro_prf, macro_prf, set_counts
from .text_metrics import bleu, rouge_lsum, rouge_lsum_pair, sari, sari_sentence
from .overall import DEFAULT_CONSTITUENTS, overall_score, load_sidecar
from .evaluator import PRIMARY_METRICS, evaluate_predictions, evaluate_files
from .reporting import render_summary_table, render_aggregate_table, render_console_table, write_report

__all__ = [
    "EvidenceMode",
    "AverageLevel",
    "EvidenceEvalConfig",
    "PrfScores",
    "MetricReport",
    "harmonic_f1",
    "evidence_prf",
    "alignment_prf",
    "micro_prf",
    "macro_prf",
    "set_counts",
    "bleu",
    "rouge_lsum",
    "rouge_lsum_pair",
    "sari",
    "sari_sentence",
    "DEFAULT_CONSTITUENTS",
    "overall_score",
    "load_sidecar",
    "PRIMARY_METRICS",
    "evaluate_predictions",
    "evaluate_files",
    "render_summary_table",
    "render_aggregate_table",
    "render_console_table",
    "write_report",
]

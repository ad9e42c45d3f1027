# The four cascaded stages and the orchestrator that wires them
from .schemas import (
    AnchorMode,
    InterpretMode,
    FallbackKind,
    StageFallback,
    InterpretedQuery,
    SentenceScore,
    EvidenceSelection,
    GeneratedAnswer,
    AlignmentMap,
    StageEvent,
    CaseResult,
    RunSummary,
    RunReport,
)
from .prompt_builder import PromptBuilder
from .parsing import parse_scores, parse_alignment, clean_model_text, extract_json
from .interpret import interpret_question
from .evidence import resolve_anchor, score_sentences, filter_evidence, select_evidence
from .generate import generate_answer, finalize_answer
from .align import align_answer
from .orchestrator import PipelineOptions, REPORT_FILENAME, required_stages, process_case, run_pipeline

__all__ = [
    "AnchorMode",
    "InterpretMode",
    "FallbackKind",
    "StageFallback",
    "InterpretedQuery",
    "SentenceScore",
    "EvidenceSelection",
    "GeneratedAnswer",
    "AlignmentMap",
    "StageEvent",
    "CaseResult",
    "RunSummary",
    "RunReport",
    "PromptBuilder",
    "parse_scores",
    "parse_alignment",
    "clean_model_text",
    "extract_json",
    "interpret_question",
    "resolve_anchor",
    "score_sentences",
    "filter_evidence",
    "select_evidence",
    "generate_answer",
    "finalize_answer",
    "align_answer",
    "PipelineOptions",
    "REPORT_FILENAME",
    "required_stages",
    "process_case",
    "run_pipeline",
]

# Case data, prompt assets and submission files
from .schemas import (
    EvidenceTier,
    NoteSentence,
    AlignmentLink,
    GoldAnnotation,
    CaseRecord,
    FewShotExample,
    PromptAssets,
    gold_by_case,
)
from .loader import load_corpus, parse_case, register_converter, CORPUS_CONVERTERS
from .assets import (
    STAGE_ASSET_DIRS,
    INTERPRET_EXAMPLE_COUNT,
    load_prompt_assets,
    load_stage_assets,
    require_example_count,
    render_template,
)
from .submissions import (
    SUBMISSION_FILENAMES,
    InterpretationEntry,
    EvidenceEntry,
    AnswerEntry,
    AlignmentEntry,
    write_submission,
    read_submission,
    validate_submission,
    load_answers,
)

__all__ = [
    "EvidenceTier",
    "NoteSentence",
    "AlignmentLink",
    "GoldAnnotation",
    "CaseRecord",
    "FewShotExample",
    "PromptAssets",
    "gold_by_case",
    "load_corpus",
    "parse_case",
    "register_converter",
    "CORPUS_CONVERTERS",
    "STAGE_ASSET_DIRS",
    "INTERPRET_EXAMPLE_COUNT",
    "load_prompt_assets",
    "load_stage_assets",
    "require_example_count",
    "render_template",
    "SUBMISSION_FILENAMES",
    "InterpretationEntry",
    "EvidenceEntry",
    "AnswerEntry",
    "AlignmentEntry",
    "write_submission",
    "read_submission",
    "validate_submission",
    "load_answers",
]

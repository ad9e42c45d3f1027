# Common package for cascadeqa
from .schemas import FrozenModel, Stage, STAGE_LABELS
from .logging import setup_logging, logger
from .utils import canonical_json, stable_digest, dump_pretty_json
from .storage import FileStorage
from .exceptions import (
    CascadeQAException,
    ConfigError,
    CorpusError,
    MissingFile,
    MalformedRecord,
    DuplicateCaseId,
    DuplicateLabel,
    IndexOutOfRange,
    SubmissionError,
    SchemaViolation,
    SubmissionIOError,
    AssetError,
    TemplateError,
    TranscriptError,
    StageError,
    ParseFailure,
    BackendFailure,
    AnchorUnavailable,
    MetricError,
    MissingGold,
    LengthMismatch,
    MissingConstituent,
    handle_exception,
)

__all__ = [
    "FrozenModel",
    "Stage",
    "STAGE_LABELS",
    "setup_logging",
    "logger",
    "canonical_json",
    "stable_digest",
    "dump_pretty_json",
    "FileStorage",
    "CascadeQAException",
    "ConfigError",
    "CorpusError",
    "MissingFile",
    "MalformedRecord",
    "DuplicateCaseId",
    "DuplicateLabel",
    "IndexOutOfRange",
    "SubmissionError",
    "SchemaViolation",
    "SubmissionIOError",
    "AssetError",
    "TemplateError",
    "TranscriptError",
    "StageError",
    "ParseFailure",
    "BackendFailure",
    "AnchorUnavailable",
    "MetricError",
    "MissingGold",
    "LengthMismatch",
    "MissingConstituent",
    "handle_exception",
]

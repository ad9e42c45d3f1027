from typing import Optional, Dict, Any

EXIT_FAILURE = 1
EXIT_USAGE = 2


class CascadeQAException(Exception):
    """Base error for the pipeline. Carries a message and optional context."""

    exit_code = EXIT_FAILURE

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(detail)
        self.detail = detail
        self.context = context or {}

    def __str__(self) -> str:
        return self.detail


class ConfigError(CascadeQAException):
    exit_code = EXIT_USAGE

    def __init__(self, detail: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path:
            location = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(f"{location}{detail}", {"path": path, "line": line})


# Corpus

class CorpusError(CascadeQAException):
    def __init__(self, detail: str, case_id: Optional[str] = None):
        self.case_id = case_id
        super().__init__(detail, {"case_id": case_id})


class MissingFile(CorpusError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"File not found: {path}")


class MalformedRecord(CorpusError):
    def __init__(self, case_id: Optional[str], reason: str):
        self.reason = reason
        super().__init__(f"Malformed record {case_id or '<unknown>'}: {reason}", case_id)


class DuplicateCaseId(CorpusError):
    def __init__(self, case_id: str):
        super().__init__(f"Duplicate case_id: {case_id}", case_id)


class DuplicateLabel(CorpusError):
    def __init__(self, case_id: str, indices: Any):
        self.indices = sorted(indices)
        super().__init__(
            f"Case {case_id}: sentences {self.indices} are both essential and supplementary",
            case_id,
        )


class IndexOutOfRange(CorpusError):
    def __init__(self, case_id: str, index: int, note_len: int):
        self.index = index
        self.note_len = note_len
        super().__init__(f"Case {case_id}: index {index} outside 1..{note_len}", case_id)


# Submissions

class SubmissionError(CascadeQAException):
    def __init__(self, detail: str, stage: Any = None, case_id: Optional[str] = None):
        self.stage = stage
        self.case_id = case_id
        super().__init__(detail, {"stage": stage, "case_id": case_id})


class SchemaViolation(SubmissionError):
    pass


class SubmissionIOError(SubmissionError):
    pass


# Prompt assets

class AssetError(CascadeQAException):
    exit_code = EXIT_USAGE

    def __init__(self, detail: str, template_id: Optional[str] = None):
        self.template_id = template_id
        super().__init__(detail, {"template_id": template_id})


class TemplateError(AssetError):
    def __init__(self, template_id: str, placeholder: str):
        self.placeholder = placeholder
        super().__init__(
            f"Template {template_id}: unresolved placeholder {{{{{placeholder}}}}}",
            template_id,
        )


class TranscriptError(CascadeQAException):
    def __init__(self, detail: str, path: Optional[str] = None):
        self.path = path
        super().__init__(detail, {"path": path})


# Pipeline stages

class StageError(CascadeQAException):
    def __init__(self, detail: str, case_id: Optional[str] = None, stage: Any = None):
        self.case_id = case_id
        self.stage = stage
        super().__init__(detail, {"case_id": case_id, "stage": stage})


class ParseFailure(StageError):
    pass


class BackendFailure(StageError):
    """A non-text ChatOutcome reached a stage that needs model text."""

    def __init__(self, outcome: Any, case_id: Optional[str] = None, stage: Any = None):
        self.outcome = outcome
        super().__init__(f"Backend returned {outcome.describe()}", case_id, stage)


class AnchorUnavailable(StageError):
    pass


# Metrics

class MetricError(CascadeQAException):
    pass


class MissingGold(MetricError):
    def __init__(self, case_id: str):
        self.case_id = case_id
        super().__init__(f"MissingGold({case_id})", {"case_id": case_id})


class LengthMismatch(MetricError):
    def __init__(self, what: str, left: int, right: int):
        super().__init__(f"Length mismatch for {what}: {left} != {right}")


class MissingConstituent(MetricError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"MissingConstituent({name})", {"name": name})


def handle_exception(error: Exception, context: Optional[str] = None) -> CascadeQAException:
    """Convert various exceptions to CascadeQAException."""
    if isinstance(error, CascadeQAException):
        return error

    if isinstance(error, KeyError):
        return MalformedRecord(context, f"Required field: {error}")

    detail = str(error)
    if context:
        detail = f"{context}: {detail}"

    return CascadeQAException(detail)

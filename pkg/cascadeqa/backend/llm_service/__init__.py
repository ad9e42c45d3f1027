# Language-model backends: HTTP, rule-based mock and transcript replay
from .config import (
    Provider,
    BackendKind,
    RetryPolicy,
    HttpBackendConfig,
    MockBackendConfig,
    ReplayBackendConfig,
    BackendConfig,
    STAGE_TEMPERATURES,
    STAGE_MAX_OUTPUT_TOKENS,
)
from .schemas import (
    Role,
    ChatMessage,
    GenerationConfig,
    ChatRequest,
    ChatOutcome,
    Text,
    Blocked,
    TransportError,
    TransportErrorCode,
)
from .http_backend import HttpBackend
from .mock_backend import MockBackend
from .replay import ChatBackend, TranscriptStore, RecordingBackend, ReplayBackend, record_transcript
from .backends import complete, create_backend, close_backend, missing_replay_keys, resolve_api_key

__all__ = [
    "Provider",
    "BackendKind",
    "RetryPolicy",
    "HttpBackendConfig",
    "MockBackendConfig",
    "ReplayBackendConfig",
    "BackendConfig",
    "STAGE_TEMPERATURES",
    "STAGE_MAX_OUTPUT_TOKENS",
    "Role",
    "ChatMessage",
    "GenerationConfig",
    "ChatRequest",
    "ChatOutcome",
    "Text",
    "Blocked",
    "TransportError",
    "TransportErrorCode",
    "HttpBackend",
    "MockBackend",
    "ChatBackend",
    "TranscriptStore",
    "RecordingBackend",
    "ReplayBackend",
    "record_transcript",
    "complete",
    "create_backend",
    "close_backend",
    "missing_replay_keys",
    "resolve_api_key",
]

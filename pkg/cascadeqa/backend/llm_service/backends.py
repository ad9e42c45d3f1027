import os
import time
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional
import logging

import httpx

from common.exceptions import ConfigError
from llm_service.config import BackendConfig, HttpBackendConfig, MockBackendConfig, ReplayBackendConfig
from llm_service.http_backend import HttpBackend
from llm_service.mock_backend import MockBackend
from llm_service.replay import ChatBackend, RecordingBackend, ReplayBackend, TranscriptStore
from llm_service.schemas import ChatOutcome, ChatRequest, TransportError, TransportErrorCode

logger = logging.getLogger(__name__)


def complete(backend: ChatBackend, request: ChatRequest) -> ChatOutcome:
    """Single entry point for model calls; failures come back as outcomes, never raised."""
    try:
        return backend.complete(request)
    except Exception as e:
        logger.exception(f"Backend raised for case {request.case_id} ({request.task}): {e}")
        return TransportError(code=TransportErrorCode.TRANSPORT, detail=f"{type(e).__name__}: {e}")


def resolve_api_key(api_key_env: str) -> str:
    value = os.environ.get(api_key_env)
    if not value:
        raise ConfigError(f"Environment variable {api_key_env} holding the API key is not set")
    return value


def create_backend(
    config: BackendConfig,
    oracle: Optional[Mapping[str, Iterable[int]]] = None,
    record_to: Optional[str | Path] = None,
    transport: Optional[httpx.BaseTransport] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ChatBackend:
    """Build the backend a run config asks for, optionally wrapped for recording."""
    backend: ChatBackend
    if isinstance(config, HttpBackendConfig):
        api_key = resolve_api_key(config.api_key_env)
        backend = HttpBackend(config, api_key, transport=transport, sleep=sleep)
        logger.info(f"HTTP backend: {config.provider.value} {config.model_id} at {config.endpoint}")
    elif isinstance(config, MockBackendConfig):
        backend = MockBackend(oracle)
        logger.info("Mock backend" + (" with gold oracle" if oracle else ""))
    elif isinstance(config, ReplayBackendConfig):
        if not Path(config.transcript_path).is_file():
            raise ConfigError(f"Transcript not found: {config.transcript_path}")
        store = TranscriptStore(config.transcript_path)
        backend = ReplayBackend(store, strict=config.strict, fallback=None if config.strict else MockBackend(oracle))
        logger.info(f"Replay backend over {len(store)} entries (strict={config.strict})")
    else:
        raise ConfigError(f"Unknown backend config: {config!r}")

    if record_to is not None:
        backend = RecordingBackend(backend, TranscriptStore(record_to))
        logger.info(f"Recording transcript to {record_to}")
    return backend


def close_backend(backend: ChatBackend) -> None:
    inner = getattr(backend, "inner", backend)
    if isinstance(inner, HttpBackend):
        inner.close()


def missing_replay_keys(backend: ChatBackend) -> list[str]:
    inner = getattr(backend, "inner", backend)
    if isinstance(inner, ReplayBackend):
        return inner.missing_keys
    return []

import json
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Protocol, Set
import logging

from pydantic import ValidationError

from common.exceptions import TranscriptError
from common.utils import canonical_json
from llm_service.schemas import CHAT_OUTCOME_ADAPTER, ChatOutcome, ChatRequest, TransportError, TransportErrorCode

logger = logging.getLogger(__name__)


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> ChatOutcome: ...


class TranscriptStore:
    """
    JSON-lines transcript: one {key, request_digest_inputs, outcome} object per line.

    Later lines win on load. Appends are serialized so concurrent workers can
    record into the same file; every line is flushed as it is written, so a
    partial transcript left by an interrupted run is still readable.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._outcomes: Dict[str, ChatOutcome] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise TranscriptError(f"Cannot read transcript {self.path}: {e}", str(self.path))

        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                self._outcomes[entry["key"]] = CHAT_OUTCOME_ADAPTER.validate_python(entry["outcome"])
            except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
                raise TranscriptError(f"{self.path}:{number}: invalid transcript entry ({e})", str(self.path))
        logger.info(f"Loaded {len(self._outcomes)} transcript entries from {self.path}")

    def __len__(self) -> int:
        return len(self._outcomes)

    def __contains__(self, key: str) -> bool:
        return key in self._outcomes

    def keys(self) -> List[str]:
        return sorted(self._outcomes)

    def lookup(self, key: str) -> Optional[ChatOutcome]:
        return self._outcomes.get(key)

    def record(self, request: ChatRequest, outcome: ChatOutcome) -> str:
        key = request.key
        line = canonical_json(
            {
                "key": key,
                "request_digest_inputs": request.digest_inputs(),
                "outcome": outcome.model_dump(mode="json"),
            }
        )
        with self._lock:
            if self._outcomes.get(key) == outcome:
                return key
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(line + "\n")
                    f.flush()
            except OSError as e:
                raise TranscriptError(f"Cannot write transcript {self.path}: {e}", str(self.path))
            self._outcomes[key] = outcome
        return key


def record_transcript(store: TranscriptStore, request: ChatRequest, outcome: ChatOutcome) -> str:
    """Store one outcome and return its replay lookup key."""
    return store.record(request, outcome)


class RecordingBackend:
    """Wraps any backend and records every outcome, blocked and failed ones included."""

    def __init__(self, inner: ChatBackend, store: TranscriptStore):
        self.inner = inner
        self.store = store

    def complete(self, request: ChatRequest) -> ChatOutcome:
        outcome = self.inner.complete(request)
        record_transcript(self.store, request, outcome)
        return outcome


class ReplayBackend:
    def __init__(self, store: TranscriptStore, strict: bool = True, fallback: Optional[ChatBackend] = None):
        if not strict and fallback is None:
            raise ValueError("non-strict replay needs a fallback backend")
        self.store = store
        self.strict = strict
        self.fallback = fallback
        self._lock = threading.Lock()
        self._missing: Set[str] = set()

    @property
    def missing_keys(self) -> List[str]:
        with self._lock:
            return sorted(self._missing)

    def complete(self, request: ChatRequest) -> ChatOutcome:
        key = request.key
        outcome = self.store.lookup(key)
        if outcome is not None:
            return outcome

        if not self.strict:
            logger.debug(f"Transcript miss {key} for case {request.case_id}, delegating to fallback")
            return self.fallback.complete(request)

        with self._lock:
            self._missing.add(key)
        logger.warning(f"No transcript entry {key} for case {request.case_id} ({request.task})")
        return TransportError(code=TransportErrorCode.REPLAY_MISS, detail=f"no transcript entry for {key}")

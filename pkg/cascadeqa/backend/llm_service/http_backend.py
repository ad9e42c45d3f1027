import threading
import time
from typing import Callable, Optional
import logging

import httpx

from llm_service.adapters import get_adapter
from llm_service.config import HttpBackendConfig
from llm_service.schemas import ChatOutcome, ChatRequest, TransportError, TransportErrorCode

logger = logging.getLogger(__name__)


class HttpBackend:
    """
    Chat-completion client for any provider with an adapter.

    Transport failures and 5xx responses are retried with exponential backoff;
    blocked responses, 4xx and empty completions are returned at once. At most
    `max_in_flight` requests are outstanding across threads.
    """

    def __init__(
        self,
        config: HttpBackendConfig,
        api_key: Optional[str],
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.adapter = get_adapter(config.provider)
        self.retry = config.retry_policy
        self._api_key = api_key
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self.client = httpx.Client(timeout=config.timeout_seconds, transport=transport)

    def complete(self, request: ChatRequest) -> ChatOutcome:
        with self._slots:
            return self._complete_with_retries(request)

    def _complete_with_retries(self, request: ChatRequest) -> ChatOutcome:
        wire = self.adapter.build(request, self.config.endpoint, self._api_key)
        outcome: ChatOutcome = TransportError(code=TransportErrorCode.TRANSPORT, detail="no attempt made")

        for attempt in range(1, self.retry.attempts + 1):
            outcome, retryable = self._attempt(wire.url, wire.headers, wire.body)
            if not retryable:
                return outcome
            if attempt < self.retry.attempts:
                delay = self.retry.delay(attempt)
                logger.warning(
                    f"Attempt {attempt}/{self.retry.attempts} for case {request.case_id} failed "
                    f"({outcome.describe()}), retrying in {delay:.2f}s"
                )
                self._sleep(delay)

        logger.error(f"Giving up on case {request.case_id} after {self.retry.attempts} attempts: {outcome.describe()}")
        return outcome

    def _attempt(self, url: str, headers: dict, body: dict) -> tuple[ChatOutcome, bool]:
        try:
            response = self.client.post(url, headers=headers, json=body)
        except httpx.HTTPError as e:
            return TransportError(code=TransportErrorCode.TRANSPORT, detail=f"{type(e).__name__}: {e}"), True

        if response.status_code >= 500:
            return TransportError(code=TransportErrorCode.HTTP_STATUS, detail=f"HTTP {response.status_code}"), True
        if response.status_code >= 400:
            return TransportError(code=TransportErrorCode.HTTP_STATUS, detail=f"HTTP {response.status_code}"), False

        try:
            payload = response.json()
        except ValueError:
            return TransportError(code=TransportErrorCode.BAD_RESPONSE, detail="response body is not JSON"), False
        return self.adapter.parse(payload), False

    def close(self) -> None:
        self.client.close()

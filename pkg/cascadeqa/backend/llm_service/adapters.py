"""
Provider adapters: turn a ChatRequest into an HTTP call and a provider
response body back into a ChatOutcome.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import logging

from llm_service.config import GEMINI_HARM_CATEGORIES, Provider
from llm_service.schemas import Blocked, ChatOutcome, ChatRequest, Role, Text, TransportError, TransportErrorCode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WireRequest:
    url: str
    headers: Dict[str, str] = field(default_factory=dict)
    body: Dict[str, Any] = field(default_factory=dict)


def _empty(detail: str) -> TransportError:
    return TransportError(code=TransportErrorCode.EMPTY, detail=detail)


def _bad_response(detail: str) -> TransportError:
    return TransportError(code=TransportErrorCode.BAD_RESPONSE, detail=detail)


class ProviderAdapter:
    provider: Provider

    def build(self, request: ChatRequest, endpoint: str, api_key: Optional[str]) -> WireRequest:
        raise NotImplementedError

    def parse(self, payload: Any) -> ChatOutcome:
        raise NotImplementedError


class OpenAIAdapter(ProviderAdapter):
    """OpenAI-compatible /chat/completions"""

    provider = Provider.OPENAI

    def build(self, request: ChatRequest, endpoint: str, api_key: Optional[str]) -> WireRequest:
        messages: List[Dict[str, str]] = [{"role": "system", "content": request.system}]
        messages += [{"role": m.role.value, "content": m.content} for m in request.messages]
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        return WireRequest(
            url=f"{endpoint}/chat/completions",
            headers=headers,
            body={
                "model": request.config.model_id,
                "messages": messages,
                "temperature": request.config.temperature,
                "max_tokens": request.config.max_output_tokens,
            },
        )

    def parse(self, payload: Any) -> ChatOutcome:
        try:
            choice = payload["choices"][0]
        except (KeyError, IndexError, TypeError):
            return _bad_response("response has no choices")
        if choice.get("finish_reason") == "content_filter":
            return Blocked(reason="content_filter")
        content = (choice.get("message") or {}).get("content") or ""
        if not content.strip():
            return _empty("completion is empty")
        return Text(text=content)


class GeminiAdapter(ProviderAdapter):
    """Gemini :generateContent"""

    provider = Provider.GEMINI
    BLOCKING_FINISH_REASONS = {"SAFETY", "PROHIBITED_CONTENT", "BLOCKLIST", "SPII"}

    def build(self, request: ChatRequest, endpoint: str, api_key: Optional[str]) -> WireRequest:
        contents = [
            {"role": "user" if m.role == Role.USER else "model", "parts": [{"text": m.content}]}
            for m in request.messages
        ]
        body: Dict[str, Any] = {
            "systemInstruction": {"parts": [{"text": request.system}]},
            "contents": contents,
            "generationConfig": {
                "temperature": request.config.temperature,
                "maxOutputTokens": request.config.max_output_tokens,
            },
        }
        if request.config.safety_filters_disabled:
            body["safetySettings"] = [
                {"category": category, "threshold": "BLOCK_NONE"} for category in GEMINI_HARM_CATEGORIES
            ]
        headers = {"x-goog-api-key": api_key} if api_key else {}
        return WireRequest(
            url=f"{endpoint}/models/{request.config.model_id}:generateContent",
            headers=headers,
            body=body,
        )

    def parse(self, payload: Any) -> ChatOutcome:
        if not isinstance(payload, dict):
            return _bad_response("response is not a JSON object")
        block_reason = (payload.get("promptFeedback") or {}).get("blockReason")
        if block_reason:
            return Blocked(reason=str(block_reason))

        candidates = payload.get("candidates") or []
        if not candidates:
            return _bad_response("response has no candidates")
        candidate = candidates[0]
        finish_reason = candidate.get("finishReason")
        if finish_reason in self.BLOCKING_FINISH_REASONS:
            return Blocked(reason=str(finish_reason))

        parts = (candidate.get("content") or {}).get("parts") or []
        text = "".join(part.get("text", "") for part in parts if isinstance(part, dict))
        if not text.strip():
            return _empty(f"completion is empty (finishReason={finish_reason})")
        return Text(text=text)


class MinimalAdapter(ProviderAdapter):
    """Plain JSON shape: {system, messages, ...} -> {"text"} | {"blocked"}"""

    provider = Provider.MINIMAL

    def build(self, request: ChatRequest, endpoint: str, api_key: Optional[str]) -> WireRequest:
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        return WireRequest(
            url=endpoint,
            headers=headers,
            body={
                "system": request.system,
                "messages": [{"role": m.role.value, "content": m.content} for m in request.messages],
                "temperature": request.config.temperature,
                "max_output_tokens": request.config.max_output_tokens,
                "model": request.config.model_id,
                "safety_filters_disabled": request.config.safety_filters_disabled,
            },
        )

    def parse(self, payload: Any) -> ChatOutcome:
        if not isinstance(payload, dict):
            return _bad_response("response is not a JSON object")
        if payload.get("blocked"):
            return Blocked(reason=str(payload["blocked"]))
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            return _empty("completion is empty")
        return Text(text=text)


ADAPTERS: Dict[Provider, ProviderAdapter] = {
    Provider.OPENAI: OpenAIAdapter(),
    Provider.GEMINI: GeminiAdapter(),
    Provider.MINIMAL: MinimalAdapter(),
}


def get_adapter(provider: Provider | str) -> ProviderAdapter:
    return ADAPTERS[Provider(provider)]

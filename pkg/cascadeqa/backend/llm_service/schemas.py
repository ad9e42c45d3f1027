from enum import Enum
from typing import Annotated, Any, Dict, Literal, Optional, Tuple, Union

from pydantic import Field, TypeAdapter, field_validator, model_validator

from common.schemas import FrozenModel, Stage
from common.utils import stable_digest
from llm_service.config import STAGE_MAX_OUTPUT_TOKENS, STAGE_TEMPERATURES


class Role(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


class ChatMessage(FrozenModel):
    role: Role
    content: str


class GenerationConfig(FrozenModel):
    temperature: float = Field(ge=0)
    max_output_tokens: int = Field(gt=0)
    safety_filters_disabled: bool = True
    model_id: str = Field(min_length=1)

    @classmethod
    def for_stage(
        cls,
        stage: Stage,
        model_id: str,
        temperature: Optional[float] = None,
        max_output_tokens: Optional[int] = None,
        safety_filters_disabled: bool = True,
    ) -> "GenerationConfig":
        return cls(
            temperature=STAGE_TEMPERATURES[stage] if temperature is None else temperature,
            max_output_tokens=max_output_tokens or STAGE_MAX_OUTPUT_TOKENS[stage],
            safety_filters_disabled=safety_filters_disabled,
            model_id=model_id,
        )


class ChatRequest(FrozenModel):
    system: str
    messages: Tuple[ChatMessage, ...]
    config: GenerationConfig
    # Not part of the digest: routing hints for the mock and log context
    task: Optional[str] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _alternating_roles(self) -> "ChatRequest":
        if not self.messages:
            raise ValueError("messages must not be empty")
        for position, message in enumerate(self.messages):
            expected = Role.USER if position % 2 == 0 else Role.ASSISTANT
            if message.role != expected:
                raise ValueError(f"message {position} should have role {expected.value}")
        return self

    @classmethod
    def single_turn(cls, system: str, user: str, config: GenerationConfig, **kwargs: Any) -> "ChatRequest":
        return cls(system=system, messages=(ChatMessage(role=Role.USER, content=user),), config=config, **kwargs)

    def followed_by(self, assistant_text: str, user_text: str) -> "ChatRequest":
        """Same conversation with the model's reply and a new user turn appended."""
        messages = self.messages + (
            ChatMessage(role=Role.ASSISTANT, content=assistant_text),
            ChatMessage(role=Role.USER, content=user_text),
        )
        return self.model_copy(update={"messages": messages})

    def digest_inputs(self) -> Dict[str, Any]:
        return {
            "system": self.system,
            "messages": [{"role": m.role.value, "content": m.content} for m in self.messages],
            "temperature": self.config.temperature,
            "model_id": self.config.model_id,
        }

    @property
    def key(self) -> str:
        return stable_digest(self.digest_inputs())

    @property
    def case_id(self) -> Optional[str]:
        return self.metadata.get("case_id")


class TransportErrorCode(str, Enum):
    TRANSPORT = "transport"
    HTTP_STATUS = "http_status"
    EMPTY = "empty"
    BAD_RESPONSE = "bad_response"
    REPLAY_MISS = "replay_miss"


class Text(FrozenModel):
    kind: Literal["text"] = "text"
    text: str

    @field_validator("text")
    @classmethod
    def _non_empty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("text outcome must be non-empty")
        return value

    def describe(self) -> str:
        return "text"


class Blocked(FrozenModel):
    kind: Literal["blocked"] = "blocked"
    reason: str

    def describe(self) -> str:
        return f"blocked ({self.reason})"


class TransportError(FrozenModel):
    kind: Literal["transport_error"] = "transport_error"
    code: TransportErrorCode
    detail: str

    def describe(self) -> str:
        return f"transport error [{self.code.value}]: {self.detail}"


ChatOutcome = Annotated[Union[Text, Blocked, TransportError], Field(discriminator="kind")]

CHAT_OUTCOME_ADAPTER: TypeAdapter = TypeAdapter(ChatOutcome)

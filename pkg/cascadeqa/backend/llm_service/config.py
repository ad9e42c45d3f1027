from dataclasses import dataclass
from enum import Enum
from typing import Annotated, Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from common.schemas import Stage
from config.settings import settings


class Provider(str, Enum):
    """Wire formats the HTTP backend can speak"""

    OPENAI = "openai"
    GEMINI = "gemini"
    MINIMAL = "minimal"


class BackendKind(str, Enum):
    HTTP = "http"
    MOCK = "mock"
    REPLAY = "replay"


# Per-stage generation defaults. Stages that must return strict JSON or a
# reproducible rewrite run at zero temperature; answer drafting gets 0.1.
STAGE_TEMPERATURES: Dict[Stage, float] = {
    Stage.INTERPRET: 0.0,
    Stage.EVIDENCE: 0.0,
    Stage.GENERATE: 0.1,
    Stage.ALIGN: 0.0,
}

STAGE_MAX_OUTPUT_TOKENS: Dict[Stage, int] = {
    Stage.INTERPRET: 256,
    Stage.EVIDENCE: 2048,
    Stage.GENERATE: 512,
    Stage.ALIGN: 1024,
}

# Gemini harm categories switched to BLOCK_NONE when safety filters are disabled
GEMINI_HARM_CATEGORIES = (
    "HARM_CATEGORY_HARASSMENT",
    "HARM_CATEGORY_HATE_SPEECH",
    "HARM_CATEGORY_SEXUALLY_EXPLICIT",
    "HARM_CATEGORY_DANGEROUS_CONTENT",
    "HARM_CATEGORY_CIVIC_INTEGRITY",
)


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    base_delay: float = 0.5
    multiplier: float = 2.0

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError(f"attempts must be at least 1, got {self.attempts}")
        if self.base_delay < 0 or self.multiplier < 1:
            raise ValueError("base_delay must be >= 0 and multiplier >= 1")

    def delay(self, attempt: int) -> float:
        """Sleep before retry number `attempt` (1-based)."""
        return self.base_delay * self.multiplier ** (attempt - 1)


class _BackendModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class HttpBackendConfig(_BackendModel):
    kind: Literal["http"] = "http"
    endpoint: str = settings.DEFAULT_ENDPOINT
    model_id: str = settings.DEFAULT_MODEL_ID
    api_key_env: str = settings.DEFAULT_API_KEY_ENV
    provider: Provider = Provider(settings.DEFAULT_PROVIDER)
    max_in_flight: int = Field(default=4, ge=1)
    retry_attempts: int = Field(default=3, ge=1)
    retry_base_delay: float = Field(default=0.5, ge=0)
    retry_multiplier: float = Field(default=2.0, ge=1)
    timeout_seconds: float = Field(default=settings.HTTP_TIMEOUT_SECONDS, gt=0)
    safety_filters_disabled: bool = True

    @field_validator("endpoint")
    @classmethod
    def _http_url(cls, value: str) -> str:
        if not value.startswith(("http://", "https://")):
            raise ValueError(f"endpoint must be an http(s) URL, got {value!r}")
        return value.rstrip("/")

    @property
    def retry_policy(self) -> RetryPolicy:
        return RetryPolicy(self.retry_attempts, self.retry_base_delay, self.retry_multiplier)


class MockBackendConfig(_BackendModel):
    kind: Literal["mock"] = "mock"
    model_id: str = "mock"
    # "gold" scores exactly the gold-essential sentences 5
    oracle: Optional[Literal["gold"]] = None


class ReplayBackendConfig(_BackendModel):
    kind: Literal["replay"] = "replay"
    model_id: str = settings.DEFAULT_MODEL_ID
    transcript_path: str
    strict: bool = True


BackendConfig = Annotated[
    Union[HttpBackendConfig, MockBackendConfig, ReplayBackendConfig],
    Field(discriminator="kind"),
]

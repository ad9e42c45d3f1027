"""
Run configuration: a committed TOML file plus command-line overrides.

Flags win over file values. Errors carry the config path and, where it can be
located, the line of the offending key.
"""
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from common.exceptions import ConfigError
from common.schemas import Stage
from llm_service.config import STAGE_MAX_OUTPUT_TOKENS, STAGE_TEMPERATURES, BackendConfig, MockBackendConfig
from llm_service.schemas import GenerationConfig
from pipeline_service.orchestrator import PipelineOptions
from pipeline_service.schemas import AnchorMode, InterpretMode
from text_service import ANSWER_POLICY, INTERPRET_POLICY, TruncationPolicy

logger = logging.getLogger(__name__)

_TOML_POSITION = re.compile(r"at line (\d+), column (\d+)")


def _stage_key(key: Any) -> Stage:
    if isinstance(key, Stage):
        return key
    try:
        stages = Stage.parse_list(str(key))
    except (KeyError, ValueError):
        stages = []
    if len(stages) != 1:
        raise ValueError(f"unknown stage {key!r}")
    return stages[0]


class TruncationSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_words: int = Field(ge=1)
    soft_cut_ratio: float = Field(default=1.0, gt=0, le=1)
    append_period_on_hard_cut: bool = False

    @classmethod
    def of(cls, policy: TruncationPolicy) -> "TruncationSettings":
        return cls(
            max_words=policy.max_words,
            soft_cut_ratio=policy.soft_cut_ratio,
            append_period_on_hard_cut=policy.append_period_on_hard_cut,
        )

    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(self.max_words, self.soft_cut_ratio, self.append_period_on_hard_cut)


class TruncationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    interpret: TruncationSettings = Field(default_factory=lambda: TruncationSettings.of(INTERPRET_POLICY))
    generate: TruncationSettings = Field(default_factory=lambda: TruncationSettings.of(ANSWER_POLICY))

    @model_validator(mode="after")
    def _within_submission_caps(self) -> "TruncationConfig":
        # Submission files never accept longer queries or answers
        if self.interpret.max_words > INTERPRET_POLICY.max_words:
            raise ValueError(f"interpret.max_words cannot exceed {INTERPRET_POLICY.max_words}")
        if self.generate.max_words > ANSWER_POLICY.max_words:
            raise ValueError(f"generate.max_words cannot exceed {ANSWER_POLICY.max_words}")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    corpus_path: Optional[str] = None
    out_dir: str = "out"
    backend: BackendConfig = Field(default_factory=MockBackendConfig)
    temperatures: Dict[Stage, float] = Field(default_factory=lambda: dict(STAGE_TEMPERATURES))
    max_output_tokens: Dict[Stage, int] = Field(default_factory=lambda: dict(STAGE_MAX_OUTPUT_TOKENS))
    anchor: AnchorMode = AnchorMode.INTERPRETED_QUERY
    interpret_mode: InterpretMode = InterpretMode.FEW_SHOT
    workers: int = Field(default=1, ge=1)
    stages: List[Stage] = Field(default_factory=lambda: list(Stage))
    truncation: TruncationConfig = Field(default_factory=TruncationConfig)
    prompts_dir: Optional[str] = None
    # Per-stage asset directories, overriding prompts_dir/<stage>
    prompts: Dict[Stage, str] = Field(default_factory=dict)
    answers_path: Optional[str] = None
    transcript_path: Optional[str] = None

    @field_validator("temperatures", "max_output_tokens", "prompts", mode="before")
    @classmethod
    def _stage_keyed(cls, value: Any) -> Any:
        if not isinstance(value, Mapping):
            return value
        return {_stage_key(key): item for key, item in value.items()}

    @field_validator("temperatures")
    @classmethod
    def _complete_temperatures(cls, value: Dict[Stage, float]) -> Dict[Stage, float]:
        for stage, temperature in value.items():
            if temperature < 0:
                raise ValueError(f"temperature for stage {int(stage)} must be >= 0")
        return {**STAGE_TEMPERATURES, **value}

    @field_validator("max_output_tokens")
    @classmethod
    def _complete_token_limits(cls, value: Dict[Stage, int]) -> Dict[Stage, int]:
        for stage, limit in value.items():
            if limit < 1:
                raise ValueError(f"max_output_tokens for stage {int(stage)} must be positive")
        return {**STAGE_MAX_OUTPUT_TOKENS, **value}

    @field_validator("stages", mode="before")
    @classmethod
    def _parse_stages(cls, value: Any) -> Any:
        if isinstance(value, str):
            return Stage.parse_list(value)
        if isinstance(value, (list, tuple)):
            return sorted({_stage_key(item) for item in value})
        return value

    def generation_configs(self) -> Dict[Stage, GenerationConfig]:
        safety_disabled = getattr(self.backend, "safety_filters_disabled", True)
        return {
            stage: GenerationConfig.for_stage(
                stage,
                self.backend.model_id,
                temperature=self.temperatures[stage],
                max_output_tokens=self.max_output_tokens[stage],
                safety_filters_disabled=safety_disabled,
            )
            for stage in Stage
        }

    def pipeline_options(self, external_answers: Optional[Mapping[str, Sequence[str]]] = None) -> PipelineOptions:
        return PipelineOptions(
            interpret_mode=self.interpret_mode,
            workers=self.workers,
            interpret_policy=self.truncation.interpret.policy(),
            answer_policy=self.truncation.generate.policy(),
            external_answers=external_answers,
            model_id=self.backend.model_id,
            generation=self.generation_configs(),
        )


def _key_line(text: str, loc: Sequence[Any]) -> Optional[int]:
    """Best-effort line of a dotted key: its [table] header first, then `key =`."""
    lines = text.splitlines()
    start = 0
    found: Optional[int] = None
    for depth, part in enumerate(str(p) for p in loc):
        header = re.compile(rf"^\s*\[\s*{re.escape('.'.join(str(p) for p in loc[: depth + 1]))}\s*\]")
        assignment = re.compile(rf"^\s*\"?{re.escape(part)}\"?\s*=")
        for number in range(start, len(lines)):
            if header.match(lines[number]) or assignment.match(lines[number]):
                found, start = number + 1, number + 1
                break
        else:
            break
    return found


def _describe(error: Dict[str, Any]) -> str:
    location = ".".join(str(p) for p in error["loc"])
    return f"{location}: {error['msg']}" if location else error["msg"]


def validate_run_config(raw: Mapping[str, Any], path: Optional[str] = None, text: str = "") -> RunConfig:
    try:
        return RunConfig.model_validate(dict(raw))
    except ValidationError as e:
        first = e.errors()[0]
        # Discriminated unions add the tag to the location
        loc = [p for p in first["loc"] if p not in ("http", "mock", "replay")]
        raise ConfigError(
            "; ".join(_describe(item) for item in e.errors()),
            path,
            _key_line(text, loc) if text else None,
        )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file not found", str(path))
    text = path.read_text(encoding="utf-8")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_POSITION.search(str(e))
        raise ConfigError(f"invalid TOML ({e})", str(path), int(match.group(1)) if match else None)

    config = validate_run_config(raw, str(path), text)
    logger.info(f"Loaded run config from {path}")
    return config


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any], source: Optional[str] = None) -> RunConfig:
    """
    Merge flag values (None means "not given") over a config and re-validate.

    A backend override with a different `kind` replaces the backend table
    instead of merging into it.
    """
    data = config.model_dump(mode="json")
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "backend":
            given = {k: v for k, v in value.items() if v is not None}
            current = data["backend"]
            if given.get("kind", current["kind"]) != current["kind"]:
                current = {}
            data["backend"] = {**current, **given}
        else:
            data[key] = value
    return validate_run_config(data, source)

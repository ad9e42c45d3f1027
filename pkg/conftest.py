"""
Shared pytest fixtures. Puts cascadeqa/backend on sys.path the same way the
launcher does.
"""
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import pytest

ROOT = Path(__file__).resolve().parent
BACKEND_DIR = ROOT / "cascadeqa" / "backend"
FIXTURES_DIR = ROOT / "cascadeqa" / "fixtures"

# Add backend to path
sys.path.insert(0, str(BACKEND_DIR))

from common.schemas import Stage  # noqa: E402
from corpus_service import load_corpus, load_stage_assets  # noqa: E402
from llm_service.schemas import ChatOutcome, ChatRequest, GenerationConfig, Text  # noqa: E402
from pipeline_service.prompt_builder import PromptBuilder  # noqa: E402

Reply = Union[ChatOutcome, str, Callable[[ChatRequest], ChatOutcome]]


class ScriptedBackend:
    """
    Test double answering per task from a script.

    A task maps to one reply (used every time) or a list consumed in order
    (the last entry repeats). Strings are wrapped in Text.
    """

    def __init__(self, script: Dict[str, Union[Reply, List[Reply]]], default: Optional[Reply] = None):
        self.script = {task: list(r) if isinstance(r, list) else [r] for task, r in script.items()}
        self.default = default
        self.calls: List[ChatRequest] = []

    def complete(self, request: ChatRequest) -> ChatOutcome:
        self.calls.append(request)
        replies = self.script.get(request.task or "")
        if not replies:
            if self.default is None:
                raise AssertionError(f"unscripted task {request.task}")
            reply = self.default
        else:
            reply = replies.pop(0) if len(replies) > 1 else replies[0]
        if callable(reply):
            reply = reply(request)
        return Text(text=reply) if isinstance(reply, str) else reply

    def calls_for(self, task: str) -> List[ChatRequest]:
        return [call for call in self.calls if call.task == task]


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES_DIR / "corpus.json"


@pytest.fixture
def cases(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture
def case_by_id(cases):
    return {case.case_id: case for case in cases}


@pytest.fixture
def stage_assets():
    return load_stage_assets()


@pytest.fixture
def generation_configs():
    return {stage: GenerationConfig.for_stage(stage, "mock") for stage in Stage}


@pytest.fixture
def builder(stage_assets, generation_configs):
    return PromptBuilder(stage_assets, generation_configs)


@pytest.fixture
def scripted():
    """Factory: scripted(script, default=None) -> ScriptedBackend"""
    return ScriptedBackend

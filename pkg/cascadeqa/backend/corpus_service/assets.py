import json
import re
from pathlib import Path
from typing import Dict, Mapping, Optional
import logging

from pydantic import ValidationError

from common.exceptions import AssetError, TemplateError
from common.schemas import Stage
from config.settings import settings
from corpus_service.schemas import FewShotExample, PromptAssets

logger = logging.getLogger(__name__)

SYSTEM_FILE = "system.txt"
TEMPLATE_FILE = "template.txt"
EXAMPLES_FILE = "examples.json"

# Asset directory names under the prompts root
STAGE_ASSET_DIRS = {
    Stage.INTERPRET: "interpret",
    Stage.EVIDENCE: "evidence",
    Stage.GENERATE: "generate",
    Stage.ALIGN: "align",
}

INTERPRET_EXAMPLE_COUNT = 3

PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")


def _read_text(path: Path, template_id: str) -> str:
    if not path.is_file():
        raise AssetError(f"Prompt asset missing: {path}", template_id)
    return path.read_text(encoding="utf-8").strip()


def load_prompt_assets(directory: str | Path, template_id: Optional[str] = None) -> PromptAssets:
    """Read system.txt, template.txt and the optional examples.json of one stage."""
    directory = Path(directory)
    template_id = template_id or directory.name

    examples = ()
    examples_path = directory / EXAMPLES_FILE
    if examples_path.is_file():
        try:
            raw = json.loads(examples_path.read_text(encoding="utf-8"))
            examples = tuple(FewShotExample.model_validate(item) for item in raw)
        except (json.JSONDecodeError, TypeError, ValidationError) as e:
            raise AssetError(f"{examples_path}: invalid few-shot examples ({e})", template_id)

    return PromptAssets(
        template_id=template_id,
        system_persona=_read_text(directory / SYSTEM_FILE, template_id),
        template=_read_text(directory / TEMPLATE_FILE, template_id),
        few_shot_examples=examples,
    )


def require_example_count(assets: PromptAssets, expected: int) -> PromptAssets:
    if len(assets.few_shot_examples) != expected:
        raise AssetError(
            f"Template {assets.template_id} needs exactly {expected} few-shot examples, "
            f"found {len(assets.few_shot_examples)}",
            assets.template_id,
        )
    return assets


def load_stage_assets(
    prompts_dir: Optional[str | Path] = None,
    overrides: Optional[Mapping[Stage, str | Path]] = None,
) -> Dict[Stage, PromptAssets]:
    """Load the asset set of every stage; overrides point single stages elsewhere."""
    root = Path(prompts_dir or settings.PROMPTS_DIR)
    overrides = overrides or {}

    assets: Dict[Stage, PromptAssets] = {}
    for stage, dirname in STAGE_ASSET_DIRS.items():
        directory = Path(overrides.get(stage, root / dirname))
        assets[stage] = load_prompt_assets(directory, template_id=dirname)

    require_example_count(assets[Stage.INTERPRET], INTERPRET_EXAMPLE_COUNT)
    logger.debug(f"Prompt assets loaded from {root}")
    return assets


def render_template(template: str, values: Mapping[str, str], template_id: str = "inline") -> str:
    """
    Substitute {{name}} placeholders in one pass.

    Substituted values are not rescanned, so note text that happens to contain
    braces is safe. Any placeholder without a value raises TemplateError.
    """

    def _substitute(match: "re.Match[str]") -> str:
        name = match.group(1)
        if name not in values:
            raise TemplateError(template_id, name)
        return str(values[name])

    return PLACEHOLDER.sub(_substitute, template)

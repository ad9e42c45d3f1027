import json
import math
from pathlib import Path
from typing import Dict, Mapping, Sequence
import logging

from common.exceptions import MetricError, MissingConstituent, MissingFile
from common.schemas import Stage

logger = logging.getLogger(__name__)

# Leaderboard constituents of the two generative stages
DEFAULT_CONSTITUENTS: Dict[Stage, Sequence[str]] = {
    Stage.INTERPRET: ("ROUGELsum", "BERTScore", "AlignScore", "MEDCON"),
    Stage.GENERATE: ("BLEU", "ROUGELsum", "SARI", "BERTScore", "AlignScore", "MEDCON"),
}


def overall_score(internal: Mapping[str, float], sidecar: Mapping[str, float], constituents: Sequence[str]) -> float:
    """Unweighted mean of the named metrics (x100 scale); internal values win over sidecar ones."""
    if not constituents:
        raise MetricError("No constituents given for the overall score")
    values = []
    for name in constituents:
        if name in internal:
            values.append(float(internal[name]))
        elif name in sidecar:
            values.append(float(sidecar[name]))
        else:
            raise MissingConstituent(name)
    return sum(values) / len(values)


def load_sidecar(path: str | Path) -> Dict[str, float]:
    """Externally computed metrics: a flat JSON object {name: value on the 0..100 scale}"""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MetricError(f"{path}: invalid JSON ({e})")
    if not isinstance(raw, dict):
        raise MetricError(f"{path}: expected a JSON object of metric values")

    sidecar: Dict[str, float] = {}
    for name, value in raw.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise MetricError(f"{path}: metric {name} is not a number")
        if not 0 <= value <= 100:
            raise MetricError(f"{path}: metric {name}={value} outside 0..100")
        sidecar[str(name)] = float(value)
    logger.info(f"Loaded {len(sidecar)} sidecar metrics from {path}")
    return sidecar

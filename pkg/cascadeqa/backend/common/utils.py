import hashlib
import json
from typing import Any


def canonical_json(data: Any) -> str:
    """Key-sorted, separator-stable JSON used for digests."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_digest(data: Any) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def dump_pretty_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"

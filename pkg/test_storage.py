"""
Tests for the output file storage
"""
import json
from pathlib import Path

import pytest

from common.exceptions import SubmissionIOError
from common.storage import FileStorage
from common.utils import canonical_json, dump_pretty_json, stable_digest


def test_storage_creates_base_path(tmp_path):
    storage = FileStorage(tmp_path / "out" / "nested")
    assert storage.base_path.is_dir()


def test_save_and_list(tmp_path):
    storage = FileStorage(tmp_path)
    saved = storage.save_file(b"payload", "b.json", "run1")
    storage.save_text("second", "a.json", "run1")

    assert Path(saved).read_bytes() == b"payload"
    assert storage.list_files("run1") == ["a.json", "b.json"]
    assert storage.list_files("missing") == []


def test_save_overwrites_without_leftovers(tmp_path):
    storage = FileStorage(tmp_path)
    storage.save_text("first", "report.json")
    path = storage.save_text("second", "report.json")

    assert Path(path).read_text(encoding="utf-8") == "second"
    assert storage.list_files() == ["report.json"]


def test_save_into_file_path_fails(tmp_path):
    storage = FileStorage(tmp_path)
    storage.save_text("x", "blocker")
    with pytest.raises(SubmissionIOError):
        storage.save_text("y", "inner.json", "blocker")


def test_json_helpers():
    data = {"b": 1, "a": ["é", 2]}
    assert canonical_json(data) == '{"a":["é",2],"b":1}'
    assert stable_digest(data) == stable_digest({"a": ["é", 2], "b": 1})
    assert stable_digest(data) != stable_digest({"a": ["é", 2], "b": 2})

    pretty = dump_pretty_json(data)
    assert pretty.endswith("\n")
    assert json.loads(pretty) == data

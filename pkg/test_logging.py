"""
Log formatting and exception conversion
"""
import json
import logging

from common.exceptions import EXIT_USAGE, CascadeQAException, ConfigError, MalformedRecord, handle_exception
from common.logging import TEXT_FORMAT, JsonLineFormatter, setup_logging


def _record(**extra):
    record = logging.LogRecord("pipeline_service.orchestrator", logging.WARNING, __file__, 1, "Case %s fell back", ("101",), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_json_line_formatter():
    line = JsonLineFormatter().format(_record(case_id="101", stage=2))
    payload = json.loads(line)
    assert payload["level"] == "WARNING"
    assert payload["logger"] == "pipeline_service.orchestrator"
    assert payload["message"] == "Case 101 fell back"
    assert payload["case_id"] == "101"
    assert payload["stage"] == 2
    assert "\n" not in line


def test_setup_logging_formats():
    setup_logging("ERROR", "json")
    root = logging.getLogger()
    assert root.level == logging.ERROR
    assert isinstance(root.handlers[0].formatter, JsonLineFormatter)
    assert logging.getLogger("httpx").level == logging.WARNING

    setup_logging("INFO", "text")
    assert logging.getLogger().handlers[0].formatter._fmt == TEXT_FORMAT


def test_handle_exception():
    original = ConfigError("bad value", "run.toml", 3)
    assert handle_exception(original) is original
    assert original.exit_code == EXIT_USAGE
    assert str(original) == "run.toml:3: bad value"

    converted = handle_exception(KeyError("note"), "101")
    assert isinstance(converted, MalformedRecord)

    generic = handle_exception(ValueError("boom"), "stage 3")
    assert type(generic) is CascadeQAException
    assert str(generic) == "stage 3: boom"
    assert generic.exit_code == 1

"""
Per-stage submission files
"""
import json

import pytest

from common.exceptions import MalformedRecord, MissingFile, SchemaViolation
from common.schemas import Stage
from corpus_service import (
    SUBMISSION_FILENAMES,
    AlignmentEntry,
    EvidenceEntry,
    EvidenceTier,
    load_answers,
    read_submission,
    validate_submission,
    write_submission,
)


def test_filenames():
    assert SUBMISSION_FILENAMES[Stage.INTERPRET] == "stage1_interpretation.json"
    assert SUBMISSION_FILENAMES[Stage.ALIGN] == "stage4_alignment.json"


def test_write_sorts_by_case_id(tmp_path):
    path = write_submission(
        Stage.EVIDENCE,
        [
            {"case_id": "b", "evidence": [2, 1], "tier": "strict"},
            EvidenceEntry(case_id="a", evidence=(3,), tier=EvidenceTier.FALLBACK),
        ],
        tmp_path / "stage2_evidence.json",
    )
    payload = json.loads(open(path, encoding="utf-8").read())
    assert [entry["case_id"] for entry in payload] == ["a", "b"]
    assert payload[0]["tier"] == "fallback"

    entries = read_submission(Stage.EVIDENCE, path)
    assert entries[1].evidence == (2, 1)


def test_answer_over_cap_rejected(tmp_path):
    long_answer = " ".join(["word"] * 80) + "."
    with pytest.raises(SchemaViolation) as exc_info:
        write_submission(Stage.GENERATE, [{"case_id": "a", "answer": long_answer}], tmp_path / "s3.json")
    assert exc_info.value.case_id == "a"
    assert not (tmp_path / "s3.json").exists()


def test_query_over_cap_rejected(tmp_path):
    with pytest.raises(SchemaViolation):
        write_submission(Stage.INTERPRET, [{"case_id": "a", "query": " ".join(["q"] * 16)}], tmp_path / "s1.json")


def test_duplicate_entry_rejected(tmp_path):
    rows = [{"case_id": "a", "query": "why"}, {"case_id": "a", "query": "how"}]
    with pytest.raises(SchemaViolation):
        write_submission(Stage.INTERPRET, rows, tmp_path / "s1.json")


def test_unknown_case_id_rejected_on_write(tmp_path):
    with pytest.raises(SchemaViolation):
        write_submission(Stage.INTERPRET, [{"case_id": "zz", "query": "why"}], tmp_path / "s1.json", {"a"})


def test_empty_submission(tmp_path):
    path = write_submission(Stage.ALIGN, [], tmp_path / "s4.json")
    assert read_submission(Stage.ALIGN, path) == []


def test_alignment_entry_rules():
    with pytest.raises(ValueError):
        AlignmentEntry.model_validate(
            {"case_id": "a", "alignment": [{"answer_sentence": 1, "evidence": []}]}
        )
    with pytest.raises(ValueError):
        AlignmentEntry.model_validate(
            {
                "case_id": "a",
                "alignment": [
                    {"answer_sentence": 1, "evidence": [1]},
                    {"answer_sentence": 1, "evidence": [2]},
                ],
            }
        )


def test_validate_against_corpus(tmp_path, cases):
    path = tmp_path / "s2.json"
    path.write_text(json.dumps([{"case_id": "101", "evidence": [3, 4], "tier": "strict"}]), encoding="utf-8")
    assert len(validate_submission(Stage.EVIDENCE, path, cases)) == 1

    path.write_text(json.dumps([{"case_id": "101", "evidence": [9], "tier": "strict"}]), encoding="utf-8")
    with pytest.raises(SchemaViolation):
        validate_submission(Stage.EVIDENCE, path, cases)
    # without a corpus only the schema is checked
    assert validate_submission(Stage.EVIDENCE, path)[0].evidence == (9,)

    path.write_text(json.dumps([{"case_id": "999", "evidence": [1], "tier": "strict"}]), encoding="utf-8")
    with pytest.raises(SchemaViolation):
        validate_submission(Stage.EVIDENCE, path, cases)


def test_alignment_range_against_corpus(tmp_path, cases):
    path = tmp_path / "s4.json"
    path.write_text(
        json.dumps([{"case_id": "103", "alignment": [{"answer_sentence": 1, "evidence": [5]}]}]),
        encoding="utf-8",
    )
    with pytest.raises(SchemaViolation):
        validate_submission(Stage.ALIGN, path, cases)


def test_read_submission_errors(tmp_path):
    with pytest.raises(MissingFile):
        read_submission(Stage.GENERATE, tmp_path / "absent.json")

    path = tmp_path / "bad.json"
    path.write_text("[{", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        read_submission(Stage.GENERATE, path)

    path.write_text(json.dumps({"case_id": "a"}), encoding="utf-8")
    with pytest.raises(SchemaViolation):
        read_submission(Stage.GENERATE, path)


def test_load_answers(tmp_path):
    path = tmp_path / "answers.json"
    path.write_text(
        json.dumps(
            [
                {"case_id": "a", "answer": "The scan was clear. No bleeding was seen."},
                {"case_id": "b", "answer_sentences": ["One.", "  ", "Two."]},
            ]
        ),
        encoding="utf-8",
    )
    answers = load_answers(path)
    assert answers["a"] == ["The scan was clear.", "No bleeding was seen."]
    assert answers["b"] == ["One.", "Two."]


@pytest.mark.parametrize(
    "payload",
    [
        "not json",
        json.dumps({"case_id": "a"}),
        json.dumps([{"answer": "x."}]),
        json.dumps([{"case_id": "a"}]),
        json.dumps([{"case_id": "a", "answer": "   "}]),
    ],
)
def test_load_answers_malformed(tmp_path, payload):
    path = tmp_path / "answers.json"
    path.write_text(payload, encoding="utf-8")
    with pytest.raises(MalformedRecord):
        load_answers(path)

import json

import pytest

from conftest import EVAL_RECORDS, fenced
from tabrl.dataset import load_records
from tabrl.evalharness import (
    PredictionRun,
    emit_report,
    score_run,
    verdict_log_lines,
)
from tabrl.judge import Judge
from tabrl.sandbox import EchoExecutor

# Correct: e1, e2, e4.  Wrong answer: e3.  No code: e5.  Exec failure: e6.
RESPONSES = [
    ("e1", fenced('print("10")')),
    ("e2", fenced('print("20")')),
    ("e3", fenced('print("999")')),
    ("e4", fenced('print("40")')),
    ("e5", "I am unable to write code for this one."),
    ("e6", fenced("raise RuntimeError('boom')")),
]


@pytest.fixture
def record_map(records_path):
    return {r.id: r for r in load_records(records_path) if r.id.startswith("e")}


@pytest.fixture
def report(record_map, dataset_dir):
    run = PredictionRun(entries=RESPONSES, model_name="fixture-model")
    return score_run(
        run,
        record_map,
        EchoExecutor(),
        Judge(),
        workspace_root=str(dataset_dir),
    )


class TestScoreRun:
    def test_overall(self, report):
        assert (report.correct, report.total) == (3, 6)
        assert report.overall == pytest.approx(0.5)

    def test_language_strata(self, report):
        en = report.by_language["en"]
        zh = report.by_language["zh"]
        assert (en.correct, en.total) == (2, 3)
        assert (zh.correct, zh.total) == (1, 3)

    def test_question_difficulty_strata(self, report):
        cells = report.by_question_difficulty
        assert (cells["easy"].correct, cells["easy"].total) == (2, 2)
        assert (cells["medium"].correct, cells["medium"].total) == (1, 2)
        assert (cells["hard"].correct, cells["hard"].total) == (0, 2)

    def test_table_difficulty_strata(self, report):
        cells = report.by_table_difficulty
        assert (cells["simple"].correct, cells["simple"].total) == (2, 2)
        assert (cells["medium"].correct, cells["medium"].total) == (1, 2)
        assert (cells["complex"].correct, cells["complex"].total) == (0, 2)

    def test_stages(self, report):
        stages = {v.record_id: v.stage for v in report.verdicts}
        assert stages["e5"] == "no_code"
        assert stages["e6"] == "exec_error"
        assert stages["e1"] == "exact"
        # A wrong numeric answer falls past exact match into the numeric stage.
        assert stages["e3"] == "numeric"

    def test_strata_sum_to_overall(self, report):
        for axis in ("by_language", "by_question_difficulty", "by_table_difficulty"):
            cells = getattr(report, axis).values()
            assert sum(c.correct for c in cells) == report.correct
            assert sum(c.total for c in cells) == report.total

    def test_unknown_record_is_per_entry_error(self, record_map, dataset_dir):
        run = PredictionRun(entries=[("ghost", fenced('print("1")'))])
        report = score_run(
            run, record_map, EchoExecutor(), Judge(), workspace_root=str(dataset_dir)
        )
        assert report.total == 1 and report.correct == 0
        assert report.verdicts[0].error == "unknown record"

    def test_empty_run_rejected(self, record_map):
        with pytest.raises(ValueError):
            score_run(
                PredictionRun(entries=[]), record_map, EchoExecutor(), Judge()
            )

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            PredictionRun(entries=[("a", "x"), ("a", "y")])


class TestEmission:
    def test_json_report(self, report):
        payload = json.loads(emit_report(report, "json"))
        assert payload["model"] == "fixture-model"
        assert payload["overall"] == pytest.approx(0.5)
        assert payload["by_language"]["en"]["correct"] == 2
        assert payload["by_table_difficulty"]["complex"]["accuracy"] == 0.0

    def test_json_deterministic(self, report):
        assert emit_report(report, "json") == emit_report(report, "json")

    def test_markdown_row(self, report):
        lines = emit_report(report, "markdown").splitlines()
        assert lines[0].startswith("| Model | Overall |")
        assert "| fixture-model | 50.00 |" in lines[2]
        assert "| 66.67 | 33.33 |" in lines[2]  # language columns

    def test_unknown_format_rejected(self, report):
        with pytest.raises(ValueError):
            emit_report(report, "yaml")

    def test_verdict_log(self, report):
        lines = verdict_log_lines(report)
        assert len(lines) == 6
        parsed = [json.loads(line) for line in lines]
        by_id = {p["record_id"]: p for p in parsed}
        assert by_id["e1"]["correct"] is True
        assert by_id["e6"]["stage"] == "exec_error"
        assert set(parsed[0]) == {
            "record_id", "correct", "stage", "answer", "elapsed_s",
        }

"""Stratified accuracy scoring for prediction runs.

Reuses the extraction/execution/judging pipeline so training rewards and
evaluation agree by construction. Reports overall accuracy plus language,
question-difficulty, and table-difficulty strata, and persists per-record
verdicts for error analysis.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .dataset import GoldRecord, Language, QuestionDifficulty, TableDifficulty
from .extraction import extract_code
from .judge import Judge, LlmJudgeError
from .sandbox import ExecLimits, Executor, exec_success, parse_answer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionRun:
    entries: list[tuple[str, str]]  # (record_id, response_text)
    model_name: str = "model"
    timestamp: float = 0.0

    def __post_init__(self):
        ids = [record_id for record_id, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("record_ids must be unique within a run")


@dataclass(frozen=True)
class RecordVerdict:
    record_id: str
    correct: bool
    stage: str
    answer: str
    elapsed_s: float
    error: str = ""


@dataclass
class Cell:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class ScoreReport:
    model_name: str
    overall: float = 0.0
    correct: int = 0
    total: int = 0
    by_language: dict[str, Cell] = field(default_factory=dict)
    by_question_difficulty: dict[str, Cell] = field(default_factory=dict)
    by_table_difficulty: dict[str, Cell] = field(default_factory=dict)
    verdicts: list[RecordVerdict] = field(default_factory=list)


def _score_entry(
    record: GoldRecord,
    response: str,
    workspace: str,
    executor: Executor,
    judge: Judge,
    limits: ExecLimits,
) -> RecordVerdict:
    start = time.monotonic()
    code = extract_code(response)
    if code is None:
        return RecordVerdict(record.id, False, "no_code", "", time.monotonic() - start)
    outcome = executor.execute(code, workspace, limits)
    answer = parse_answer(outcome)
    if not exec_success(outcome) or answer is None:
        return RecordVerdict(record.id, False, "exec_error", "", time.monotonic() - start)
    try:
        verdict = judge(answer.text, record.gold_answer, record.question)
    except LlmJudgeError as exc:
        log.warning("judge unavailable for %s: %s", record.id, exc)
        return RecordVerdict(
            record.id, False, "judge_error", answer.text, time.monotonic() - start
        )
    return RecordVerdict(
        record.id,
        verdict.correct,
        verdict.stage.value,
        answer.text,
        time.monotonic() - start,
    )


def score_run(
    run: PredictionRun,
    records: dict[str, GoldRecord],
    executor: Executor,
    judge: Judge,
    *,
    workspace_root: str = "",
    limits: ExecLimits = ExecLimits(),
    max_workers: int = 4,
) -> ScoreReport:
    """Score every entry; missing record ids are per-entry errors, not crashes."""
    if not run.entries:
        raise ValueError("no entries")

    def score(entry: tuple[str, str]) -> RecordVerdict:
        record_id, response = entry
        record = records.get(record_id)
        if record is None:
            return RecordVerdict(record_id, False, "error", "", 0.0, "unknown record")
        workspace = (
            f"{workspace_root}/{record.table_dir}" if workspace_root else record.table_dir
        )
        try:
            return _score_entry(record, response, workspace, executor, judge, limits)
        except Exception as exc:  # infrastructure failure: count incorrect, log
            log.exception("entry %s failed", record_id)
            return RecordVerdict(record_id, False, "error", "", 0.0, str(exc))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        verdicts = list(pool.map(score, run.entries))

    report = ScoreReport(model_name=run.model_name, verdicts=verdicts)
    for axis, values in (
        ("by_language", [lang.value for lang in Language]),
        ("by_question_difficulty", [q.value for q in QuestionDifficulty]),
        ("by_table_difficulty", [t.value for t in TableDifficulty]),
    ):
        getattr(report, axis).update({v: Cell() for v in values})
    for verdict in verdicts:
        report.total += 1
        report.correct += int(verdict.correct)
        record = records.get(verdict.record_id)
        if record is None:
            continue
        for axis, key in (
            ("by_language", record.language.value),
            ("by_question_difficulty", record.question_difficulty.value),
            ("by_table_difficulty", record.table_difficulty.value),
        ):
            cell = getattr(report, axis)[key]
            cell.total += 1
            cell.correct += int(verdict.correct)
    report.overall = report.correct / report.total if report.total else 0.0
    return report


def verdict_log_lines(report: ScoreReport) -> list[str]:
    """JSONL lines for the per-record verdict log."""
    return [
        json.dumps(
            {
                "record_id": v.record_id,
                "correct": v.correct,
                "stage": v.stage,
                "answer": v.answer,
                "elapsed_s": round(v.elapsed_s, 6),
            },
            ensure_ascii=False,
        )
        for v in report.verdicts
    ]


def emit_report(report: ScoreReport, format: str = "json") -> str:
    """Deterministic serialization; markdown mirrors the
    Overall | Language | Question Difficulty | Table Difficulty layout."""
    if format == "json":
        payload = {
            "model": report.model_name,
            "overall": report.overall,
            "correct": report.correct,
            "total": report.total,
            "by_language": {
                k: {"correct": c.correct, "total": c.total, "accuracy": c.accuracy}
                for k, c in report.by_language.items()
            },
            "by_question_difficulty": {
                k: {"correct": c.correct, "total": c.total, "accuracy": c.accuracy}
                for k, c in report.by_question_difficulty.items()
            },
            "by_table_difficulty": {
                k: {"correct": c.correct, "total": c.total, "accuracy": c.accuracy}
                for k, c in report.by_table_difficulty.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    if format == "markdown":
        def pct(cell: Cell) -> str:
            return f"{100 * cell.accuracy:.2f}"

        header = (
            "| Model | Overall | English | Chinese | Easy | Medium | Hard "
            "| Simple | Medium | Complex |"
        )
        rule = "|" + "---|" * 10
        row = "| {} | {:.2f} | {} | {} | {} | {} | {} | {} | {} | {} |".format(
            report.model_name,
            100 * report.overall,
            pct(report.by_language["en"]),
            pct(report.by_language["zh"]),
            pct(report.by_question_difficulty["easy"]),
            pct(report.by_question_difficulty["medium"]),
            pct(report.by_question_difficulty["hard"]),
            pct(report.by_table_difficulty["simple"]),
            pct(report.by_table_difficulty["medium"]),
            pct(report.by_table_difficulty["complex"]),
        )
        return "\n".join([header, rule, row]) + "\n"
    raise ValueError(f"unknown report format: {format}")

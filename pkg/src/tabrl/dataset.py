"""Benchmark record loading, difficulty classification, and splitting.

Records live in JSONL, one object per line, with precomputed structural
flags (multi_table, multi_sheet, complex_header); header-complexity is
annotated, never sniffed. Tables are stored one sheet per file under each
record's table_dir.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .extraction import normalize_path


class Language(str, Enum):
    ZH = "zh"
    EN = "en"


class QuestionDifficulty(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


class TableDifficulty(str, Enum):
    SIMPLE = "simple"
    MEDIUM = "medium"
    COMPLEX = "complex"


class DatasetError(ValueError):
    pass


REQUIRED_FIELDS = (
    "id",
    "language",
    "domain",
    "question",
    "gold_answer",
    "gold_table_paths",
    "table_dir",
    "question_difficulty",
    "table_difficulty",
    "multi_table",
    "multi_sheet",
    "complex_header",
)


@dataclass(frozen=True)
class GoldRecord:
    id: str
    language: Language
    domain: str
    question: str
    gold_answer: str
    gold_table_paths: frozenset[str]
    table_dir: str
    question_difficulty: QuestionDifficulty
    table_difficulty: TableDifficulty
    multi_table: bool = False
    multi_sheet: bool = False
    complex_header: bool = False

    def to_dict(self) -> dict:
        data = asdict(self)
        data["language"] = self.language.value
        data["question_difficulty"] = self.question_difficulty.value
        data["table_difficulty"] = self.table_difficulty.value
        data["gold_table_paths"] = sorted(self.gold_table_paths)
        return data


def classify_table_difficulty(
    multi_table: bool, multi_sheet: bool, complex_header: bool
) -> TableDifficulty:
    """Structural difficulty from the three annotation flags.

    Multi-table directories are always complex; a single extra structural
    feature is medium; both together are complex.
    """
    if multi_table:
        return TableDifficulty.COMPLEX
    if multi_sheet and complex_header:
        return TableDifficulty.COMPLEX
    if multi_sheet or complex_header:
        return TableDifficulty.MEDIUM
    return TableDifficulty.SIMPLE


def _parse_record(obj: dict, line_no: int, root: Optional[Path]) -> GoldRecord:
    for name in REQUIRED_FIELDS:
        if name not in obj:
            raise DatasetError(f"line {line_no}: missing field {name}")
    if not obj["gold_answer"]:
        raise DatasetError(f"line {line_no}: empty gold_answer")
    try:
        record = GoldRecord(
            id=str(obj["id"]),
            language=Language(obj["language"]),
            domain=str(obj["domain"]),
            question=str(obj["question"]),
            gold_answer=str(obj["gold_answer"]),
            gold_table_paths=frozenset(
                normalize_path(p) for p in obj["gold_table_paths"]
            ),
            table_dir=str(obj["table_dir"]),
            question_difficulty=QuestionDifficulty(obj["question_difficulty"]),
            table_difficulty=TableDifficulty(obj["table_difficulty"]),
            multi_table=bool(obj["multi_table"]),
            multi_sheet=bool(obj["multi_sheet"]),
            complex_header=bool(obj["complex_header"]),
        )
    except ValueError as exc:
        raise DatasetError(f"line {line_no}: {exc}") from exc
    if root is not None:
        table_dir = root / record.table_dir
        for path in record.gold_table_paths:
            resolved = table_dir / path
            if not resolved.is_file():
                raise DatasetError(
                    f"line {line_no}: table file not found: {record.table_dir}/{path}"
                )
    return record


def load_records(path: str | Path, check_files: bool = True) -> list[GoldRecord]:
    """Load and validate a JSONL record file.

    Every validation failure names the offending line (and field or path).
    table_dir entries are resolved relative to the record file's directory.
    """
    path = Path(path)
    root = path.parent if check_files else None
    records: list[GoldRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {line_no}: invalid JSON: {exc}") from exc
            records.append(_parse_record(obj, line_no, root))
    return records


def split_records(
    records: Sequence[GoldRecord],
    ratios: tuple[float, float] = (0.8, 0.2),
    seed: int = 0,
    bifurcate_train: bool = False,
):
    """Deterministic seeded shuffle then train/test split.

    With bifurcate_train, the train list is further halved into equal
    SFT/RL subsets and (sft, rl, test) is returned.
    """
    if ratios[0] <= 0 or ratios[1] <= 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be positive and sum to 1")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    cut = round(len(shuffled) * ratios[0])
    train, test = shuffled[:cut], shuffled[cut:]
    if not bifurcate_train:
        return train, test
    half = len(train) // 2
    return train[:half], train[half:], test


@dataclass(frozen=True)
class SheetInfo:
    path: str
    rows: int
    cells: int
    has_complex_header: bool


@dataclass(frozen=True)
class TableRegistry:
    """Immutable index of every record's sheet files, built once at load."""

    root: str
    tables: dict[str, list[SheetInfo]]

    def workspace_for(self, record: GoldRecord) -> str:
        return os.path.join(self.root, record.table_dir)


def build_registry(dataset_path: str | Path, records: Sequence[GoldRecord]) -> TableRegistry:
    root = str(Path(dataset_path).parent)
    tables: dict[str, list[SheetInfo]] = {}
    for record in records:
        table_dir = Path(root) / record.table_dir
        sheets = []
        for file in sorted(table_dir.rglob("*")):
            if not file.is_file():
                continue
            rows = file.read_text(encoding="utf-8", errors="replace").count("\n")
            cells = sum(
                line.count(",") + 1
                for line in file.read_text(encoding="utf-8", errors="replace").splitlines()
            )
            sheets.append(
                SheetInfo(
                    path=str(file.relative_to(table_dir)),
                    rows=rows,
                    cells=cells,
                    has_complex_header=record.complex_header,
                )
            )
        tables[record.id] = sheets
    return TableRegistry(root=root, tables=tables)

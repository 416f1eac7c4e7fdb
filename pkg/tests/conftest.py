import json

import pytest

SALES_CSV = "region,amount\nnorth,45\nsouth,40\neast,50\n"

CORRECT_CODE = (
    'import pandas as pd\n'
    'df = pd.read_csv("data/sales.csv")\n'
    'print("135")'
)
WRONG_CODE = CORRECT_CODE.replace('print("135")', 'print("999")')
BROKEN_CODE = (
    'import pandas as pd\n'
    'df = pd.read_csv("data/other.csv")\n'
    "raise ValueError('boom')"
)


def fenced(code: str) -> str:
    return f"Let me work this out.\n```python\n{code}\n```\n"


def make_record(
    record_id,
    language="en",
    qdiff="easy",
    tdiff="simple",
    gold="135",
    question="What is the total amount?",
    **overrides,
):
    record = {
        "id": record_id,
        "language": language,
        "domain": "sales",
        "question": question,
        "gold_answer": gold,
        "gold_table_paths": ["data/sales.csv"],
        "table_dir": "tables/t1",
        "question_difficulty": qdiff,
        "table_difficulty": tdiff,
        "multi_table": False,
        "multi_sheet": False,
        "complex_header": False,
    }
    record.update(overrides)
    return record


EVAL_RECORDS = [
    make_record("e1", language="en", qdiff="easy", tdiff="simple", gold="10"),
    make_record("e2", language="en", qdiff="medium", tdiff="simple", gold="20"),
    make_record("e3", language="en", qdiff="hard", tdiff="medium", gold="30"),
    make_record("e4", language="zh", qdiff="easy", tdiff="medium", gold="40"),
    make_record("e5", language="zh", qdiff="medium", tdiff="complex", gold="50"),
    make_record("e6", language="zh", qdiff="hard", tdiff="complex", gold="60"),
]


@pytest.fixture
def dataset_dir(tmp_path):
    """A tiny on-disk dataset: one reward record plus six evaluation records."""
    table_dir = tmp_path / "tables" / "t1" / "data"
    table_dir.mkdir(parents=True)
    (table_dir / "sales.csv").write_text(SALES_CSV, encoding="utf-8")
    records = [make_record("r1")] + EVAL_RECORDS
    path = tmp_path / "records.jsonl"
    path.write_text(
        "".join(json.dumps(r) + "\n" for r in records), encoding="utf-8"
    )
    return tmp_path


@pytest.fixture
def records_path(dataset_dir):
    return dataset_dir / "records.jsonl"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance pass/fail lines after capture is torn down."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    for line in RESULTS:
        terminalreporter.write_line(line)

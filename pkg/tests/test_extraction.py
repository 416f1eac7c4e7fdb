import re

from hypothesis import given, settings
from hypothesis import strategies as st

from tabrl.extraction import (
    CodeCandidate,
    extract_code,
    extract_table_paths,
    normalize_path,
)


def scan_fence_pairs(response: str):
    """Independent brute-force scanner: every (open, close) line pair."""
    lines = response.split("\n")
    opens = [i for i, line in enumerate(lines) if line == "```python"]
    pairs = []
    for open_idx in opens:
        closes = [
            j for j in range(open_idx + 1, len(lines)) if lines[j] == "```"
        ]
        if closes:
            pairs.append((open_idx, closes[0]))
    return pairs, lines


class TestExtractCode:
    def test_single_block(self):
        response = "text before\n```python\nprint('hi')\n```\nafter"
        candidate = extract_code(response)
        assert candidate is not None
        assert candidate.source == "print('hi')"
        assert candidate.block_index == 0

    def test_no_fence_is_absent(self):
        assert extract_code("just prose, no code here") is None

    def test_unclosed_fence_is_format_error(self):
        assert extract_code("```python\nprint('hi')\n") is None

    def test_first_of_two_blocks_wins(self):
        response = (
            "```python\nblock_a = 1\n```\nmiddle\n```python\nblock_b = 2\n```\n"
        )
        candidate = extract_code(response)
        assert candidate.source == "block_a = 1"
        assert candidate.block_index == 0
        # Brute-force oracle: first complete pair is chosen.
        pairs, lines = scan_fence_pairs(response)
        first_open, first_close = pairs[0]
        assert candidate.source == "\n".join(lines[first_open + 1 : first_close])

    def test_inline_backticks_never_open(self):
        assert extract_code("see ```python inline``` text") is None

    def test_fence_tag_must_be_exact(self):
        assert extract_code("```py\nx = 1\n```") is None
        assert extract_code("``` python\nx = 1\n```") is None

    def test_empty_body(self):
        candidate = extract_code("```python\n```")
        assert candidate is not None
        assert candidate.source == ""

    def test_round_trip_over_span(self):
        response = "prefix\n```python\na = 1\nb = 2\n```\nsuffix"
        candidate = extract_code(response)
        data = response.encode("utf-8")
        start, end = candidate.fence_span
        rewrapped = b"```python\n"
        if candidate.source:
            rewrapped += candidate.source.encode("utf-8") + b"\n"
        rewrapped += b"```"
        assert data[start:end] == rewrapped

    def test_determinism(self):
        response = "```python\nx = 1\n```"
        assert extract_code(response) == extract_code(response)

    @given(st.text(max_size=2000))
    @settings(max_examples=200, deadline=None)
    def test_never_panics(self, response):
        result = extract_code(response)
        if result is not None:
            assert 0 <= result.fence_span[0] < result.fence_span[1]
            assert result.fence_span[1] <= len(response.encode("utf-8"))

    def test_large_adversarial_input(self):
        blob = ("\x00\x01`` `" * 1000 + "\n```python\npayload = 1\n```\n") * 4
        big = "x" * (10 * 1024 * 1024)
        assert extract_code(big) is None
        assert extract_code(blob).source == "payload = 1"


# 20 fixture strings against a hand-written normalization table.
PATH_NORMALIZATION_TABLE = {
    "data/a.csv": "data/a.csv",
    "./data/a.csv": "data/a.csv",
    "data//a.csv": "data/a.csv",
    "./tables//x.csv": "tables/x.csv",
    "tables/./x.csv": "tables/x.csv",
    "a/b/../c.csv": "a/c.csv",
    "data\\a.csv": "data/a.csv",
    ".\\data\\a.csv": "data/a.csv",
    "a.csv": "a.csv",
    "./a.csv": "a.csv",
    "././a.csv": "a.csv",
    "dir/": "dir",
    "./dir/sub/": "dir/sub",
    "a//b//c.csv": "a/b/c.csv",
    "../up.csv": "../up.csv",
    "./../up.csv": "../up.csv",
    "data/2024/q1.csv": "data/2024/q1.csv",
    "data/sales data.csv": "data/sales data.csv",
    "表格/数据.csv": "表格/数据.csv",
    ".": "",
}


class TestExtractTablePaths:
    def test_literal_reads_extracted(self):
        code = (
            "import pandas as pd\n"
            'a = pd.read_csv("data/a.csv")\n'
            "b = pd.read_csv('data/b.csv')\n"
        )
        assert extract_table_paths(code) == {"data/a.csv", "data/b.csv"}

    def test_variable_argument_excluded(self):
        assert extract_table_paths("path = get()\ndf = pd.read_csv(path)\n") == set()

    def test_normalization(self):
        assert extract_table_paths('pd.read_csv("./tables//x.csv")') == {"tables/x.csv"}

    def test_normalizer_fixture_table(self):
        for raw, expected in PATH_NORMALIZATION_TABLE.items():
            assert normalize_path(raw) == expected, raw

    def test_bare_read_csv_matches(self):
        assert extract_table_paths('read_csv("t.csv")') == {"t.csv"}

    def test_other_identifiers_do_not_match(self):
        assert extract_table_paths('myread_csv("t.csv")') == set()

    def test_custom_read_calls(self):
        code = 'pl.scan_csv("x.csv")'
        assert extract_table_paths(code) == set()
        assert extract_table_paths(code, read_calls=("pl.scan_csv",)) == {"x.csv"}

    def test_unparseable_code_yields_empty_set(self):
        assert extract_table_paths("(((((") == set()

    @given(st.text(alphabet=st.characters(codec="utf-8"), max_size=500))
    @settings(max_examples=100, deadline=None)
    def test_monotone_substring(self, code):
        for path in extract_table_paths(code):
            # Pre-normalization literal must occur in the code text.
            assert re.search(r"read_csv", code)

    def test_candidate_object_accepted(self):
        candidate = CodeCandidate('pd.read_csv("a.csv")', (0, 0), 0)
        assert extract_table_paths(candidate) == {"a.csv"}

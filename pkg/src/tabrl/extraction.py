"""Parse a rollout's free-text response into its code candidate and table paths.

Everything here is purely lexical: no filesystem access, no parsing of the
surrounding prose. Fence matching is line-anchored so inline backticks never
open a block.
"""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass
from typing import Optional

# Opening fence must be exactly this, alone on its line.
OPEN_FENCE = b"```python"
CLOSE_FENCE = b"```"

# Default set of table-read call names whose first string-literal argument
# counts as a referenced table path. Overridable via `extraction.read_calls`.
DEFAULT_READ_CALLS = ("pd.read_csv", "read_csv")

_STRING_LITERAL = r"[rRbBuUfF]{0,2}('(?:[^'\\\n]|\\.)*'|\"(?:[^\"\\\n]|\\.)*\")"


@dataclass(frozen=True)
class CodeCandidate:
    """The fenced code body extracted from a response.

    ``fence_span`` is a byte-offset pair into the UTF-8 encoded response
    covering the whole fenced block, delimiters included; ``source``
    excludes the delimiters.
    """

    source: str
    fence_span: tuple[int, int]
    block_index: int


def extract_code(response: str) -> Optional[CodeCandidate]:
    """Return the first complete fenced code block, or None.

    A block opens with a line that is exactly ```python and closes with a
    line that is exactly ``` (optionally at end-of-input without a trailing
    newline). An opening fence with no closing fence is a format error and
    yields None.
    """
    data = response.encode("utf-8")
    offset = 0
    open_start = body_start = None
    for line in data.splitlines(keepends=True):
        content = line.rstrip(b"\n")
        if open_start is None:
            if content == OPEN_FENCE:
                open_start = offset
                body_start = offset + len(line)
        elif content == CLOSE_FENCE:
            body = data[body_start:offset]
            if body.endswith(b"\n"):
                body = body[:-1]
            span = (open_start, offset + len(content))
            return CodeCandidate(
                source=body.decode("utf-8", errors="replace"),
                fence_span=span,
                block_index=0,
            )
        offset += len(line)
    return None


def normalize_path(path: str) -> str:
    """Lexically canonicalize a table path: "/" separators, no "./" or "//"."""
    norm = posixpath.normpath(path.replace("\\", "/"))
    return "" if norm == "." else norm


def extract_table_paths(
    code: CodeCandidate | str,
    read_calls: tuple[str, ...] = DEFAULT_READ_CALLS,
) -> set[str]:
    """Collect the normalized string-literal first arguments of table-read calls.

    Paths built from variables or concatenation are never extracted;
    unparseable code simply yields the empty set.
    """
    source = code.source if isinstance(code, CodeCandidate) else code
    paths: set[str] = set()
    for name in read_calls:
        pattern = re.compile(
            r"(?<![\w.])" + re.escape(name) + r"\s*\(\s*" + _STRING_LITERAL
        )
        for match in pattern.finditer(source):
            literal = match.group(1)[1:-1]
            norm = normalize_path(literal)
            if norm:
                paths.add(norm)
    return paths

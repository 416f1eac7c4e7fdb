"""Isolated, resource-limited execution of candidate code against a table workspace.

The orchestrator copies the workspace per execution so generated code can
never corrupt shared fixtures, writes the candidate to
``<workspace>/__candidate__.src``, and launches the runner process with
``--code __candidate__.src --cwd <workspace>``. That protocol is the only
channel to the runner.

Kernel-grade sandboxing (seccomp, jails) is explicitly out of scope; the
isolation here is process + workspace-copy level.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol

from .extraction import CodeCandidate

CANDIDATE_FILENAME = "__candidate__.src"


@dataclass(frozen=True)
class ExecLimits:
    wall_timeout: float = 30.0
    max_stdout: int = 1 << 20
    max_memory: int = 0  # advisory; 0 = unlimited
    network_allowed: bool = False

    def __post_init__(self):
        if self.wall_timeout <= 0:
            raise ValueError("wall_timeout must be positive")
        if self.max_stdout <= 0:
            raise ValueError("max_stdout must be positive")


@dataclass(frozen=True)
class ExecOutcome:
    exit_ok: bool
    stdout: str
    stderr: str
    wall_time: float = 0.0
    timed_out: bool = False
    runner_protocol_error: bool = False


@dataclass(frozen=True)
class ParsedAnswer:
    text: str
    source_line_index: int


class Executor(Protocol):
    """Anything that can run a code candidate against a workspace."""

    def execute(
        self, code: CodeCandidate | str, workspace: str, limits: ExecLimits
    ) -> ExecOutcome: ...


def exec_success(outcome: ExecOutcome) -> bool:
    """Execution counts as producing output only when it exited cleanly,
    printed something non-whitespace, and hit no timeout or protocol error."""
    return (
        outcome.exit_ok
        and bool(outcome.stdout.strip())
        and not outcome.timed_out
        and not outcome.runner_protocol_error
    )


def parse_answer(outcome: ExecOutcome) -> Optional[ParsedAnswer]:
    """The candidate answer is the last non-empty stdout line, trimmed."""
    if not exec_success(outcome):
        return None
    lines = outcome.stdout.splitlines()
    for index in range(len(lines) - 1, -1, -1):
        text = lines[index].strip()
        if text:
            return ParsedAnswer(text=text, source_line_index=index)
    return None


def default_runner_cmd() -> list[str]:
    return [sys.executable, "-m", "tabrl_runner"]


class SandboxExecutor:
    """Runs candidates through the external runner under a bounded pool.

    Each execution owns a throwaway copy of the workspace; the original is
    never mutated. Safe to share across threads.
    """

    def __init__(
        self,
        runner_cmd: Optional[list[str]] = None,
        max_concurrent: Optional[int] = None,
    ):
        self.runner_cmd = list(runner_cmd) if runner_cmd else default_runner_cmd()
        slots = max_concurrent or os.cpu_count() or 4
        self._pool = threading.BoundedSemaphore(slots)

    def execute(
        self, code: CodeCandidate | str, workspace: str, limits: ExecLimits
    ) -> ExecOutcome:
        source = code.source if isinstance(code, CodeCandidate) else code
        with self._pool:
            return self._execute(source, workspace, limits)

    def _execute(self, source: str, workspace: str, limits: ExecLimits) -> ExecOutcome:
        scratch = tempfile.mkdtemp(prefix="tabrl-exec-")
        try:
            ws = os.path.join(scratch, "ws")
            shutil.copytree(workspace, ws)
            code_path = os.path.join(ws, CANDIDATE_FILENAME)
            with open(code_path, "w", encoding="utf-8") as fh:
                fh.write(source)
            argv = self.runner_cmd + ["--code", CANDIDATE_FILENAME, "--cwd", ws]
            start = time.monotonic()
            try:
                proc = subprocess.run(
                    argv,
                    cwd=ws,
                    capture_output=True,
                    timeout=limits.wall_timeout,
                )
            except subprocess.TimeoutExpired as exc:
                return ExecOutcome(
                    exit_ok=False,
                    stdout=_decode(exc.stdout, limits.max_stdout),
                    stderr=_decode(exc.stderr, limits.max_stdout),
                    wall_time=time.monotonic() - start,
                    timed_out=True,
                )
            except FileNotFoundError:
                return ExecOutcome(
                    exit_ok=False,
                    stdout="",
                    stderr="runner executable not found",
                    wall_time=time.monotonic() - start,
                    runner_protocol_error=True,
                )
            stderr = _decode(proc.stderr, limits.max_stdout)
            protocol_error = proc.returncode == 2 or (
                proc.returncode != 0 and "No module named" in stderr
            )
            return ExecOutcome(
                exit_ok=proc.returncode == 0,
                stdout=_decode(proc.stdout, limits.max_stdout),
                stderr=stderr,
                wall_time=time.monotonic() - start,
                runner_protocol_error=protocol_error,
            )
        finally:
            shutil.rmtree(scratch, ignore_errors=True)


def _decode(raw: Optional[bytes], limit: int) -> str:
    if not raw:
        return ""
    return raw[:limit].decode("utf-8", errors="replace")


@dataclass
class ScriptedExecutor:
    """Mock executor keyed on exact code source; zero child processes."""

    script: dict[str, ExecOutcome] = field(default_factory=dict)
    default: ExecOutcome = ExecOutcome(exit_ok=False, stdout="", stderr="unscripted")

    def execute(self, code, workspace, limits) -> ExecOutcome:
        source = code.source if isinstance(code, CodeCandidate) else code
        return self.script.get(source, self.default)


class EchoExecutor:
    """Deterministic in-process mock: replays the candidate's literal prints.

    A candidate containing a bare ``raise`` statement fails with non-zero
    exit; otherwise stdout is the concatenation of every string/number
    literal printed via print(...). Used by the simulator and the
    mock-executor service mode.
    """

    _PRINT = re.compile(r"print\(\s*(?:[fF]?(['\"])(.*?)\1|([-+]?\d[\d_.]*))\s*\)")
    _RAISE = re.compile(r"(?m)^\s*raise\b")

    def execute(self, code, workspace, limits) -> ExecOutcome:
        source = code.source if isinstance(code, CodeCandidate) else code
        if self._RAISE.search(source):
            return ExecOutcome(
                exit_ok=False, stdout="", stderr="Exception: simulated failure"
            )
        lines = []
        for match in self._PRINT.finditer(source):
            lines.append(match.group(2) if match.group(2) is not None else match.group(3))
        stdout = "".join(line + "\n" for line in lines)
        return ExecOutcome(exit_ok=True, stdout=stdout[: limits.max_stdout], stderr="")

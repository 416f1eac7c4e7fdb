"""Binary answer correctness via a cheap-to-expensive cascade.

Stage 1 is normalized string equality, stage 2 a relative-tolerance numeric
comparison, stage 3 an optional external LLM judge. The first passing stage
wins; the cascade exists so reward loops stay fast while evaluation can
still fall back to the LLM verdict.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import httpx

log = logging.getLogger(__name__)

_NUMERIC = re.compile(r"[-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|[-+]?\.\d+")


class JudgeStage(str, Enum):
    EXACT = "exact"
    NUMERIC = "numeric"
    LLM = "llm"


@dataclass(frozen=True)
class Verdict:
    correct: bool
    stage: JudgeStage
    rationale: str = ""


@dataclass(frozen=True)
class JudgeConfig:
    relative_tolerance: float = 0.005
    use_llm_judge: bool = False
    llm_endpoint: str = ""
    cache_enabled: bool = True

    def __post_init__(self):
        if self.relative_tolerance < 0:
            raise ValueError("relative_tolerance must be non-negative")


class LlmJudgeError(Exception):
    """The external judge could not produce a verdict.

    Deliberately distinct from an "incorrect" verdict; callers decide
    policy (the reward pipeline maps it to incorrect and logs).
    """


def normalize(answer: str) -> str:
    """Canonicalize an answer string for exact comparison.

    Trims, case-folds, collapses internal whitespace, strips a single
    trailing period, and canonicalizes pure numerics (thousands separators
    removed, trailing fractional zeros dropped).
    """
    text = " ".join(answer.split()).casefold()
    if text.endswith("."):
        text = text[:-1]
    if _NUMERIC.fullmatch(text):
        text = text.replace(",", "")
        if "." in text:
            text = text.rstrip("0").rstrip(".")
    return text


def parse_number(answer: str) -> Optional[float]:
    """Parse an answer as a single number, or None."""
    text = " ".join(answer.split())
    if text.endswith("."):
        text = text[:-1]
    if not _NUMERIC.fullmatch(text):
        return None
    try:
        return float(text.replace(",", ""))
    except ValueError:
        return None


def numbers_match(a: float, b: float, tolerance: float) -> bool:
    """Symmetric relative comparison; absolute when either side is zero."""
    if a == b:
        return True
    if a == 0.0 or b == 0.0:
        return abs(a - b) <= tolerance
    return abs(a - b) / max(abs(a), abs(b)) <= tolerance


class LlmJudgeClient:
    """HTTP client for the external binary judge.

    Wire format: POST {"question","gold","candidate"} ->
    {"verdict":"CORRECT"|"INCORRECT"}. Bounded in-flight requests,
    exponential backoff on transport errors, one retry on a malformed
    verdict, and a read-through cache keyed by the full query triple.
    """

    def __init__(
        self,
        endpoint: Optional[str] = None,
        token: Optional[str] = None,
        *,
        max_inflight: int = 8,
        retries: int = 3,
        backoff: float = 0.5,
        cache_enabled: bool = True,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint or os.environ.get("JUDGE_URL", "")
        token = token if token is not None else os.environ.get("JUDGE_TOKEN", "")
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(headers=headers, transport=transport)
        self._inflight = threading.BoundedSemaphore(max_inflight)
        self._retries = retries
        self._backoff = backoff
        self._cache_enabled = cache_enabled
        self._cache: dict[tuple[str, str, str], bool] = {}
        self._lock = threading.Lock()

    def verdict(self, question: str, gold: str, candidate: str) -> bool:
        if not self.endpoint:
            raise LlmJudgeError("no judge endpoint configured (JUDGE_URL)")
        key = (question, gold, candidate)
        if self._cache_enabled:
            with self._lock:
                if key in self._cache:
                    return self._cache[key]
        result = self._query(question, gold, candidate)
        if self._cache_enabled:
            with self._lock:
                self._cache[key] = result
        return result

    def _query(self, question: str, gold: str, candidate: str) -> bool:
        body = {"question": question, "gold": gold, "candidate": candidate}
        malformed_retry = False
        last_error: Exception | None = None
        for attempt in range(self._retries + 1):
            try:
                with self._inflight:
                    reply = self._client.post(self.endpoint, json=body)
                reply.raise_for_status()
                verdict = reply.json().get("verdict")
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
                time.sleep(self._backoff * (2**attempt))
                continue
            if verdict == "CORRECT":
                return True
            if verdict == "INCORRECT":
                return False
            if malformed_retry:
                raise LlmJudgeError(f"malformed judge verdict: {verdict!r}")
            malformed_retry = True
        raise LlmJudgeError(f"judge unreachable after retries: {last_error}")


@dataclass
class Judge:
    """The full cascade; thread-safe."""

    config: JudgeConfig = field(default_factory=JudgeConfig)
    llm_client: Optional[LlmJudgeClient] = None

    def __call__(self, candidate: str, gold: str, question: str = "") -> Verdict:
        if not gold:
            raise ValueError("gold answer must be non-empty")
        if normalize(candidate) == normalize(gold):
            return Verdict(correct=True, stage=JudgeStage.EXACT)
        a, b = parse_number(candidate), parse_number(gold)
        if a is not None and b is not None:
            ok = numbers_match(a, b, self.config.relative_tolerance)
            if ok or not self.config.use_llm_judge:
                return Verdict(correct=ok, stage=JudgeStage.NUMERIC)
        if self.config.use_llm_judge:
            client = self.llm_client or LlmJudgeClient(
                endpoint=self.config.llm_endpoint or None,
                cache_enabled=self.config.cache_enabled,
            )
            if self.llm_client is None:
                self.llm_client = client
            correct = client.verdict(question, gold, candidate)
            rationale = "llm verdict CORRECT" if correct else "llm verdict INCORRECT"
            return Verdict(correct=correct, stage=JudgeStage.LLM, rationale=rationale)
        stage = JudgeStage.NUMERIC if (a is not None and b is not None) else JudgeStage.EXACT
        return Verdict(correct=False, stage=stage)

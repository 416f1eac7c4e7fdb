"""Desk-scale training-loop simulator.

A scripted stochastic policy emits rollouts from four outcome classes
(correct code, wrong-answer code, broken code, no code) and drives the
real scoring pipeline with the in-process echo executor, validating group
filtering and advantage dynamics without any model. The wrong-answer
template is a one-token mutation of the correct template so the
similarity reward is genuinely exercised (high but below 1).
"""

from __future__ import annotations

import csv
import functools
import io
import random
from dataclasses import dataclass
from typing import Sequence

from . import codesim
from .dataset import GoldRecord
from .judge import Judge
from .rewards import RewardConfig, score_group
from .rlmath import Rollout
from .sandbox import EchoExecutor, ExecLimits

OUTCOMES = ("correct_code", "wrong_answer_code", "broken_code", "no_code")


@dataclass(frozen=True)
class ScriptedPolicy:
    p_correct: float = 0.5
    p_wrong: float = 0.3
    p_broken: float = 0.1
    p_no_code: float = 0.1
    seed: int = 0

    def __post_init__(self):
        total = self.p_correct + self.p_wrong + self.p_broken + self.p_no_code
        if abs(total - 1.0) > 1e-9:
            raise ValueError("outcome probabilities must sum to 1")

    def weights(self) -> tuple[float, float, float, float]:
        return (self.p_correct, self.p_wrong, self.p_broken, self.p_no_code)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    groups_kept: int
    filter_rate: float
    mean_total_reward: float
    mean_advantage_abs: float


def _fence(code: str) -> str:
    return f"Here is my solution.\n```python\n{code}\n```\n"


def response_for(outcome: str, record: GoldRecord) -> str:
    path = sorted(record.gold_table_paths)[0] if record.gold_table_paths else "data.csv"
    correct = (
        f'import pandas as pd\ndf = pd.read_csv("{path}")\n'
        f'print("{record.gold_answer}")'
    )
    if outcome == "correct_code":
        return _fence(correct)
    if outcome == "wrong_answer_code":
        return _fence(correct.replace(f'print("{record.gold_answer}")', 'print("wrong")'))
    if outcome == "broken_code":
        return _fence(
            f'import pandas as pd\ndf = pd.read_csv("{path}")\n'
            "raise ValueError('boom')"
        )
    if outcome == "no_code":
        return "I am not sure how to answer this one."
    raise ValueError(f"unknown outcome class: {outcome}")


@functools.lru_cache(maxsize=4096)
def _cached_codebleu(candidate: str, reference: str) -> float:
    return codesim.codebleu(candidate, [reference])


def run_sim(
    policy: ScriptedPolicy,
    records: Sequence[GoldRecord],
    G: int = 4,
    epochs: int = 1,
    repeats: int = 1,
    reward_cfg: RewardConfig = RewardConfig(),
) -> list[EpochStats]:
    """Sample, score, and filter `repeats` groups per record per epoch.

    Deterministic per policy seed: one RNG drives all outcome draws in
    order, and scoring itself is deterministic.
    """
    if G < 2:
        raise ValueError("G must be >= 2")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    rng = random.Random(policy.seed)
    executor = EchoExecutor()
    judge = Judge()
    limits = ExecLimits()
    stats: list[EpochStats] = []
    for epoch in range(epochs):
        total_groups = kept = reward_count = 0
        reward_total = 0.0
        adv_sum = 0.0
        adv_count = 0
        for record in records:
            for _ in range(repeats):
                outcomes = rng.choices(OUTCOMES, weights=policy.weights(), k=G)
                rollouts = [
                    Rollout(
                        id=f"e{epoch}-{record.id}-{i}",
                        response=response_for(outcome, record),
                        token_count=max(1, len(response_for(outcome, record)) // 4),
                    )
                    for i, outcome in enumerate(outcomes)
                ]
                group = score_group(
                    rollouts,
                    gold_answer=record.gold_answer,
                    gold_table_paths=set(record.gold_table_paths),
                    question=record.question,
                    executor=executor,
                    judge=judge,
                    reward_cfg=reward_cfg,
                    limits=limits,
                    similarity=_cached_codebleu,
                    max_workers=1,
                )
                total_groups += 1
                reward_total += sum(group.rewards)
                reward_count += len(group.rewards)
                if group.keep:
                    kept += 1
                    adv_sum += sum(abs(a) for a in group.advantages)
                    adv_count += len(group.advantages)
        stats.append(
            EpochStats(
                epoch=epoch,
                groups_kept=kept,
                filter_rate=1.0 - kept / total_groups if total_groups else 0.0,
                mean_total_reward=reward_total / reward_count if reward_count else 0.0,
                mean_advantage_abs=adv_sum / adv_count if adv_count else 0.0,
            )
        )
    return stats


def stats_csv(stats: Sequence[EpochStats]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["epoch", "groups_kept", "filter_rate", "mean_total_reward", "mean_advantage_abs"]
    )
    for s in stats:
        writer.writerow(
            [s.epoch, s.groups_kept, s.filter_rate, s.mean_total_reward, s.mean_advantage_abs]
        )
    return out.getvalue()

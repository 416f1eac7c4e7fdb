"""Per-rollout reward computation and group scoring.

Three reward channels: a staged piecewise reward over format validity /
execution success / answer correctness, an F1 over the table paths the
code touches versus the annotated gold paths, and an inner-group code
similarity reward that pulls incorrect code toward the group's correct
solutions. The total is r_piece + lambda1 * r_table + lambda2 * r_sim.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from . import codesim
from .extraction import DEFAULT_READ_CALLS, extract_code, extract_table_paths
from .judge import Judge, LlmJudgeError
from .rlmath import Rollout, RolloutGroup, dynamic_sampling_keep, group_advantages
from .sandbox import ExecLimits, Executor, exec_success, parse_answer

log = logging.getLogger(__name__)

SimilarityFn = Callable[[str, str], float]


class RewardStage(str, Enum):
    FORMAT_ERROR = "format_error"
    EXEC_ERROR = "exec_error"
    WRONG_ANSWER = "wrong_answer"
    CORRECT = "correct"


@dataclass(frozen=True)
class RewardConfig:
    lambda1: float = 0.5
    lambda2: float = 1.0
    piecewise_levels: tuple[float, float, float, float] = (0.0, 0.5, 1.0, 3.0)

    def __post_init__(self):
        levels = self.piecewise_levels
        if not all(a < b for a, b in zip(levels, levels[1:])):
            raise ValueError("piecewise_levels must be strictly increasing")


@dataclass(frozen=True)
class RewardBreakdown:
    r_piece: float
    r_table: float
    r_sim: float
    r_total: float
    stage: RewardStage


def piecewise_reward(
    has_code: bool,
    exec_ok: bool,
    verdict: Optional[bool],
    cfg: RewardConfig = RewardConfig(),
) -> float:
    """Staged reward: no code, code-but-execution-failure, wrong answer,
    correct answer map to the four configured levels in order."""
    levels = cfg.piecewise_levels
    if not has_code:
        return levels[0]
    if not exec_ok:
        return levels[1]
    return levels[3] if verdict else levels[2]


def stage_of(has_code: bool, exec_ok: bool, verdict: Optional[bool]) -> RewardStage:
    if not has_code:
        return RewardStage.FORMAT_ERROR
    if not exec_ok:
        return RewardStage.EXEC_ERROR
    return RewardStage.CORRECT if verdict else RewardStage.WRONG_ANSWER


def table_path_f1(predicted: set[str], gold: set[str]) -> float:
    """F1 between predicted and gold path sets (both assumed normalized).

    Both empty counts as vacuous agreement (1.0); exactly one empty is 0.0.
    """
    if not predicted and not gold:
        return 1.0
    if not predicted or not gold:
        return 0.0
    overlap = len(predicted & gold)
    if overlap == 0:
        return 0.0
    precision = overlap / len(predicted)
    recall = overlap / len(gold)
    return 2 * precision * recall / (precision + recall)


def similarity_rewards(
    codes: Sequence[Optional[str]],
    correct_flags: Sequence[bool],
    sim: SimilarityFn,
) -> tuple[list[float], bool]:
    """Per-rollout similarity rewards for one group.

    Correct rollouts get 1.0; incorrect rollouts with code get the mean
    similarity against the group's correct codes; rollouts without code get
    0.0. Returns (rewards, reference_missing): with no correct code in the
    group (possible only outside the dynamic-sampling filter) every
    incorrect rollout gets 0.0 and the group is flagged.
    """
    references = [
        c for c, ok in zip(codes, correct_flags) if ok and c is not None
    ]
    rewards = []
    for code, ok in zip(codes, correct_flags):
        if ok:
            rewards.append(1.0)
        elif code is None or not references:
            rewards.append(0.0)
        else:
            rewards.append(sum(sim(code, ref) for ref in references) / len(references))
    return rewards, not references


def total_reward(
    r_piece: float, r_table: float, r_sim: float, cfg: RewardConfig = RewardConfig()
) -> float:
    return r_piece + cfg.lambda1 * r_table + cfg.lambda2 * r_sim


def default_similarity(keywords: frozenset[str] = codesim.DEFAULT_KEYWORDS) -> SimilarityFn:
    def sim(candidate: str, reference: str) -> float:
        return codesim.codebleu(candidate, [reference], keywords=keywords)

    return sim


def score_group(
    rollouts: Sequence[Rollout],
    *,
    gold_answer: str,
    gold_table_paths: set[str],
    question: str = "",
    workspace: str = "",
    executor: Executor,
    judge: Judge,
    reward_cfg: RewardConfig = RewardConfig(),
    limits: ExecLimits = ExecLimits(),
    similarity: Optional[SimilarityFn] = None,
    read_calls: tuple[str, ...] = DEFAULT_READ_CALLS,
    sigma_floor: float = 1e-6,
    max_workers: Optional[int] = None,
) -> RolloutGroup:
    """Run extraction -> execution -> judging -> rewards for a whole group.

    The similarity pass runs after every rollout's correctness flag is
    final. Infrastructure errors (executor, judge) degrade the affected
    rollout to a stage-appropriate failure; the group always completes.
    """
    if not rollouts:
        raise ValueError("group must contain at least one rollout")
    if not gold_answer:
        raise ValueError("gold answer must be non-empty")
    sim = similarity or default_similarity()

    def score_one(rollout: Rollout) -> tuple[float, float, Optional[bool]]:
        rollout.code = extract_code(rollout.response)
        exec_ok = False
        verdict: Optional[bool] = None
        predicted: set[str] = set()
        if rollout.code is not None:
            predicted = extract_table_paths(rollout.code, read_calls)
            rollout.exec_outcome = executor.execute(rollout.code, workspace, limits)
            exec_ok = exec_success(rollout.exec_outcome)
            rollout.answer = parse_answer(rollout.exec_outcome)
        if exec_ok and rollout.answer is not None:
            try:
                verdict = judge(rollout.answer.text, gold_answer, question).correct
            except LlmJudgeError as exc:
                log.warning("judge unavailable, treating as incorrect: %s", exc)
                verdict = False
        r_piece = piecewise_reward(rollout.code is not None, exec_ok, verdict, reward_cfg)
        r_table = table_path_f1(predicted, gold_table_paths)
        return r_piece, r_table, verdict

    workers = max_workers or min(8, len(rollouts))
    if workers > 1 and len(rollouts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(score_one, rollouts))
    else:
        partials = [score_one(r) for r in rollouts]

    levels = reward_cfg.piecewise_levels
    correct_flags = [r_piece == levels[3] for r_piece, _, _ in partials]
    codes = [r.code.source if r.code is not None else None for r in rollouts]
    sims, reference_missing = similarity_rewards(codes, correct_flags, sim)

    totals = []
    for rollout, (r_piece, r_table, verdict), r_sim, correct in zip(
        rollouts, partials, sims, correct_flags
    ):
        r_total = total_reward(r_piece, r_table, r_sim, reward_cfg)
        has_code = rollout.code is not None
        exec_ok = rollout.exec_outcome is not None and exec_success(rollout.exec_outcome)
        rollout.breakdown = RewardBreakdown(
            r_piece=r_piece,
            r_table=r_table,
            r_sim=r_sim,
            r_total=r_total,
            stage=stage_of(has_code, exec_ok, verdict),
        )
        totals.append(r_total)

    mu, sigma, advantages = group_advantages(totals, sigma_floor)
    return RolloutGroup(
        rollouts=list(rollouts),
        rewards=totals,
        correct_flags=correct_flags,
        mu=mu,
        sigma=sigma,
        advantages=advantages,
        keep=dynamic_sampling_keep(correct_flags),
        sim_reference_missing=reference_missing,
    )

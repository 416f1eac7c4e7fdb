"""Group-relative advantage math as verifiable pure functions.

Covers group normalization of rewards, the dynamic-sampling keep rule that
discards all-correct and all-wrong groups, the clipped surrogate term with
decoupled clip bounds, and token-weighted aggregation. No optimizer state,
no gradients: token counts and probability ratios are supplied by the
caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .extraction import CodeCandidate
from .sandbox import ExecOutcome, ParsedAnswer


@dataclass(frozen=True)
class ClipConfig:
    eps_low: float = 0.2
    eps_high: float = 0.28
    sigma_floor: float = 1e-6

    def __post_init__(self):
        if self.eps_low <= 0 or self.eps_high <= 0:
            raise ValueError("clip bounds must be positive")


@dataclass
class Rollout:
    """One candidate response with everything derived from it.

    token_count is supplied by the caller; tokenization is model-specific
    and out of scope here.
    """

    id: str
    response: str
    token_count: int = 1
    code: Optional[CodeCandidate] = None
    exec_outcome: Optional[ExecOutcome] = None
    answer: Optional[ParsedAnswer] = None
    breakdown: Optional["RewardBreakdown"] = None  # set by rewards.score_group

    def __post_init__(self):
        if self.token_count < 1:
            raise ValueError("token_count must be >= 1")


@dataclass
class RolloutGroup:
    """G scored rollouts for one record, with group-normalized advantages."""

    rollouts: list[Rollout]
    rewards: list[float] = field(default_factory=list)
    correct_flags: list[bool] = field(default_factory=list)
    mu: float = 0.0
    sigma: float = 0.0
    advantages: list[float] = field(default_factory=list)
    keep: bool = False
    sim_reference_missing: bool = False


def group_advantages(
    rewards: Sequence[float], sigma_floor: float = 1e-6
) -> tuple[float, float, list[float]]:
    """Normalize rewards within a group: (R_i - mean) / (pop. std + floor).

    Population (not sample) standard deviation; the additive floor keeps
    the expression continuous through degenerate all-equal groups.
    """
    if not rewards:
        raise ValueError("rewards must be non-empty")
    n = len(rewards)
    mu = sum(rewards) / n
    sigma = math.sqrt(sum((r - mu) ** 2 for r in rewards) / n)
    denom = sigma + sigma_floor
    if denom == 0.0:
        # All-equal group with no floor: every deviation is exactly zero.
        advantages = [0.0 for _ in rewards]
    else:
        advantages = [(r - mu) / denom for r in rewards]
    return mu, sigma, advantages


def dynamic_sampling_keep(correct_flags: Sequence[bool]) -> bool:
    """Keep a group only when 0 < |correct| < G."""
    if not correct_flags:
        raise ValueError("correct_flags must be non-empty")
    count = sum(bool(f) for f in correct_flags)
    return 0 < count < len(correct_flags)


def clipped_surrogate_term(
    ratio: float, advantage: float, cfg: ClipConfig = ClipConfig()
) -> float:
    """min(ratio * A, clip(ratio, 1 - eps_low, 1 + eps_high) * A)."""
    if ratio <= 0:
        raise ValueError("probability ratio must be positive")
    clipped = min(max(ratio, 1.0 - cfg.eps_low), 1.0 + cfg.eps_high)
    return min(ratio * advantage, clipped * advantage)


def token_weighted_objective(per_token_terms: Sequence[Sequence[float]]) -> float:
    """Sum of all per-token terms divided by the group's total token count."""
    total_tokens = sum(len(terms) for terms in per_token_terms)
    if total_tokens == 0:
        raise ValueError("at least one token required")
    return sum(sum(terms) for terms in per_token_terms) / total_tokens

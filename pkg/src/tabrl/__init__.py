"""Verifiable reward engine for table-reasoning code rollouts."""

from .codesim import CodeBleuWeights, codebleu
from .extraction import CodeCandidate, extract_code, extract_table_paths
from .judge import Judge, JudgeConfig, Verdict, normalize
from .rewards import (
    RewardBreakdown,
    RewardConfig,
    RewardStage,
    piecewise_reward,
    score_group,
    table_path_f1,
    total_reward,
)
from .rlmath import (
    ClipConfig,
    Rollout,
    RolloutGroup,
    clipped_surrogate_term,
    dynamic_sampling_keep,
    group_advantages,
    token_weighted_objective,
)
from .sandbox import (
    EchoExecutor,
    ExecLimits,
    ExecOutcome,
    ParsedAnswer,
    SandboxExecutor,
    ScriptedExecutor,
    exec_success,
    parse_answer,
)

__version__ = "0.1.0"

__all__ = [
    "CodeBleuWeights",
    "codebleu",
    "CodeCandidate",
    "extract_code",
    "extract_table_paths",
    "Judge",
    "JudgeConfig",
    "Verdict",
    "normalize",
    "RewardBreakdown",
    "RewardConfig",
    "RewardStage",
    "piecewise_reward",
    "score_group",
    "table_path_f1",
    "total_reward",
    "ClipConfig",
    "Rollout",
    "RolloutGroup",
    "clipped_surrogate_term",
    "dynamic_sampling_keep",
    "group_advantages",
    "token_weighted_objective",
    "EchoExecutor",
    "ExecLimits",
    "ExecOutcome",
    "ParsedAnswer",
    "SandboxExecutor",
    "ScriptedExecutor",
    "exec_success",
    "parse_answer",
]

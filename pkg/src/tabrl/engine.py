"""Engine wiring: configuration, record registry, and group scoring shared
by the HTTP service and the CLI.

Both front ends serialize reward responses through the same function, so
identical inputs yield byte-identical payloads regardless of transport.
"""

from __future__ import annotations

import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import codesim
from .dataset import GoldRecord, load_records
from .extraction import DEFAULT_READ_CALLS
from .judge import Judge, JudgeConfig
from .rewards import RewardConfig, score_group
from .rlmath import Rollout, RolloutGroup
from .sandbox import EchoExecutor, ExecLimits, Executor, SandboxExecutor

ENV_CONFIG = "TABRL_CONFIG"


class UnknownRecordError(KeyError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    dataset: str = ""
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    executor: str = "subprocess"  # or "echo-mock"
    runner_cmd: tuple[str, ...] = ()
    max_concurrent: int = 0  # 0 = logical CPUs
    wall_timeout: float = 30.0
    max_stdout: int = 1 << 20
    read_calls: tuple[str, ...] = DEFAULT_READ_CALLS
    relative_tolerance: float = 0.005
    use_llm_judge: bool = False
    judge_max_inflight: int = 8
    lambda1: float = 0.5
    lambda2: float = 1.0
    piecewise_levels: tuple[float, float, float, float] = (0.0, 0.5, 1.0, 3.0)
    codebleu_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    keywords_file: str = ""
    sigma_floor: float = 1e-6

    def limits(self) -> ExecLimits:
        return ExecLimits(wall_timeout=self.wall_timeout, max_stdout=self.max_stdout)

    def reward_config(self) -> RewardConfig:
        return RewardConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            piecewise_levels=self.piecewise_levels,
        )

    def judge_config(self) -> JudgeConfig:
        return JudgeConfig(
            relative_tolerance=self.relative_tolerance,
            use_llm_judge=self.use_llm_judge,
            llm_endpoint=os.environ.get("JUDGE_URL", ""),
        )


_SECTION_KEYS = {
    ("dataset", "path"): "dataset",
    ("service", "bind_host"): "bind_host",
    ("service", "bind_port"): "bind_port",
    ("sandbox", "executor"): "executor",
    ("sandbox", "runner_cmd"): "runner_cmd",
    ("sandbox", "max_concurrent"): "max_concurrent",
    ("sandbox", "wall_timeout"): "wall_timeout",
    ("sandbox", "max_stdout"): "max_stdout",
    ("extraction", "read_calls"): "read_calls",
    ("judge", "relative_tolerance"): "relative_tolerance",
    ("judge", "use_llm_judge"): "use_llm_judge",
    ("judge", "max_inflight"): "judge_max_inflight",
    ("reward", "lambda1"): "lambda1",
    ("reward", "lambda2"): "lambda2",
    ("reward", "piecewise_levels"): "piecewise_levels",
    ("codesim", "weights"): "codebleu_weights",
    ("codesim", "keywords_file"): "keywords_file",
    ("rlmath", "sigma_floor"): "sigma_floor",
}


def load_config(path: Optional[str] = None, env: Optional[dict] = None) -> EngineConfig:
    """TOML config file plus env-var overrides prefixed TABRL_.

    Env keys look like TABRL_SANDBOX_WALL_TIMEOUT; values are coerced to
    the field's default type.
    """
    env = env if env is not None else dict(os.environ)
    path = path or env.get(ENV_CONFIG)
    overrides: dict = {}
    if path:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for (section, key), attr in _SECTION_KEYS.items():
            if section in data and key in data[section]:
                overrides[attr] = data[section][key]
    for (section, key), attr in _SECTION_KEYS.items():
        env_key = f"TABRL_{section.upper()}_{key.upper()}"
        if env_key in env:
            overrides[attr] = env[env_key]
    defaults = EngineConfig()
    coerced = {}
    for attr, raw in overrides.items():
        default = getattr(defaults, attr)
        coerced[attr] = _coerce(raw, default)
    return EngineConfig(**coerced)


def _coerce(raw, default):
    if isinstance(default, tuple):
        if isinstance(raw, str):
            raw = [part.strip() for part in raw.split(",") if part.strip()]
        element = default[0] if default else ""
        return tuple(type(element)(v) if default else str(v) for v in raw)
    if isinstance(default, bool):
        if isinstance(raw, str):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return bool(raw)
    return type(default)(raw)


def build_executor(config: EngineConfig) -> Executor:
    if config.executor == "echo-mock":
        return EchoExecutor()
    if config.executor == "subprocess":
        return SandboxExecutor(
            runner_cmd=list(config.runner_cmd) or None,
            max_concurrent=config.max_concurrent or None,
        )
    raise ValueError(f"unknown executor kind: {config.executor}")


class RewardEngine:
    """Scores reward-group requests against a loaded record registry."""

    def __init__(
        self,
        config: EngineConfig,
        *,
        executor: Optional[Executor] = None,
        judge: Optional[Judge] = None,
    ):
        self.config = config
        self.records: dict[str, GoldRecord] = {}
        self.dataset_root = ""
        if config.dataset:
            records = load_records(config.dataset)
            self.records = {r.id: r for r in records}
            self.dataset_root = str(Path(config.dataset).parent)
        self.executor = executor or build_executor(config)
        self.judge = judge or Judge(config.judge_config())
        keywords = (
            codesim.load_keywords(config.keywords_file)
            if config.keywords_file
            else codesim.DEFAULT_KEYWORDS
        )
        weights = codesim.CodeBleuWeights(*config.codebleu_weights)

        def similarity(candidate: str, reference: str) -> float:
            return codesim.codebleu(candidate, [reference], weights, keywords=keywords)

        self.similarity = similarity

    def workspace_for(self, record: GoldRecord) -> str:
        return os.path.join(self.dataset_root, record.table_dir)

    def score_request(self, request: dict) -> dict:
        """Score one RewardRequest dict into a RewardResponse dict."""
        record_id = request["record_id"]
        record = self.records.get(record_id)
        if record is None:
            raise UnknownRecordError(record_id)
        cfg = self.config.reward_config()
        if request.get("lambda1") is not None or request.get("lambda2") is not None:
            cfg = RewardConfig(
                lambda1=(
                    request["lambda1"] if request.get("lambda1") is not None else cfg.lambda1
                ),
                lambda2=(
                    request["lambda2"] if request.get("lambda2") is not None else cfg.lambda2
                ),
                piecewise_levels=cfg.piecewise_levels,
            )
        rollouts = [
            Rollout(
                id=str(r["id"]),
                response=r["response_text"],
                token_count=int(r.get("token_count", 1)),
            )
            for r in request["rollouts"]
        ]
        group = score_group(
            rollouts,
            gold_answer=record.gold_answer,
            gold_table_paths=set(record.gold_table_paths),
            question=record.question,
            workspace=self.workspace_for(record),
            executor=self.executor,
            judge=self.judge,
            reward_cfg=cfg,
            limits=self.config.limits(),
            similarity=self.similarity,
            read_calls=self.config.read_calls,
            sigma_floor=self.config.sigma_floor,
        )
        return group_to_response(request.get("group_id", ""), group)


def group_to_response(group_id: str, group: RolloutGroup) -> dict:
    rollouts = []
    for rollout, advantage in zip(group.rollouts, group.advantages):
        breakdown = rollout.breakdown
        rollouts.append(
            {
                "id": rollout.id,
                "r_piece": breakdown.r_piece,
                "r_table": breakdown.r_table,
                "r_sim": breakdown.r_sim,
                "r_total": breakdown.r_total,
                "advantage": advantage,
                "stage": breakdown.stage.value,
            }
        )
    return {
        "group_id": group_id,
        "keep": group.keep,
        "mu": group.mu,
        "sigma": group.sigma,
        "rollouts": rollouts,
    }


def response_to_json(response: dict) -> str:
    """Canonical serialization; shared by service and CLI so payloads are
    byte-identical across transports."""
    return json.dumps(response, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def redacted_config(config: EngineConfig) -> dict:
    data = {
        "dataset": config.dataset,
        "executor": config.executor,
        "wall_timeout": config.wall_timeout,
        "max_stdout": config.max_stdout,
        "read_calls": list(config.read_calls),
        "relative_tolerance": config.relative_tolerance,
        "use_llm_judge": config.use_llm_judge,
        "lambda1": config.lambda1,
        "lambda2": config.lambda2,
        "piecewise_levels": list(config.piecewise_levels),
        "codebleu_weights": list(config.codebleu_weights),
    }
    return data

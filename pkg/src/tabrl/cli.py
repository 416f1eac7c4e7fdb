"""Offline CLI: serve, score, eval, validate-dataset, sim.

Exit codes: 0 full success, 1 partial failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
import time

import click

from .dataset import DatasetError, load_records
from .engine import (
    EngineConfig,
    RewardEngine,
    UnknownRecordError,
    load_config,
    response_to_json,
)
from .evalharness import PredictionRun, emit_report, score_run, verdict_log_lines
from .simloop import ScriptedPolicy, run_sim, stats_csv


@click.group()
def main():
    """Verifiable reward engine for table-reasoning code rollouts."""


def _engine(dataset: str | None, config: str | None, executor: str | None) -> RewardEngine:
    cfg = load_config(config)
    updates = {}
    if dataset:
        updates["dataset"] = dataset
    if executor:
        updates["executor"] = executor
    if updates:
        cfg = EngineConfig(**{**cfg.__dict__, **updates})
    return RewardEngine(cfg)


@main.command()
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--dataset", type=click.Path(exists=True), default=None)
def serve(config, dataset):
    """Run the batch HTTP reward service."""
    from .service import serve as run_service

    run_service(_engine(dataset, config, None))


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--rollouts", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--executor", type=click.Choice(["subprocess", "echo-mock"]), default=None)
def score(dataset, rollouts, out, config, executor):
    """Score rollout groups (one RewardRequest JSON per input line)."""
    engine = _engine(dataset, config, executor)
    partial = False
    lines = []
    with open(rollouts, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                request = json.loads(line)
                response = engine.score_request(request)
                lines.append(response_to_json(response))
            except UnknownRecordError:
                partial = True
                lines.append(
                    json.dumps(
                        {"group_id": request.get("group_id", ""), "error": "unknown record"},
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                partial = True
                lines.append(
                    json.dumps(
                        {"error": f"line {line_no}: {exc}"},
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("".join(line + "\n" for line in lines))
    sys.exit(1 if partial else 0)


@main.command("eval")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--predictions", type=click.Path(exists=True), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "markdown"]), default="markdown")
@click.option("--verdicts", type=click.Path(), default=None, help="Per-record verdict JSONL.")
@click.option("--model-name", default="model")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--executor", type=click.Choice(["subprocess", "echo-mock"]), default=None)
def eval_cmd(dataset, predictions, report_path, fmt, verdicts, model_name, config, executor):
    """Score a prediction run into a stratified accuracy report."""
    engine = _engine(dataset, config, executor)
    entries = []
    with open(predictions, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                entries.append((obj["record_id"], obj["response_text"]))
    run = PredictionRun(entries=entries, model_name=model_name, timestamp=time.time())
    report = score_run(
        run,
        engine.records,
        engine.executor,
        engine.judge,
        workspace_root=engine.dataset_root,
        limits=engine.config.limits(),
    )
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(emit_report(report, fmt))
    if verdicts:
        with open(verdicts, "w", encoding="utf-8") as fh:
            fh.write("".join(line + "\n" for line in verdict_log_lines(report)))
    failed = sum(1 for v in report.verdicts if v.error)
    sys.exit(1 if failed else 0)


@main.command("validate-dataset")
@click.option("--dataset", type=click.Path(exists=True), required=True)
def validate_dataset(dataset):
    """Validate a record file; prints the record count on success."""
    try:
        records = load_records(dataset)
    except DatasetError as exc:
        click.echo(f"invalid dataset: {exc}", err=True)
        sys.exit(1)
    click.echo(f"ok: {len(records)} records")


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("-g", "--group-size", default=4, show_default=True)
@click.option("--epochs", default=1, show_default=True)
@click.option("--repeats", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--p-correct", default=0.5, show_default=True)
@click.option("--p-wrong", default=0.3, show_default=True)
@click.option("--p-broken", default=0.1, show_default=True)
@click.option("--p-no-code", default=0.1, show_default=True)
def sim(dataset, out, group_size, epochs, repeats, seed, p_correct, p_wrong, p_broken, p_no_code):
    """Run the scripted-policy loop simulator; writes epoch stats CSV."""
    records = load_records(dataset)
    policy = ScriptedPolicy(
        p_correct=p_correct,
        p_wrong=p_wrong,
        p_broken=p_broken,
        p_no_code=p_no_code,
        seed=seed,
    )
    stats = run_sim(policy, records, G=group_size, epochs=epochs, repeats=repeats)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(stats_csv(stats))
    for s in stats:
        click.echo(
            f"epoch {s.epoch}: kept {s.groups_kept}, filter_rate {s.filter_rate:.3f}, "
            f"mean_reward {s.mean_total_reward:.3f}"
        )


if __name__ == "__main__":
    main()

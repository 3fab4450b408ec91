"""Command-line entry point.

Subcommands cover the whole pipeline:

    train-classifier   fit the domain classifier on in-domain vs general docs
    score-select       score the general corpus and select by policy
    quality-filter     drop selected docs at or below the quality threshold
    synthesize         generate task-oriented passages via the model gateway
    plan-mixture       emit the two-stage training manifest
    evaluate           auc | winrate | rewrites
    report             render a run-report

All artifacts land in the configured output directory under fixed names
(model.traitft, selected.jsonl, passages.jsonl, manifest.json, report.json).
Every subcommand writes a JSON run-report with input digests, a config echo,
counts, and timings; exit codes are 0 success, 1 usage or config error,
2 data error, 3 gateway failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from .classifier import ClassifierConfig, ClassifierError, DomainNgramClassifier, train
from .config import ConfigError, PipelineConfig
from .corpus import CorpusError, document_to_record, ingest, write_jsonl
from .evaluation import (
    EvaluationError,
    JudgeCase,
    LabeledScore,
    RewriteSet,
    compute_auc,
    compute_density,
    compute_diversity,
    judge_rewrites,
    judge_winrate,
)
from .gateway import GatewayError, GenerationParams, HttpChatGateway, MockChatGateway
from .mixture import MixtureError, ScheduleConfig, plan_two_stage
from .quality import QualityScoreError, make_scorer
from .selection import (
    ScoredDocument,
    SelectionError,
    SelectionPolicy,
    quality_filter,
    score_documents,
    select,
)
from .synthesis import (
    SynthesisError,
    generate_batch,
    passage_to_record,
    requests_from_pools,
)

logger = logging.getLogger(__name__)

MODEL_FILENAME = "model.traitft"
SELECTED_FILENAME = "selected.jsonl"
PASSAGES_FILENAME = "passages.jsonl"
FAILURES_FILENAME = "failures.jsonl"
MANIFEST_FILENAME = "manifest.json"
REPORT_FILENAME = "report.json"

_DATA_ERRORS = (
    CorpusError,
    ClassifierError,
    SelectionError,
    SynthesisError,
    MixtureError,
    EvaluationError,
    QualityScoreError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this pipeline reserves 2 for data
    errors, so usage problems exit 1 instead."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return f"sha256:{digest.hexdigest()}"


def _output_dir(config: PipelineConfig) -> Path:
    out = Path(config.require("paths.output"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "reports").mkdir(exist_ok=True)
    return out


def _write_report(
    output: Path,
    command: str,
    config: PipelineConfig,
    started: float,
    inputs: Sequence[str | Path],
    counts: dict[str, Any],
    artifacts: dict[str, str],
    result: dict[str, Any] | None = None,
) -> dict:
    report = {
        "command": command,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "config": config.to_dict(),
        "counts": counts,
        "artifacts": artifacts,
        "timings": {"elapsed_seconds": round(time.perf_counter() - started, 4)},
    }
    if result is not None:
        report["result"] = result
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    (output / REPORT_FILENAME).write_text(payload, encoding="utf-8")
    (output / "reports" / f"{command}.json").write_text(payload, encoding="utf-8")
    return report


def _resolve(config: PipelineConfig, key: str, output: Path, default_name: str) -> Path:
    override = config.get(key)
    return Path(override) if override else output / default_name


def _build_gateway(config: PipelineConfig, output: Path | None):
    section = config.section("gateway")
    transcript = section["transcript"]
    if transcript is not None:
        transcript = Path(transcript)
        if not transcript.is_absolute() and output is not None:
            transcript = output / transcript
    if section["mode"] == "mock":
        return MockChatGateway(seed=section["seed"], transcript_path=transcript)
    if section["mode"] == "http":
        if not section["endpoint"]:
            raise ConfigError("missing required config key: gateway.endpoint")
        return HttpChatGateway(
            endpoint=section["endpoint"],
            model=section["model"],
            token_env=section["token_env"],
            max_retries=section["max_retries"],
            backoff_base=section["backoff_base"],
            timeout=section["timeout"],
            transcript_path=transcript,
        )
    raise ConfigError(f"config key gateway.mode must be mock or http, got {section['mode']!r}")


def _generation_params(config: PipelineConfig) -> GenerationParams:
    return GenerationParams(
        temperature=config.get("gateway.temperature"),
        max_tokens=config.get("gateway.max_tokens"),
    )


def _selection_policy(config: PipelineConfig) -> SelectionPolicy:
    section = config.section("selection")
    try:
        return SelectionPolicy(
            mode=section["mode"],
            budget_tokens=section["budget_tokens"],
            k=section["k"],
            min_score=section["min_score"],
        )
    except SelectionError as exc:
        raise ConfigError(f"selection policy: {exc}") from exc


def _scored_record(item: ScoredDocument) -> dict:
    record = document_to_record(item.document)
    record.pop("domain_score", None)
    record.pop("quality_score", None)
    record["domain_score"] = item.domain_score
    record["quality_score"] = item.quality_score
    return record


def _load_scored(path: Path) -> list[ScoredDocument]:
    """Read a selected.jsonl back into scored documents."""
    docs, _ = ingest(path, "selected")
    out = []
    for doc in docs:
        raw = doc.meta.get("domain_score")
        if raw is None:
            raise CorpusError(f"{path}: document {doc.id} lacks a domain_score field")
        try:
            score = float(raw)
        except ValueError as exc:
            raise CorpusError(
                f"{path}: document {doc.id} has non-numeric domain_score {raw!r}"
            ) from exc
        out.append(ScoredDocument(doc, score))
    return out


def _read_jsonl_objects(path: Path) -> list[tuple[int, dict]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise EvaluationError(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise EvaluationError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise EvaluationError(f"{path}:{lineno}: expected a JSON object")
        records.append((lineno, record))
    if not records:
        raise EvaluationError(f"{path}: no records")
    return records


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_train_classifier(args: argparse.Namespace, config: PipelineConfig) -> int:
    started = time.perf_counter()
    output = _output_dir(config)
    in_domain_path = config.require("paths.in_domain")
    general_path = config.require("paths.general")
    positives, pos_summary = ingest(in_domain_path, "in-domain")
    negatives, neg_summary = ingest(general_path, "general")
    classifier_config = ClassifierConfig(**config.section("classifier"))
    model = train(positives, negatives, classifier_config,
                  n_workers=config.get("runtime.workers"))
    model_path = output / MODEL_FILENAME
    model.save(model_path)
    _write_report(
        output, "train-classifier", config, started,
        inputs=[in_domain_path, general_path],
        counts={
            "train": model.train_report_,
            "in_domain_lines": pos_summary,
            "general_lines": neg_summary,
        },
        artifacts={"model": str(model_path)},
    )
    print(f"trained {model_path} "
          f"(train accuracy {model.train_report_['train_accuracy']:.4f})")
    return 0


def _cmd_score_select(args: argparse.Namespace, config: PipelineConfig) -> int:
    started = time.perf_counter()
    output = _output_dir(config)
    general_path = config.require("paths.general")
    model_path = _resolve(config, "paths.model", output, MODEL_FILENAME)
    policy = _selection_policy(config)
    model = DomainNgramClassifier.load(model_path)
    docs, line_summary = ingest(general_path, "general")
    scored = score_documents(
        model, docs,
        n_workers=config.get("runtime.workers"),
        model_path=str(model_path),
    )
    selected = select(scored, policy)
    selected_path = output / SELECTED_FILENAME
    write_jsonl((_scored_record(s) for s in selected), selected_path)
    _write_report(
        output, "score-select", config, started,
        inputs=[general_path, model_path],
        counts={
            "scored": len(scored),
            "selected": len(selected),
            "selected_tokens": sum(s.token_count for s in selected),
            "policy": config.section("selection"),
            "general_lines": line_summary,
        },
        artifacts={"selected": str(selected_path)},
    )
    print(f"selected {len(selected)} of {len(scored)} documents -> {selected_path}")
    return 0


def _cmd_quality_filter(args: argparse.Namespace, config: PipelineConfig) -> int:
    started = time.perf_counter()
    output = _output_dir(config)
    selected_path = _resolve(config, "paths.selected", output, SELECTED_FILENAME)
    scored = _load_scored(selected_path)
    scorer_name = config.get("quality.scorer")
    gateway = _build_gateway(config, output) if scorer_name == "gateway" else None
    scorer = make_scorer(scorer_name, gateway)
    threshold = config.get("quality.threshold")
    result = quality_filter(scored, scorer.score, threshold)
    write_jsonl((_scored_record(s) for s in result.retained), selected_path)
    _write_report(
        output, "quality-filter", config, started,
        inputs=[selected_path],
        counts={
            "filter": result.to_dict(),
            "scorer": scorer_name,
            "threshold": threshold,
        },
        artifacts={"selected": str(selected_path)},
    )
    print(f"retained {len(result.retained)} of {len(scored)} documents "
          f"(threshold {threshold}) -> {selected_path}")
    return 0


def _load_problem_pools(path: Path) -> dict[str, list[str]]:
    pools: dict[str, list[str]] = {}
    for lineno, record in _read_jsonl_objects(path):
        task = record.get("task")
        statement = record.get("statement")
        if not isinstance(task, str) or not task or not isinstance(statement, str):
            raise SynthesisError(f"{path}:{lineno}: expected task and statement strings")
        pools.setdefault(task, []).append(statement)
    return pools


def _cmd_synthesize(args: argparse.Namespace, config: PipelineConfig) -> int:
    started = time.perf_counter()
    output = _output_dir(config)
    problems_path = Path(config.require("paths.problems"))
    pools = _load_problem_pools(problems_path)
    section = config.section("synthesis")
    requests = requests_from_pools(
        pools,
        count=section["passage_count"],
        problems_per_passage=section["problems_per_passage"],
        mode=section["mode"],
        seed=section["seed"],
        params=_generation_params(config),
    )
    gateway = _build_gateway(config, output)
    passages, failures = generate_batch(
        gateway, requests,
        max_attempts=section["max_attempts"],
        min_paragraph_words=section["min_paragraph_words"],
        max_in_flight=config.get("gateway.max_in_flight"),
    )
    passages_path = output / PASSAGES_FILENAME
    write_jsonl((passage_to_record(p) for p in passages), passages_path)
    failures_path = output / FAILURES_FILENAME
    write_jsonl(
        (
            {
                "request_id": f.request_id,
                "reason": f.reason,
                "attempts": f.attempts,
                "raw_responses": f.raw_responses,
            }
            for f in failures
        ),
        failures_path,
    )
    _write_report(
        output, "synthesize", config, started,
        inputs=[problems_path],
        counts={
            "requested": len(requests),
            "generated": len(passages),
            "failed": len(failures),
            "tasks": sorted(pools),
        },
        artifacts={"passages": str(passages_path), "failures": str(failures_path)},
    )
    print(f"generated {len(passages)} of {len(requests)} passages -> {passages_path}")
    return 0


def _cmd_plan_mixture(args: argparse.Namespace, config: PipelineConfig) -> int:
    started = time.perf_counter()
    output = _output_dir(config)
    in_domain_path = Path(config.require("paths.in_domain"))
    synthetic_path = _resolve(config, "paths.synthetic", output, PASSAGES_FILENAME)
    selected_path: Path | None
    if args.no_replay:
        selected_path = None
    else:
        override = config.get("paths.selected")
        if override:
            selected_path = Path(override)
        else:
            candidate = output / SELECTED_FILENAME
            selected_path = candidate if candidate.exists() else None
    section = config.section("mixture")
    schedule_section = dict(section["schedule"])
    schedule_type = schedule_section.pop("type")
    if schedule_section.get("total_steps") is None:
        raise ConfigError("missing required config key: mixture.schedule.total_steps")
    try:
        schedule = ScheduleConfig(**schedule_section)
    except ValueError as exc:
        raise ConfigError(f"mixture.schedule: {exc}") from exc
    manifest_path = output / MANIFEST_FILENAME
    plan = plan_two_stage(
        in_domain_path,
        synthetic_path,
        selected_path,
        schedule=schedule,
        schedule_type=schedule_type,
        batch_size_tokens=section["batch_size_tokens"],
        interleave=section["interleave"],
        seed=section["seed"],
        in_domain_budget=section["in_domain_budget"],
        selected_budget=section["selected_budget"],
        synthetic_budget=section["synthetic_budget"],
        output_path=manifest_path,
    )
    inputs = [in_domain_path, synthetic_path]
    if selected_path is not None:
        inputs.append(selected_path)
    _write_report(
        output, "plan-mixture", config, started,
        inputs=inputs,
        counts={
            "stage1_tokens": plan.stage1_tokens,
            "stage2_tokens": plan.stage2_tokens,
            "stage1_sources": [e.to_dict() for e in plan.stage1],
            "stage2_sources": [e.to_dict() for e in plan.stage2],
            "replay_note": plan.replay_note,
        },
        artifacts={"manifest": str(manifest_path)},
    )
    print(f"planned stage1={plan.stage1_tokens} tokens, "
          f"stage2={plan.stage2_tokens} tokens -> {manifest_path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace, config: PipelineConfig) -> int:
    started = time.perf_counter()
    output = _output_dir(config)
    if args.metric == "auc":
        path = Path(config.require("paths.predictions"))
        items = []
        for lineno, record in _read_jsonl_objects(path):
            try:
                items.append(LabeledScore(float(record["score"]), int(record["label"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise EvaluationError(f"{path}:{lineno}: bad prediction record: {exc}")
        result = {
            "metric": "auc",
            "auc": compute_auc(items),
            "n": len(items),
            "positives": sum(1 for i in items if i.label == 1),
            "negatives": sum(1 for i in items if i.label == 0),
        }
        counts = {"records": len(items)}
        inputs = [path]
    elif args.metric == "winrate":
        path = Path(config.require("paths.judge_cases"))
        cases = []
        for lineno, record in _read_jsonl_objects(path):
            try:
                cases.append(JudgeCase(
                    instruction=record["instruction"],
                    response_a=record["response_a"],
                    response_b=record["response_b"],
                    task=record.get("task", ""),
                ))
            except (KeyError, TypeError) as exc:
                raise EvaluationError(f"{path}:{lineno}: bad judge case: {exc}")
        gateway = _build_gateway(config, output)
        report = judge_winrate(
            gateway, cases,
            max_attempts=config.get("evaluation.judge_max_attempts"),
            max_in_flight=config.get("gateway.max_in_flight"),
        )
        result = report.to_dict()
        counts = {
            "cases": report.cases,
            "wins": report.wins,
            "losses": report.losses,
            "disagreements": report.disagreements,
            "abstentions": report.abstentions,
        }
        inputs = [path]
    else:  # rewrites
        path = Path(config.require("paths.rewrites"))
        sets = []
        judged_in_file = True
        for lineno, record in _read_jsonl_objects(path):
            try:
                flags = record.get("good_flags")
                rewrite_set = RewriteSet(
                    query=record["query"],
                    rewrites=list(record["rewrites"]),
                    good_flags=list(flags) if flags is not None else None,
                )
            except (KeyError, TypeError, EvaluationError) as exc:
                raise EvaluationError(f"{path}:{lineno}: bad rewrite set: {exc}")
            judged_in_file = judged_in_file and rewrite_set.good_flags is not None
            sets.append(rewrite_set)
        if not judged_in_file:
            gateway = _build_gateway(config, output)
            sets = judge_rewrites(gateway, sets)
        threshold = config.get("evaluation.similarity_threshold")
        result = {
            "metric": "rewrites",
            "density": compute_density(sets),
            "diversity": compute_diversity(sets, similarity_threshold=threshold),
            "sets": len(sets),
            "embedder": "char_trigram",
            "similarity_threshold": threshold,
            "good_flags": [rs.good_flags for rs in sets],
        }
        counts = {"sets": len(sets)}
        inputs = [path]
    _write_report(
        output, f"evaluate-{args.metric}", config, started,
        inputs=inputs, counts=counts, artifacts={}, result=result,
    )
    summary = {k: v for k, v in result.items()
               if isinstance(v, (int, float, str)) and k != "metric"}
    print(f"evaluate {args.metric}: "
          + ", ".join(f"{k}={v}" for k, v in sorted(summary.items())))
    return 0


def _cmd_report(args: argparse.Namespace, config: PipelineConfig) -> int:
    if args.path:
        path = Path(args.path)
    else:
        path = Path(config.require("paths.output")) / REPORT_FILENAME
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise EvaluationError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise EvaluationError(f"{path} is not valid JSON: {exc}") from exc
    print(f"command:  {report.get('command', '?')}")
    print(f"elapsed:  {report.get('timings', {}).get('elapsed_seconds', '?')}s")
    for name, digest in report.get("inputs", {}).items():
        print(f"input:    {name} ({digest})")
    for name, location in report.get("artifacts", {}).items():
        print(f"artifact: {name} -> {location}")
    counts = report.get("counts", {})
    if counts:
        print("counts:")
        for line in json.dumps(counts, indent=2, sort_keys=True).splitlines():
            print(f"  {line}")
    result = report.get("result")
    if result:
        print("result:")
        for key in ("auc", "win_rate", "density", "diversity"):
            if key in result:
                print(f"  {key}: {result[key]}")
    return 0


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="domaincraft",
        description="Domain-adaptive training-data curation pipeline.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override a config key (dotted path), wins over the file")
    common.add_argument("--output", help="artifact directory (paths.output)")
    common.add_argument("--workers", type=int, help="worker count (runtime.workers)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-classifier", parents=[common],
                       help="fit the domain classifier")
    p.set_defaults(func=_cmd_train_classifier)

    p = sub.add_parser("score-select", parents=[common],
                       help="score the general corpus and select by policy")
    p.set_defaults(func=_cmd_score_select)

    p = sub.add_parser("quality-filter", parents=[common],
                       help="filter selected docs by educational value")
    p.set_defaults(func=_cmd_quality_filter)

    p = sub.add_parser("synthesize", parents=[common],
                       help="generate task-oriented passages")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("plan-mixture", parents=[common],
                       help="write the two-stage training manifest")
    p.add_argument("--no-replay", action="store_true",
                   help="exclude selected data from stage 1")
    p.set_defaults(func=_cmd_plan_mixture)

    p = sub.add_parser("evaluate", parents=[common], help="compute a metric")
    p.add_argument("metric", choices=("auc", "winrate", "rewrites"))
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="render a run-report")
    p.add_argument("--path", help="report file (default: <output>/report.json)")
    p.set_defaults(func=_cmd_report)

    return parser


def _apply_flag_overrides(config: PipelineConfig, args: argparse.Namespace) -> None:
    if getattr(args, "output", None):
        config.set("paths.output", args.output)
    if getattr(args, "workers", None):
        config.set("runtime.workers", args.workers)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = PipelineConfig.load(getattr(args, "config", None),
                                     getattr(args, "set", []))
        _apply_flag_overrides(config, args)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GatewayError as exc:
        print(f"gateway error: {exc}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

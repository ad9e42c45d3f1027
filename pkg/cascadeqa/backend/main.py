"""
Command-line entry point: run, record, eval, validate and ablate.

stdout carries results only (tables, OK lines); logs go to stderr.
Exit codes: 0 success, 1 per-case or metric/schema failures, 2 config/usage errors.
"""
import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import logging

from rich.table import Table

from common.exceptions import EXIT_FAILURE, CascadeQAException, ConfigError
from common.logging import setup_logging
from common.schemas import Stage
from common.storage import FileStorage
from common.utils import dump_pretty_json
from config.run_config import RunConfig, apply_overrides, load_run_config
from corpus_service import SUBMISSION_FILENAMES, CaseRecord, load_answers, load_corpus, load_stage_assets
from corpus_service.submissions import validate_submission
from llm_service import (
    BackendKind,
    MockBackendConfig,
    Provider,
    close_backend,
    create_backend,
)
from metrics_service import evaluate_files, render_aggregate_table, render_console_table, render_summary_table, write_report
from pipeline_service import AnchorMode, FallbackKind, InterpretMode, RunReport, run_pipeline
from pipeline_service.evidence import resolve_anchor

logger = logging.getLogger(__name__)

ABLATION_FILENAME = "ablation.json"
RECORD_TRANSCRIPT_FILENAME = "transcript.jsonl"


def _stage_arg(value: str) -> Stage:
    try:
        stages = Stage.parse_list(value)
    except (KeyError, ValueError):
        stages = []
    if len(stages) != 1:
        raise argparse.ArgumentTypeError(f"expected a single stage (1-4 or a stage name), got {value!r}")
    return stages[0]


def _stages_arg(value: str) -> List[Stage]:
    try:
        stages = Stage.parse_list(value)
    except (KeyError, ValueError):
        raise argparse.ArgumentTypeError(f"invalid stage list {value!r}; use 'all' or e.g. '1,2'")
    if not stages:
        raise argparse.ArgumentTypeError("empty stage list")
    return stages


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _add_logging_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Log level (stderr)")
    parser.add_argument("--log-format", choices=["json", "text"], help="Log line format")


def _add_pipeline_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML run configuration; flags override its values")
    parser.add_argument("--corpus", help="Canonical corpus JSON file")
    parser.add_argument("--out", help="Output directory for submission files and run_report.json")
    parser.add_argument("--stages", type=_stages_arg, help="'all' or a comma-separated list, e.g. 1,2")
    parser.add_argument("--anchor", choices=[a.value for a in AnchorMode], help="Text that drives evidence scoring")
    parser.add_argument("--interpret-mode", choices=[m.value for m in InterpretMode], help="Stage-1 prompting")
    parser.add_argument("--workers", type=_positive_int, help="Cases processed in parallel")
    parser.add_argument("--answers", help="Pre-segmented answers for stage 4 instead of stage 3 output")
    parser.add_argument("--backend", choices=[k.value for k in BackendKind], help="Model backend kind")
    parser.add_argument("--endpoint", help="HTTP backend base URL")
    parser.add_argument("--model-id", help="Model identifier sent to the backend")
    parser.add_argument("--api-key-env", help="Environment variable holding the API key")
    parser.add_argument("--provider", choices=[p.value for p in Provider], help="HTTP wire format")
    parser.add_argument("--transcript", help="Replay: transcript to read. Record: transcript to write")
    parser.add_argument(
        "--strict",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Replay: a missing transcript entry fails the case (default) or falls back to the mock",
    )
    parser.add_argument("--mock-oracle", choices=["gold"], help="Mock scorer gives 5 to gold-essential sentences")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadeqa",
        description="Cascaded clinical question answering over patient notes",
        allow_abbrev=False,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run pipeline stages over a corpus", allow_abbrev=False)
    _add_pipeline_args(run)
    _add_logging_args(run)

    record = subparsers.add_parser("record", help="Run the pipeline while writing a replay transcript", allow_abbrev=False)
    _add_pipeline_args(record)
    _add_logging_args(record)

    evaluate = subparsers.add_parser("eval", help="Score a submission file against gold", allow_abbrev=False)
    evaluate.add_argument("--stage", type=_stage_arg, required=True, help="Stage of the predictions file")
    evaluate.add_argument("--predictions", required=True, help="Submission file to score")
    evaluate.add_argument("--gold", required=True, help="Corpus file with gold annotations")
    evaluate.add_argument("--sidecar", help="JSON object of externally computed metrics (0..100)")
    evaluate.add_argument("--constituents", help="Comma-separated metric names averaged into Overall")
    evaluate.add_argument("--out", help="Write the MetricReport JSON to this file")
    _add_logging_args(evaluate)

    validate = subparsers.add_parser("validate", help="Schema-check a submission file", allow_abbrev=False)
    validate.add_argument("--stage", type=_stage_arg, required=True, help="Stage of the submission file")
    validate.add_argument("--predictions", required=True, help="Submission file to check")
    validate.add_argument("--corpus", help="Also check case ids and sentence indices against this corpus")
    _add_logging_args(validate)

    ablate = subparsers.add_parser(
        "ablate",
        help="Zero-shot vs few-shot interpretation and evidence under each anchor",
        allow_abbrev=False,
    )
    _add_pipeline_args(ablate)
    _add_logging_args(ablate)
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """File values first (when --config is given), then flags."""
    config = load_run_config(args.config) if args.config else RunConfig()
    backend: Dict[str, Any] = {
        "kind": args.backend,
        "endpoint": args.endpoint,
        "model_id": args.model_id,
        "api_key_env": args.api_key_env,
        "provider": args.provider,
    }
    kind = args.backend or config.backend.kind
    if kind == BackendKind.REPLAY.value:
        backend.update(transcript_path=args.transcript, strict=args.strict)
    if kind == BackendKind.MOCK.value:
        backend["oracle"] = args.mock_oracle
    overrides: Dict[str, Any] = {
        "corpus_path": args.corpus,
        "out_dir": args.out,
        "stages": [int(s) for s in args.stages] if args.stages else None,
        "anchor": args.anchor,
        "interpret_mode": args.interpret_mode,
        "workers": args.workers,
        "answers_path": args.answers,
        "backend": backend,
    }
    if args.command == "record":
        overrides["transcript_path"] = args.transcript
    return apply_overrides(config, overrides, args.config)


def _require_corpus(config: RunConfig) -> List[CaseRecord]:
    if not config.corpus_path:
        raise ConfigError("no corpus given; use --corpus or corpus_path in the config file")
    return load_corpus(config.corpus_path)


def gold_oracle(corpus: Sequence[CaseRecord]) -> Dict[str, frozenset]:
    oracle = {case.case_id: case.gold.essential for case in corpus if case.gold is not None}
    if not oracle:
        raise ConfigError("--mock-oracle gold needs a corpus with gold annotations")
    return oracle


def _oracle_for(config: RunConfig, corpus: Sequence[CaseRecord], requested: Optional[str]) -> Optional[Dict]:
    configured = config.backend.oracle if isinstance(config.backend, MockBackendConfig) else None
    return gold_oracle(corpus) if (requested or configured) == "gold" else None


def render_run_summary(report: RunReport) -> str:
    summary = report.summary
    table = Table(title="Run summary")
    table.add_column("Item")
    table.add_column("Value", justify="right")
    table.add_row("Cases", str(summary.cases))
    table.add_row("Failed cases", str(len(summary.failed_cases)))
    for tier, count in summary.tiers.items():
        table.add_row(f"Evidence tier: {tier}", str(count))
    for stage, count in summary.fallbacks.items():
        table.add_row(f"Fallbacks: {stage}", str(count))
    table.add_row("Truncated queries", str(summary.truncated_queries))
    table.add_row("Soft-cut answers", str(summary.soft_cut_answers))
    if summary.missing_transcript_keys:
        table.add_row("Missing transcript keys", str(len(summary.missing_transcript_keys)))
    return render_console_table(table)


def _report_failures(report: RunReport) -> int:
    for event in report.events:
        if event.event == "error":
            logger.error(f"Case {event.case_id} stage {event.stage}: {event.detail}")
    for key in report.summary.missing_transcript_keys:
        logger.error(f"Missing transcript entry: {key}")
    if report.summary.failed_cases:
        logger.error(f"{len(report.summary.failed_cases)} case(s) failed: {', '.join(report.summary.failed_cases)}")
        return EXIT_FAILURE
    return 0


def _execute(config: RunConfig, requested_oracle: Optional[str], record_to: Optional[str] = None) -> RunReport:
    corpus = _require_corpus(config)
    assets = load_stage_assets(config.prompts_dir, config.prompts)
    external_answers = load_answers(config.answers_path) if config.answers_path else None
    backend = create_backend(config.backend, _oracle_for(config, corpus, requested_oracle), record_to=record_to)
    try:
        return run_pipeline(
            corpus,
            config.stages,
            config.anchor,
            assets,
            backend,
            config.out_dir,
            config.pipeline_options(external_answers),
        )
    finally:
        close_backend(backend)


def cmd_run(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    report = _execute(config, args.mock_oracle)
    print(render_run_summary(report))
    return _report_failures(report)


def cmd_record(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    if config.backend.kind == BackendKind.REPLAY.value:
        raise ConfigError("record needs a live backend (http or mock), not replay")
    transcript = config.transcript_path or str(Path(config.out_dir) / RECORD_TRANSCRIPT_FILENAME)
    report = _execute(config, args.mock_oracle, record_to=transcript)

    transport_failures = [
        e for e in report.events if e.event == "fallback" and e.detail.startswith(f"{FallbackKind.TRANSPORT.value}:")
    ]
    if transport_failures:
        logger.warning(f"{len(transport_failures)} stage call(s) hit transport errors; their outcomes are recorded")
    print(render_run_summary(report))
    print(f"Transcript: {transcript}")
    return _report_failures(report)


def cmd_eval(args: argparse.Namespace) -> int:
    constituents = [name.strip() for name in args.constituents.split(",") if name.strip()] if args.constituents else None
    report = evaluate_files(args.stage, args.predictions, args.gold, args.sidecar, constituents)
    print(render_summary_table([report]))
    print(render_aggregate_table(report))
    if args.out:
        write_report(report, args.out)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus) if args.corpus else None
    entries = validate_submission(args.stage, args.predictions, corpus)
    print(f"OK: {len(entries)} stage {int(args.stage)} entries in {args.predictions}")
    return 0


def available_anchors(corpus: Sequence[CaseRecord]) -> List[AnchorMode]:
    """Anchors every case can resolve without running stage 1."""
    anchors = []
    for anchor in AnchorMode:
        if anchor == AnchorMode.INTERPRETED_QUERY:
            anchors.append(anchor)
            continue
        try:
            for case in corpus:
                resolve_anchor(case, anchor, None)
        except CascadeQAException as e:
            logger.warning(f"Anchor {anchor.value} skipped: {e}")
            continue
        anchors.append(anchor)
    return anchors


def cmd_ablate(args: argparse.Namespace) -> int:
    base = build_run_config(args)
    corpus = _require_corpus(base)
    if any(case.gold is None for case in corpus):
        raise ConfigError("ablate needs a corpus where every case has gold annotations")
    out_dir = Path(base.out_dir)

    rows: List[Dict[str, Any]] = []
    failed = False

    def _run(setting: str, **changes: Any) -> Path:
        nonlocal failed
        config = base.model_copy(update={**changes, "out_dir": str(out_dir / setting)})
        report = _execute(config, args.mock_oracle)
        failed = failed or not report.ok
        return Path(config.out_dir)

    for mode in InterpretMode:
        run_dir = _run(f"interpret-{mode.value}", stages=[Stage.INTERPRET], interpret_mode=mode)
        metrics = evaluate_files(Stage.INTERPRET, run_dir / SUBMISSION_FILENAMES[Stage.INTERPRET], base.corpus_path)
        rows.append({"experiment": "interpretation", "setting": mode.value, "metrics": {"ROUGELsum": metrics.value("ROUGELsum")}})

    names = [f"{m} Micro {p}" for m in ("Strict", "Lenient") for p in ("Precision", "Recall", "F1")]
    for anchor in available_anchors(corpus):
        run_dir = _run(f"evidence-{anchor.value}", stages=[Stage.EVIDENCE], anchor=anchor)
        metrics = evaluate_files(Stage.EVIDENCE, run_dir / SUBMISSION_FILENAMES[Stage.EVIDENCE], base.corpus_path)
        rows.append({"experiment": "evidence", "setting": anchor.value, "metrics": {n: metrics.value(n) for n in names}})

    table = Table(title="Ablation")
    table.add_column("Experiment")
    table.add_column("Setting")
    table.add_column("Metric")
    table.add_column("Score", justify="right")
    for row in rows:
        for name, value in row["metrics"].items():
            table.add_row(row["experiment"], row["setting"], name, f"{value:.1f}")
    print(render_console_table(table))

    FileStorage(out_dir).save_text(dump_pretty_json(rows), ABLATION_FILENAME)
    return EXIT_FAILURE if failed else 0


COMMANDS = {
    "run": cmd_run,
    "record": cmd_record,
    "eval": cmd_eval,
    "validate": cmd_validate,
    "ablate": cmd_ablate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help exits 0, usage errors exit 2
        return int(e.code or 0)

    setup_logging(args.log_level, args.log_format)
    try:
        return COMMANDS[args.command](args)
    except CascadeQAException as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

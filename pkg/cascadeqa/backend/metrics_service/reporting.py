import io
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple
import logging

from rich.console import Console
from rich.table import Table

from common.schemas import Stage
from common.storage import FileStorage
from common.utils import dump_pretty_json
from metrics_service.schemas import MetricReport

logger = logging.getLogger(__name__)

# First available name wins
SECONDARY_METRICS: Dict[Stage, Tuple[str, ...]] = {
    Stage.INTERPRET: ("BERTScore", "ROUGELsum"),
    Stage.EVIDENCE: ("Lenient Micro F1",),
    Stage.GENERATE: ("AlignScore", "BERTScore", "ROUGELsum"),
    Stage.ALIGN: ("Micro Precision",),
}

TABLE_WIDTH = 100


def _first_available(report: MetricReport, names: Sequence[str]) -> Tuple[str, Optional[float]]:
    for name in names:
        value = report.value(name)
        if value is not None:
            return name, value
    return names[0], None


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.1f}"


def render_console_table(table: Table) -> str:
    console = Console(file=io.StringIO(), width=TABLE_WIDTH, color_system=None, record=True)
    console.print(table)
    return console.export_text()


def build_summary_table(reports: Sequence[MetricReport]) -> Table:
    """Leaderboard layout: Subtask | Primary Metric | Score | Secondary Metric | Score"""
    table = Table(title="Evaluation")
    table.add_column("Subtask")
    table.add_column("Primary Metric")
    table.add_column("Score", justify="right")
    table.add_column("Secondary Metric")
    table.add_column("Score", justify="right")

    for report in sorted(reports, key=lambda r: r.stage):
        stage = Stage(report.stage)
        secondary, secondary_value = _first_available(report, SECONDARY_METRICS[stage])
        table.add_row(
            stage.label,
            report.primary_metric,
            _fmt(report.value(report.primary_metric)),
            secondary,
            _fmt(secondary_value),
        )
    return table


def render_summary_table(reports: Sequence[MetricReport]) -> str:
    return render_console_table(build_summary_table(reports))


def render_aggregate_table(report: MetricReport) -> str:
    """Every aggregate and sidecar metric of one report, plus the overall score"""
    table = Table(title=f"Subtask {report.stage}: {Stage(report.stage).label}")
    table.add_column("Metric")
    table.add_column("Score", justify="right")
    for name, value in report.aggregate.items():
        table.add_row(name, _fmt(value))
    for name, value in sorted(report.sidecar.items()):
        table.add_row(f"{name} (sidecar)", _fmt(value))
    if report.constituents:
        table.add_row("Overall", _fmt(report.overall))
    return render_console_table(table)


def write_report(report: MetricReport, path: str | Path) -> str:
    path = Path(path)
    return FileStorage(path.parent).save_text(dump_pretty_json(report.model_dump(mode="json")), path.name)

"""
Report tables: error categories and accuracy metrics side by side, one
column per run.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd
from pydantic import ValidationError

from .schemas import FAILURE_KINDS, MISMATCH_KINDS, Report

logger = logging.getLogger(__name__)


class ReportFormatError(Exception):
    """Raised when a report file cannot be read."""

    pass


# EXEC is shown under its Neo4j name.
_MISMATCH_LABELS = {"NUM_RES": "NUM_RES", "VAL": "VAL", "EXEC": "N4j_EXEC"}
SELECTION_ROWS = ("equivalent", "empty", "not equivalent")


def _percent(value: Optional[float]) -> str:
    return "-" if value is None else f"{value * 100:.1f}%"


def _count(value: Optional[int]) -> str:
    return "-" if value is None else str(value)


def _column(report: Report, with_intersection: bool, with_selection: bool) -> dict[str, str]:
    column = {
        "N": _count(report.n),
        "C_∀": _count(report.parsed),
        "M": _count(report.matched),
    }
    for kind in FAILURE_KINDS:
        column[kind] = _count(report.errors.get(kind, 0))
    column["err rate"] = _percent(report.parse_err_rate)
    for kind in MISMATCH_KINDS:
        value = report.errors.get(kind) if report.matched is not None else None
        column[_MISMATCH_LABELS[kind]] = _count(value)
    column["α"] = _percent(report.exec_acc)
    column["τ"] = _percent(report.total_acc)

    if with_intersection:
        column["C_∩"] = _count(report.intersection)
        column["M_∩"] = _count(report.intersection_matched)
        column["α_∩"] = _percent(report.intersection_acc)
    if with_selection:
        for key in SELECTION_ROWS:
            column[key] = _count(report.selection.get(key)) if report.selection else "-"
    return column


def report_frame(reports: list[Report]) -> pd.DataFrame:
    """
    Build the metrics table for one or more runs.

    Rows follow the order N, C_∀, M, failure categories, err rate, mismatch
    categories, α, τ, then intersection and strict-selection rows when any
    run carries them. When no run has entries the table has headers only.

    Args:
        reports: Reports shown left to right

    Returns:
        pd.DataFrame indexed by metric name, one column per report
    """
    labels = [r.label or f"run {i + 1}" for i, r in enumerate(reports)]
    if not any(r.n for r in reports):
        return pd.DataFrame(columns=labels)

    with_intersection = any(r.intersection is not None for r in reports)
    with_selection = any(r.selection for r in reports)
    data = {
        label: _column(report, with_intersection, with_selection)
        for label, report in zip(labels, reports)
    }
    rows = list(next(iter(data.values())))
    frame = pd.DataFrame(data, index=rows)
    frame.index.name = "metric"
    return frame


def format_report(reports: list[Report], fmt: str = "text") -> str:
    """
    Render reports as an aligned text table or CSV.

    Args:
        reports: Reports to show side by side
        fmt: "text" or "csv"

    Returns:
        str: Rendered table
    """
    frame = report_frame(reports)
    if fmt == "csv":
        return frame.to_csv()
    if fmt != "text":
        raise ValueError(f"Unknown report format: {fmt}")
    if frame.empty:
        return "  ".join(["metric", *frame.columns]) + "\n"
    return frame.to_string() + "\n"


def load_report(path: Union[str, Path]) -> Report:
    """
    Read a Report JSON file.

    Raises:
        ReportFormatError: If the file is missing, not JSON or not a Report
    """
    path = Path(path).expanduser()
    if not path.exists():
        raise ReportFormatError(f"Report file not found: {path}")
    try:
        return Report.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as e:
        raise ReportFormatError(f"Malformed report {path}: {e}") from e


def write_report(report: Report, json_path: Union[str, Path], csv_path: Optional[Union[str, Path]] = None):
    """Write a report as JSON and, when csv_path is given, as a one-column CSV table."""
    json_path = Path(json_path)
    json_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    if csv_path is not None:
        Path(csv_path).write_text(format_report([report], "csv"), encoding="utf-8")
    logger.debug("report written to %s", json_path)

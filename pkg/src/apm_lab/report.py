"""Report model and CSV / JSON serialisation.

Floats are always written with 17 significant digits so a report can be
parsed back to the exact binary64 values. Exact rationals are written as
their float plus a companion "<column>_exact" string column.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union

import numpy as np

from apm_lab.errors import get_error

EXACT_SUFFIX = "_exact"


@dataclass
class Report:
    """Tabular result of one run plus its config echo."""

    command: str
    mode: str
    config: Dict[str, Any]
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    elapsed_seconds: Optional[float] = None

    def add_row(self, **values) -> None:
        self.rows.append(values)

    def expanded_columns(self) -> List[str]:
        """Columns in output order, with an exact column after each rational one."""
        columns = []
        for column in self.columns:
            columns.append(column)
            if any(isinstance(row.get(column), Fraction) for row in self.rows):
                columns.append(column + EXACT_SUFFIX)
        return columns

    def expanded_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for row in self.rows:
            out = {}
            for column in self.columns:
                value = row.get(column)
                if isinstance(value, Fraction):
                    out[column] = float(value)
                    out[column + EXACT_SUFFIX] = f"{value.numerator}/{value.denominator}"
                else:
                    out[column] = value
            rows.append(out)
        return rows

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "command": self.command,
            "mode": self.mode,
            "config": self.config,
            "columns": self.expanded_columns(),
            "rows": self.expanded_rows(),
        }
        if self.summary:
            data["summary"] = _plain(self.summary)
        if self.elapsed_seconds is not None:
            data["elapsed_seconds"] = self.elapsed_seconds
        return data


def _plain(value: Any) -> Any:
    """Unwrap numpy scalars and rationals into plain Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return value


def format_float(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return format(value, ".17g")


def _json_value(value: Any, indent: int, level: int) -> str:
    value = _plain(value)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(key)}: {_json_value(item, indent, level + 1)}"
            for key, item in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [f"{pad}{_json_value(item, indent, level + 1)}" for item in value]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(str(value))


def _csv_cell(value: Any) -> str:
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def render_report(report: Report, fmt: str = "json") -> str:
    """Serialise a report to text.

    Args:
        report: The report
        fmt: "csv" (header row plus one line per row) or "json" (one object)

    Returns:
        Report text ending in a newline
    """
    if fmt == "json":
        return _json_value(report.to_dict(), 2, 0) + "\n"
    if fmt != "csv":
        raise get_error("out_of_range", what="format", value=fmt, allowed=["csv", "json"])
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    columns = report.expanded_columns()
    writer.writerow(columns)
    for row in report.expanded_rows():
        writer.writerow([_csv_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def emit_report(
    report: Report, fmt: str = "json", sink: Union[None, str, Path, TextIO] = None
) -> None:
    """Write a report to a stream, a file path, or standard output.

    Raises:
        OutputError: If the file cannot be written
    """
    text = render_report(report, fmt)
    if sink is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    if isinstance(sink, (str, Path)):
        try:
            Path(sink).write_text(text)
        except OSError as e:
            raise get_error("write_failed", path=sink, reason=e.strerror or str(e)) from e
        return
    sink.write(text)

"""Plain-text serialization of analysis reports.

The report is ``key = value`` lines (stable keys, no timestamps) followed by
a ``[steps]`` table.  The same table is written as CSV next to the report.
"""
from __future__ import annotations

import csv
import io
from typing import Mapping

from .gcgmc import GcGmcReport
from .ingest import format_number

STEP_COLUMNS = (
    "time_index",
    "ise_auto_x", "ise_cross_x", "bandwidth_auto_x", "bandwidth_cross_x",
    "ise_auto_y", "ise_cross_y", "bandwidth_auto_y", "bandwidth_cross_y",
)


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_number(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def step_rows(report: GcGmcReport) -> list[list[str]]:
    rows = []
    for rx, ry in zip(report.records_x, report.records_y):
        rows.append([
            str(rx.time_index),
            *(format_number(v) for v in (rx.ise_auto, rx.ise_cross, rx.bandwidth_auto, rx.bandwidth_cross)),
            *(format_number(v) for v in (ry.ise_auto, ry.ise_cross, ry.bandwidth_auto, ry.bandwidth_cross)),
        ])
    return rows


def steps_csv(report: GcGmcReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEP_COLUMNS)
    w.writerows(step_rows(report))
    return buf.getvalue()


def format_report(report: GcGmcReport, config: Mapping[str, object]) -> str:
    x_label, y_label = report.labels
    sums = {
        "sum_ise_auto_x": sum(r.ise_auto for r in report.records_x),
        "sum_ise_cross_x": sum(r.ise_cross for r in report.records_x),
        "sum_ise_auto_y": sum(r.ise_auto for r in report.records_y),
        "sum_ise_cross_y": sum(r.ise_cross for r in report.records_y),
    }
    lines = ["# fgc GcGMC analysis report", "format_version = 1", "", "[config]"]
    lines += [f"{k} = {_fmt(v)}" for k, v in config.items()]
    lines += [
        "",
        "[result]",
        f"x_label = {x_label}",
        f"y_label = {y_label}",
        f"n_test = {len(report.records_x)}",
        f"gcgmc_x = {_fmt(report.gcgmc_x)}",
        f"gcgmc_y = {_fmt(report.gcgmc_y)}",
        f"undefined = {_fmt(report.gcgmc_x is None or report.gcgmc_y is None)}",
        f"decision = {report.decision.value}",
        f"summary = {report.summary}",
    ]
    lines += [f"{k} = {_fmt(float(v))}" for k, v in sums.items()]
    lines += ["", "[steps]", " ".join(STEP_COLUMNS)]
    lines += [" ".join(row) for row in step_rows(report)]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    """Read back the ``key = value`` part of a report (sections flattened)."""
    out = {}
    for line in text.splitlines():
        if line.strip() == "[steps]":
            break
        if " = " in line and not line.startswith("#"):
            k, v = line.split(" = ", 1)
            out[k.strip()] = v.strip()
    return out

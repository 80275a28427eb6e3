"""Machine (JSON/CSV) and human (rich table) renderings of reports."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from rich.console import Console
from rich.table import Table

from ..exceptions import ReportSchemaError
from ..models import CFI_COUNT_NAMES, AttackVerdict, RunReport, SizeReport
from ..utils.io import write_csv

logger = logging.getLogger(__name__)

COUNT_FIELDS = [f"counts.{name}" for name in CFI_COUNT_NAMES]

SIZE_FIELDS = [
    "program", "total_text_bytes", "cfi_bytes", *COUNT_FIELDS, "skipped_words",
    "baseline_text_bytes", "overhead_bytes", "overhead_pct",
]

RUN_FIELDS = [
    "program", "config", "status", "exit_code", "retired", "cfi_retired", "cfi_fraction",
    *COUNT_FIELDS, "total_cycles", "cfi_cycles", "baseline_cycles", "overhead_pct",
    "total_text_bytes", "cfi_bytes", "size_overhead_pct",
]


def enables_label(enables: dict[str, bool]) -> str:
    on = [name for name in ("zicfiss", "zicfilp") if enables.get(name)]
    return "+".join(on) or "baseline"


def report_kind(data: dict[str, Any]) -> str:
    if "status" in data and "retired" in data:
        return "run"
    if "total_text_bytes" in data:
        return "size"
    raise ReportSchemaError(f"not a run or size report: keys {sorted(data)}")


def load_report_files(paths: Iterable[str | Path]) -> list[dict[str, Any]]:
    """Read report JSON files; each holds one report object or a list of them."""
    reports: list[dict[str, Any]] = []
    for path in paths:
        p = Path(path)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ReportSchemaError(f"cannot read report {p}: {exc}") from exc
        items = data if isinstance(data, list) else [data]
        for item in items:
            if not isinstance(item, dict):
                raise ReportSchemaError(f"{p}: report entries must be objects")
            reports.append(item)
    return reports


def size_row(size: SizeReport) -> dict[str, Any]:
    d = size.to_dict()
    row = {k: d[k] for k in SIZE_FIELDS if k in d}
    row.update({f"counts.{k}": v for k, v in d["counts"].items()})
    return row


def run_row(report: RunReport) -> dict[str, Any]:
    row: dict[str, Any] = {
        "program": report.program,
        "config": enables_label(report.enables),
        "status": report.status.value,
        "exit_code": report.exit_code,
        "retired": report.retired,
        "cfi_retired": report.cfi_retired,
        "cfi_fraction": report.cfi_fraction,
    }
    row.update({f"counts.{k}": v for k, v in report.cfi_counts.items()})
    if report.cycles is not None:
        row.update({
            "total_cycles": report.cycles.total_cycles,
            "cfi_cycles": report.cycles.cfi_cycles,
            "baseline_cycles": report.cycles.baseline_cycles,
            "overhead_pct": report.cycles.overhead_pct,
        })
    if report.size is not None:
        row.update({
            "total_text_bytes": report.size.total_text_bytes,
            "cfi_bytes": report.size.cfi_bytes,
            "size_overhead_pct": report.size.overhead_pct,
        })
    return row


def tabulate(reports: Sequence[dict[str, Any]]) -> tuple[list[str], list[dict[str, Any]]]:
    """Flatten a homogeneous report set into (fieldnames, rows) sorted by program and config.

    Raises ReportSchemaError when run and size reports are mixed, or when
    only some run reports carry cycle counts.
    """
    if not reports:
        return RUN_FIELDS, []
    kinds = {report_kind(r) for r in reports}
    if len(kinds) > 1:
        raise ReportSchemaError("cannot mix run reports and size reports in one table")
    if kinds == {"size"}:
        rows = [size_row(SizeReport.from_dict(r)) for r in reports]
        return SIZE_FIELDS, sorted(rows, key=lambda r: r["program"])
    runs = [RunReport.from_dict(r) for r in reports]
    timed = {r.cycles is not None for r in runs}
    if len(timed) > 1:
        raise ReportSchemaError("cannot mix reports with and without timing in one table")
    rows = [run_row(r) for r in runs]
    return RUN_FIELDS, sorted(rows, key=lambda r: (r["program"], r["config"]))


def cmd_report(reports: Sequence[dict[str, Any]], csv_path: str | Path) -> int:
    """Write the CSV table for *reports*; an empty set writes the header only."""
    fields, rows = tabulate(reports)
    write_csv(Path(csv_path), rows, fields, mode="w")
    logger.info("Wrote %d row(s) to %s", len(rows), csv_path)
    return len(rows)


# ---------------------------------------------------------------------------
# Human-readable tables
# ---------------------------------------------------------------------------

def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def run_table(report: RunReport) -> Table:
    table = Table(title=f"{report.program or 'program'} [{enables_label(report.enables)}]")
    table.add_column("metric")
    table.add_column("value", justify="right")
    table.add_row("status", report.status.value)
    table.add_row("exit code", _fmt(report.exit_code))
    table.add_row("retired", str(report.retired))
    table.add_row("CFI retired", str(report.cfi_retired))
    table.add_row("CFI fraction", f"{100.0 * report.cfi_fraction:.3f}%")
    for name, n in report.cfi_counts.items():
        table.add_row(f"  {name}", str(n))
    if report.exception is not None:
        exc = report.exception
        label = exc["cause"] + (f"/{exc['subcode']}" if exc.get("subcode") else "")
        table.add_row("exception", f"{label} at 0x{exc['pc']:x}")
    if report.cycles is not None:
        table.add_row("cycles", str(report.cycles.total_cycles))
        table.add_row("CFI cycles", str(report.cycles.cfi_cycles))
        if report.cycles.baseline_cycles is not None:
            table.add_row("baseline cycles", str(report.cycles.baseline_cycles))
        if report.cycles.pairing_error:
            table.add_row("pairing error", report.cycles.pairing_error)
        else:
            table.add_row("cycle overhead %", _fmt(report.cycles.overhead_pct))
    if report.size is not None:
        table.add_row("text bytes", str(report.size.total_text_bytes))
        table.add_row("CFI bytes", str(report.size.cfi_bytes))
        table.add_row("size overhead %", _fmt(report.size.overhead_pct))
    return table


def size_table(reports: Sequence[SizeReport]) -> Table:
    table = Table(title="Code size")
    for col in ("program", "text bytes", "CFI bytes", *CFI_COUNT_NAMES, "skipped", "overhead %"):
        table.add_column(col, justify="left" if col == "program" else "right")
    for r in reports:
        table.add_row(
            r.program, str(r.total_text_bytes), str(r.cfi_bytes),
            *(str(r.counts.get(k, 0)) for k in CFI_COUNT_NAMES),
            str(r.skipped_words), _fmt(r.overhead_pct),
        )
    return table


def attack_table(verdicts: Sequence[AttackVerdict]) -> Table:
    table = Table(title="Attack scenarios")
    for col in ("scenario", "unprotected", "gadget reached", "protected", "expected", "verdict"):
        table.add_column(col)
    for v in verdicts:
        exc = v.protected_exception or {}
        got = f"{exc.get('cause')}/{exc.get('subcode')}" if exc else v.protected_status
        table.add_row(
            v.scenario, v.unprotected_status, "yes" if v.gadget_reached else "no",
            got, v.expected, "[green]PASS[/]" if v.passed else "[red]FAIL[/]",
        )
    return table


def print_table(table: Table, console: Optional[Console] = None) -> None:
    (console or Console()).print(table)

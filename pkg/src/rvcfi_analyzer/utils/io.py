"""File helpers for traces (JSON lines), reports (JSON/CSV) and failure records."""
from __future__ import annotations

import csv
import json
import logging
import re
from pathlib import Path
from typing import Any, Iterable, Mapping

logger = logging.getLogger(__name__)

_UNSAFE_NAME = re.compile(r"[^\w\-]")


def _prepare(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_jsonl(path: Path, rows: Iterable[Mapping[str, Any]], *, mode: str = "a") -> None:
    with _prepare(path).open(mode, encoding="utf-8") as f:
        f.writelines(json.dumps(r, sort_keys=True) + "\n" for r in rows)


def read_jsonl(path: Path) -> list[dict]:
    """Rows of a trace or run.log; a missing file reads as empty.

    A truncated last line (interrupted run) or any other unparsable line is
    skipped with a warning.
    """
    if not path.exists():
        return []
    rows: list[dict] = []
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError:
                logger.warning("Skipping unparsable line %s:%d", path, line_no)
    return rows


def dump_json(data: Any) -> str:
    """Report JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_json(path: Path, data: Any) -> None:
    _prepare(path).write_text(dump_json(data), encoding="utf-8")


def write_csv(
    path: Path,
    rows: Iterable[Mapping[str, Any]],
    fieldnames: list[str],
    *,
    mode: str = "a",
) -> None:
    """Write *rows* restricted to *fieldnames*; the header goes into new files only."""
    needs_header = mode == "w" or not path.exists()
    with _prepare(path).open(mode, newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction="ignore")
        if needs_header:
            writer.writeheader()
        writer.writerows(rows)


def write_failure(
    failures_dir: Path, stage: str, name: str, record: Mapping[str, Any],
) -> Path:
    """Persist ``<failures_dir>/<stage>_<name>.json`` and return its path."""
    path = _prepare(failures_dir / f"{stage}_{_UNSAFE_NAME.sub('_', name)}.json")
    write_json(path, {"stage": stage, "name": name, **record})
    logger.debug("Wrote %s failure record %s", stage, path)
    return path

"""Logging setup for the ``rvcfi`` CLI and batch runs.

Library code only ever calls ``logging.getLogger(__name__)``; handlers are
attached here. Structured fields travel as ``extra=`` keys (``PROGRAM``,
``STATUS``, ``RETIRED``, ``PC``) and land under ``"extra"`` in run.log.
"""
from __future__ import annotations

import json
import logging
import traceback
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

PACKAGE_LOGGER = "rvcfi_analyzer"
RUN_LOG_NAME = "run.log"

# Address-valued extras are easier to grep for as hex.
_ADDRESS_KEYS = frozenset({"PC", "TVAL", "SSP"})

_RECORD_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {
    "message", "asctime", "taskName",
}


def _extras(record: logging.LogRecord) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in vars(record).items():
        if key in _RECORD_ATTRS or key.startswith("_"):
            continue
        if key in _ADDRESS_KEYS and isinstance(value, int):
            value = f"0x{value:x}"
        out[key] = value
    return out


class JsonLineFormatter(logging.Formatter):
    """One JSON object per record: timestamp, level, message, module, extra."""

    def format(self, record: logging.LogRecord) -> str:
        line: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "message": record.getMessage(),
            "module": record.module,
            "extra": _extras(record),
        }
        if record.exc_info and record.exc_info[0] is not None:
            line["traceback"] = traceback.format_exception(*record.exc_info)
        return json.dumps(line, default=str)


def setup_file_handler(logger: logging.Logger, log_dir: str | Path) -> Path:
    """Log everything at DEBUG to ``<log_dir>/run.log`` as JSON lines.

    Calling it again for the same directory is a no-op. Returns the log path.
    """
    log_path = Path(log_dir) / RUN_LOG_NAME
    log_path.parent.mkdir(parents=True, exist_ok=True)
    target = str(log_path.resolve())
    if not any(
        isinstance(h, logging.FileHandler) and h.baseFilename == target for h in logger.handlers
    ):
        handler = logging.FileHandler(target, encoding="utf-8")
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(JsonLineFormatter())
        logger.addHandler(handler)
    return log_path


def setup_cli_logging(*, verbosity: int = 0) -> None:
    """Attach one RichHandler to the package logger.

    ``-q`` maps to verbosity -1 (WARNING), the default to INFO and any
    ``-v`` to DEBUG. Repeated calls only adjust the level.
    """
    from rich.logging import RichHandler

    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG)
    existing = next((h for h in logger.handlers if isinstance(h, RichHandler)), None)
    if existing is not None:
        existing.setLevel(level)
        return

    handler = RichHandler(rich_tracebacks=True, markup=False, show_path=False)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)

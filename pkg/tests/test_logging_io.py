"""Logging setup and JSON/CSV output helpers."""
from __future__ import annotations

import json
import logging
import sys

from rvcfi_analyzer.config import Settings
from rvcfi_analyzer.program.assembler import assemble_program
from rvcfi_analyzer.run import simulate
from rvcfi_analyzer.utils.io import dump_json, read_jsonl, write_csv, write_failure, write_jsonl
from rvcfi_analyzer.utils.logger import (
    PACKAGE_LOGGER,
    JsonLineFormatter,
    setup_cli_logging,
    setup_file_handler,
)


def _record(msg: str = "test", args: tuple = (), level: int = logging.INFO, exc_info=None):
    return logging.LogRecord(
        name="test", level=level, pathname="test.py",
        lineno=1, msg=msg, args=args, exc_info=exc_info,
    )


def _drop_file_handlers() -> None:
    _logger = logging.getLogger(PACKAGE_LOGGER)
    for h in list(_logger.handlers):
        if isinstance(h, logging.FileHandler):
            h.close()
            _logger.removeHandler(h)


# ---------------------------------------------------------------------------
# JsonLineFormatter
# ---------------------------------------------------------------------------

class TestJsonLineFormatter:
    def test_valid_json(self):
        data = json.loads(JsonLineFormatter().format(_record("hello %s", ("world",))))
        assert data["message"] == "hello world"
        assert data["level"] == "INFO"
        assert "timestamp" in data
        assert "module" in data

    def test_extra_fields(self):
        record = _record()
        record.PROGRAM = "bench.s"
        record.RETIRED = 42
        data = json.loads(JsonLineFormatter().format(record))
        assert data["extra"] == {"PROGRAM": "bench.s", "RETIRED": 42}

    def test_exception_traceback(self):
        try:
            raise ValueError("test error")
        except ValueError:
            exc_info = sys.exc_info()
        data = json.loads(JsonLineFormatter().format(
            _record("error", level=logging.ERROR, exc_info=exc_info)
        ))
        assert isinstance(data["traceback"], list)
        assert any("ValueError" in t for t in data["traceback"])


# ---------------------------------------------------------------------------
# setup_file_handler / setup_cli_logging
# ---------------------------------------------------------------------------

class TestFileLogging:
    def setup_method(self):
        _drop_file_handlers()

    def teardown_method(self):
        _drop_file_handlers()

    def test_run_summary_logged_as_json(self, tmp_path):
        log_dir = tmp_path / "logs"
        _logger = logging.getLogger(PACKAGE_LOGGER)
        _logger.setLevel(logging.DEBUG)
        setup_file_handler(_logger, log_dir)
        cfg = Settings()
        prog = assemble_program(
            "_start:\n    li a0, 0\n    li a7, 93\n    ecall\n", base=cfg.TEXT_BASE, name="t.s",
        )
        simulate(prog, cfg)
        for h in _logger.handlers:
            h.flush()
        rows = read_jsonl(log_dir / "run.log")
        summary = [r for r in rows if r["message"].startswith("Run finished")]
        assert summary
        assert summary[-1]["extra"]["PROGRAM"] == "t.s"
        assert summary[-1]["extra"]["STATUS"] == "clean-exit"

    def test_idempotent(self, tmp_path):
        _logger = logging.getLogger(PACKAGE_LOGGER)
        for _ in range(3):
            setup_file_handler(_logger, tmp_path / "logs")
        assert len([h for h in _logger.handlers if isinstance(h, logging.FileHandler)]) == 1

    def test_cli_logging_single_rich_handler(self):
        from rich.logging import RichHandler

        setup_cli_logging(verbosity=0)
        setup_cli_logging(verbosity=1)
        handlers = [
            h for h in logging.getLogger(PACKAGE_LOGGER).handlers if isinstance(h, RichHandler)
        ]
        assert len(handlers) == 1
        assert handlers[0].level == logging.DEBUG


# ---------------------------------------------------------------------------
# JSON / CSV helpers
# ---------------------------------------------------------------------------

class TestReadJsonl:
    def test_skips_bad_lines(self, tmp_path):
        p = tmp_path / "trace.jsonl"
        p.write_text('{"pc":1}\nnot json\n{"pc":2}\n', encoding="utf-8")
        assert read_jsonl(p) == [{"pc": 1}, {"pc": 2}]

    def test_missing_file_returns_empty(self, tmp_path):
        assert read_jsonl(tmp_path / "nonexistent.jsonl") == []

    def test_write_then_append(self, tmp_path):
        p = tmp_path / "deep" / "trace.jsonl"
        write_jsonl(p, [{"pc": 1}], mode="w")
        write_jsonl(p, [{"pc": 2}])
        assert read_jsonl(p) == [{"pc": 1}, {"pc": 2}]


class TestWriters:
    def test_dump_json_is_canonical(self):
        assert dump_json({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'

    def test_write_csv_header_once(self, tmp_path):
        p = tmp_path / "rows.csv"
        write_csv(p, [{"a": 1, "b": 2}], ["a", "b"])
        write_csv(p, [{"a": 3, "extra": 9}], ["a", "b"])
        assert p.read_text(encoding="utf-8").splitlines() == ["a,b", "1,2", "3,"]

    def test_write_csv_overwrite(self, tmp_path):
        p = tmp_path / "rows.csv"
        write_csv(p, [{"a": 1}], ["a"])
        write_csv(p, [], ["a"], mode="w")
        assert p.read_text(encoding="utf-8").splitlines() == ["a"]


class TestWriteFailure:
    def test_schema(self, tmp_path):
        path = write_failure(tmp_path / "failures", "attack", "rop", {"verdict": "FAIL"})
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data == {"stage": "attack", "name": "rop", "verdict": "FAIL"}

    def test_creates_dir(self, tmp_path):
        failures_dir = tmp_path / "deep" / "nested" / "failures"
        write_failure(failures_dir, "attack", "x", {})
        assert failures_dir.is_dir()

    def test_sanitizes_name(self, tmp_path):
        path = write_failure(tmp_path, "stage", "../../etc/passwd", {})
        assert ".." not in path.name
        assert "/" not in path.name

from __future__ import annotations


class RVCFIError(Exception):
    """Base exception for rvcfi-analyzer."""


class ConfigError(RVCFIError):
    """Invalid or inconsistent configuration."""


class PreflightError(RVCFIError):
    """Preflight checks failed."""

    def __init__(self, results: list[dict]) -> None:
        self.results = results
        failed = [r for r in results if not r.get("OK")]
        names = ", ".join(r.get("NAME", "?") for r in failed) or "unknown"
        super().__init__(f"Preflight failed: {names}")


class LoadError(RVCFIError):
    """Program image could not be loaded."""


class AssemblerError(RVCFIError):
    """Assembler source rejected."""

    def __init__(self, line_no: int, message: str) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class ReportSchemaError(RVCFIError):
    """Reports handed to the aggregator do not share one schema."""


class GenbenchError(RVCFIError):
    """Benchmark generator parameters out of bounds."""

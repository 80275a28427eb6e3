from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from ._version import __version__
from .isa.types import CFI_COUNT_KEYS

CFI_COUNT_NAMES = ("lpad", "sspush", "sspopchk", "ssrdp", "ssamoswap")

_TAG_TO_COUNT = {tag.value: key for tag, key in CFI_COUNT_KEYS.items()}


class ExitStatus(str, Enum):
    CLEAN_EXIT = "clean-exit"
    CFI_FAULT = "cfi-fault"
    OTHER_FAULT = "other-fault"
    LIMIT_EXCEEDED = "limit-exceeded"

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self]


_EXIT_CODES = {
    ExitStatus.CLEAN_EXIT: 0,
    ExitStatus.CFI_FAULT: 2,
    ExitStatus.OTHER_FAULT: 3,
    ExitStatus.LIMIT_EXCEEDED: 5,
}
EXIT_CONFIG_ERROR = 4


def _pct(num: float, den: float) -> float:
    return 100.0 * num / den


@dataclass
class CycleReport:
    """Cycle totals of one run, optionally paired against a baseline run."""

    total_cycles: int
    cycles_by_class: dict[str, int] = field(default_factory=dict)
    cfi_cycles: int = 0
    baseline_cycles: Optional[int] = None
    overhead_pct: Optional[float] = None
    pairing_error: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_cycles": self.total_cycles,
            "cycles_by_class": dict(sorted(self.cycles_by_class.items())),
            "cfi_cycles": self.cfi_cycles,
            "baseline_cycles": self.baseline_cycles,
            "overhead_pct": self.overhead_pct,
            "pairing_error": self.pairing_error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CycleReport:
        return cls(**data)


@dataclass
class SizeReport:
    """Static text size and CFI instruction bytes found by linear sweep."""

    program: str
    total_text_bytes: int
    cfi_bytes: int
    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(CFI_COUNT_NAMES, 0))
    skipped_words: int = 0
    baseline_text_bytes: Optional[int] = None
    overhead_bytes: Optional[int] = None
    overhead_pct: Optional[float] = None

    def paired_with(self, baseline: SizeReport) -> SizeReport:
        delta = self.total_text_bytes - baseline.total_text_bytes
        return SizeReport(
            program=self.program,
            total_text_bytes=self.total_text_bytes,
            cfi_bytes=self.cfi_bytes,
            counts=dict(self.counts),
            skipped_words=self.skipped_words,
            baseline_text_bytes=baseline.total_text_bytes,
            overhead_bytes=delta,
            overhead_pct=(
                _pct(delta, baseline.total_text_bytes) if baseline.total_text_bytes else 0.0
            ),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "program": self.program,
            "total_text_bytes": self.total_text_bytes,
            "cfi_bytes": self.cfi_bytes,
            "counts": {k: self.counts.get(k, 0) for k in CFI_COUNT_NAMES},
            "skipped_words": self.skipped_words,
            "baseline_text_bytes": self.baseline_text_bytes,
            "overhead_bytes": self.overhead_bytes,
            "overhead_pct": self.overhead_pct,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SizeReport:
        return cls(**data)


@dataclass
class RunReport:
    """Outcome of one simulated program run."""

    program: str
    status: ExitStatus
    retired: int
    by_kind: dict[str, int] = field(default_factory=dict)
    by_cfi_tag: dict[str, int] = field(default_factory=dict)
    exit_code: Optional[int] = None
    exception: Optional[dict[str, Any]] = None
    stdout: str = ""
    final_pc: int = 0
    enables: dict[str, bool] = field(default_factory=dict)
    cycles: Optional[CycleReport] = None
    size: Optional[SizeReport] = None
    tool_version: str = __version__

    @property
    def cfi_retired(self) -> int:
        return sum(n for tag, n in self.by_cfi_tag.items() if tag != "NONE")

    @property
    def cfi_fraction(self) -> float:
        return self.cfi_retired / self.retired if self.retired else 0.0

    @property
    def cfi_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(CFI_COUNT_NAMES, 0)
        for tag, n in self.by_cfi_tag.items():
            key = _TAG_TO_COUNT.get(tag)
            if key is not None:
                counts[key] += n
        return counts

    def to_dict(self) -> dict[str, Any]:
        return {
            "program": self.program,
            "status": self.status.value,
            "exit_code": self.exit_code,
            "retired": self.retired,
            "by_kind": dict(sorted(self.by_kind.items())),
            "by_cfi_tag": dict(sorted(self.by_cfi_tag.items())),
            "cfi_counts": self.cfi_counts,
            "cfi_fraction": self.cfi_fraction,
            "exception": self.exception,
            "stdout": self.stdout,
            "final_pc": self.final_pc,
            "enables": dict(sorted(self.enables.items())),
            "cycles": self.cycles.to_dict() if self.cycles is not None else None,
            "size": self.size.to_dict() if self.size is not None else None,
            "tool_version": self.tool_version,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunReport:
        cycles = data.get("cycles")
        size = data.get("size")
        return cls(
            program=data["program"],
            status=ExitStatus(data["status"]),
            retired=data["retired"],
            by_kind=dict(data.get("by_kind", {})),
            by_cfi_tag=dict(data.get("by_cfi_tag", {})),
            exit_code=data.get("exit_code"),
            exception=data.get("exception"),
            stdout=data.get("stdout", ""),
            final_pc=data.get("final_pc", 0),
            enables=dict(data.get("enables", {})),
            cycles=CycleReport.from_dict(cycles) if cycles else None,
            size=SizeReport.from_dict(size) if size else None,
            tool_version=data.get("tool_version", __version__),
        )


@dataclass
class AttackVerdict:
    """Result of running one attack scenario with protections off and on."""

    scenario: str
    passed: bool
    unprotected_status: str
    gadget_reached: bool
    protected_status: str
    protected_exception: Optional[dict[str, Any]] = None
    expected: str = ""
    detail: str = ""
    trace: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "verdict": "PASS" if self.passed else "FAIL",
            "unprotected_status": self.unprotected_status,
            "gadget_reached": self.gadget_reached,
            "protected_status": self.protected_status,
            "protected_exception": self.protected_exception,
            "expected": self.expected,
            "detail": self.detail,
        }


@dataclass
class PreflightResult:
    """Outcome of ``run_preflight()``."""

    ok: bool
    results: list[dict] = field(default_factory=list)
    report_path: Path | None = None

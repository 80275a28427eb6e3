"""Cycle accounting over a stream of retired instructions.

The model is a cost table rather than a stage-by-stage pipeline: every
retired op costs its class cost, a taken control transfer adds the
front-end refill penalty, and a ``sspopchk`` that directly follows
another waits for the single in-flight check to clear. With
``dual_commit`` an ``lpad`` may share a commit cycle with the
instruction before it.
"""
from __future__ import annotations

import logging
from typing import Iterable, Optional

from ..isa.types import CfiTag, DecodedOp, OpKind, RetiredOp
from ..models import CycleReport, RunReport
from .cost_table import CFI_CLASSES, CostTable, cost_class

logger = logging.getLogger(__name__)

_CONTROL_KINDS = frozenset({OpKind.BRANCH, OpKind.JAL, OpKind.JALR})


def cost_of(op: DecodedOp, table: CostTable) -> int:
    """Static cycle cost of *op* on its own.

    Penalties and dual-commit pairing depend on the previous retirement and
    are added by :func:`retire_cost`; with ``dual_commit`` the sum of
    ``cost_of`` over a trace exceeds the accumulated cycles by one
    ``lpad_cost`` per paired ``lpad``.
    """
    return table.class_cost(cost_class(op))


def retire_cost(
    retired: RetiredOp,
    prev: Optional[RetiredOp],
    prev_paired: bool,
    table: CostTable,
) -> tuple[int, bool]:
    """Cycles charged for *retired* after *prev*, and whether it paired.

    An ``lpad`` pairs with the instruction before it when ``dual_commit``
    is on and that instruction did not pair itself; a paired ``lpad`` is free.
    """
    op = retired.op
    if table.dual_commit and op.cfi_tag is CfiTag.LPAD and prev is not None and not prev_paired:
        return 0, True
    cycles = cost_of(op, table)
    if retired.taken and op.kind in _CONTROL_KINDS:
        cycles += table.branch_penalty
    if op.cfi_tag is CfiTag.SSPOPCHK and prev is not None and prev.op.cfi_tag is CfiTag.SSPOPCHK:
        cycles += table.popchk_stall
    return cycles, False


class CycleAccumulator:
    """Callable retirement hook that totals cycles per attribution class."""

    def __init__(self, table: CostTable) -> None:
        self.table = table
        self.cycles_by_class: dict[str, int] = {}
        self._prev: Optional[RetiredOp] = None
        self._prev_paired = False

    def add(self, retired: RetiredOp) -> int:
        cycles, self._prev_paired = retire_cost(
            retired, self._prev, self._prev_paired, self.table,
        )
        cls = cost_class(retired.op)
        self.cycles_by_class[cls] = self.cycles_by_class.get(cls, 0) + cycles
        self._prev = retired
        return cycles

    __call__ = add

    @property
    def total_cycles(self) -> int:
        return sum(self.cycles_by_class.values())

    def report(self) -> CycleReport:
        return CycleReport(
            total_cycles=self.total_cycles,
            cycles_by_class=dict(sorted(self.cycles_by_class.items())),
            cfi_cycles=sum(self.cycles_by_class.get(c, 0) for c in CFI_CLASSES),
        )


def accumulate(trace: Iterable[RetiredOp], table: CostTable) -> CycleReport:
    acc = CycleAccumulator(table)
    for retired in trace:
        acc.add(retired)
    return acc.report()


def overhead_pct(cfi_total: int, base_total: int) -> float:
    if base_total <= 0:
        raise ValueError("baseline cycle total must be positive")
    return 100.0 * (cfi_total - base_total) / base_total


def compare_cycles(cfi: RunReport, baseline: RunReport) -> CycleReport:
    """Pair the CFI run's cycles with a baseline run.

    Runs that ended differently are not compared: the result carries a
    ``pairing_error`` and no overhead.
    """
    if cfi.cycles is None or baseline.cycles is None:
        raise ValueError("both runs need timing enabled to be compared")
    result = CycleReport(**cfi.cycles.to_dict())
    result.baseline_cycles = baseline.cycles.total_cycles
    if cfi.status is not baseline.status or cfi.exit_code != baseline.exit_code:
        result.pairing_error = (
            f"exit status differs: {cfi.program}={cfi.status.value}/{cfi.exit_code} "
            f"vs {baseline.program}={baseline.status.value}/{baseline.exit_code}"
        )
        result.overhead_pct = None
        logger.warning("Cycle pairing rejected: %s", result.pairing_error)
        return result
    result.overhead_pct = overhead_pct(cfi.cycles.total_cycles, baseline.cycles.total_cycles)
    result.pairing_error = None
    return result

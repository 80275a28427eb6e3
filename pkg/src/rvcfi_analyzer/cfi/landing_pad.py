"""Forward-edge protection: the Landing Pad Unit.

The LPU watches retiring instructions in program order. A write to x7 records
the label the next indirect jump must land on; a retiring indirect jump makes
a label-matching ``lpad`` the only instruction allowed to retire next.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from ..isa.traps import CfiException, landing_pad_fault
from ..isa.types import CfiTag, DecodedOp, OpKind, RetiredOp

LABEL_REG = 7
LABEL_SHIFT = 12
LABEL_WIDTH = 20
WILDCARD_LABEL = 0
LINK_REGS = frozenset({1, 5})

_LABEL_MASK = (1 << LABEL_WIDTH) - 1


class Elp(str, Enum):
    NO_LP_EXPECTED = "NO_LP_EXPECTED"
    LP_EXPECTED = "LP_EXPECTED"


@dataclass(frozen=True)
class LpuState:
    elp: Elp = Elp.NO_LP_EXPECTED
    last_x7: int = 0

    @property
    def expected_label(self) -> int:
        return extract_label(self.last_x7)


def extract_label(x7_value: int) -> int:
    return (x7_value >> LABEL_SHIFT) & _LABEL_MASK


def lpad_label(op: DecodedOp) -> int:
    """Label carried in the upper-immediate field of an ``lpad``."""
    return (op.imm >> LABEL_SHIFT) & _LABEL_MASK


def match_label(lpad_imm_label: int, expected_label: int) -> bool:
    return lpad_imm_label == WILDCARD_LABEL or lpad_imm_label == expected_label


def is_return(op: DecodedOp) -> bool:
    """The ``ret`` idiom: jalr x0, 0(ra|t0)."""
    return op.kind is OpKind.JALR and op.rd == 0 and op.rs1 in LINK_REGS and op.imm == 0


def is_indirect_jump(op: DecodedOp, *, protect_ret: bool = True) -> bool:
    if op.kind is not OpKind.JALR:
        return False
    return protect_ret or not is_return(op)


def lpu_check(state: LpuState, retired: RetiredOp, lp_enabled: bool) -> None:
    """Raise LANDING_PAD_FAULT if *retired* may not retire in *state*.

    Callable before the instruction executes; only the landing-pad
    expectation is consulted.
    """
    if state.elp is not Elp.LP_EXPECTED:
        return
    op = retired.op
    if not lp_enabled or op.cfi_tag is not CfiTag.LPAD:
        raise landing_pad_fault(retired.pc, f"{op.name} retired where an lpad was expected")
    if retired.pc % 4:
        raise landing_pad_fault(retired.pc, "lpad is not 4-byte aligned")
    label = lpad_label(op)
    if not match_label(label, state.expected_label):
        raise landing_pad_fault(
            retired.pc,
            f"lpad label 0x{label:x} does not match expected 0x{state.expected_label:x}",
        )


def lpu_observe(
    state: LpuState, retired: RetiredOp, lp_enabled: bool, *, protect_ret: bool = True,
) -> LpuState:
    """Advance the LPU by one retiring instruction or raise its fault."""
    lpu_check(state, retired, lp_enabled)
    if state.elp is Elp.LP_EXPECTED:
        # The matching lpad retires without side effects.
        return replace(state, elp=Elp.NO_LP_EXPECTED)
    op = retired.op
    new = state
    if op.rd == LABEL_REG:
        new = replace(new, last_x7=retired.rd_value)
    if lp_enabled and is_indirect_jump(op, protect_ret=protect_ret):
        new = replace(new, elp=Elp.LP_EXPECTED)
    return new


def cleared(state: LpuState) -> LpuState:
    """State after a trap: the expectation is dropped, the label shadow kept."""
    return replace(state, elp=Elp.NO_LP_EXPECTED)


@dataclass(frozen=True)
class ChainResult:
    state: LpuState
    fault: Optional[CfiException] = None
    fault_port: Optional[int] = None


def lpu_chain(
    state: LpuState,
    port0: RetiredOp,
    port1: Optional[RetiredOp],
    lp_enabled: bool,
    *,
    protect_ret: bool = True,
) -> ChainResult:
    """Two LPUs in series, one per commit port.

    Port 0's unit hands its updated state to port 1's, so a jump and its
    landing pad can retire in the same cycle. A fault on port 0 squashes
    port 1.
    """
    current = state
    for port, retired in enumerate((port0, port1)):
        if retired is None:
            break
        try:
            current = lpu_observe(current, retired, lp_enabled, protect_ret=protect_ret)
        except CfiException as exc:
            return ChainResult(state=cleared(current), fault=exc, fault_port=port)
    return ChainResult(state=current)

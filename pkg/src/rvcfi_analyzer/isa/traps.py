"""Architectural exceptions raised by simulated instructions."""
from __future__ import annotations

from enum import IntEnum
from typing import Optional


class TrapCause(IntEnum):
    INSTRUCTION_ACCESS_FAULT = 1
    ILLEGAL_INSTRUCTION = 2
    BREAKPOINT = 3
    LOAD_ACCESS_FAULT = 5
    STORE_ACCESS_FAULT = 7
    SOFTWARE_CHECK = 18


class CheckSubcode(IntEnum):
    """Value written to mtval for a SOFTWARE_CHECK."""

    LANDING_PAD_FAULT = 2
    SHADOW_STACK_FAULT = 3


class CfiException(Exception):
    """A precise trap of one simulated instruction.

    Only SOFTWARE_CHECK carries a subcode.
    """

    def __init__(
        self,
        cause: TrapCause,
        pc: int,
        detail: str = "",
        subcode: Optional[CheckSubcode] = None,
        tval: int = 0,
    ) -> None:
        if (cause is TrapCause.SOFTWARE_CHECK) != (subcode is not None):
            raise ValueError(f"subcode {subcode!r} is invalid for cause {cause.name}")
        self.cause = cause
        self.subcode = subcode
        self.pc = pc
        self.detail = detail
        self.tval = int(subcode) if subcode is not None else tval
        super().__init__(f"{self.label} at pc=0x{pc:x}: {detail}")

    @property
    def label(self) -> str:
        if self.subcode is not None:
            return f"{self.cause.name}/{self.subcode.name}"
        return self.cause.name

    @property
    def is_cfi_violation(self) -> bool:
        return self.cause is TrapCause.SOFTWARE_CHECK

    def to_dict(self) -> dict:
        return {
            "cause": self.cause.name,
            "cause_code": int(self.cause),
            "subcode": self.subcode.name if self.subcode is not None else None,
            "pc": self.pc,
            "tval": self.tval,
            "detail": self.detail,
        }


def landing_pad_fault(pc: int, detail: str) -> CfiException:
    return CfiException(
        TrapCause.SOFTWARE_CHECK, pc, detail, subcode=CheckSubcode.LANDING_PAD_FAULT,
    )


def shadow_stack_fault(pc: int, detail: str) -> CfiException:
    return CfiException(
        TrapCause.SOFTWARE_CHECK, pc, detail, subcode=CheckSubcode.SHADOW_STACK_FAULT,
    )


def illegal_instruction(pc: int, raw: int, detail: str = "") -> CfiException:
    return CfiException(
        TrapCause.ILLEGAL_INSTRUCTION, pc, detail or f"undecodable word 0x{raw:08x}", tval=raw,
    )

"""Backward-edge protection: the Shadow Stack Unit.

The SSU filters shadow-stack instructions before they reach memory, performs
the pop-and-check comparison, and keeps ``ssp`` in step with pushes and pops.
Every operation validates fully before it mutates, so a fault leaves the hart
and memory untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..isa.bits import sext, u64
from ..isa.hart import HartState, Priv, SatpMode, CsrFile
from ..isa.traps import CfiException, TrapCause, shadow_stack_fault
from ..isa.types import CfiTag, DecodedOp
from ..memory.image import AccessKind, MemoryImage

SLOT_BYTES = 8
# Descending shadow stack: push decrements ssp, then stores.
PUSH_DELTA = -SLOT_BYTES


class Verdict(str, Enum):
    ALLOW = "ALLOW"
    FAULT = "FAULT"


class FilterRule(str, Enum):
    NONE = "none"
    SSAMOSWAP_IN_M_MODE = "ssamoswap-in-m-mode"
    TRANSLATION_DISABLED = "translation-disabled-below-m"


@dataclass(frozen=True)
class SsuVerdict:
    outcome: Verdict
    reason: FilterRule = FilterRule.NONE
    exception: Optional[CfiException] = None

    @property
    def allowed(self) -> bool:
        return self.outcome is Verdict.ALLOW


def ssu_gate(op: DecodedOp, priv: Priv, csr: CsrFile, *, pc: int = 0) -> SsuVerdict:
    """Early instruction filter, evaluated before the load-store unit is reached."""
    if op.cfi_tag in (CfiTag.SSAMOSWAP_W, CfiTag.SSAMOSWAP_D) and priv is Priv.M:
        return SsuVerdict(
            Verdict.FAULT, FilterRule.SSAMOSWAP_IN_M_MODE,
            CfiException(TrapCause.STORE_ACCESS_FAULT, pc, "ssamoswap executed in M-mode"),
        )
    if priv < Priv.M and csr.satp_mode is SatpMode.BARE:
        return SsuVerdict(
            Verdict.FAULT, FilterRule.TRANSLATION_DISABLED,
            CfiException(
                TrapCause.STORE_ACCESS_FAULT, pc,
                f"{op.name} below M-mode with address translation disabled",
            ),
        )
    return SsuVerdict(Verdict.ALLOW)


def _gate_or_raise(hart: HartState, op: DecodedOp, pc: int) -> None:
    verdict = ssu_gate(op, hart.priv, hart.csr, pc=pc)
    if verdict.exception is not None:
        raise verdict.exception


def exec_sspush(hart: HartState, mem: MemoryImage, link_reg_index: int, *,
                op: Optional[DecodedOp] = None) -> None:
    pc = hart.pc
    if op is not None:
        _gate_or_raise(hart, op, pc)
    new_ssp = u64(hart.csr.ssp + PUSH_DELTA)
    value = hart.read_reg(link_reg_index)
    mem.store_int(new_ssp, SLOT_BYTES, value, is_zicfiss=True, pc=pc)
    hart.csr.ssp = new_ssp


def exec_sspopchk(hart: HartState, mem: MemoryImage, link_reg_index: int, *,
                  op: Optional[DecodedOp] = None) -> None:
    pc = hart.pc
    if op is not None:
        _gate_or_raise(hart, op, pc)
    ssp = hart.csr.ssp
    saved = mem.load_int(ssp, SLOT_BYTES, is_zicfiss=True, pc=pc)
    link = hart.read_reg(link_reg_index)
    if saved != link:
        raise shadow_stack_fault(
            pc,
            f"x{link_reg_index}=0x{link:x} does not match shadow stack 0x{saved:x} at 0x{ssp:x}",
        )
    hart.csr.ssp = u64(ssp + SLOT_BYTES)


def exec_ssrdp(hart: HartState, rd: int, *, ss_enabled: bool = True) -> None:
    hart.write_reg(rd, hart.csr.ssp if ss_enabled else 0)


def exec_ssamoswap(hart: HartState, mem: MemoryImage, op: DecodedOp) -> None:
    pc = hart.pc
    _gate_or_raise(hart, op, pc)
    width = 4 if op.cfi_tag is CfiTag.SSAMOSWAP_W else 8
    addr = hart.read_reg(op.rs1)
    new = hart.read_reg(op.rs2) & ((1 << (8 * width)) - 1)
    old = mem.access(addr, width, AccessKind.SWAP, True, new.to_bytes(width, "little"), pc=pc)
    value = int.from_bytes(old, "little")
    hart.write_reg(op.rd, u64(sext(value, 32)) if width == 4 else value)

"""Fetch, decode and execute loop.

Each handler reads its operands and performs every check that can fault
before it touches registers, memory or ``ssp``; the landing-pad check runs
ahead of the handler. A faulting instruction therefore leaves no trace
other than the trap CSRs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

from ..cfi.landing_pad import cleared, lpu_check, lpu_observe
from ..cfi.shadow_stack import exec_ssamoswap, exec_sspopchk, exec_sspush, exec_ssrdp
from ..memory.image import MemoryImage
from ..models import ExitStatus, RunReport
from .bits import MASK32, MASK64, s64, sext, sext32, u64
from .decoder import UndecodableWord, decode, is_compressed, is_mop
from .hart import (
    CSR_SSP,
    CsrAccessError,
    HartState,
    Priv,
    csr_min_priv,
    csr_read_only,
)
from .syscalls import ConsoleIO, handle_ecall
from .traps import CfiException, TrapCause, illegal_instruction
from .types import CfiTag, DecodedOp, Enables, OpKind, RetiredOp

logger = logging.getLogger(__name__)

RetireHook = Callable[[RetiredOp], None]


@dataclass(frozen=True)
class ExecOptions:
    # When true every jalr, including ``ret``, must land on an lpad.
    protect_ret: bool = True


DEFAULT_OPTIONS = ExecOptions()


@dataclass
class StepOutcome:
    retired: Optional[RetiredOp] = None
    exception: Optional[CfiException] = None

    @property
    def faulted(self) -> bool:
        return self.exception is not None


# ---------------------------------------------------------------------------
# Integer arithmetic
# ---------------------------------------------------------------------------

_INT64_MIN = -(1 << 63)
_INT32_MIN = -(1 << 31)


def _div_signed(a: int, b: int, minimum: int) -> int:
    if b == 0:
        return -1
    if a == minimum and b == -1:
        return a
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _rem_signed(a: int, b: int, minimum: int) -> int:
    if b == 0:
        return a
    if a == minimum and b == -1:
        return 0
    return a - b * _div_signed(a, b, minimum)


def _divu(a: int, b: int, mask: int) -> int:
    return mask if b == 0 else a // b


def _remu(a: int, b: int) -> int:
    return a if b == 0 else a % b


def _w(a: int) -> int:
    return sext(a & MASK32, 32)


_ALU_RR: dict[str, Callable[[int, int], int]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "sll": lambda a, b: a << (b & 63),
    "slt": lambda a, b: int(s64(a) < s64(b)),
    "sltu": lambda a, b: int(a < b),
    "xor": lambda a, b: a ^ b,
    "srl": lambda a, b: a >> (b & 63),
    "sra": lambda a, b: s64(a) >> (b & 63),
    "or": lambda a, b: a | b,
    "and": lambda a, b: a & b,
    "mul": lambda a, b: a * b,
    "mulh": lambda a, b: (s64(a) * s64(b)) >> 64,
    "mulhsu": lambda a, b: (s64(a) * b) >> 64,
    "mulhu": lambda a, b: (a * b) >> 64,
    "div": lambda a, b: _div_signed(s64(a), s64(b), _INT64_MIN),
    "divu": lambda a, b: _divu(a, b, MASK64),
    "rem": lambda a, b: _rem_signed(s64(a), s64(b), _INT64_MIN),
    "remu": _remu,
    "addw": lambda a, b: sext32(a + b),
    "subw": lambda a, b: sext32(a - b),
    "sllw": lambda a, b: sext32((a & MASK32) << (b & 31)),
    "srlw": lambda a, b: sext32((a & MASK32) >> (b & 31)),
    "sraw": lambda a, b: sext32(_w(a) >> (b & 31)),
    "mulw": lambda a, b: sext32(a * b),
    "divw": lambda a, b: sext32(_div_signed(_w(a), _w(b), _INT32_MIN)),
    "divuw": lambda a, b: sext32(_divu(a & MASK32, b & MASK32, MASK32)),
    "remw": lambda a, b: sext32(_rem_signed(_w(a), _w(b), _INT32_MIN)),
    "remuw": lambda a, b: sext32(_remu(a & MASK32, b & MASK32)),
}

_ALU_RI = {
    "addi": "add", "slti": "slt", "sltiu": "sltu", "xori": "xor", "ori": "or",
    "andi": "and", "slli": "sll", "srli": "srl", "srai": "sra",
    "addiw": "addw", "slliw": "sllw", "srliw": "srlw", "sraiw": "sraw",
}

# name -> (width, sign-extend)
_LOADS = {
    "lb": (1, True), "lh": (2, True), "lw": (4, True), "ld": (8, False),
    "lbu": (1, False), "lhu": (2, False), "lwu": (4, False),
}
_STORES = {"sb": 1, "sh": 2, "sw": 4, "sd": 8}

_BRANCHES: dict[str, Callable[[int, int], bool]] = {
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
    "blt": lambda a, b: s64(a) < s64(b),
    "bge": lambda a, b: s64(a) >= s64(b),
    "bltu": lambda a, b: a < b,
    "bgeu": lambda a, b: a >= b,
}


# ---------------------------------------------------------------------------
# Execute
# ---------------------------------------------------------------------------

def _exec_csr(hart: HartState, op: DecodedOp, enables: Enables) -> None:
    addr = op.imm & 0xFFF
    pc = hart.pc
    immediate = op.name.endswith("i")
    src = op.rs1 if immediate else hart.read_reg(op.rs1)
    base = op.name[:5]
    writes = base == "csrrw" or op.rs1 != 0
    reads = base != "csrrw" or op.rd != 0

    if csr_min_priv(addr) > hart.priv:
        raise illegal_instruction(
            pc, op.raw, f"CSR 0x{addr:03x} is not accessible from {hart.priv.name}",
        )
    if writes and csr_read_only(addr):
        raise illegal_instruction(pc, op.raw, f"write to read-only CSR 0x{addr:03x}")
    if addr == CSR_SSP and hart.priv < Priv.M and not enables.ss_enabled:
        raise illegal_instruction(pc, op.raw, "ssp accessed while shadow stacks are inactive")
    try:
        old = hart.csr.read(addr, instret=hart.instret, cycle=hart.instret) if reads else 0
        if writes:
            if base == "csrrw":
                new = src
            elif base == "csrrs":
                new = old | src
            else:
                new = old & ~src
            hart.csr.write(addr, new)
    except CsrAccessError as exc:
        raise illegal_instruction(pc, op.raw, str(exc)) from None
    hart.write_reg(op.rd, old)


def _execute(
    hart: HartState, mem: MemoryImage, op: DecodedOp, enables: Enables, io: ConsoleIO,
) -> tuple[int, bool]:
    """Run *op* at ``hart.pc``; returns (next_pc, taken)."""
    pc = hart.pc
    name = op.name
    fallthrough = u64(pc + op.size_bytes)
    rs1 = hart.read_reg(op.rs1)
    rs2 = hart.read_reg(op.rs2)

    if op.cfi_tag is not CfiTag.NONE:
        tag = op.cfi_tag
        if tag is CfiTag.LPAD:
            pass
        elif tag is CfiTag.SSPUSH:
            exec_sspush(hart, mem, op.rs2, op=op)
        elif tag is CfiTag.SSPOPCHK:
            exec_sspopchk(hart, mem, op.rs1, op=op)
        elif tag is CfiTag.SSRDP:
            exec_ssrdp(hart, op.rd, ss_enabled=enables.ss_enabled)
        else:
            exec_ssamoswap(hart, mem, op)
        return fallthrough, False

    fn = _ALU_RR.get(name)
    if fn is not None:
        hart.write_reg(op.rd, fn(rs1, rs2))
        return fallthrough, False
    alias = _ALU_RI.get(name)
    if alias is not None:
        hart.write_reg(op.rd, _ALU_RR[alias](rs1, u64(op.imm)))
        return fallthrough, False
    if name in _LOADS:
        width, signed = _LOADS[name]
        value = mem.load_int(u64(rs1 + op.imm), width, pc=pc)
        hart.write_reg(op.rd, sext(value, 8 * width) if signed else value)
        return fallthrough, False
    if name in _STORES:
        mem.store_int(u64(rs1 + op.imm), _STORES[name], rs2, pc=pc)
        return fallthrough, False
    cond = _BRANCHES.get(name)
    if cond is not None:
        if cond(rs1, rs2):
            return u64(pc + op.imm), True
        return fallthrough, False
    if name == "jal":
        hart.write_reg(op.rd, fallthrough)
        return u64(pc + op.imm), True
    if name == "jalr":
        target = u64(rs1 + op.imm) & ~1
        hart.write_reg(op.rd, fallthrough)
        return target, True
    if name == "lui":
        hart.write_reg(op.rd, u64(op.imm))
        return fallthrough, False
    if name == "auipc":
        hart.write_reg(op.rd, u64(pc + op.imm))
        return fallthrough, False
    if op.kind is OpKind.CSR:
        _exec_csr(hart, op, enables)
        return fallthrough, False
    if is_mop(op):
        hart.write_reg(op.rd, 0)
        return fallthrough, False
    if name == "fence":
        return fallthrough, False
    if name == "ecall":
        handle_ecall(hart, mem, io)
        return fallthrough, False
    if name == "ebreak":
        raise CfiException(TrapCause.BREAKPOINT, pc, "ebreak", tval=pc)
    raise illegal_instruction(pc, op.raw, f"no handler for {name}")


def fetch_decode(hart: HartState, mem: MemoryImage, enables: Enables) -> DecodedOp:
    pc = hart.pc
    word = mem.fetch(pc, 2, pc=pc)
    if not is_compressed(word):
        word = mem.fetch(pc, 4, pc=pc)
    try:
        return decode(word, enables)
    except UndecodableWord:
        raise illegal_instruction(pc, word) from None


def _trap(hart: HartState, exc: CfiException) -> None:
    hart.lpu = cleared(hart.lpu)
    hart.csr.mepc = exc.pc
    hart.csr.mcause = int(exc.cause)
    hart.csr.mtval = u64(exc.tval)
    hart.halted = True


def step(
    hart: HartState,
    mem: MemoryImage,
    *,
    options: ExecOptions = DEFAULT_OPTIONS,
    io: Optional[ConsoleIO] = None,
) -> StepOutcome:
    """Retire exactly one instruction or record exactly one exception."""
    if hart.halted:
        raise RuntimeError("step() called on a halted hart")
    io = io if io is not None else ConsoleIO()
    pc = hart.pc
    enables = hart.enables()
    try:
        op = fetch_decode(hart, mem, enables)
        lpu_check(hart.lpu, RetiredOp(pc=pc, op=op), enables.lp_enabled)
        next_pc, taken = _execute(hart, mem, op, enables, io)
    except CfiException as exc:
        _trap(hart, exc)
        logger.debug("Trap %s", exc)
        return StepOutcome(exception=exc)

    retired = RetiredOp(
        pc=pc, op=op, rd_value=hart.xreg[op.rd], taken=taken, next_pc=next_pc,
    )
    hart.lpu = lpu_observe(hart.lpu, retired, enables.lp_enabled, protect_ret=options.protect_ret)
    hart.pc = next_pc
    hart.instret += 1
    return StepOutcome(retired=retired)


def run(
    hart: HartState,
    mem: MemoryImage,
    limit: int,
    *,
    options: ExecOptions = DEFAULT_OPTIONS,
    io: Optional[ConsoleIO] = None,
    on_retire: Optional[RetireHook] = None,
    program: str = "",
) -> RunReport:
    """Step until exit, the first exception, or *limit* retirements."""
    if limit <= 0:
        raise ValueError(f"instruction limit must be positive, got {limit}")
    io = io if io is not None else ConsoleIO()
    mem.freeze()
    by_kind = {k.value: 0 for k in OpKind}
    by_tag = {t.value: 0 for t in CfiTag}
    status = ExitStatus.LIMIT_EXCEEDED
    exception: Optional[CfiException] = None
    retired = 0

    while retired < limit:
        outcome = step(hart, mem, options=options, io=io)
        if outcome.faulted:
            exception = outcome.exception
            assert exception is not None
            status = ExitStatus.CFI_FAULT if exception.is_cfi_violation else ExitStatus.OTHER_FAULT
            break
        r = outcome.retired
        assert r is not None
        retired += 1
        by_kind[r.op.kind.value] += 1
        by_tag[r.op.cfi_tag.value] += 1
        if on_retire is not None:
            on_retire(r)
        if hart.halted:
            status = ExitStatus.CLEAN_EXIT
            break

    logger.info(
        "Run finished: %s after %d instructions", status.value, retired,
        extra={"PROGRAM": program, "STATUS": status.value, "RETIRED": retired, "PC": hart.pc},
    )
    return RunReport(
        program=program,
        status=status,
        exit_code=hart.exit_code,
        retired=retired,
        by_kind=by_kind,
        by_cfi_tag=by_tag,
        exception=exception.to_dict() if exception is not None else None,
        stdout=io.text(),
        final_pc=hart.pc,
    )

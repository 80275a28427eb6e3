"""Two-pass mini-assembler for test programs and generated benchmarks.

Grammar, one statement per line::

    [label:]... [mnemonic operand, operand, ...]   # or ; starts a comment

Directives: ``.text``, ``.globl``/``.global``, ``.align N`` (2**N bytes),
``.byte``/``.half``/``.word``/``.dword`` (numbers or symbols), ``.zero N``,
``.equ NAME, VALUE``. Immediates are integers (decimal, 0x, 0b, 0o) or
``symbol[+-]offset`` expressions. A branch or jump operand that names a
symbol is a target address; a bare number is a pc-relative offset.

``call``/``tail`` assemble to a single ``jal``; programs must fit in the
+-1 MiB ``jal`` range. Compressed instructions are only emitted when
written explicitly with their ``c.`` mnemonic.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Optional

from ..exceptions import AssemblerError
from ..isa import compressed
from ..isa.bits import sext
from ..isa.opcodes import OpcodeEntry, load_opcode_table
from .loader import LoadedProgram, Segment

logger = logging.getLogger(__name__)

ABI_NAMES = (
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2",
    "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5",
    "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7",
    "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
)
REGISTERS: dict[str, int] = {name: i for i, name in enumerate(ABI_NAMES)}
REGISTERS.update({f"x{i}": i for i in range(32)})
REGISTERS["fp"] = 8

CSR_NAMES: dict[str, int] = {
    "ssp": 0x011, "senvcfg": 0x10A, "satp": 0x180, "menvcfg": 0x30A,
    "mepc": 0x341, "mcause": 0x342, "mtval": 0x343, "henvcfg": 0x60A,
    "cycle": 0xC00, "instret": 0xC02, "mhartid": 0xF14,
}

_LABEL_RE = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:")
_SYMBOL_RE = re.compile(r"^[A-Za-z_.$][\w.$]*$")
_MEM_RE = re.compile(r"^(.*)\(\s*([\w$]+)\s*\)$")
_TERM_RE = re.compile(r"\s*([+-]?)\s*([^+\-\s]+)")

_DATA_WIDTHS = {".byte": 1, ".half": 2, ".word": 4, ".dword": 8}
_IGNORED_DIRECTIVES = frozenset({".text", ".globl", ".global", ".section", ".type", ".size"})

_PSEUDO_SIZES = {"la": 8}


@dataclass
class Statement:
    line_no: int
    mnemonic: str
    operands: list[str]
    addr: int = 0
    size: int = 0


# ---------------------------------------------------------------------------
# Operand parsing
# ---------------------------------------------------------------------------

def _split_operands(text: str) -> list[str]:
    text = text.strip()
    return [part.strip() for part in text.split(",")] if text else []


def _strip_comment(line: str) -> str:
    for marker in ("#", ";"):
        idx = line.find(marker)
        if idx >= 0:
            line = line[:idx]
    return line


def _parse_int(token: str) -> Optional[int]:
    try:
        return int(token, 0)
    except ValueError:
        return None


class _Context:
    """Symbol table plus the statement being encoded, for error reporting."""

    def __init__(self, symbols: dict[str, int]) -> None:
        self.symbols = symbols
        self.line_no = 0

    def error(self, message: str) -> AssemblerError:
        return AssemblerError(self.line_no, message)

    def reg(self, token: str) -> int:
        idx = REGISTERS.get(token.strip().lower())
        if idx is None:
            raise self.error(f"unknown register {token!r}")
        return idx

    def has_symbol(self, expr: str) -> bool:
        return any(
            _parse_int(term) is None for _, term in _TERM_RE.findall(expr)
        )

    def value(self, expr: str) -> int:
        expr = expr.strip()
        if not expr:
            raise self.error("missing operand")
        total = 0
        consumed = 0
        for m in _TERM_RE.finditer(expr):
            sign, term = m.group(1), m.group(2)
            if m.start() != consumed or (consumed and not sign):
                raise self.error(f"cannot parse expression {expr!r}")
            consumed = m.end()
            number = _parse_int(term)
            if number is None:
                if not _SYMBOL_RE.match(term):
                    raise self.error(f"cannot parse expression {expr!r}")
                if term not in self.symbols:
                    raise self.error(f"undefined symbol {term!r}")
                number = self.symbols[term]
            total += -number if sign == "-" else number
        if consumed != len(expr):
            raise self.error(f"cannot parse expression {expr!r}")
        return total

    def mem(self, token: str) -> tuple[int, int]:
        """``imm(reg)`` -> (imm, reg); a missing imm means 0."""
        m = _MEM_RE.match(token.strip())
        if m is None:
            raise self.error(f"expected imm(reg), got {token!r}")
        imm_text = m.group(1).strip()
        return (self.value(imm_text) if imm_text else 0), self.reg(m.group(2))

    def csr(self, token: str) -> int:
        token = token.strip().lower()
        if token in CSR_NAMES:
            return CSR_NAMES[token]
        value = self.value(token)
        if not 0 <= value < 4096:
            raise self.error(f"CSR number {value} out of range")
        return value

    def target_offset(self, token: str, pc: int) -> int:
        value = self.value(token)
        return value - pc if self.has_symbol(token) else value


def _expect(ctx: _Context, ops: list[str], count: int, mnemonic: str) -> None:
    if len(ops) != count:
        raise ctx.error(f"{mnemonic} takes {count} operand(s), got {len(ops)}")


def _check_signed(ctx: _Context, value: int, bits: int, what: str) -> int:
    if not -(1 << (bits - 1)) <= value < (1 << (bits - 1)):
        raise ctx.error(f"{what} {value} does not fit in {bits} signed bits")
    return value


# ---------------------------------------------------------------------------
# 32-bit field packing
# ---------------------------------------------------------------------------

def _pack_r(match: int, rd: int, rs1: int, rs2: int) -> int:
    return match | (rd << 7) | (rs1 << 15) | (rs2 << 20)


def _pack_i(match: int, rd: int, rs1: int, imm: int) -> int:
    return match | (rd << 7) | (rs1 << 15) | ((imm & 0xFFF) << 20)


def _pack_s(match: int, rs1: int, rs2: int, imm: int) -> int:
    u = imm & 0xFFF
    return match | ((u & 0x1F) << 7) | (rs1 << 15) | (rs2 << 20) | ((u >> 5) << 25)


def _pack_b(match: int, rs1: int, rs2: int, imm: int) -> int:
    u = imm & 0x1FFF
    return (
        match | (((u >> 11) & 1) << 7) | (((u >> 1) & 0xF) << 8) | (rs1 << 15) | (rs2 << 20)
        | (((u >> 5) & 0x3F) << 25) | (((u >> 12) & 1) << 31)
    )


def _pack_u(match: int, rd: int, imm20: int) -> int:
    return match | (rd << 7) | ((imm20 & 0xFFFFF) << 12)


def _pack_j(match: int, rd: int, imm: int) -> int:
    u = imm & 0x1FFFFF
    return (
        match | (rd << 7) | (((u >> 12) & 0xFF) << 12) | (((u >> 11) & 1) << 20)
        | (((u >> 1) & 0x3FF) << 21) | (((u >> 20) & 1) << 31)
    )


def _pack_mop_r(n: int, rd: int, rs1: int) -> int:
    return (
        0x81C04073 | (((n >> 4) & 1) << 30) | (((n >> 2) & 0x3) << 26)
        | ((n & 0x3) << 20) | (rd << 7) | (rs1 << 15)
    )


def _pack_mop_rr(n: int, rd: int, rs1: int, rs2: int) -> int:
    return (
        0x82004073 | (((n >> 2) & 1) << 30) | ((n & 0x3) << 26)
        | (rd << 7) | (rs1 << 15) | (rs2 << 20)
    )


def _upper_imm(ctx: _Context, value: int) -> int:
    if not -(1 << 19) <= value < (1 << 20):
        raise ctx.error(f"upper immediate {value} does not fit in 20 bits")
    return value & 0xFFFFF


def _branch_offset(ctx: _Context, offset: int, bits: int) -> int:
    if offset & 1:
        raise ctx.error(f"branch offset {offset} is odd")
    return _check_signed(ctx, offset, bits, "branch offset")


def _allowed(ctx: _Context, entry: OpcodeEntry, *, rs1: int = 0, rs2: int = 0, rd: int = 0) -> None:
    if entry.rs1_in is not None and rs1 not in entry.rs1_in:
        raise ctx.error(f"{entry.name} accepts rs1 in {sorted(entry.rs1_in)}, got x{rs1}")
    if entry.rs2_in is not None and rs2 not in entry.rs2_in:
        raise ctx.error(f"{entry.name} accepts rs2 in {sorted(entry.rs2_in)}, got x{rs2}")
    if entry.rd_nonzero and rd == 0:
        raise ctx.error(f"{entry.name} requires rd != x0")


def _encode_base(ctx: _Context, entry: OpcodeEntry, ops: list[str], pc: int) -> int:
    fmt, m, name = entry.format, entry.match, entry.name
    if fmt == "R":
        _expect(ctx, ops, 3, name)
        return _pack_r(m, ctx.reg(ops[0]), ctx.reg(ops[1]), ctx.reg(ops[2]))
    if fmt == "AMO":
        _expect(ctx, ops, 3, name)
        offset, rs1 = ctx.mem(ops[2])
        if offset:
            raise ctx.error(f"{name} takes a bare (reg) address")
        return _pack_r(m, ctx.reg(ops[0]), rs1, ctx.reg(ops[1]))
    if fmt == "I":
        _expect(ctx, ops, 3, name)
        imm = _check_signed(ctx, ctx.value(ops[2]), 12, "immediate")
        return _pack_i(m, ctx.reg(ops[0]), ctx.reg(ops[1]), imm)
    if fmt in ("ISH64", "ISH32"):
        _expect(ctx, ops, 3, name)
        shamt = ctx.value(ops[2])
        limit = 64 if fmt == "ISH64" else 32
        if not 0 <= shamt < limit:
            raise ctx.error(f"shift amount {shamt} out of range for {name}")
        return _pack_i(m, ctx.reg(ops[0]), ctx.reg(ops[1]), shamt)
    if fmt == "LOAD":
        _expect(ctx, ops, 2, name)
        imm, rs1 = ctx.mem(ops[1])
        return _pack_i(m, ctx.reg(ops[0]), rs1, _check_signed(ctx, imm, 12, "offset"))
    if fmt == "S":
        _expect(ctx, ops, 2, name)
        imm, rs1 = ctx.mem(ops[1])
        return _pack_s(m, rs1, ctx.reg(ops[0]), _check_signed(ctx, imm, 12, "offset"))
    if fmt == "JALR":
        if len(ops) == 1:
            rd, (imm, rs1) = 1, (0, ctx.reg(ops[0]))
        elif len(ops) == 2 and "(" in ops[1]:
            rd, (imm, rs1) = ctx.reg(ops[0]), ctx.mem(ops[1])
        elif len(ops) == 2:
            rd, imm, rs1 = ctx.reg(ops[0]), 0, ctx.reg(ops[1])
        else:
            _expect(ctx, ops, 3, name)
            rd, rs1, imm = ctx.reg(ops[0]), ctx.reg(ops[1]), ctx.value(ops[2])
        return _pack_i(m, rd, rs1, _check_signed(ctx, imm, 12, "offset"))
    if fmt == "B":
        _expect(ctx, ops, 3, name)
        offset = _branch_offset(ctx, ctx.target_offset(ops[2], pc), 13)
        return _pack_b(m, ctx.reg(ops[0]), ctx.reg(ops[1]), offset)
    if fmt == "U":
        _expect(ctx, ops, 2, name)
        return _pack_u(m, ctx.reg(ops[0]), _upper_imm(ctx, ctx.value(ops[1])))
    if fmt == "LPAD":
        _expect(ctx, ops, 1, name)
        label = ctx.value(ops[0])
        if not 0 <= label < (1 << 20):
            raise ctx.error(f"landing-pad label {label} does not fit in 20 bits")
        return _pack_u(m, 0, label)
    if fmt == "J":
        if len(ops) == 1:
            rd, target = 1, ops[0]
        else:
            _expect(ctx, ops, 2, name)
            rd, target = ctx.reg(ops[0]), ops[1]
        return _pack_j(m, rd, _branch_offset(ctx, ctx.target_offset(target, pc), 21))
    if fmt == "CSR":
        _expect(ctx, ops, 3, name)
        return _pack_i(m, ctx.reg(ops[0]), ctx.reg(ops[2]), ctx.csr(ops[1]))
    if fmt == "CSRI":
        _expect(ctx, ops, 3, name)
        uimm = ctx.value(ops[2])
        if not 0 <= uimm < 32:
            raise ctx.error(f"CSR immediate {uimm} out of range 0..31")
        return _pack_i(m, ctx.reg(ops[0]), uimm, ctx.csr(ops[1]))
    if fmt == "SYS":
        _expect(ctx, ops, 0, name)
        return m
    if fmt == "FENCE":
        return m | (0xFF << 20)
    if fmt == "SSPUSH":
        _expect(ctx, ops, 1, name)
        rs2 = ctx.reg(ops[0])
        _allowed(ctx, entry, rs2=rs2)
        return m | (rs2 << 20)
    if fmt == "SSPOPCHK":
        _expect(ctx, ops, 1, name)
        rs1 = ctx.reg(ops[0])
        _allowed(ctx, entry, rs1=rs1)
        return m | (rs1 << 15)
    if fmt == "SSRDP":
        _expect(ctx, ops, 1, name)
        rd = ctx.reg(ops[0])
        _allowed(ctx, entry, rd=rd)
        return m | (rd << 7)
    raise ctx.error(f"{name} cannot be assembled (format {fmt})")


def _encode_compressed(ctx: _Context, entry: OpcodeEntry, ops: list[str], pc: int) -> int:
    fmt, name = entry.format, entry.name
    try:
        if fmt == "C_SSPUSH":
            _expect(ctx, ops, 1, name)
            if ctx.reg(ops[0]) != compressed.C_SSPUSH_REG:
                raise ctx.error("c.sspush only encodes x1")
            return compressed.encode_compressed(entry)
        if fmt == "C_SSPOPCHK":
            _expect(ctx, ops, 1, name)
            if ctx.reg(ops[0]) != compressed.C_SSPOPCHK_REG:
                raise ctx.error("c.sspopchk only encodes x5")
            return compressed.encode_compressed(entry)
        if fmt == "C_NOP":
            _expect(ctx, ops, 0, name)
            return compressed.encode_compressed(entry)
        if fmt in ("CI", "CI_LUI"):
            _expect(ctx, ops, 2, name)
            rd = ctx.reg(ops[0])
            _allowed(ctx, entry, rd=rd)
            return compressed.encode_compressed(entry, rd=rd, imm=ctx.value(ops[1]))
        if fmt == "CJ":
            _expect(ctx, ops, 1, name)
            return compressed.encode_compressed(entry, imm=ctx.target_offset(ops[0], pc))
        if fmt == "CB":
            _expect(ctx, ops, 2, name)
            return compressed.encode_compressed(
                entry, rs1=ctx.reg(ops[0]), imm=ctx.target_offset(ops[1], pc),
            )
        if fmt in ("CI_LDSP", "CSS_SDSP"):
            _expect(ctx, ops, 2, name)
            if "(" in ops[1]:
                imm, base = ctx.mem(ops[1])
                if base != 2:
                    raise ctx.error(f"{name} addresses relative to sp only")
            else:
                imm = ctx.value(ops[1])
            reg = ctx.reg(ops[0])
            if fmt == "CI_LDSP":
                return compressed.encode_compressed(entry, rd=reg, imm=imm)
            return compressed.encode_compressed(entry, rs2=reg, imm=imm)
        if fmt in ("CR_JR", "CR_JALR"):
            _expect(ctx, ops, 1, name)
            return compressed.encode_compressed(entry, rs1=ctx.reg(ops[0]))
        if fmt in ("CR_MV", "CR_ADD"):
            _expect(ctx, ops, 2, name)
            return compressed.encode_compressed(entry, rd=ctx.reg(ops[0]), rs2=ctx.reg(ops[1]))
    except ValueError as exc:
        raise ctx.error(str(exc)) from None
    raise ctx.error(f"{name} cannot be assembled (format {fmt})")


# ---------------------------------------------------------------------------
# Pseudo-instructions
# ---------------------------------------------------------------------------

def li_sequence(value: int) -> list[tuple[str, int]]:
    """Instruction sequence materializing *value*: [(mnemonic, imm), ...].

    The first element reads x0 (``addi``) or is a ``lui``; later elements
    read and write rd.
    """
    value = sext(value, 64)
    if -2048 <= value < 2048:
        return [("addi", value)]
    if -(1 << 31) <= value < (1 << 31):
        hi = ((value + 0x800) >> 12) & 0xFFFFF
        lo = sext(value & 0xFFF, 12)
        return [("lui", hi)] + ([("addiw", lo)] if lo else [])
    lo = sext(value & 0xFFF, 12)
    hi = (value - lo) >> 12
    shift = (hi & -hi).bit_length() - 1
    hi >>= shift
    seq = li_sequence(hi) + [("slli", 12 + shift)]
    return seq + ([("addi", lo)] if lo else [])


def _pcrel_split(offset: int) -> tuple[int, int]:
    hi = (offset + 0x800) >> 12
    return hi & 0xFFFFF, offset - (hi << 12)


_SIMPLE_PSEUDOS: dict[str, Callable[[list[str]], tuple[str, list[str]]]] = {
    "nop": lambda o: ("addi", ["x0", "x0", "0"]),
    "mv": lambda o: ("addi", [o[0], o[1], "0"]),
    "not": lambda o: ("xori", [o[0], o[1], "-1"]),
    "neg": lambda o: ("sub", [o[0], "x0", o[1]]),
    "j": lambda o: ("jal", ["x0", o[0]]),
    "jr": lambda o: ("jalr", ["x0", f"0({o[0]})"]),
    "call": lambda o: ("jal", ["ra", o[0]]),
    "tail": lambda o: ("jal", ["x0", o[0]]),
    "ret": lambda o: ("jalr", ["x0", "0(ra)"]),
    "beqz": lambda o: ("beq", [o[0], "x0", o[1]]),
    "bnez": lambda o: ("bne", [o[0], "x0", o[1]]),
    "seqz": lambda o: ("sltiu", [o[0], o[1], "1"]),
    "snez": lambda o: ("sltu", [o[0], "x0", o[1]]),
    "bgt": lambda o: ("blt", [o[1], o[0], o[2]]),
    "ble": lambda o: ("bge", [o[1], o[0], o[2]]),
    "bgtu": lambda o: ("bltu", [o[1], o[0], o[2]]),
    "bleu": lambda o: ("bgeu", [o[1], o[0], o[2]]),
}
_PSEUDO_ARITY = {
    "nop": 0, "mv": 2, "not": 2, "neg": 2, "j": 1, "jr": 1, "call": 1, "tail": 1,
    "ret": 0, "beqz": 2, "bnez": 2, "seqz": 2, "snez": 2,
    "bgt": 3, "ble": 3, "bgtu": 3, "bleu": 3,
}


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

class Assembler:
    def __init__(self, base: int = 0) -> None:
        self.base = base
        self.table = load_opcode_table()

    def _lookup(self, mnemonic: str) -> Optional[OpcodeEntry]:
        if mnemonic in self.table.instructions:
            return self.table.instructions[mnemonic]
        return self.table.compressed.get(mnemonic)

    def _parse(self, source: str) -> tuple[list[Statement], dict[str, int]]:
        """Pass 1: split statements, assign addresses, collect symbols."""
        stmts: list[Statement] = []
        symbols: dict[str, int] = {}
        ctx = _Context(symbols)
        addr = self.base
        for line_no, raw in enumerate(source.splitlines(), start=1):
            ctx.line_no = line_no
            line = _strip_comment(raw)
            while (m := _LABEL_RE.match(line)) is not None:
                label = m.group(1)
                if label in symbols:
                    raise AssemblerError(line_no, f"duplicate symbol {label!r}")
                symbols[label] = addr
                line = line[m.end():]
            line = line.strip()
            if not line:
                continue
            parts = line.split(None, 1)
            mnemonic = parts[0].lower()
            ops = _split_operands(parts[1] if len(parts) > 1 else "")
            stmt = Statement(line_no, mnemonic, ops, addr=addr)
            stmt.size = self._size(ctx, stmt)
            if mnemonic == ".equ":
                _expect(ctx, ops, 2, ".equ")
                if ops[0] in symbols:
                    raise AssemblerError(line_no, f"duplicate symbol {ops[0]!r}")
                symbols[ops[0]] = ctx.value(ops[1])
            addr += stmt.size
            stmts.append(stmt)
        return stmts, symbols

    def _size(self, ctx: _Context, stmt: Statement) -> int:
        mn, ops = stmt.mnemonic, stmt.operands
        if mn.startswith("."):
            if mn in _IGNORED_DIRECTIVES or mn == ".equ":
                return 0
            if mn in _DATA_WIDTHS:
                return _DATA_WIDTHS[mn] * len(ops)
            if mn == ".zero":
                _expect(ctx, ops, 1, mn)
                n = ctx.value(ops[0])
                if n < 0:
                    raise ctx.error(".zero needs a non-negative size")
                return n
            if mn == ".align":
                _expect(ctx, ops, 1, mn)
                align = 1 << ctx.value(ops[0])
                return -stmt.addr % align
            raise ctx.error(f"unknown directive {mn}")
        if mn == "li":
            _expect(ctx, ops, 2, mn)
            return 4 * len(li_sequence(ctx.value(ops[1])))
        if mn in _PSEUDO_SIZES:
            return _PSEUDO_SIZES[mn]
        if mn in _SIMPLE_PSEUDOS:
            return 4
        if mn.startswith("c.mop."):
            return 2
        if mn.startswith(("mop.r.", "mop.rr.")):
            return 4
        entry = self._lookup(mn)
        if entry is None:
            raise ctx.error(f"unknown mnemonic {mn!r}")
        return 2 if entry.name in self.table.compressed else 4

    def _encode(self, ctx: _Context, stmt: Statement) -> bytes:
        mn, ops, pc = stmt.mnemonic, stmt.operands, stmt.addr
        if mn.startswith("."):
            if mn in _DATA_WIDTHS:
                width = _DATA_WIDTHS[mn]
                mask = (1 << (8 * width)) - 1
                return b"".join((ctx.value(o) & mask).to_bytes(width, "little") for o in ops)
            return bytes(stmt.size)
        if mn == "li":
            rd = ctx.reg(ops[0])
            words = []
            for i, (name, imm) in enumerate(li_sequence(ctx.value(ops[1]))):
                entry = self.table.instructions[name]
                if name == "lui":
                    words.append(_pack_u(entry.match, rd, imm))
                else:
                    words.append(_pack_i(entry.match, rd, 0 if i == 0 else rd, imm))
            return b"".join(w.to_bytes(4, "little") for w in words)
        if mn == "la":
            _expect(ctx, ops, 2, mn)
            rd = ctx.reg(ops[0])
            hi, lo = _pcrel_split(ctx.value(ops[1]) - pc)
            auipc = _pack_u(self.table.instructions["auipc"].match, rd, hi)
            addi = _pack_i(self.table.instructions["addi"].match, rd, rd, lo)
            return auipc.to_bytes(4, "little") + addi.to_bytes(4, "little")
        if mn in _SIMPLE_PSEUDOS:
            _expect(ctx, ops, _PSEUDO_ARITY[mn], mn)
            mn, ops = _SIMPLE_PSEUDOS[mn](ops)
        if mn.startswith("c.mop."):
            _expect(ctx, ops, 0, mn)
            n = _parse_int(mn[len("c.mop."):])
            try:
                word = compressed.encode_compressed(self.table.compressed["c.mop"], rd=n or 0)
            except ValueError as exc:
                raise ctx.error(str(exc)) from None
            return word.to_bytes(2, "little")
        if mn.startswith(("mop.r.", "mop.rr.")):
            return self._encode_mop(ctx, mn, ops).to_bytes(4, "little")
        entry = self._lookup(mn)
        if entry is None:
            raise ctx.error(f"unknown mnemonic {mn!r}")
        if entry.name in self.table.compressed:
            return _encode_compressed(ctx, entry, ops, pc).to_bytes(2, "little")
        return _encode_base(ctx, entry, ops, pc).to_bytes(4, "little")

    def _encode_mop(self, ctx: _Context, mn: str, ops: list[str]) -> int:
        rr = mn.startswith("mop.rr.")
        n = _parse_int(mn.rsplit(".", 1)[1])
        limit = 8 if rr else 32
        if n is None or not 0 <= n < limit:
            raise ctx.error(f"{mn}: MOP number must be 0..{limit - 1}")
        if rr:
            _expect(ctx, ops, 3, mn)
            return _pack_mop_rr(n, ctx.reg(ops[0]), ctx.reg(ops[1]), ctx.reg(ops[2]))
        _expect(ctx, ops, 2, mn)
        return _pack_mop_r(n, ctx.reg(ops[0]), ctx.reg(ops[1]))

    def assemble(self, source: str) -> tuple[bytes, dict[str, int]]:
        stmts, symbols = self._parse(source)
        ctx = _Context(symbols)
        out = bytearray()
        for stmt in stmts:
            ctx.line_no = stmt.line_no
            chunk = self._encode(ctx, stmt)
            if len(chunk) != stmt.size:
                raise ctx.error(
                    f"{stmt.mnemonic} encoded to {len(chunk)} bytes, expected {stmt.size}"
                )
            out += chunk
        logger.debug("Assembled %d statement(s) into %d bytes", len(stmts), len(out))
        return bytes(out), symbols


def assemble(source: str, base: int = 0) -> bytes:
    """Assemble *source* placed at *base*; returns the raw little-endian image."""
    data, _ = Assembler(base).assemble(source)
    return data


def assemble_program(source: str, *, base: int, name: str = "") -> LoadedProgram:
    """Assemble into a single-segment program; entry is ``_start`` if defined."""
    data, symbols = Assembler(base).assemble(source)
    if not data:
        raise AssemblerError(0, "program is empty")
    entry = symbols.get("_start", base)
    return LoadedProgram(
        name=name,
        entry=entry,
        segments=[Segment(vaddr=base, data=data, memsz=len(data))],
        symbols=dict(symbols),
        text_ranges=[(base, base + len(data))],
    )

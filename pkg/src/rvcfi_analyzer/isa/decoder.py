from __future__ import annotations

import functools

from . import compressed
from .bits import bit, sext
from .opcodes import OpcodeEntry, load_opcode_table
from .types import ALL_ENABLED, CfiTag, DecodedOp, Enables, OpKind


class UndecodableWord(ValueError):
    """No table entry accepts the word under the given enables."""

    def __init__(self, word: int) -> None:
        self.word = word
        super().__init__(f"undecodable instruction word 0x{word:08x}")


def is_compressed(parcel: int) -> bool:
    return parcel & 0x3 != 0x3


def _extension_active(entry: OpcodeEntry, enables: Enables) -> bool:
    if entry.extension == "zicfiss":
        return enables.ss_enabled
    if entry.extension == "zicfilp":
        return enables.lp_enabled
    return True


def _operands_ok(entry: OpcodeEntry, word: int) -> bool:
    rd, rs1, rs2 = (word >> 7) & 0x1F, (word >> 15) & 0x1F, (word >> 20) & 0x1F
    if entry.rs1_in is not None and rs1 not in entry.rs1_in:
        return False
    if entry.rs2_in is not None and rs2 not in entry.rs2_in:
        return False
    if entry.rd_nonzero and rd == 0:
        return False
    return True


def _imm_i(word: int) -> int:
    return sext(word >> 20, 12)


def _imm_s(word: int) -> int:
    return sext(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12)


def _imm_b(word: int) -> int:
    imm = (
        (bit(word, 31) << 12)
        | (bit(word, 7) << 11)
        | (((word >> 25) & 0x3F) << 5)
        | (((word >> 8) & 0xF) << 1)
    )
    return sext(imm, 13)


def _imm_u(word: int) -> int:
    return sext(word & 0xFFFFF000, 32)


def _imm_j(word: int) -> int:
    imm = (
        (bit(word, 31) << 20)
        | (((word >> 12) & 0xFF) << 12)
        | (bit(word, 20) << 11)
        | (((word >> 21) & 0x3FF) << 1)
    )
    return sext(imm, 21)


def mop_r_number(word: int) -> int:
    return (bit(word, 30) << 4) | (((word >> 26) & 0x3) << 2) | ((word >> 20) & 0x3)


def mop_rr_number(word: int) -> int:
    return (bit(word, 30) << 2) | ((word >> 26) & 0x3)


def _build(entry: OpcodeEntry, word: int) -> DecodedOp:
    rd, rs1, rs2 = (word >> 7) & 0x1F, (word >> 15) & 0x1F, (word >> 20) & 0x1F
    fmt = entry.format
    base = {"kind": entry.kind, "cfi_tag": entry.cfi_tag, "raw": word, "size_bytes": 4}
    name = entry.name

    if fmt == "R" or fmt == "AMO":
        return DecodedOp(name, rd=rd, rs1=rs1, rs2=rs2, **base)
    if fmt in ("I", "LOAD", "JALR"):
        return DecodedOp(name, rd=rd, rs1=rs1, imm=_imm_i(word), **base)
    if fmt == "ISH64":
        return DecodedOp(name, rd=rd, rs1=rs1, imm=(word >> 20) & 0x3F, **base)
    if fmt == "ISH32":
        return DecodedOp(name, rd=rd, rs1=rs1, imm=(word >> 20) & 0x1F, **base)
    if fmt == "S":
        return DecodedOp(name, rs1=rs1, rs2=rs2, imm=_imm_s(word), **base)
    if fmt == "B":
        return DecodedOp(name, rs1=rs1, rs2=rs2, imm=_imm_b(word), **base)
    if fmt == "U":
        return DecodedOp(name, rd=rd, imm=_imm_u(word), **base)
    if fmt == "LPAD":
        return DecodedOp(name, imm=_imm_u(word), **base)
    if fmt == "J":
        return DecodedOp(name, rd=rd, imm=_imm_j(word), **base)
    if fmt in ("CSR", "CSRI"):
        return DecodedOp(name, rd=rd, rs1=rs1, imm=word >> 20, **base)
    if fmt in ("SYS", "FENCE"):
        return DecodedOp(name, **base)
    if fmt == "MOP_R":
        return DecodedOp(f"mop.r.{mop_r_number(word)}", rd=rd, rs1=rs1, **base)
    if fmt == "MOP_RR":
        return DecodedOp(f"mop.rr.{mop_rr_number(word)}", rd=rd, rs1=rs1, rs2=rs2, **base)
    if fmt == "SSPUSH":
        return DecodedOp(name, rs2=rs2, **base)
    if fmt == "SSPOPCHK":
        return DecodedOp(name, rs1=rs1, **base)
    if fmt == "SSRDP":
        return DecodedOp(name, rd=rd, **base)
    raise ValueError(f"unknown instruction format {fmt!r} for {name}")


def _decode_compressed(half: int, enables: Enables) -> DecodedOp:
    table = load_opcode_table()
    for entry in table.compressed_by_quadrant.get(half & 0x3, ()):
        if not entry.matches(half) or not _extension_active(entry, enables):
            continue
        if entry.rd_nonzero and (half >> 7) & 0x1F == 0:
            continue
        target = table.instructions.get(entry.expands or "")
        op = compressed.expand(entry, half, target)
        if op is not None:
            return op
    raise UndecodableWord(half)


@functools.lru_cache(maxsize=1 << 16)
def decode(word: int, enables: Enables = ALL_ENABLED) -> DecodedOp:
    """Decode one instruction.

    The low two bits select a 16-bit compressed parcel or a 32-bit word.
    Entries of an extension that is not in *enables* are skipped, so CFI
    encodings fall through to their architected fallback (MOP or auipc x0).
    """
    if is_compressed(word):
        return _decode_compressed(word & 0xFFFF, enables)
    word &= 0xFFFFFFFF
    table = load_opcode_table()
    for entry in table.by_major.get(word & 0x7F, ()):
        if entry.matches(word) and _extension_active(entry, enables) and _operands_ok(entry, word):
            return _build(entry, word)
    raise UndecodableWord(word)


def is_mop(op: DecodedOp) -> bool:
    return op.name.startswith(("mop.", "c.mop."))


__all__ = [
    "CfiTag",
    "OpKind",
    "UndecodableWord",
    "decode",
    "is_compressed",
    "is_mop",
]

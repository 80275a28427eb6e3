"""RVC subset: the forms the assembler emits plus the compressed CFI encodings.

Decoding expands a 16-bit parcel into the operands of the 32-bit instruction
it stands for; encoding packs those operands back.
"""
from __future__ import annotations

from typing import Optional

from .bits import bit, sext
from .opcodes import OpcodeEntry
from .types import CfiTag, DecodedOp, OpKind

# c.sspush x1 / c.sspopchk x5 are fixed-register forms.
C_SSPUSH_REG = 1
C_SSPOPCHK_REG = 5


def _ci_imm(half: int) -> int:
    return sext((bit(half, 12) << 5) | ((half >> 2) & 0x1F), 6)


def _cj_imm(half: int) -> int:
    imm = (
        (bit(half, 12) << 11)
        | (bit(half, 11) << 4)
        | (((half >> 9) & 0x3) << 8)
        | (bit(half, 8) << 10)
        | (bit(half, 7) << 6)
        | (bit(half, 6) << 7)
        | (((half >> 3) & 0x7) << 1)
        | (bit(half, 2) << 5)
    )
    return sext(imm, 12)


def _cb_imm(half: int) -> int:
    imm = (
        (bit(half, 12) << 8)
        | (((half >> 10) & 0x3) << 3)
        | (((half >> 5) & 0x3) << 6)
        | (((half >> 3) & 0x3) << 1)
        | (bit(half, 2) << 5)
    )
    return sext(imm, 9)


def _ldsp_imm(half: int) -> int:
    return (bit(half, 12) << 5) | (((half >> 5) & 0x3) << 3) | (((half >> 2) & 0x7) << 6)


def _sdsp_imm(half: int) -> int:
    return (((half >> 10) & 0x7) << 3) | (((half >> 7) & 0x7) << 6)


def expand(entry: OpcodeEntry, half: int, target: Optional[OpcodeEntry]) -> Optional[DecodedOp]:
    """Return the decoded op for *half*, or None when operand constraints reject it."""
    rd = (half >> 7) & 0x1F
    rs2 = (half >> 2) & 0x1F
    fmt = entry.format
    kind = target.kind if target is not None else OpKind.ALU
    common = {"raw": half, "size_bytes": 2}

    if fmt == "C_SSPUSH":
        return DecodedOp("sspush", OpKind.STORE, CfiTag.SSPUSH, rs2=C_SSPUSH_REG, **common)
    if fmt == "C_SSPOPCHK":
        return DecodedOp("sspopchk", OpKind.LOAD, CfiTag.SSPOPCHK, rs1=C_SSPOPCHK_REG, **common)
    if fmt == "C_MOP":
        return DecodedOp(f"c.mop.{rd}", OpKind.ALU, **common)
    assert entry.expands is not None
    name = entry.expands
    if fmt == "C_NOP":
        return DecodedOp(name, kind, **common)
    if fmt == "CI":
        rs1 = rd if entry.name == "c.addi" else 0
        return DecodedOp(name, kind, rd=rd, rs1=rs1, imm=_ci_imm(half), **common)
    if fmt == "CI_LUI":
        imm6 = (bit(half, 12) << 5) | ((half >> 2) & 0x1F)
        if rd == 2 or imm6 == 0:
            return None
        return DecodedOp(name, kind, rd=rd, imm=sext(imm6, 6) << 12, **common)
    if fmt == "CJ":
        return DecodedOp(name, kind, imm=_cj_imm(half), **common)
    if fmt == "CB":
        rs1 = 8 + ((half >> 7) & 0x7)
        return DecodedOp(name, kind, rs1=rs1, imm=_cb_imm(half), **common)
    if fmt == "CI_LDSP":
        return DecodedOp(name, kind, rd=rd, rs1=2, imm=_ldsp_imm(half), **common)
    if fmt == "CSS_SDSP":
        return DecodedOp(name, kind, rs1=2, rs2=rs2, imm=_sdsp_imm(half), **common)
    if fmt == "CR_JR":
        return DecodedOp(name, kind, rs1=rd, **common)
    if fmt == "CR_JALR":
        return DecodedOp(name, kind, rd=1, rs1=rd, **common)
    if fmt in ("CR_MV", "CR_ADD"):
        if rs2 == 0:
            return None
        rs1 = rd if fmt == "CR_ADD" else 0
        return DecodedOp(name, kind, rd=rd, rs1=rs1, rs2=rs2, **common)
    raise ValueError(f"unknown compressed format {fmt!r}")


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def _fits_signed(value: int, bits: int) -> bool:
    return -(1 << (bits - 1)) <= value < (1 << (bits - 1))


def encode_compressed(entry: OpcodeEntry, *, rd: int = 0, rs1: int = 0, rs2: int = 0,
                      imm: int = 0) -> int:
    """Pack operands for a compressed *entry*. Raises ValueError on range errors."""
    fmt = entry.format
    word = entry.match
    if fmt in ("C_SSPUSH", "C_SSPOPCHK", "C_NOP"):
        return word
    if fmt == "C_MOP":
        if rd not in range(1, 16, 2):
            raise ValueError("c.mop.N requires odd N in 1..15")
        return (word & ~(0x1F << 7)) | (rd << 7)
    if fmt == "CI":
        if not _fits_signed(imm, 6):
            raise ValueError(f"immediate {imm} out of range for {entry.name}")
        u = imm & 0x3F
        return word | (bit(u, 5) << 12) | (rd << 7) | ((u & 0x1F) << 2)
    if fmt == "CI_LUI":
        if rd in (0, 2) or imm == 0 or not _fits_signed(imm, 6):
            raise ValueError(f"invalid c.lui operands rd={rd} imm={imm}")
        u = imm & 0x3F
        return word | (bit(u, 5) << 12) | (rd << 7) | ((u & 0x1F) << 2)
    if fmt == "CJ":
        if imm & 1 or not _fits_signed(imm, 12):
            raise ValueError(f"jump offset {imm} out of range for {entry.name}")
        u = imm & 0xFFF
        return (
            word
            | (bit(u, 11) << 12) | (bit(u, 4) << 11) | (((u >> 8) & 0x3) << 9)
            | (bit(u, 10) << 8) | (bit(u, 6) << 7) | (bit(u, 7) << 6)
            | (((u >> 1) & 0x7) << 3) | (bit(u, 5) << 2)
        )
    if fmt == "CB":
        if not 8 <= rs1 <= 15:
            raise ValueError(f"{entry.name} needs rs1 in x8..x15")
        if imm & 1 or not _fits_signed(imm, 9):
            raise ValueError(f"branch offset {imm} out of range for {entry.name}")
        u = imm & 0x1FF
        return (
            word
            | (bit(u, 8) << 12) | (((u >> 3) & 0x3) << 10) | ((rs1 - 8) << 7)
            | (((u >> 6) & 0x3) << 5) | (((u >> 1) & 0x3) << 3) | (bit(u, 5) << 2)
        )
    if fmt == "CI_LDSP":
        if imm & 0x7 or not 0 <= imm < 512:
            raise ValueError(f"c.ldsp offset {imm} must be a multiple of 8 below 512")
        return (
            word | (bit(imm, 5) << 12) | (rd << 7)
            | (((imm >> 3) & 0x3) << 5) | (((imm >> 6) & 0x7) << 2)
        )
    if fmt == "CSS_SDSP":
        if imm & 0x7 or not 0 <= imm < 512:
            raise ValueError(f"c.sdsp offset {imm} must be a multiple of 8 below 512")
        return word | (((imm >> 3) & 0x7) << 10) | (((imm >> 6) & 0x7) << 7) | (rs2 << 2)
    if fmt in ("CR_JR", "CR_JALR"):
        if rs1 == 0:
            raise ValueError(f"{entry.name} requires rs1 != x0")
        return word | (rs1 << 7)
    if fmt in ("CR_MV", "CR_ADD"):
        if rd == 0 or rs2 == 0:
            raise ValueError(f"{entry.name} requires rd and rs2 != x0")
        return word | (rd << 7) | (rs2 << 2)
    raise ValueError(f"unknown compressed format {fmt!r}")

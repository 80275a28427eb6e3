"""Core value types shared by the decoder, executor, CFI units and timing model."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class OpKind(str, Enum):
    ALU = "ALU"
    LOAD = "LOAD"
    STORE = "STORE"
    BRANCH = "BRANCH"
    JAL = "JAL"
    JALR = "JALR"
    CSR = "CSR"
    SYSTEM = "SYSTEM"
    AMO = "AMO"


class CfiTag(str, Enum):
    NONE = "NONE"
    SSPUSH = "SSPUSH"
    SSPOPCHK = "SSPOPCHK"
    SSRDP = "SSRDP"
    SSAMOSWAP_W = "SSAMOSWAP_W"
    SSAMOSWAP_D = "SSAMOSWAP_D"
    LPAD = "LPAD"


# Report keys; both ssamoswap widths fold into one counter.
CFI_COUNT_KEYS: dict[CfiTag, str] = {
    CfiTag.LPAD: "lpad",
    CfiTag.SSPUSH: "sspush",
    CfiTag.SSPOPCHK: "sspopchk",
    CfiTag.SSRDP: "ssrdp",
    CfiTag.SSAMOSWAP_W: "ssamoswap",
    CfiTag.SSAMOSWAP_D: "ssamoswap",
}


@dataclass(frozen=True)
class Enables:
    """Effective CFI enables for the privilege an instruction executes at."""

    ss_enabled: bool = False
    lp_enabled: bool = False


ALL_ENABLED = Enables(ss_enabled=True, lp_enabled=True)
NONE_ENABLED = Enables()


@dataclass(frozen=True)
class DecodedOp:
    """One decoded instruction.

    ``name`` is the mnemonic the executor dispatches on. Formats without a
    destination register carry ``rd=0``; compressed forms keep their 16-bit
    ``raw`` encoding and ``size_bytes=2``.
    """

    name: str
    kind: OpKind
    cfi_tag: CfiTag = CfiTag.NONE
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    raw: int = 0
    size_bytes: int = 4

    @property
    def is_cfi(self) -> bool:
        return self.cfi_tag is not CfiTag.NONE


@dataclass(frozen=True)
class RetiredOp:
    """An architecturally retired instruction as seen at the commit stage."""

    pc: int
    op: DecodedOp
    rd_value: int = 0
    taken: bool = False
    next_pc: int = 0

    def to_dict(self) -> dict:
        return {
            "pc": self.pc,
            "name": self.op.name,
            "kind": self.op.kind.value,
            "cfi_tag": self.op.cfi_tag.value,
            "raw": self.op.raw,
            "taken": self.taken,
        }

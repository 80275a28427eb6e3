from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

from ..cfi.landing_pad import Elp, LpuState
from .bits import u64
from .types import Enables


class Priv(IntEnum):
    U = 0
    S = 1
    M = 3


class SatpMode(str, Enum):
    """Abstract translation state; no page tables are walked."""

    BARE = "Bare"
    ENABLED = "Enabled"


# CSR addresses
CSR_SSP = 0x011
CSR_SENVCFG = 0x10A
CSR_SATP = 0x180
CSR_MENVCFG = 0x30A
CSR_MEPC = 0x341
CSR_MCAUSE = 0x342
CSR_MTVAL = 0x343
CSR_HENVCFG = 0x60A
CSR_CYCLE = 0xC00
CSR_INSTRET = 0xC02
CSR_MHARTID = 0xF14

# xenvcfg fields
ENVCFG_LPE = 1 << 2
ENVCFG_SSE = 1 << 3

SATP_MODE_SV39 = 8


class CsrAccessError(Exception):
    """CSR access that must raise ILLEGAL_INSTRUCTION in the executor."""


@dataclass
class CsrFile:
    ssp: int = 0
    menvcfg_sse: bool = False
    senvcfg_sse: bool = False
    henvcfg_sse: bool = False
    menvcfg_lpe: bool = False
    senvcfg_lpe: bool = False
    henvcfg_lpe: bool = False
    satp_mode: SatpMode = SatpMode.BARE
    mepc: int = 0
    mcause: int = 0
    mtval: int = 0

    @staticmethod
    def _envcfg(sse: bool, lpe: bool) -> int:
        return (ENVCFG_SSE if sse else 0) | (ENVCFG_LPE if lpe else 0)

    def read(self, addr: int, *, instret: int = 0, cycle: int = 0) -> int:
        if addr == CSR_SSP:
            return self.ssp
        if addr == CSR_MENVCFG:
            return self._envcfg(self.menvcfg_sse, self.menvcfg_lpe)
        if addr == CSR_SENVCFG:
            return self._envcfg(self.senvcfg_sse, self.senvcfg_lpe)
        if addr == CSR_HENVCFG:
            return self._envcfg(self.henvcfg_sse, self.henvcfg_lpe)
        if addr == CSR_SATP:
            return SATP_MODE_SV39 << 60 if self.satp_mode is SatpMode.ENABLED else 0
        if addr == CSR_MEPC:
            return self.mepc
        if addr == CSR_MCAUSE:
            return self.mcause
        if addr == CSR_MTVAL:
            return self.mtval
        if addr == CSR_CYCLE:
            return cycle
        if addr == CSR_INSTRET:
            return instret
        if addr == CSR_MHARTID:
            return 0
        raise CsrAccessError(f"unimplemented CSR 0x{addr:03x}")

    def write(self, addr: int, value: int) -> None:
        value = u64(value)
        if addr == CSR_SSP:
            # Alignment is checked when a shadow-stack instruction uses ssp.
            self.ssp = value
        elif addr == CSR_MENVCFG:
            self.menvcfg_sse = bool(value & ENVCFG_SSE)
            self.menvcfg_lpe = bool(value & ENVCFG_LPE)
        elif addr == CSR_SENVCFG:
            self.senvcfg_sse = bool(value & ENVCFG_SSE)
            self.senvcfg_lpe = bool(value & ENVCFG_LPE)
        elif addr == CSR_HENVCFG:
            self.henvcfg_sse = bool(value & ENVCFG_SSE)
            self.henvcfg_lpe = bool(value & ENVCFG_LPE)
        elif addr == CSR_SATP:
            self.satp_mode = SatpMode.ENABLED if value >> 60 else SatpMode.BARE
        elif addr == CSR_MEPC:
            self.mepc = value
        elif addr == CSR_MCAUSE:
            self.mcause = value
        elif addr == CSR_MTVAL:
            self.mtval = value
        else:
            raise CsrAccessError(f"CSR 0x{addr:03x} is not writable")


def csr_min_priv(addr: int) -> int:
    return (addr >> 8) & 0x3


def csr_read_only(addr: int) -> bool:
    return (addr >> 10) & 0x3 == 0x3


def effective_enables(csr: CsrFile, priv: Priv) -> Enables:
    """Conjunction of the enable fields owned by *priv* and every level above it.

    menvcfg belongs to M and senvcfg to S; U has no field of its own, so it
    sees the same conjunction as S. henvcfg is stored but takes no part
    (virtualization is not modeled).
    """
    if priv is Priv.M:
        return Enables(ss_enabled=csr.menvcfg_sse, lp_enabled=csr.menvcfg_lpe)
    return Enables(
        ss_enabled=csr.menvcfg_sse and csr.senvcfg_sse,
        lp_enabled=csr.menvcfg_lpe and csr.senvcfg_lpe,
    )


@dataclass
class HartState:
    pc: int = 0
    xreg: list[int] = field(default_factory=lambda: [0] * 32)
    priv: Priv = Priv.U
    csr: CsrFile = field(default_factory=CsrFile)
    lpu: LpuState = field(default_factory=LpuState)
    halted: bool = False
    exit_code: int | None = None
    instret: int = 0

    @property
    def elp(self) -> Elp:
        return self.lpu.elp

    def read_reg(self, index: int) -> int:
        return self.xreg[index]

    def write_reg(self, index: int, value: int) -> None:
        if index != 0:
            self.xreg[index] = u64(value)

    def enables(self) -> Enables:
        return effective_enables(self.csr, self.priv)

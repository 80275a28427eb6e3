from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from elftools.common.exceptions import ELFError
from elftools.elf.constants import P_FLAGS, SH_FLAGS
from elftools.elf.elffile import ELFFile
from elftools.elf.sections import SymbolTableSection

from ..exceptions import ConfigError, LoadError
from ..isa.hart import CsrFile, HartState, Priv, SatpMode
from ..memory.image import MemoryImage

if TYPE_CHECKING:
    from ..config import Settings

logger = logging.getLogger(__name__)

ASM_SUFFIXES = (".s", ".S", ".asm")
ELF_MAGIC = b"\x7fELF"

REG_SP = 2
_SYMBOL_TYPES = ("STT_FUNC", "STT_NOTYPE", "STT_OBJECT")
STACK_ALIGN = 16


@dataclass(frozen=True)
class Segment:
    vaddr: int
    data: bytes
    memsz: int
    flags: int = P_FLAGS.PF_R | P_FLAGS.PF_X

    @property
    def end(self) -> int:
        return self.vaddr + self.memsz

    @property
    def executable(self) -> bool:
        return bool(self.flags & P_FLAGS.PF_X)


@dataclass
class LoadedProgram:
    name: str
    entry: int
    segments: list[Segment]
    symbols: dict[str, int] = field(default_factory=dict)
    text_ranges: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        ordered = sorted(self.segments, key=lambda s: s.vaddr)
        for a, b in zip(ordered, ordered[1:]):
            if b.vaddr < a.end:
                raise LoadError(
                    f"{self.name}: segments at 0x{a.vaddr:x} and 0x{b.vaddr:x} overlap"
                )
        if not any(lo <= self.entry < hi for lo, hi in self.text_ranges):
            raise LoadError(
                f"{self.name}: entry 0x{self.entry:x} is outside every executable range"
            )

    def text_bytes(self) -> list[tuple[int, bytes]]:
        """(address, bytes) for each text range, read from the file-backed segments."""
        chunks: list[tuple[int, bytes]] = []
        for lo, hi in self.text_ranges:
            for seg in self.segments:
                start, stop = max(lo, seg.vaddr), min(hi, seg.vaddr + len(seg.data))
                if start < stop:
                    chunks.append((start, seg.data[start - seg.vaddr: stop - seg.vaddr]))
        return chunks


# ---------------------------------------------------------------------------
# ELF
# ---------------------------------------------------------------------------

def load_elf(data: bytes, name: str = "") -> LoadedProgram:
    """Parse a little-endian RV64 static executable."""
    label = name or "<elf>"
    try:
        elf = ELFFile(io.BytesIO(data))
        header = elf.header
    except ELFError as exc:
        raise LoadError(f"{label}: not a readable ELF file ({exc})") from exc

    if elf.elfclass != 64:
        raise LoadError(f"{label}: ELF class {elf.elfclass} is not supported (need ELF64)")
    if not elf.little_endian:
        raise LoadError(f"{label}: big-endian ELF is not supported")
    if header["e_machine"] != "EM_RISCV":
        raise LoadError(f"{label}: machine {header['e_machine']} is not RISC-V")
    if header["e_type"] != "ET_EXEC":
        raise LoadError(f"{label}: type {header['e_type']} is not a static executable")

    segments: list[Segment] = []
    for seg in elf.iter_segments():
        p_type = seg["p_type"]
        if p_type in ("PT_INTERP", "PT_DYNAMIC"):
            raise LoadError(f"{label}: dynamically-linked executables are not supported")
        if p_type != "PT_LOAD" or seg["p_memsz"] == 0:
            continue
        segments.append(Segment(
            vaddr=seg["p_vaddr"], data=seg.data(), memsz=seg["p_memsz"], flags=seg["p_flags"],
        ))
    if not segments:
        raise LoadError(f"{label}: no loadable segments")

    text_ranges = [
        (sec["sh_addr"], sec["sh_addr"] + sec["sh_size"])
        for sec in elf.iter_sections()
        if sec["sh_type"] == "SHT_PROGBITS"
        and sec["sh_flags"] & SH_FLAGS.SHF_EXECINSTR
        and sec["sh_size"]
    ]
    if not text_ranges:
        text_ranges = [(s.vaddr, s.vaddr + len(s.data)) for s in segments if s.executable]

    symbols: dict[str, int] = {}
    symtab = elf.get_section_by_name(".symtab")
    if isinstance(symtab, SymbolTableSection):
        for sym in symtab.iter_symbols():
            if not sym.name or not sym["st_value"]:
                continue
            if sym["st_info"]["type"] in _SYMBOL_TYPES:
                symbols.setdefault(sym.name, sym["st_value"])

    prog = LoadedProgram(
        name=name, entry=header["e_entry"], segments=segments,
        symbols=symbols, text_ranges=sorted(text_ranges),
    )
    logger.debug(
        "Loaded ELF %s: entry=0x%x, %d segment(s), %d symbol(s)",
        label, prog.entry, len(segments), len(symbols),
    )
    return prog


def load_program_file(path: str | Path, *, text_base: int) -> LoadedProgram:
    """Load assembler source or an ELF executable, chosen by content and suffix."""
    from .assembler import assemble_program

    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise LoadError(f"cannot read {p}: {exc}") from exc
    if raw.startswith(ELF_MAGIC):
        return load_elf(raw, name=p.name)
    if p.suffix in ASM_SUFFIXES:
        return assemble_program(raw.decode("utf-8"), base=text_base, name=p.name)
    raise LoadError(f"{p}: neither an ELF file nor assembler source ({', '.join(ASM_SUFFIXES)})")


# ---------------------------------------------------------------------------
# Process image
# ---------------------------------------------------------------------------

def build_image(prog: LoadedProgram, cfg: Settings) -> tuple[HartState, MemoryImage]:
    """Map *prog* with the configured stack, heap and shadow stack and reset a hart.

    The returned memory layout is frozen.
    """
    mem = MemoryImage()
    try:
        for i, seg in enumerate(prog.segments):
            mem.map_region(
                seg.vaddr, seg.memsz, data=seg.data, name=f"{prog.name or 'prog'}:seg{i}",
            )
        mem.map_region(cfg.HEAP_BASE, cfg.HEAP_SIZE, name="heap")
        mem.map_region(cfg.STACK_BASE, cfg.STACK_SIZE, name="stack")
        mem.map_shadow_stack(cfg.SHADOW_STACK_BASE, cfg.SHADOW_STACK_SIZE)
    except ConfigError as exc:
        raise ConfigError(f"memory layout for {prog.name or 'program'}: {exc}") from exc
    mem.freeze()

    csr = CsrFile(
        ssp=cfg.shadow_stack_top,
        menvcfg_sse=cfg.ENABLE_ZICFISS,
        senvcfg_sse=cfg.ENABLE_ZICFISS,
        menvcfg_lpe=cfg.ENABLE_ZICFILP,
        senvcfg_lpe=cfg.ENABLE_ZICFILP,
        satp_mode=SatpMode(cfg.SATP_MODE),
    )
    hart = HartState(pc=prog.entry, priv=Priv[cfg.PRIVILEGE], csr=csr)
    hart.write_reg(REG_SP, cfg.stack_top & ~(STACK_ALIGN - 1))
    return hart, mem

from __future__ import annotations

import bisect
import hashlib
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..exceptions import ConfigError
from ..isa.traps import CfiException, TrapCause

logger = logging.getLogger(__name__)

PAGE_SIZE = 4096


class PageAttr(str, Enum):
    NORMAL = "NORMAL"
    SHADOW_STACK = "SHADOW_STACK"


class AccessKind(str, Enum):
    READ = "READ"
    WRITE = "WRITE"
    SWAP = "SWAP"


@dataclass
class Region:
    base: int
    data: bytearray
    name: str = ""

    @property
    def end(self) -> int:
        return self.base + len(self.data)

    def contains(self, addr: int, width: int = 1) -> bool:
        return self.base <= addr and addr + width <= self.end


class MemoryImage:
    """Flat physical memory made of non-overlapping regions.

    Every mapped page carries a :class:`PageAttr`. Shadow-stack instructions
    may touch only SHADOW_STACK pages and every other access only NORMAL
    pages; violations raise STORE_ACCESS_FAULT before any byte moves.
    """

    def __init__(self, page_size: int = PAGE_SIZE) -> None:
        self.page_size = page_size
        self.regions: list[Region] = []
        self._bases: list[int] = []
        self.page_attrs: dict[int, PageAttr] = {}
        self._frozen = False

    # -- layout ------------------------------------------------------------

    def _pages(self, base: int, length: int) -> range:
        return range(base // self.page_size, (base + length - 1) // self.page_size + 1)

    def map_region(
        self,
        base: int,
        length: int,
        *,
        data: bytes = b"",
        attr: PageAttr = PageAttr.NORMAL,
        name: str = "",
    ) -> Region:
        if self._frozen:
            raise ConfigError("memory layout is frozen; page attributes cannot change mid-run")
        if length <= 0:
            raise ConfigError(f"region {name or hex(base)} has non-positive length {length}")
        if len(data) > length:
            raise ConfigError(
                f"region {name or hex(base)}: {len(data)} bytes exceed length {length}"
            )
        for r in self.regions:
            if base < r.end and r.base < base + length:
                raise ConfigError(
                    f"region {name or hex(base)} [0x{base:x}, 0x{base + length:x}) overlaps "
                    f"{r.name or hex(r.base)} [0x{r.base:x}, 0x{r.end:x})"
                )
        pages = self._pages(base, length)
        for p in pages:
            existing = self.page_attrs.get(p)
            if existing is not None and existing is not attr:
                raise ConfigError(
                    f"page 0x{p * self.page_size:x} is already {existing.value}; "
                    f"cannot share it with a {attr.value} region"
                )
        buf = bytearray(length)
        buf[: len(data)] = data
        region = Region(base=base, data=buf, name=name)
        idx = bisect.bisect(self._bases, base)
        self._bases.insert(idx, base)
        self.regions.insert(idx, region)
        for p in pages:
            self.page_attrs[p] = attr
        logger.debug("Mapped %s at 0x%x (+0x%x) as %s", name or "region", base, length, attr.value)
        return region

    def map_shadow_stack(self, base: int, length: int) -> Region:
        """Map a zero-filled region whose pages are attributed SHADOW_STACK."""
        if base % self.page_size or length % self.page_size:
            raise ConfigError(
                f"shadow stack [0x{base:x}, +0x{length:x}) must be page-aligned "
                f"({self.page_size} bytes)"
            )
        return self.map_region(base, length, attr=PageAttr.SHADOW_STACK, name="shadow-stack")

    def freeze(self) -> None:
        self._frozen = True

    @property
    def frozen(self) -> bool:
        return self._frozen

    # -- lookup ------------------------------------------------------------

    def region_for(self, addr: int, width: int = 1) -> Optional[Region]:
        idx = bisect.bisect_right(self._bases, addr) - 1
        if idx < 0:
            return None
        region = self.regions[idx]
        return region if region.contains(addr, width) else None

    def attr_of(self, addr: int) -> Optional[PageAttr]:
        if self.region_for(addr) is None:
            return None
        return self.page_attrs.get(addr // self.page_size)

    # -- checked access ----------------------------------------------------

    def check(
        self, addr: int, width: int, kind: AccessKind, is_zicfiss: bool, *, pc: int = 0,
    ) -> Region:
        """Apply the access policy without moving data; returns the target region."""
        if width not in (1, 2, 4, 8) or (is_zicfiss and width not in (4, 8)):
            raise ValueError(f"illegal access width {width} (zicfiss={is_zicfiss})")
        unmapped = (
            TrapCause.LOAD_ACCESS_FAULT if kind is AccessKind.READ
            else TrapCause.STORE_ACCESS_FAULT
        )
        region = self.region_for(addr, width)
        if region is None:
            raise CfiException(
                unmapped, pc, f"{kind.value} of {width} bytes at unmapped 0x{addr:x}", tval=addr,
            )
        if is_zicfiss and addr % width:
            raise CfiException(TrapCause.STORE_ACCESS_FAULT, pc,
                               f"misaligned shadow-stack access at 0x{addr:x}", tval=addr)
        wanted = PageAttr.SHADOW_STACK if is_zicfiss else PageAttr.NORMAL
        for p in self._pages(addr, width):
            if self.page_attrs.get(p) is not wanted:
                cls = "shadow-stack" if is_zicfiss else "ordinary"
                raise CfiException(
                    TrapCause.STORE_ACCESS_FAULT, pc,
                    f"{cls} {kind.value} at 0x{addr:x} hits a {self.page_attrs.get(p, '?')} page",
                    tval=addr,
                )
        return region

    def access(
        self,
        addr: int,
        width: int,
        kind: AccessKind,
        is_zicfiss: bool,
        data: Optional[bytes] = None,
        *,
        pc: int = 0,
    ) -> bytes:
        """Checked read, write or swap. Returns the bytes previously at *addr*."""
        region = self.check(addr, width, kind, is_zicfiss, pc=pc)
        off = addr - region.base
        old = bytes(region.data[off: off + width])
        if kind is not AccessKind.READ:
            if data is None or len(data) != width:
                raise ValueError(f"{kind.value} needs exactly {width} data bytes")
            region.data[off: off + width] = data
        return old

    def load_int(self, addr: int, width: int, *, is_zicfiss: bool = False, pc: int = 0) -> int:
        data = self.access(addr, width, AccessKind.READ, is_zicfiss, pc=pc)
        return int.from_bytes(data, "little")

    def store_int(
        self, addr: int, width: int, value: int, *, is_zicfiss: bool = False, pc: int = 0,
    ) -> None:
        data = (value & ((1 << (8 * width)) - 1)).to_bytes(width, "little")
        self.access(addr, width, AccessKind.WRITE, is_zicfiss, data, pc=pc)

    def fetch(self, addr: int, width: int, *, pc: int) -> int:
        """Instruction fetch; shadow-stack pages are never executable."""
        region = self.region_for(addr, width)
        if region is None or any(
            self.page_attrs.get(p) is not PageAttr.NORMAL for p in self._pages(addr, width)
        ):
            raise CfiException(TrapCause.INSTRUCTION_ACCESS_FAULT, pc,
                               f"fetch from 0x{addr:x} is not permitted", tval=addr)
        off = addr - region.base
        return int.from_bytes(region.data[off: off + width], "little")

    # -- unchecked helpers for loaders and inspection ----------------------

    def peek(self, addr: int, length: int) -> bytes:
        region = self.region_for(addr, length)
        if region is None:
            raise KeyError(f"0x{addr:x} (+{length}) is not mapped")
        off = addr - region.base
        return bytes(region.data[off: off + length])

    def digest(self, *, exclude: tuple[PageAttr, ...] = ()) -> str:
        h = hashlib.sha256()
        for r in self.regions:
            if exclude and self.page_attrs.get(r.base // self.page_size) in exclude:
                continue
            h.update(r.base.to_bytes(8, "little"))
            h.update(r.data)
        return h.hexdigest()

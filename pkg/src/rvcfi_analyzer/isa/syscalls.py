"""Minimal user-mode system interface for freestanding test programs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..memory.image import AccessKind, MemoryImage
from .bits import u64
from .hart import HartState

logger = logging.getLogger(__name__)

SYS_PUTCHAR = 1
SYS_READ = 63
SYS_WRITE = 64
SYS_EXIT = 93
SYS_EXIT_GROUP = 94

EBADF = 9
ENOSYS = 38

REG_A0, REG_A1, REG_A2, REG_A7 = 10, 11, 12, 17


@dataclass
class ConsoleIO:
    stdin: bytes = b""
    stdin_pos: int = 0
    stdout: bytearray = field(default_factory=bytearray)

    def text(self) -> str:
        return self.stdout.decode("utf-8", errors="replace")


def handle_ecall(hart: HartState, mem: MemoryImage, io: ConsoleIO) -> None:
    """Service the call selected by a7. Buffer accesses are policy-checked
    in full before any register or buffer changes."""
    num = hart.read_reg(REG_A7)
    a0, a1, a2 = hart.read_reg(REG_A0), hart.read_reg(REG_A1), hart.read_reg(REG_A2)
    pc = hart.pc

    if num in (SYS_EXIT, SYS_EXIT_GROUP):
        hart.halted = True
        hart.exit_code = a0 & 0xFF
        logger.debug("exit(%d) at pc=0x%x", hart.exit_code, pc)
        return
    if num == SYS_PUTCHAR:
        io.stdout.append(a0 & 0xFF)
        hart.write_reg(REG_A0, 0)
        return
    if num == SYS_WRITE:
        if a0 not in (1, 2):
            hart.write_reg(REG_A0, u64(-EBADF))
            return
        data = bytes(
            mem.access(a1 + i, 1, AccessKind.READ, False, pc=pc)[0] for i in range(a2)
        )
        io.stdout.extend(data)
        hart.write_reg(REG_A0, len(data))
        return
    if num == SYS_READ:
        if a0 != 0:
            hart.write_reg(REG_A0, u64(-EBADF))
            return
        chunk = io.stdin[io.stdin_pos: io.stdin_pos + a2]
        for i in range(len(chunk)):
            mem.check(a1 + i, 1, AccessKind.WRITE, False, pc=pc)
        for i, b in enumerate(chunk):
            mem.access(a1 + i, 1, AccessKind.WRITE, False, bytes([b]), pc=pc)
        io.stdin_pos += len(chunk)
        hart.write_reg(REG_A0, len(chunk))
        return
    logger.warning("Unsupported system call %d at pc=0x%x; returning -ENOSYS", num, pc)
    hart.write_reg(REG_A0, u64(-ENOSYS))

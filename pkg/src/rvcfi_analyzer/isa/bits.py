from __future__ import annotations

XLEN = 64
MASK64 = (1 << XLEN) - 1
MASK32 = (1 << 32) - 1


def bit(value: int, n: int) -> int:
    return (value >> n) & 1


def sext(value: int, bits: int) -> int:
    """Sign-extend the low *bits* of *value* to a Python int."""
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


def u64(value: int) -> int:
    return value & MASK64


def s64(value: int) -> int:
    return sext(value, 64)


def sext32(value: int) -> int:
    """RV64 *W result: sign-extend the low word into a 64-bit register value."""
    return u64(sext(value, 32))

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from importlib import resources
from typing import Any, Optional

import yaml  # type: ignore[import-untyped]

from .types import CfiTag, OpKind

logger = logging.getLogger(__name__)

_TABLE_RESOURCE = "opcodes.yml"


@dataclass(frozen=True)
class OpcodeEntry:
    name: str
    match: int
    mask: int
    format: str
    kind: OpKind = OpKind.ALU
    cfi_tag: CfiTag = CfiTag.NONE
    extension: Optional[str] = None
    rs1_in: Optional[frozenset[int]] = None
    rs2_in: Optional[frozenset[int]] = None
    rd_nonzero: bool = False
    expands: Optional[str] = None

    @property
    def specificity(self) -> int:
        return bin(self.mask).count("1")

    def matches(self, word: int) -> bool:
        return word & self.mask == self.match


@dataclass(frozen=True)
class OpcodeTable:
    """Immutable view of ``opcodes.yml``; safe to share between threads."""

    instructions: dict[str, OpcodeEntry]
    compressed: dict[str, OpcodeEntry]
    by_major: dict[int, tuple[OpcodeEntry, ...]]
    compressed_by_quadrant: dict[int, tuple[OpcodeEntry, ...]]


def _entry(name: str, raw: dict[str, Any]) -> OpcodeEntry:
    return OpcodeEntry(
        name=name,
        match=int(raw["match"]),
        mask=int(raw["mask"]),
        format=str(raw["format"]),
        kind=OpKind(raw.get("kind", "ALU")),
        cfi_tag=CfiTag(raw.get("cfi_tag", "NONE")),
        extension=raw.get("extension"),
        rs1_in=frozenset(raw["rs1_in"]) if "rs1_in" in raw else None,
        rs2_in=frozenset(raw["rs2_in"]) if "rs2_in" in raw else None,
        rd_nonzero=bool(raw.get("rd_nonzero", False)),
        expands=raw.get("expands"),
    )


def _index(entries: list[OpcodeEntry], key_mask: int) -> dict[int, tuple[OpcodeEntry, ...]]:
    # Most specific mask first; table order breaks ties.
    ordered = sorted(entries, key=lambda e: -e.specificity)
    index: dict[int, list[OpcodeEntry]] = {}
    for e in ordered:
        index.setdefault(e.match & key_mask, []).append(e)
    return {k: tuple(v) for k, v in index.items()}


def parse_opcode_table(data: dict[str, Any]) -> OpcodeTable:
    instructions = {n: _entry(n, r) for n, r in (data.get("instructions") or {}).items()}
    compressed = {n: _entry(n, r) for n, r in (data.get("compressed") or {}).items()}
    return OpcodeTable(
        instructions=instructions,
        compressed=compressed,
        by_major=_index(list(instructions.values()), 0x7F),
        compressed_by_quadrant=_index(list(compressed.values()), 0x3),
    )


@functools.lru_cache(maxsize=1)
def load_opcode_table() -> OpcodeTable:
    text = resources.files(__package__).joinpath(_TABLE_RESOURCE).read_text(encoding="utf-8")
    table = parse_opcode_table(yaml.safe_load(text) or {})
    logger.debug(
        "Loaded opcode table: %d instructions, %d compressed forms",
        len(table.instructions), len(table.compressed),
    )
    return table

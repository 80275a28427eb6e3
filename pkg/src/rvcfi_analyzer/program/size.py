"""Static code-size accounting by linear sweep over the text ranges."""
from __future__ import annotations

import logging
from typing import Optional

from ..isa.decoder import UndecodableWord, decode, is_compressed
from ..isa.types import ALL_ENABLED, CFI_COUNT_KEYS
from ..models import CFI_COUNT_NAMES, SizeReport
from .loader import LoadedProgram

logger = logging.getLogger(__name__)


def _sweep(chunk: bytes, counts: dict[str, int]) -> tuple[int, int]:
    """Count CFI instructions in *chunk*; returns (cfi_bytes, skipped_words)."""
    cfi_bytes = 0
    skipped = 0
    offset = 0
    end = len(chunk)
    while offset + 2 <= end:
        parcel = int.from_bytes(chunk[offset:offset + 2], "little")
        if is_compressed(parcel):
            word, size = parcel, 2
        elif offset + 4 <= end:
            word, size = int.from_bytes(chunk[offset:offset + 4], "little"), 4
        else:
            skipped += 1
            break
        try:
            op = decode(word, ALL_ENABLED)
        except UndecodableWord:
            skipped += 1
        else:
            key = CFI_COUNT_KEYS.get(op.cfi_tag)
            if key is not None:
                counts[key] += 1
                cfi_bytes += op.size_bytes
        offset += size
    return cfi_bytes, skipped


def analyze_size(prog: LoadedProgram, baseline: Optional[LoadedProgram] = None) -> SizeReport:
    """Size and CFI-instruction breakdown of *prog*'s text.

    Undecodable words (data in text) are skipped and counted. With
    *baseline*, the report also carries the byte and percentage deltas.
    """
    counts = dict.fromkeys(CFI_COUNT_NAMES, 0)
    total = 0
    cfi_bytes = 0
    skipped = 0
    for _, chunk in prog.text_bytes():
        total += len(chunk)
        c, s = _sweep(chunk, counts)
        cfi_bytes += c
        skipped += s
    if skipped:
        logger.warning(
            "%s: skipped %d undecodable word(s) in text", prog.name or "program", skipped,
        )
    report = SizeReport(
        program=prog.name,
        total_text_bytes=total,
        cfi_bytes=cfi_bytes,
        counts=counts,
        skipped_words=skipped,
    )
    if baseline is not None:
        report = report.paired_with(analyze_size(baseline))
    return report

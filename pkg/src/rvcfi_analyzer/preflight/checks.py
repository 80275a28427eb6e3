from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

from ..config import Settings
from ..exceptions import ConfigError
from ..memory.image import PAGE_SIZE
from ..models import PreflightResult
from ..timing.cost_table import load_cost_table

logger = logging.getLogger(__name__)

STRICT_LEVELS = (0, 1, 2)


def _regions(cfg: Settings) -> list[tuple[str, int, int]]:
    return [
        ("heap", cfg.HEAP_BASE, cfg.HEAP_BASE + cfg.HEAP_SIZE),
        ("stack", cfg.STACK_BASE, cfg.stack_top),
        ("shadow stack", cfg.SHADOW_STACK_BASE, cfg.shadow_stack_top),
    ]


def run_preflight(cfg: Settings, output_dir: str | Path | None = None) -> PreflightResult:
    """Run leveled configuration checks before any simulation starts.

    L0 config invariants, L1 memory layout, L2 cost table. Writes markdown
    and JSON reports under reports/ when *output_dir* is provided.
    """
    results: list[dict] = []

    def record(level: int, name: str, ok: bool, detail: str = "") -> None:
        results.append({"LEVEL": level, "NAME": name, "OK": ok, "DETAIL": detail})

    # LEVEL 0: config invariants
    record(0, "Instruction limit", cfg.INSTRUCTION_LIMIT > 0, f"{cfg.INSTRUCTION_LIMIT}")
    if cfg.SATP_MODE == "Bare" and cfg.PRIVILEGE != "M" and cfg.ENABLE_ZICFISS:
        detail = "warning: SATP_MODE=Bare below M makes every shadow-stack access fault"
        logger.warning(detail)
        record(0, "Privilege/translation", True, detail)
    else:
        record(0, "Privilege/translation", True, f"{cfg.PRIVILEGE}-mode, satp {cfg.SATP_MODE}")
    if cfg.TEXT_BASE % 4:
        record(0, "Text alignment", False, f"TEXT_BASE 0x{cfg.TEXT_BASE:x} is not 4-byte aligned")
    else:
        record(0, "Text alignment", True, f"TEXT_BASE 0x{cfg.TEXT_BASE:x}")

    # LEVEL 1: memory layout
    ss_aligned = cfg.SHADOW_STACK_BASE % PAGE_SIZE == 0 and cfg.SHADOW_STACK_SIZE % PAGE_SIZE == 0
    record(
        1, "Shadow stack page alignment", ss_aligned,
        f"base 0x{cfg.SHADOW_STACK_BASE:x}, size 0x{cfg.SHADOW_STACK_SIZE:x}, page {PAGE_SIZE}",
    )
    regions = _regions(cfg)
    overlaps = [
        f"{a} [0x{a_lo:x}, 0x{a_hi:x}) overlaps {b} [0x{b_lo:x}, 0x{b_hi:x})"
        for i, (a, a_lo, a_hi) in enumerate(regions)
        for (b, b_lo, b_hi) in regions[i + 1:]
        if a_lo < b_hi and b_lo < a_hi
    ]
    record(
        1, "Region overlap", not overlaps,
        "; ".join(overlaps) or "heap/stack/shadow stack disjoint",
    )
    inside = [name for name, lo, hi in regions if lo <= cfg.TEXT_BASE < hi]
    record(
        1, "Text placement", not inside,
        f"TEXT_BASE inside {', '.join(inside)}" if inside else f"0x{cfg.TEXT_BASE:x}",
    )

    # LEVEL 2: cost table
    if cfg.TIMING or cfg.COST_TABLE_PATH or cfg.COST_TABLE:
        try:
            table = load_cost_table(cfg.COST_TABLE_PATH, cfg.COST_TABLE)
        except ConfigError as exc:
            record(2, "Cost table", False, str(exc))
        else:
            detail = f"lpad={table.lpad_cost}, branch_penalty={table.branch_penalty}"
            record(2, "Cost table", True, detail)
    else:
        record(2, "Cost table", True, "timing off")

    ok = all(r["OK"] for r in results if r["LEVEL"] in STRICT_LEVELS)

    report_path: Optional[Path] = None
    if output_dir is not None:
        reports_dir = Path(output_dir) / "reports"
        reports_dir.mkdir(parents=True, exist_ok=True)
        md = ["# Preflight Report", ""]
        for r in results:
            status = "PASS" if r["OK"] else "FAIL"
            md.append(f"- L{r['LEVEL']} [{status}] **{r['NAME']}**: {r['DETAIL']}")
        report_path = reports_dir / "preflight.md"
        report_path.write_text("\n".join(md) + "\n", encoding="utf-8")
        (reports_dir / "preflight.json").write_text(
            json.dumps(results, indent=2), encoding="utf-8"
        )

    if not ok:
        logger.error("Preflight failed: %s", "; ".join(r["NAME"] for r in results if not r["OK"]))
    else:
        logger.info("Preflight passed (L0-L2 strict).")

    return PreflightResult(ok=ok, results=results, report_path=report_path)

"""Code-reuse attack scenarios run with protections off and on.

Each scenario is a small program with a stack buffer filled by ``read``
from attacker-controlled input. The input overflows the buffer into a
control-flow slot (a saved return address or a function pointer) and
redirects it to the ``gadget`` label. The gadget exits with code 66.

A scenario passes when the gadget is reached with both extensions off and
the protected run stops with the expected software-check subcode before
the gadget retires.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from ..config import Settings
from ..isa.traps import CheckSubcode, TrapCause
from ..isa.types import RetiredOp
from ..models import AttackVerdict, ExitStatus
from ..program.assembler import assemble_program
from ..run import baseline_settings, simulate
from ..utils.io import write_failure

logger = logging.getLogger(__name__)

GADGET_SYMBOL = "gadget"
GADGET_EXIT_CODE = 66
POINTER_BYTES = 8

_EXIT = """\
    li a0, 0
    li a7, 93
    ecall
"""

_GADGET = f"""\
    li a0, {GADGET_EXIT_CODE}
    li a7, 93
    ecall
"""

# read(0, sp, 64) into a 32-byte frame: buffer at 0..23, saved ra at 24.
_ROP_RET_OVERWRITE = f"""\
_start:
    call vuln
    lpad 0
{_EXIT}
vuln:
    sspush ra
    addi sp, sp, -32
    sd ra, 24(sp)
    li a0, 0
    mv a1, sp
    li a2, 64
    li a7, 63
    ecall
    ld ra, 24(sp)
    addi sp, sp, 32
    sspopchk ra
    ret
gadget:
    lpad 0
{_GADGET}"""

# Buffer at 0..15, function pointer at 16, saved ra at 24.
_JOP_TEMPLATE = """\
_start:
    call vuln
    lpad 0
{exit}
vuln:
    sspush ra
    addi sp, sp, -32
    sd ra, 24(sp)
    la t1, handler
    sd t1, 16(sp)
    li a0, 0
    mv a1, sp
    li a2, 24
    li a7, 63
    ecall
    ld t1, 16(sp)
    lui t2, 1
    jalr ra, 0(t1)
    lpad 0
    ld ra, 24(sp)
    addi sp, sp, 32
    sspopchk ra
    ret
handler:
    lpad 1
    ret
gadget:
{gadget_entry}{gadget}"""


@dataclass(frozen=True)
class Scenario:
    name: str
    source: str
    padding: int
    expected: CheckSubcode
    description: str


SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario(
            name="rop-ret-overwrite",
            source=_ROP_RET_OVERWRITE,
            padding=24,
            expected=CheckSubcode.SHADOW_STACK_FAULT,
            description="stack overflow rewrites the saved return address",
        ),
        Scenario(
            name="jop-missing-lpad",
            source=_JOP_TEMPLATE.format(exit=_EXIT, gadget_entry="", gadget=_GADGET),
            padding=16,
            expected=CheckSubcode.LANDING_PAD_FAULT,
            description="function pointer redirected to code without a landing pad",
        ),
        Scenario(
            name="jop-label-mismatch",
            source=_JOP_TEMPLATE.format(
                exit=_EXIT, gadget_entry="    lpad 2\n", gadget=_GADGET,
            ),
            padding=16,
            expected=CheckSubcode.LANDING_PAD_FAULT,
            description="function pointer redirected to a landing pad with another label",
        ),
    )
}


class _GadgetWatch:
    """Retirement hook recording the trace and whether the gadget retired."""

    def __init__(self, gadget: int) -> None:
        self.gadget = gadget
        self.reached = False
        self.trace: list[dict[str, Any]] = []

    def __call__(self, r: RetiredOp) -> None:
        self.trace.append(r.to_dict())
        if r.pc == self.gadget:
            self.reached = True


def _attack_settings(cfg: Settings, *, protected: bool) -> Settings:
    base = cfg.model_copy(update={"TIMING": False, "TRACE_PATH": None})
    if protected:
        return base.model_copy(update={"ENABLE_ZICFISS": True, "ENABLE_ZICFILP": True})
    return baseline_settings(base)


def run_scenario(
    name: str, cfg: Settings, *, failures_dir: Optional[str | Path] = None,
) -> AttackVerdict:
    """Run *name* unprotected and protected and judge both halves."""
    try:
        scenario = SCENARIOS[name]
    except KeyError:
        raise ValueError(
            f"unknown attack scenario {name!r}; choose from {', '.join(SCENARIOS)}"
        ) from None
    prog = assemble_program(scenario.source, base=cfg.TEXT_BASE, name=name)
    gadget = prog.symbols[GADGET_SYMBOL]
    payload = b"A" * scenario.padding + gadget.to_bytes(POINTER_BYTES, "little")

    off = _GadgetWatch(gadget)
    off_report = simulate(
        prog, _attack_settings(cfg, protected=False), on_retire=off, stdin=payload,
    ).report
    on = _GadgetWatch(gadget)
    on_report = simulate(
        prog, _attack_settings(cfg, protected=True), on_retire=on, stdin=payload,
    ).report

    exc = on_report.exception or {}
    blocked = (
        on_report.status is ExitStatus.CFI_FAULT
        and exc.get("cause") == TrapCause.SOFTWARE_CHECK.name
        and exc.get("subcode") == scenario.expected.name
        and not on.reached
    )
    problems = []
    if not off.reached:
        problems.append(
            f"unprotected run ended {off_report.status.value} without reaching the gadget"
        )
    if not blocked:
        problems.append(
            f"protected run ended {on_report.status.value} "
            f"({exc.get('cause')}/{exc.get('subcode')}), gadget reached={on.reached}"
        )
    verdict = AttackVerdict(
        scenario=name,
        passed=not problems,
        unprotected_status=off_report.status.value,
        gadget_reached=off.reached,
        protected_status=on_report.status.value,
        protected_exception=on_report.exception,
        expected=f"{TrapCause.SOFTWARE_CHECK.name}/{scenario.expected.name}",
        detail="; ".join(problems) or scenario.description,
        trace=[{"run": "unprotected", **t} for t in off.trace]
        + [{"run": "protected", **t} for t in on.trace],
    )
    if verdict.passed:
        logger.info("Attack %s blocked as expected", name)
    else:
        logger.error("Attack %s FAILED: %s", name, verdict.detail)
        if failures_dir is not None:
            write_failure(
                Path(failures_dir), "attack", name, {**verdict.to_dict(), "trace": verdict.trace},
            )
    return verdict


def run_attacks(
    cfg: Settings,
    names: Optional[list[str]] = None,
    *,
    failures_dir: Optional[str | Path] = None,
) -> list[AttackVerdict]:
    return [
        run_scenario(n, cfg, failures_dir=failures_dir)
        for n in (names or list(SCENARIOS))
    ]

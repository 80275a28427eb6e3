"""Executor: hart state, CSRs, system calls, traps and CFI enforcement end to end."""
from __future__ import annotations

import random

import pytest

from rvcfi_analyzer.cfi.landing_pad import Elp
from rvcfi_analyzer.config import Settings
from rvcfi_analyzer.harness.genbench import generate_call_tree
from rvcfi_analyzer.isa.executor import run, step
from rvcfi_analyzer.isa.hart import CsrFile, HartState, Priv, SatpMode, effective_enables
from rvcfi_analyzer.isa.traps import CheckSubcode, TrapCause
from rvcfi_analyzer.isa.types import CfiTag, RetiredOp
from rvcfi_analyzer.memory.image import MemoryImage
from rvcfi_analyzer.models import ExitStatus
from rvcfi_analyzer.program.assembler import assemble_program
from rvcfi_analyzer.program.loader import build_image
from rvcfi_analyzer.run import Simulation, simulate

from reference_interp import ReferenceMachine

EXIT = """
    li a7, 93
    ecall
"""


def _sim(source: str, stdin: bytes | None = None, **overrides) -> Simulation:
    cfg = Settings(**overrides)
    prog = assemble_program(source, base=cfg.TEXT_BASE, name="test.s")
    return simulate(prog, cfg, stdin=stdin)


# ---------------------------------------------------------------------------
# Hart and CSR file
# ---------------------------------------------------------------------------

class TestEffectiveEnables:
    def test_m_mode_uses_menvcfg_only(self):
        csr = CsrFile(menvcfg_sse=True, menvcfg_lpe=True)
        enables = effective_enables(csr, Priv.M)
        assert enables.ss_enabled and enables.lp_enabled

    @pytest.mark.parametrize("priv", [Priv.S, Priv.U])
    def test_lower_modes_need_both_levels(self, priv):
        csr = CsrFile(menvcfg_sse=True, menvcfg_lpe=True)
        assert not effective_enables(csr, priv).ss_enabled
        csr.senvcfg_sse = True
        csr.senvcfg_lpe = True
        enables = effective_enables(csr, priv)
        assert enables.ss_enabled and enables.lp_enabled

    def test_senvcfg_alone_is_not_enough(self):
        csr = CsrFile(senvcfg_sse=True, senvcfg_lpe=True)
        enables = effective_enables(csr, Priv.U)
        assert not enables.ss_enabled and not enables.lp_enabled

    def test_henvcfg_is_ignored(self):
        csr = CsrFile(henvcfg_sse=True, henvcfg_lpe=True)
        assert not effective_enables(csr, Priv.S).ss_enabled


class TestCsrFile:
    def test_envcfg_bits(self):
        csr = CsrFile()
        csr.write(0x30A, 0b1100)
        assert csr.menvcfg_sse and csr.menvcfg_lpe
        assert csr.read(0x30A) == 0b1100

    def test_satp_mode(self):
        csr = CsrFile()
        csr.write(0x180, 8 << 60)
        assert csr.satp_mode is SatpMode.ENABLED
        csr.write(0x180, 0)
        assert csr.satp_mode is SatpMode.BARE

    def test_x0_writes_ignored(self):
        hart = HartState()
        hart.write_reg(0, 5)
        assert hart.read_reg(0) == 0

    def test_register_writes_wrap(self):
        hart = HartState()
        hart.write_reg(5, -1)
        assert hart.read_reg(5) == (1 << 64) - 1


# ---------------------------------------------------------------------------
# Clean runs, system calls and limits
# ---------------------------------------------------------------------------

class TestRun:
    def test_exit_code(self):
        sim = _sim("_start:\n    li a0, 7\n" + EXIT)
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.exit_code == 7
        assert sim.report.retired == 3
        assert sim.report.exception is None

    def test_write_syscall(self):
        source = """
_start:
    li a0, 1
    la a1, msg
    li a2, 5
    li a7, 64
    ecall
    li a0, 0
    li a7, 93
    ecall
msg:
    .byte 104, 101, 108, 108, 111
"""
        sim = _sim(source)
        assert sim.report.stdout == "hello"
        assert sim.report.status is ExitStatus.CLEAN_EXIT

    def test_putchar(self):
        sim = _sim("_start:\n    li a0, 65\n    li a7, 1\n    ecall\n    li a0, 0\n" + EXIT)
        assert sim.report.stdout == "A"

    def test_read_syscall(self):
        source = """
_start:
    addi sp, sp, -16
    li a0, 0
    mv a1, sp
    li a2, 4
    li a7, 63
    ecall
    mv s1, a0
    lbu a0, 0(sp)
""" + EXIT
        sim = _sim(source, stdin=b"Zxyz!")
        assert sim.report.exit_code == ord("Z")
        assert sim.hart.read_reg(9) == 4

    def test_unknown_syscall_returns_enosys(self):
        sim = _sim("_start:\n    li a7, 500\n    ecall\n" + EXIT)
        assert sim.report.exit_code == (-38) & 0xFF

    def test_limit_exceeded(self):
        sim = _sim("_start:\nloop:\n    j loop\n", INSTRUCTION_LIMIT=100)
        assert sim.report.status is ExitStatus.LIMIT_EXCEEDED
        assert sim.report.retired == 100
        assert sim.report.status.exit_code == 5

    def test_counts_by_kind(self):
        sim = _sim("_start:\n    li a0, 0\n    sd a0, -8(sp)\n    ld a0, -8(sp)\n" + EXIT)
        assert sim.report.by_kind["STORE"] == 1
        assert sim.report.by_kind["LOAD"] == 1
        assert sim.report.by_kind["SYSTEM"] == 1

    def test_nonpositive_limit_rejected(self):
        with pytest.raises(ValueError):
            run(HartState(), MemoryImage(), 0)

    def test_step_on_halted_hart_rejected(self):
        with pytest.raises(RuntimeError):
            step(HartState(halted=True), MemoryImage())


# ---------------------------------------------------------------------------
# Non-CFI traps
# ---------------------------------------------------------------------------

class TestTraps:
    def test_ebreak(self):
        sim = _sim("_start:\n    ebreak\n")
        assert sim.report.status is ExitStatus.OTHER_FAULT
        assert sim.report.exception["cause"] == "BREAKPOINT"
        assert sim.report.exception["subcode"] is None

    def test_illegal_instruction(self):
        sim = _sim("_start:\n    .word 0\n")
        assert sim.report.exception["cause"] == "ILLEGAL_INSTRUCTION"
        assert sim.hart.csr.mcause == int(TrapCause.ILLEGAL_INSTRUCTION)

    def test_unmapped_load(self):
        sim = _sim("_start:\n    li t0, 16\n    ld a0, 0(t0)\n" + EXIT)
        assert sim.report.exception["cause"] == "LOAD_ACCESS_FAULT"
        assert sim.report.status.exit_code == 3

    def test_ordinary_store_to_shadow_stack_faults(self):
        cfg = Settings()
        source = f"_start:\n    li t0, {cfg.SHADOW_STACK_BASE}\n    sd a0, 0(t0)\n" + EXIT
        sim = _sim(source)
        assert sim.report.exception["cause"] == "STORE_ACCESS_FAULT"

    def test_fetch_from_shadow_stack_faults(self):
        cfg = Settings()
        source = f"_start:\n    li t0, {cfg.SHADOW_STACK_BASE}\n    jr t0\n"
        sim = _sim(source)
        assert sim.report.exception["cause"] == "INSTRUCTION_ACCESS_FAULT"

    def test_trap_state_is_precise(self):
        source = "_start:\n    li a0, 3\n    ebreak\n    li a0, 4\n" + EXIT
        sim = _sim(source)
        ebreak_pc = Settings().TEXT_BASE + 4
        assert sim.hart.pc == ebreak_pc
        assert sim.hart.csr.mepc == ebreak_pc
        assert sim.hart.read_reg(10) == 3
        assert sim.report.retired == 1


# ---------------------------------------------------------------------------
# Shadow stacks end to end
# ---------------------------------------------------------------------------

BRACKETED = """
_start:
    call f
    lpad 0
    li a0, 0
    li a7, 93
    ecall
f:
    sspush ra
    addi sp, sp, -16
    sd ra, 8(sp)
{body}
    ld ra, 8(sp)
    addi sp, sp, 16
    sspopchk ra
    ret
"""


class TestShadowStackRuns:
    def test_balanced_call(self):
        sim = _sim(BRACKETED.format(body="    nop"))
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.hart.csr.ssp == Settings().shadow_stack_top
        counts = sim.report.cfi_counts
        assert counts["sspush"] == 1
        assert counts["sspopchk"] == 1
        assert counts["lpad"] == 1

    def test_corrupted_return_address(self):
        sim = _sim(BRACKETED.format(body="    li t0, 0x12340\n    sd t0, 8(sp)"))
        report = sim.report
        assert report.status is ExitStatus.CFI_FAULT
        assert report.status.exit_code == 2
        assert report.exception["cause"] == "SOFTWARE_CHECK"
        assert report.exception["subcode"] == "SHADOW_STACK_FAULT"
        assert sim.hart.csr.mcause == 18
        assert sim.hart.csr.mtval == int(CheckSubcode.SHADOW_STACK_FAULT)
        assert sim.hart.csr.ssp == Settings().shadow_stack_top - 8
        assert sim.hart.pc == report.exception["pc"]

    def test_corruption_ignored_when_disabled(self):
        sim = _sim(
            BRACKETED.format(body="    la t0, done\n    sd t0, 8(sp)")
            + "done:\n    lpad 0\n    li a0, 9\n" + EXIT,
            ENABLE_ZICFISS=False,
        )
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.exit_code == 9

    def test_disabled_sspush_is_mop(self):
        sim = _sim(BRACKETED.format(body="    nop"), ENABLE_ZICFISS=False)
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.cfi_counts["sspush"] == 0
        assert sim.hart.csr.ssp == Settings().shadow_stack_top

    def test_ssrdp(self):
        sim = _sim("_start:\n    ssrdp s1\n    li a0, 0\n" + EXIT)
        assert sim.hart.read_reg(9) == Settings().shadow_stack_top
        assert sim.report.by_cfi_tag[CfiTag.SSRDP.value] == 1

    def test_ssrdp_disabled_writes_zero(self):
        sim = _sim("_start:\n    li s1, 5\n    ssrdp s1\n    li a0, 0\n" + EXIT,
                   ENABLE_ZICFISS=False)
        assert sim.hart.read_reg(9) == 0

    def test_bare_translation_faults_in_user_mode(self):
        sim = _sim(BRACKETED.format(body="    nop"), SATP_MODE="Bare")
        assert sim.report.exception["cause"] == "STORE_ACCESS_FAULT"

    def test_bare_translation_allowed_in_m_mode(self):
        sim = _sim(BRACKETED.format(body="    nop"), SATP_MODE="Bare", PRIVILEGE="M")
        assert sim.report.status is ExitStatus.CLEAN_EXIT

    def test_ssamoswap_user_mode(self):
        cfg = Settings()
        source = f"""
_start:
    li a2, {cfg.SHADOW_STACK_BASE}
    li a1, 5
    ssamoswap.d a0, a1, (a2)
    li a7, 93
    ecall
"""
        sim = _sim(source)
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.exit_code == 0
        assert sim.mem.load_int(cfg.SHADOW_STACK_BASE, 8, is_zicfiss=True) == 5

    def test_ssamoswap_m_mode_faults(self):
        cfg = Settings()
        source = f"_start:\n    li a2, {cfg.SHADOW_STACK_BASE}\n    ssamoswap.d a0, a1, (a2)\n"
        sim = _sim(source, PRIVILEGE="M")
        assert sim.report.exception["cause"] == "STORE_ACCESS_FAULT"

    def test_ssamoswap_disabled_is_illegal(self):
        cfg = Settings()
        source = f"_start:\n    li a2, {cfg.SHADOW_STACK_BASE}\n    ssamoswap.d a0, a1, (a2)\n"
        sim = _sim(source, ENABLE_ZICFISS=False)
        assert sim.report.exception["cause"] == "ILLEGAL_INSTRUCTION"

    def test_compressed_push_pop(self):
        source = """
_start:
    call f
    lpad 0
    li a0, 0
    li a7, 93
    ecall
f:
    c.sspush x1
    mv t0, ra
    c.sspopchk x5
    ret
"""
        sim = _sim(source)
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.cfi_counts["sspush"] == 1
        assert sim.report.cfi_counts["sspopchk"] == 1


class _FlipSavedRa:
    """Retirement hook flipping one bit of the ``ra`` saved by the n-th ``sd ra``."""

    def __init__(self, hart: HartState, mem: MemoryImage, frame: int, bit: int) -> None:
        self.hart = hart
        self.mem = mem
        self.frame = frame
        self.bit = bit
        self.saves = 0
        self.target: int | None = None
        self.pcs: list[int] = []

    def __call__(self, r: RetiredOp) -> None:
        self.pcs.append(r.pc)
        if r.op.name != "sd" or r.op.rs2 != 1:
            return
        if self.saves == self.frame:
            addr = (self.hart.read_reg(r.op.rs1) + r.op.imm) & ((1 << 64) - 1)
            saved = self.mem.load_int(addr, 8)
            self.target = saved ^ (1 << self.bit)
            self.mem.store_int(addr, 8, self.target)
        self.saves += 1


def _count_ra_saves(source: str, cfg: Settings) -> int:
    saves = []
    prog = assemble_program(source, base=cfg.TEXT_BASE)
    simulate(prog, cfg, on_retire=lambda r: saves.append(r.op.name == "sd" and r.op.rs2 == 1))
    return sum(saves)


class TestReturnAddressCorruption:
    @pytest.mark.parametrize("seed", range(12))
    def test_flipped_saved_ra_is_caught_before_return(self, seed):
        cfg = Settings()
        source = generate_call_tree(seed).instrumented
        prog = assemble_program(source, base=cfg.TEXT_BASE)
        clean = simulate(prog, cfg)
        assert clean.report.status is ExitStatus.CLEAN_EXIT
        rng = random.Random(seed)
        for frame in range(_count_ra_saves(source, cfg)):
            for bit in sorted(rng.sample(range(64), 6)) + [0, 63]:
                hart, mem = build_image(prog, cfg)
                hook = _FlipSavedRa(hart, mem, frame, bit)
                report = run(hart, mem, cfg.INSTRUCTION_LIMIT, on_retire=hook)
                assert hook.target is not None
                if report.status is ExitStatus.CLEAN_EXIT:
                    assert hart.xreg == clean.hart.xreg, (seed, frame, bit)
                    assert report.retired == clean.report.retired
                else:
                    assert report.status is ExitStatus.CFI_FAULT, (seed, frame, bit)
                    assert hart.csr.mcause == int(TrapCause.SOFTWARE_CHECK) == 18
                    assert hart.csr.mtval == int(CheckSubcode.SHADOW_STACK_FAULT) == 3
                    assert report.exception["subcode"] == "SHADOW_STACK_FAULT"
                assert hook.target not in hook.pcs, (seed, frame, bit)

    def test_every_flip_faults_with_shadow_stack_on(self):
        cfg = Settings()
        prog = assemble_program(generate_call_tree(3).instrumented, base=cfg.TEXT_BASE)
        for bit in range(64):
            hart, mem = build_image(prog, cfg)
            hook = _FlipSavedRa(hart, mem, 0, bit)
            report = run(hart, mem, cfg.INSTRUCTION_LIMIT, on_retire=hook)
            assert report.status is ExitStatus.CFI_FAULT, bit
            assert report.exception["subcode"] == "SHADOW_STACK_FAULT"


# ---------------------------------------------------------------------------
# Landing pads end to end
# ---------------------------------------------------------------------------

INDIRECT = """
_start:
    la t1, g
    lui t2, {caller_label}
    jalr ra, 0(t1)
    lpad 0
    li a7, 93
    ecall
g:
{entry}
    li a0, 5
    ret
"""


class TestLandingPadRuns:
    def test_matching_label(self):
        sim = _sim(INDIRECT.format(caller_label=3, entry="    lpad 3"))
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.exit_code == 5
        assert sim.report.cfi_counts["lpad"] == 2
        assert sim.hart.elp is Elp.NO_LP_EXPECTED

    def test_missing_lpad(self):
        sim = _sim(INDIRECT.format(caller_label=3, entry="    nop"))
        exc = sim.report.exception
        assert sim.report.status is ExitStatus.CFI_FAULT
        assert exc["subcode"] == "LANDING_PAD_FAULT"
        assert exc["pc"] == sim.hart.pc
        assert sim.hart.csr.mtval == int(CheckSubcode.LANDING_PAD_FAULT)
        assert sim.hart.elp is Elp.NO_LP_EXPECTED

    def test_label_mismatch(self):
        sim = _sim(INDIRECT.format(caller_label=3, entry="    lpad 4"))
        assert sim.report.exception["subcode"] == "LANDING_PAD_FAULT"

    def test_wildcard_lpad(self):
        sim = _sim(INDIRECT.format(caller_label=3, entry="    lpad 0"))
        assert sim.report.status is ExitStatus.CLEAN_EXIT

    def test_missing_lpad_ignored_when_disabled(self):
        sim = _sim(INDIRECT.format(caller_label=3, entry="    nop"), ENABLE_ZICFILP=False)
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.cfi_counts["lpad"] == 0

    def test_return_site_needs_lpad_when_protected(self):
        source = "_start:\n    call f\n    li a0, 0\n" + EXIT + "f:\n    ret\n"
        assert _sim(source).report.exception["subcode"] == "LANDING_PAD_FAULT"
        unprotected = _sim(source, LP_PROTECT_RET=False)
        assert unprotected.report.status is ExitStatus.CLEAN_EXIT

    def test_direct_call_needs_no_lpad(self):
        source = "_start:\n    call f\n    lpad 0\n    li a0, 0\n" + EXIT + "f:\n    ret\n"
        assert _sim(source).report.status is ExitStatus.CLEAN_EXIT


# ---------------------------------------------------------------------------
# CSR instructions
# ---------------------------------------------------------------------------

class TestCsrInstructions:
    def test_read_ssp_in_user_mode(self):
        sim = _sim("_start:\n    csrrs s1, ssp, zero\n    li a0, 0\n" + EXIT)
        assert sim.hart.read_reg(9) == Settings().shadow_stack_top

    def test_ssp_inaccessible_when_inactive(self):
        sim = _sim("_start:\n    csrrs s1, ssp, zero\n", ENABLE_ZICFISS=False)
        assert sim.report.exception["cause"] == "ILLEGAL_INSTRUCTION"

    def test_ssp_accessible_in_m_mode_when_inactive(self):
        sim = _sim("_start:\n    csrrs s1, ssp, zero\n    li a0, 0\n" + EXIT,
                   ENABLE_ZICFISS=False, PRIVILEGE="M")
        assert sim.report.status is ExitStatus.CLEAN_EXIT

    def test_menvcfg_from_user_mode_is_illegal(self):
        sim = _sim("_start:\n    csrrs a0, menvcfg, zero\n")
        assert sim.report.exception["cause"] == "ILLEGAL_INSTRUCTION"

    def test_write_to_read_only_csr_is_illegal(self):
        sim = _sim("_start:\n    csrrwi zero, cycle, 1\n")
        assert sim.report.exception["cause"] == "ILLEGAL_INSTRUCTION"

    def test_instret_counts_retirements(self):
        sim = _sim("_start:\n    nop\n    nop\n    csrrs s1, instret, zero\n    li a0, 0\n" + EXIT)
        assert sim.hart.read_reg(9) == 2

    def test_clearing_senvcfg_sse_turns_sspush_into_mop(self):
        source = """
_start:
    csrrci zero, senvcfg, 8
    sspush ra
    li a0, 0
    li a7, 93
    ecall
"""
        sim = _sim(source, PRIVILEGE="S")
        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.cfi_counts["sspush"] == 0
        assert sim.hart.csr.ssp == Settings().shadow_stack_top


# ---------------------------------------------------------------------------
# Differential check against the reference interpreter
# ---------------------------------------------------------------------------

_REGS = ("a0", "a1", "a2", "a3", "a4", "a5", "t0", "t1", "t2", "s1")
_DESTS = _REGS + ("zero",)
_RR = ("add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
       "mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu",
       "addw", "subw", "sllw", "srlw", "sraw", "mulw", "divw", "divuw", "remw", "remuw")
_RI = ("addi", "slti", "sltiu", "xori", "ori", "andi", "addiw")
_SH64 = ("slli", "srli", "srai")
_SH32 = ("slliw", "srliw", "sraiw")
_STORES = ("sb", "sh", "sw", "sd")
_LOADS = ("lb", "lh", "lw", "ld", "lbu", "lhu", "lwu")
_BRANCHES = ("beq", "bne", "blt", "bge", "bltu", "bgeu")


def _random_program(rng: random.Random, length: int) -> str:
    lines = ["_start:"]
    for reg in _REGS:
        value = rng.choice([0, 1, -1, (1 << 63), rng.getrandbits(64), rng.randint(-5000, 5000)])
        lines.append(f"    li {reg}, {value}")
    for _ in range(length):
        r = [rng.choice(_DESTS), rng.choice(_REGS), rng.choice(_REGS)]
        kind = rng.randrange(7)
        if kind == 0:
            lines.append(f"    {rng.choice(_RR)} {r[0]}, {r[1]}, {r[2]}")
        elif kind == 1:
            lines.append(f"    {rng.choice(_RI)} {r[0]}, {r[1]}, {rng.randint(-2048, 2047)}")
        elif kind == 2:
            lines.append(f"    {rng.choice(_SH64)} {r[0]}, {r[1]}, {rng.randint(0, 63)}")
        elif kind == 3:
            lines.append(f"    {rng.choice(_SH32)} {r[0]}, {r[1]}, {rng.randint(0, 31)}")
        elif kind == 4:
            lines.append(f"    {rng.choice(_STORES)} {r[0]}, {-8 * rng.randint(1, 32)}(sp)")
        elif kind == 5:
            lines.append(f"    {rng.choice(_LOADS)} {r[0]}, {-8 * rng.randint(1, 32)}(sp)")
        else:
            lines.append(f"    {rng.choice(_BRANCHES)} {r[0]}, {r[1]}, 8")
            lines.append(f"    addi {r[2]}, {r[2]}, 1")
    lines.append("    li a7, 93")
    lines.append("    ecall")
    return "\n".join(lines) + "\n"


class TestDifferential:
    @pytest.mark.parametrize("seed", range(40))
    def test_matches_reference(self, seed):
        rng = random.Random(seed)
        cfg = Settings(ENABLE_ZICFISS=False, ENABLE_ZICFILP=False)
        prog = assemble_program(_random_program(rng, 60), base=cfg.TEXT_BASE)
        x0_writes: list[int] = []
        sim = simulate(
            prog, cfg, on_retire=lambda r: x0_writes.append(r.rd_value) if r.op.rd == 0 else None,
        )

        seg = prog.segments[0]
        hart, _ = build_image(prog, cfg)
        ref = ReferenceMachine(seg.data, seg.vaddr, prog.entry, hart.read_reg(2))
        ref.run(cfg.INSTRUCTION_LIMIT)

        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.retired == ref.retired
        assert sim.report.exit_code == ref.exit_code
        assert sim.hart.xreg == ref.x
        assert x0_writes and set(x0_writes) == {0}
        for addr, byte in ref.mem.items():
            if addr >= cfg.STACK_BASE:
                assert sim.mem.peek(addr, 1)[0] == byte, hex(addr)


class TestZeroRegisterUnderMops:
    @staticmethod
    def _line(rng: random.Random) -> str:
        d, s1, s2 = rng.choice(_DESTS), rng.choice(_REGS), rng.choice(_REGS)
        return rng.choice([
            f"mop.r.{rng.randrange(32)} {d}, {s1}",
            f"mop.rr.{rng.randrange(8)} {d}, {s1}, {s2}",
            f"mop.r.{rng.randrange(32)} zero, {s1}",
            f"mop.rr.{rng.randrange(8)} zero, {s1}, {s2}",
            "mop.r.28 zero, zero",
            f"ssrdp {rng.choice(_REGS)}",
            "sspush ra",
            "sspopchk t0",
            f"{rng.choice(_RR)} zero, {s1}, {s2}",
            f"addi zero, {s1}, {rng.randint(-2048, 2047)}",
        ])

    @pytest.mark.parametrize("seed", range(20))
    def test_x0_stays_zero_and_mops_write_zero(self, seed):
        rng = random.Random(1000 + seed)
        cfg = Settings(ENABLE_ZICFISS=False)
        lines = ["_start:"] + [f"    li {reg}, {rng.getrandbits(63)}" for reg in _REGS]
        lines += [f"    {self._line(rng)}" for _ in range(80)]
        lines += ["    li a7, 93", "    ecall"]
        prog = assemble_program("\n".join(lines) + "\n", base=cfg.TEXT_BASE)
        retired: list[RetiredOp] = []
        sim = simulate(prog, cfg, on_retire=retired.append)

        assert sim.report.status is ExitStatus.CLEAN_EXIT
        assert sim.report.cfi_retired == 0
        assert sim.hart.xreg[0] == 0
        for r in retired:
            if r.op.rd == 0:
                assert r.rd_value == 0, r.op.name
            if r.op.name.startswith("mop."):
                assert r.rd_value == 0, r.op.name
        assert any(r.op.name.startswith("mop.") and r.op.rd == 0 for r in retired)

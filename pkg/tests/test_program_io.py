"""Program input: assembler, ELF/source loading, process image and size analysis."""
from __future__ import annotations

import struct

import pytest

from rvcfi_analyzer.config import Settings
from rvcfi_analyzer.exceptions import AssemblerError, ConfigError, LoadError
from rvcfi_analyzer.harness.genbench import GenParams, generate
from rvcfi_analyzer.memory.image import PageAttr
from rvcfi_analyzer.program.assembler import assemble, assemble_program, li_sequence
from rvcfi_analyzer.program.loader import (
    LoadedProgram,
    Segment,
    build_image,
    load_elf,
    load_program_file,
)
from rvcfi_analyzer.program.size import analyze_size


def _word(source: str, base: int = 0x1000) -> int:
    return int.from_bytes(assemble(source, base=base)[:4], "little")


def _elf(code: bytes, *, vaddr: int = 0x10000, machine: int = 243, e_type: int = 2) -> bytes:
    """Minimal ELF64 executable: one PT_LOAD, a .text section and .shstrtab."""
    ehsize, phentsize, shentsize = 64, 56, 64
    code_off = 128
    shstrtab = b"\x00.text\x00.shstrtab\x00"
    str_off = code_off + len(code)
    sh_off = (str_off + len(shstrtab) + 7) & ~7

    ident = b"\x7fELF" + bytes([2, 1, 1, 0]) + bytes(8)
    header = ident + struct.pack(
        "<HHIQQQIHHHHHH",
        e_type, machine, 1, vaddr, ehsize, sh_off, 0,
        ehsize, phentsize, 1, shentsize, 3, 2,
    )
    phdr = struct.pack(
        "<IIQQQQQQ", 1, 5, code_off, vaddr, vaddr, len(code), len(code), 4,
    )
    sections = b"".join([
        bytes(shentsize),
        struct.pack("<IIQQQQIIQQ", 1, 1, 6, vaddr, code_off, len(code), 0, 0, 4, 0),
        struct.pack("<IIQQQQIIQQ", 7, 3, 0, 0, str_off, len(shstrtab), 0, 0, 1, 0),
    ])
    body = header + phdr
    body += bytes(code_off - len(body)) + code + shstrtab
    body += bytes(sh_off - len(body))
    return body + sections


EXIT_42 = "_start:\n    li a0, 42\n    li a7, 93\n    ecall\n"


# ---------------------------------------------------------------------------
# Assembler
# ---------------------------------------------------------------------------

class TestEncodings:
    @pytest.mark.parametrize("source,word", [
        ("nop", 0x00000013),
        ("lpad 0", 0x00000017),
        ("lpad 0x42", 0x00042017),
        ("sspush x1", 0xCE104073),
        ("sspush x5", 0xCE504073),
        ("sspopchk x1", 0xCDC0C073),
        ("sspopchk x5", 0xCDC2C073),
        ("ssrdp a0", 0xCDC04573),
        ("ret", 0x00008067),
        ("ecall", 0x00000073),
        ("addi a0, a0, -1", 0xFFF50513),
    ])
    def test_known_words(self, source, word):
        assert _word(source) == word

    def test_compressed_sizes(self):
        assert len(assemble("c.sspush x1\nc.sspopchk x5")) == 4

    def test_forward_jump(self):
        assert _word("j end\nnop\nend:\nnop") == 0x0080006F

    def test_backward_branch(self):
        data = assemble("top:\nnop\nbnez a0, top")
        word = int.from_bytes(data[4:8], "little")
        assert word == 0xFE051EE3

    def test_numeric_branch_operand_is_relative(self):
        assert _word("beq a0, a1, 8", base=0x1000) == _word("beq a0, a1, 8", base=0x5000)

    def test_la_is_pc_relative_pair(self):
        data = assemble("la t1, target\nnop\ntarget:\nnop", base=0x10000)
        assert len(data) == 16
        auipc, addi = (int.from_bytes(data[i:i + 4], "little") for i in (0, 4))
        assert auipc & 0x7F == 0x17
        assert addi >> 20 == 12

    def test_data_directives(self):
        data = assemble(".byte 1, 2\n.half 0x304\n.word -1\n.zero 2")
        assert data == bytes([1, 2, 4, 3, 0xFF, 0xFF, 0xFF, 0xFF, 0, 0])

    def test_equ_and_symbol_arithmetic(self):
        assert _word(".equ N, 5\naddi a0, zero, N + 1") == _word("addi a0, zero, 6")

    def test_program_entry_and_symbols(self):
        prog = assemble_program("nop\n_start:\n    ret\n", base=0x10000, name="p.s")
        assert prog.entry == 0x10004
        assert prog.symbols["_start"] == 0x10004
        assert prog.text_ranges == [(0x10000, 0x10008)]


class TestLiSequence:
    def test_small_value_is_one_addi(self):
        assert li_sequence(7) == [("addi", 7)]
        assert li_sequence(-2048) == [("addi", -2048)]

    def test_32_bit_value(self):
        assert li_sequence(0x12345) == [("lui", 0x12), ("addiw", 0x345)]

    def test_lui_only(self):
        assert li_sequence(0x5000) == [("lui", 0x5)]

    def test_top_bit(self):
        assert li_sequence(1 << 63) == [("addi", -1), ("slli", 63)]

    def test_source_length_matches_sequence(self):
        for value in (0, 2047, 4096, 0x7FFFF900, 0xDEADBEEFCAFE, -(1 << 40)):
            assert len(assemble(f"li a0, {value}")) == 4 * len(li_sequence(value))


class TestAssemblerErrors:
    @pytest.mark.parametrize("source,fragment", [
        ("frob a0", "unknown mnemonic"),
        ("addi a0, a0", "takes 3 operand"),
        ("addi a0, a0, 4096", "does not fit"),
        ("addi q9, a0, 1", "unknown register"),
        ("j nowhere", "undefined symbol"),
        ("sspush x7", "accepts rs2"),
        ("sspopchk x2", "accepts rs1"),
        ("c.sspush x5", "only encodes x1"),
        ("lpad 0x100000", "20 bits"),
        (".bogus 1", "unknown directive"),
        ("beq a0, a1, 3", "odd"),
    ])
    def test_rejected(self, source, fragment):
        with pytest.raises(AssemblerError, match=fragment):
            assemble("nop\n" + source)

    def test_error_carries_line_number(self):
        with pytest.raises(AssemblerError) as exc_info:
            assemble("nop\nnop\nfrob")
        assert exc_info.value.line_no == 3

    def test_duplicate_label(self):
        with pytest.raises(AssemblerError, match="duplicate"):
            assemble("a:\nnop\na:\nnop")

    def test_empty_program(self):
        with pytest.raises(AssemblerError):
            assemble_program("# nothing\n", base=0x10000)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

class TestLoader:
    def test_elf_roundtrip(self):
        code = assemble(EXIT_42, base=0x10000)
        prog = load_elf(_elf(code), name="exit.elf")
        assert prog.entry == 0x10000
        assert prog.text_ranges == [(0x10000, 0x10000 + len(code))]
        assert prog.segments[0].data == code

    def test_non_riscv_elf_rejected(self):
        with pytest.raises(LoadError, match="not RISC-V"):
            load_elf(_elf(b"\x13\x00\x00\x00", machine=62))

    def test_shared_object_rejected(self):
        with pytest.raises(LoadError, match="static executable"):
            load_elf(_elf(b"\x13\x00\x00\x00", e_type=3))

    def test_load_source_file(self, tmp_path):
        path = tmp_path / "exit.s"
        path.write_text(EXIT_42, encoding="utf-8")
        prog = load_program_file(path, text_base=0x20000)
        assert prog.name == "exit.s"
        assert prog.entry == 0x20000

    def test_load_elf_file(self, tmp_path):
        path = tmp_path / "exit"
        path.write_bytes(_elf(assemble(EXIT_42, base=0x10000)))
        assert load_program_file(path, text_base=0).entry == 0x10000

    def test_unknown_file_kind_rejected(self, tmp_path):
        path = tmp_path / "blob.bin"
        path.write_bytes(b"\x00\x01")
        with pytest.raises(LoadError, match="neither"):
            load_program_file(path, text_base=0x10000)

    def test_missing_file(self, tmp_path):
        with pytest.raises(LoadError):
            load_program_file(tmp_path / "absent.s", text_base=0x10000)

    def test_overlapping_segments_rejected(self):
        with pytest.raises(LoadError, match="overlap"):
            LoadedProgram(
                name="p", entry=0x1000,
                segments=[Segment(0x1000, b"\x00" * 8, 8), Segment(0x1004, b"\x00" * 4, 4)],
                text_ranges=[(0x1000, 0x1008)],
            )

    def test_entry_outside_text_rejected(self):
        with pytest.raises(LoadError, match="entry"):
            LoadedProgram(
                name="p", entry=0x2000, segments=[Segment(0x1000, bytes(4), 4)],
                text_ranges=[(0x1000, 0x1004)],
            )


class TestBuildImage:
    def test_initial_state(self):
        cfg = Settings()
        prog = assemble_program(EXIT_42, base=cfg.TEXT_BASE)
        hart, mem = build_image(prog, cfg)
        assert hart.pc == prog.entry
        assert hart.read_reg(2) == cfg.stack_top & ~15
        assert hart.csr.ssp == cfg.shadow_stack_top
        assert hart.enables().ss_enabled and hart.enables().lp_enabled
        assert mem.frozen
        assert mem.attr_of(cfg.SHADOW_STACK_BASE) is PageAttr.SHADOW_STACK
        assert mem.attr_of(cfg.STACK_BASE) is PageAttr.NORMAL

    def test_enables_follow_settings(self):
        cfg = Settings(ENABLE_ZICFISS=False, PRIVILEGE="S")
        hart, _ = build_image(assemble_program(EXIT_42, base=cfg.TEXT_BASE), cfg)
        assert not hart.enables().ss_enabled
        assert hart.enables().lp_enabled
        assert hart.priv.name == "S"

    def test_overlapping_layout_is_config_error(self):
        cfg = Settings(SHADOW_STACK_BASE=0x7FF0_0000)
        with pytest.raises(ConfigError, match="memory layout"):
            build_image(assemble_program(EXIT_42, base=cfg.TEXT_BASE), cfg)


# ---------------------------------------------------------------------------
# Size analysis
# ---------------------------------------------------------------------------

class TestSize:
    def test_counts_and_bytes(self):
        prog = assemble_program(
            "_start:\n    lpad 0\n    sspush ra\n    c.sspush x1\n    sspopchk ra\n    ret\n",
            base=0x10000,
        )
        report = analyze_size(prog)
        assert report.total_text_bytes == 18
        assert report.counts["lpad"] == 1
        assert report.counts["sspush"] == 2
        assert report.counts["sspopchk"] == 1
        assert report.cfi_bytes == 4 + 4 + 2 + 4

    @pytest.mark.parametrize("profile", ["call-heavy", "indirect-heavy"])
    def test_overhead_is_instrumentation_bytes(self, profile):
        pair = generate(profile, GenParams(depth=5, width=3, iters=2, work=1))
        prog = assemble_program(pair.instrumented, base=0x10000)
        base = assemble_program(pair.baseline, base=0x10000)
        report = analyze_size(prog, base)
        static = pair.expected.static_counts
        expected = 4 * (static["lpad"] + static["sspush"] + static["sspopchk"])
        assert report.overhead_bytes == expected
        assert report.cfi_bytes == pair.expected.cfi_bytes
        assert report.counts == static

    def test_identical_binaries_have_no_overhead(self):
        prog = assemble_program(EXIT_42, base=0x10000)
        report = analyze_size(prog, prog)
        assert report.overhead_bytes == 0
        assert report.overhead_pct == 0.0

    def test_data_in_text_is_skipped(self):
        prog = assemble_program(
            "_start:\n    lpad 1\n    .word 0xFFFFFFFF\n    ret\n", base=0x10000,
        )
        report = analyze_size(prog)
        assert report.skipped_words == 1
        assert report.counts["lpad"] == 1

    def test_elf_and_source_agree(self):
        code = assemble("_start:\n    lpad 0\n    sspush ra\n" + EXIT_42.split(":\n", 1)[1],
                        base=0x10000)
        elf_report = analyze_size(load_elf(_elf(code)))
        assert elf_report.cfi_bytes == 8
        assert elf_report.total_text_bytes == len(code)

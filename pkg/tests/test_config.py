"""Settings, YAML loading and preflight checks."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from rvcfi_analyzer.config import Settings, flatten_sections, load_settings
from rvcfi_analyzer.exceptions import ConfigError, PreflightError
from rvcfi_analyzer.preflight import run_preflight
from rvcfi_analyzer.reporting.generator import enables_label
from rvcfi_analyzer.run import check_config


# ---------------------------------------------------------------------------
# Settings defaults and validation
# ---------------------------------------------------------------------------

class TestSettings:
    def test_defaults(self):
        cfg = Settings()
        assert cfg.ENABLE_ZICFISS and cfg.ENABLE_ZICFILP
        assert cfg.LP_PROTECT_RET
        assert cfg.PRIVILEGE == "U"
        assert cfg.SATP_MODE == "Enabled"
        assert cfg.INSTRUCTION_LIMIT == 10_000_000
        assert not cfg.TIMING

    def test_derived_tops(self):
        cfg = Settings(STACK_BASE=0x1000_0000, STACK_SIZE=0x2000)
        assert cfg.stack_top == 0x1000_2000
        assert cfg.shadow_stack_top == cfg.SHADOW_STACK_BASE + cfg.SHADOW_STACK_SIZE

    def test_privilege_normalized(self):
        assert Settings(PRIVILEGE="m").PRIVILEGE == "M"

    def test_satp_mode_normalized(self):
        assert Settings(SATP_MODE="bare").SATP_MODE == "Bare"

    @pytest.mark.parametrize("overrides", [
        {"PRIVILEGE": "H"},
        {"SATP_MODE": "Sv48"},
        {"INSTRUCTION_LIMIT": 0},
        {"MAX_WORKERS": -1},
        {"SHADOW_STACK_SIZE": 0},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ValueError):
            Settings(**overrides)

    @pytest.mark.parametrize("overrides,label", [
        ({}, "zicfiss+zicfilp"),
        ({"ENABLE_ZICFISS": False}, "zicfilp"),
        ({"ENABLE_ZICFISS": False, "ENABLE_ZICFILP": False}, "baseline"),
    ])
    def test_enables_label(self, overrides, label):
        cfg = Settings(**overrides)
        enables = {"zicfiss": cfg.ENABLE_ZICFISS, "zicfilp": cfg.ENABLE_ZICFILP}
        assert enables_label(enables) == label

    def test_env_prefix(self, monkeypatch):
        monkeypatch.setenv("RVCFI_ENABLE_ZICFILP", "false")
        monkeypatch.setenv("RVCFI_INSTRUCTION_LIMIT", "1234")
        cfg = Settings()
        assert not cfg.ENABLE_ZICFILP
        assert cfg.INSTRUCTION_LIMIT == 1234


# ---------------------------------------------------------------------------
# load_settings
# ---------------------------------------------------------------------------

class TestLoadSettings:
    def test_no_file(self):
        assert load_settings(None).PRIVILEGE == "U"

    def test_flat_file(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("PRIVILEGE: S\nTIMING: true\n", encoding="utf-8")
        cfg = load_settings(path)
        assert cfg.PRIVILEGE == "S"
        assert cfg.TIMING

    def test_sections_are_flattened(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text(
            "CFI:\n  ENABLE_ZICFISS: false\n"
            "MEMORY:\n  STACK_SIZE: 0x2000\n"
            "TIMING:\n  COST_TABLE:\n    lpad_cost: 2\n",
            encoding="utf-8",
        )
        cfg = load_settings(path)
        assert not cfg.ENABLE_ZICFISS
        assert cfg.STACK_SIZE == 0x2000
        assert cfg.COST_TABLE == {"lpad_cost": 2}

    def test_top_level_beats_section(self):
        flat = flatten_sections({"RUN": {"MAX_WORKERS": 2}, "MAX_WORKERS": 8})
        assert flat["MAX_WORKERS"] == 8

    def test_section_must_be_mapping(self):
        with pytest.raises(ConfigError, match="RUN"):
            flatten_sections({"RUN": [1, 2]})

    def test_precedence_env_file_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RVCFI_PRIVILEGE", "S")
        monkeypatch.setenv("RVCFI_MAX_WORKERS", "3")
        monkeypatch.setenv("RVCFI_INSTRUCTION_LIMIT", "50")
        path = tmp_path / "config.yml"
        path.write_text("MAX_WORKERS: 5\nINSTRUCTION_LIMIT: 60\n", encoding="utf-8")
        cfg = load_settings(path, INSTRUCTION_LIMIT=70)
        assert cfg.PRIVILEGE == "S"
        assert cfg.MAX_WORKERS == 5
        assert cfg.INSTRUCTION_LIMIT == 70

    def test_none_overrides_ignored(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("TIMING: true\n", encoding="utf-8")
        assert load_settings(path, TIMING=None).TIMING

    def test_unknown_keys_ignored(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("NOT_A_SETTING: 1\n", encoding="utf-8")
        assert not hasattr(load_settings(path), "NOT_A_SETTING")

    def test_invalid_value_is_config_error(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("PRIVILEGE: X\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="PRIVILEGE"):
            load_settings(path)

    def test_bad_yaml(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("CFI: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_settings(path)

    def test_non_mapping_yaml(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("- a\n- b\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_settings(path)

    def test_example_config_loads(self):
        example = Path(__file__).resolve().parents[1] / "config.example.yml"
        cfg = load_settings(example)
        assert cfg.PRIVILEGE in ("U", "S", "M")


# ---------------------------------------------------------------------------
# Preflight
# ---------------------------------------------------------------------------

def _failed(cfg: Settings) -> list[str]:
    return [r["NAME"] for r in run_preflight(cfg).results if not r["OK"]]


class TestPreflight:
    def test_defaults_pass(self):
        result = run_preflight(Settings())
        assert result.ok
        assert {r["LEVEL"] for r in result.results} == {0, 1, 2}

    def test_reports_written(self, tmp_path):
        result = run_preflight(Settings(), output_dir=tmp_path)
        assert result.report_path == tmp_path / "reports" / "preflight.md"
        assert "# Preflight Report" in result.report_path.read_text(encoding="utf-8")
        rows = json.loads((tmp_path / "reports" / "preflight.json").read_text(encoding="utf-8"))
        assert all(r["OK"] for r in rows)

    def test_unaligned_text(self):
        assert _failed(Settings(TEXT_BASE=0x10002)) == ["Text alignment"]

    def test_unaligned_shadow_stack(self):
        assert "Shadow stack page alignment" in _failed(Settings(SHADOW_STACK_BASE=0x7FE0_0008))

    def test_overlapping_regions(self):
        assert "Region overlap" in _failed(Settings(HEAP_BASE=0x7FF0_0000))

    def test_text_inside_heap(self):
        assert _failed(Settings(TEXT_BASE=0x0100_0000)) == ["Text placement"]

    def test_bad_cost_table(self):
        assert _failed(Settings(TIMING=True, COST_TABLE={"lpad_cost": 0})) == ["Cost table"]

    def test_bare_below_m_only_warns(self):
        result = run_preflight(Settings(SATP_MODE="Bare"))
        assert result.ok
        row = next(r for r in result.results if r["NAME"] == "Privilege/translation")
        assert row["DETAIL"].startswith("warning")

    def test_check_config_raises(self):
        with pytest.raises(PreflightError, match="Text alignment"):
            check_config(Settings(TEXT_BASE=0x10001))

    def test_check_config_passes(self):
        check_config(Settings())

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import yaml  # type: ignore[import-untyped]
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError

# Optional groupings accepted in the YAML file; their keys are flattened.
CONFIG_SECTIONS = ("CFI", "RUN", "MEMORY", "TIMING")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(extra="ignore", env_prefix="RVCFI_")

    # CFI enables
    ENABLE_ZICFISS: bool = True
    ENABLE_ZICFILP: bool = True
    LP_PROTECT_RET: bool = True      # every jalr, including ret, must land on an lpad
    PRIVILEGE: str = "U"             # U|S|M
    SATP_MODE: str = "Enabled"       # Bare|Enabled

    # Run
    INSTRUCTION_LIMIT: int = 10_000_000
    TRACE_PATH: Optional[str] = None
    JSON_PATH: Optional[str] = None
    CSV_PATH: Optional[str] = None
    LOG_DIR: Optional[str] = None
    STDIN_PATH: Optional[str] = None
    MAX_WORKERS: int = 4

    # Memory layout
    TEXT_BASE: int = 0x0001_0000
    HEAP_BASE: int = 0x0100_0000
    HEAP_SIZE: int = 0x0010_0000
    STACK_BASE: int = 0x7FF0_0000
    STACK_SIZE: int = 0x0010_0000
    SHADOW_STACK_BASE: int = 0x7FE0_0000
    SHADOW_STACK_SIZE: int = 0x0001_0000

    # Timing
    TIMING: bool = False
    COST_TABLE_PATH: Optional[str] = None
    COST_TABLE: Optional[dict[str, Any]] = None

    @field_validator("PRIVILEGE")
    @classmethod
    def _validate_privilege(cls, v: str) -> str:
        v = v.upper()
        if v not in ("U", "S", "M"):
            raise ValueError(f"PRIVILEGE must be one of U, S, M; got {v!r}")
        return v

    @field_validator("SATP_MODE")
    @classmethod
    def _validate_satp_mode(cls, v: str) -> str:
        for mode in ("Bare", "Enabled"):
            if v.lower() == mode.lower():
                return mode
        raise ValueError(f"SATP_MODE must be 'Bare' or 'Enabled', got {v!r}")

    @field_validator("INSTRUCTION_LIMIT", "MAX_WORKERS")
    @classmethod
    def _validate_positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError(f"must be positive, got {v}")
        return v

    @field_validator("HEAP_SIZE", "STACK_SIZE", "SHADOW_STACK_SIZE")
    @classmethod
    def _validate_size(cls, v: int) -> int:
        if v <= 0:
            raise ValueError(f"region size must be positive, got {v}")
        return v

    @property
    def stack_top(self) -> int:
        return self.STACK_BASE + self.STACK_SIZE

    @property
    def shadow_stack_top(self) -> int:
        return self.SHADOW_STACK_BASE + self.SHADOW_STACK_SIZE


def flatten_sections(data: dict[str, Any]) -> dict[str, Any]:
    """Lift keys out of the optional CFI/RUN/MEMORY/TIMING mappings.

    A key given both at top level and inside a section keeps the
    top-level value. ``TIMING: true`` at top level is the plain flag.
    """
    flat: dict[str, Any] = {}
    for section in CONFIG_SECTIONS:
        block = data.get(section)
        if isinstance(block, dict):
            flat.update(block)
        elif block is not None and section not in Settings.model_fields:
            raise ConfigError(f"config section {section} must be a mapping")
    flat.update({
        k: v for k, v in data.items() if not (k in CONFIG_SECTIONS and isinstance(v, dict))
    })
    return flat


def load_settings(config_path: str | Path | None, **overrides: Any) -> Settings:
    """Build Settings from an optional YAML file plus explicit overrides.

    *overrides* win over the file; ``None`` values are ignored so unset
    CLI flags do not clobber file values.
    """
    data: dict[str, Any] = {}
    if config_path is not None:
        p = Path(config_path)
        try:
            raw = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{p}: not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{p}: top level must be a mapping")
        data = flatten_sections(raw)
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Settings(**data)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

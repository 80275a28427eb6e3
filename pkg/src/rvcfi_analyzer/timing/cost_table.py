"""Per-class cycle costs for the cycle-approximate pipeline model."""
from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import yaml  # type: ignore[import-untyped]
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..exceptions import ConfigError
from ..isa.types import CFI_COUNT_KEYS, DecodedOp, OpKind

MEMORY_KINDS = frozenset({OpKind.LOAD.value, OpKind.STORE.value, OpKind.AMO.value})
BASE_CLASSES = tuple(k.value for k in OpKind)
CFI_CLASSES = ("lpad", "sspush", "sspopchk", "ssrdp", "ssamoswap")


def _default_base_cost() -> dict[str, int]:
    return {k: 1 for k in BASE_CLASSES if k not in MEMORY_KINDS}


class CostTable(BaseModel):
    """Editable calibration of the timing model.

    Memory-class kinds missing from ``base_cost`` cost ``mem_cost``.
    ``sspush_cost``/``sspopchk_cost`` default to the STORE and LOAD costs,
    ``ssamoswap_cost`` to the AMO cost.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    base_cost: dict[str, int] = Field(default_factory=_default_base_cost)
    mem_cost: int = 2
    lpad_cost: int = 1
    sspush_cost: Optional[int] = None
    sspopchk_cost: Optional[int] = None
    ssrdp_cost: int = 1
    ssamoswap_cost: Optional[int] = None
    branch_penalty: int = 5
    popchk_stall: int = 1
    dual_commit: bool = False

    @field_validator("base_cost")
    @classmethod
    def _validate_base_cost(cls, v: dict[str, int]) -> dict[str, int]:
        given = {k.upper(): c for k, c in v.items()}
        unknown = sorted(set(given) - set(BASE_CLASSES))
        if unknown:
            raise ValueError(f"unknown instruction class(es) in base_cost: {', '.join(unknown)}")
        merged = {**_default_base_cost(), **given}
        bad = {k: c for k, c in merged.items() if c < 1}
        if bad:
            raise ValueError(f"base_cost entries must be >= 1: {bad}")
        return merged

    @field_validator("mem_cost", "lpad_cost", "ssrdp_cost")
    @classmethod
    def _validate_cost(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"costs must be >= 1, got {v}")
        return v

    @field_validator("branch_penalty", "popchk_stall")
    @classmethod
    def _validate_penalty(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"penalties must be >= 0, got {v}")
        return v

    @model_validator(mode="after")
    def _resolve_cfi_costs(self) -> CostTable:
        defaults = {
            "sspush_cost": self.kind_cost(OpKind.STORE.value),
            "sspopchk_cost": self.kind_cost(OpKind.LOAD.value),
            "ssamoswap_cost": self.kind_cost(OpKind.AMO.value),
        }
        for name, default in defaults.items():
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, default)
            elif value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        return self

    def kind_cost(self, kind: str) -> int:
        if kind in self.base_cost:
            return self.base_cost[kind]
        if kind in MEMORY_KINDS:
            return self.mem_cost
        raise ConfigError(f"no cost for instruction class {kind!r}")

    def class_cost(self, cost_class: str) -> int:
        if cost_class in CFI_CLASSES:
            value = getattr(self, f"{cost_class}_cost")
            assert value is not None
            return int(value)
        return self.kind_cost(cost_class)


def cost_class(op: DecodedOp) -> str:
    """Attribution class: the CFI counter name for CFI ops, else the op kind."""
    return CFI_COUNT_KEYS.get(op.cfi_tag, op.kind.value)


def load_cost_table(
    path: str | Path | None = None, inline: Optional[dict[str, Any]] = None,
) -> CostTable:
    """Read a cost table from YAML, then apply *inline* keys on top."""
    data: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        try:
            loaded = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read cost table {p}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"cost table {p} must be a mapping")
        data.update(loaded)
    if inline:
        data.update(inline)
    try:
        return CostTable(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid cost table: {exc}") from exc

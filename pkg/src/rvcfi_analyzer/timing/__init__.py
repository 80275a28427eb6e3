from __future__ import annotations

from .cost_table import CostTable, cost_class, load_cost_table
from .model import CycleAccumulator, accumulate, compare_cycles, cost_of, retire_cost

__all__ = [
    "CostTable",
    "CycleAccumulator",
    "accumulate",
    "compare_cycles",
    "cost_class",
    "cost_of",
    "load_cost_table",
    "retire_cost",
]

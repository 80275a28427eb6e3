from __future__ import annotations

from ._version import __version__
from .config import Settings, load_settings
from .exceptions import (
    AssemblerError,
    ConfigError,
    GenbenchError,
    LoadError,
    PreflightError,
    ReportSchemaError,
    RVCFIError,
)
from .models import AttackVerdict, CycleReport, ExitStatus, PreflightResult, RunReport, SizeReport
from .preflight.checks import run_preflight
from .program.assembler import assemble, assemble_program
from .program.loader import LoadedProgram, load_elf, load_program_file
from .program.size import analyze_size
from .run import run_batch, run_file, run_pair, run_program, simulate

__all__ = [
    "__version__",
    "Settings",
    "load_settings",
    "run_preflight",
    "run_program",
    "run_pair",
    "run_file",
    "run_batch",
    "simulate",
    "assemble",
    "assemble_program",
    "load_elf",
    "load_program_file",
    "analyze_size",
    "LoadedProgram",
    "RunReport",
    "SizeReport",
    "CycleReport",
    "AttackVerdict",
    "ExitStatus",
    "PreflightResult",
    "RVCFIError",
    "ConfigError",
    "PreflightError",
    "LoadError",
    "AssemblerError",
    "ReportSchemaError",
    "GenbenchError",
]

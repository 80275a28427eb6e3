from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from .config import Settings
from .exceptions import ConfigError, PreflightError
from .isa.executor import ExecOptions, run
from .isa.hart import HartState
from .isa.syscalls import ConsoleIO
from .isa.types import RetiredOp
from .memory.image import MemoryImage
from .models import RunReport
from .preflight.checks import run_preflight
from .program.loader import LoadedProgram, build_image, load_program_file
from .program.size import analyze_size
from .timing.cost_table import CostTable, load_cost_table
from .timing.model import CycleAccumulator, compare_cycles
from .utils.io import write_jsonl

logger = logging.getLogger(__name__)

TRACE_CHUNK = 4096


class TraceWriter:
    """Retirement hook streaming one JSON line per retired instruction."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._rows: list[dict[str, Any]] = []
        write_jsonl(self.path, [], mode="w")

    def __call__(self, r: RetiredOp) -> None:
        self._rows.append(r.to_dict())
        if len(self._rows) >= TRACE_CHUNK:
            self.flush()

    def flush(self) -> None:
        if self._rows:
            write_jsonl(self.path, self._rows, mode="a")
            self._rows = []


@dataclass
class Simulation:
    """A finished run with its final architectural state."""

    report: RunReport
    hart: HartState
    mem: MemoryImage


def resolve_cost_table(cfg: Settings) -> CostTable:
    return load_cost_table(cfg.COST_TABLE_PATH, cfg.COST_TABLE)


def baseline_settings(cfg: Settings) -> Settings:
    """The same configuration with both CFI extensions off."""
    return cfg.model_copy(update={"ENABLE_ZICFISS": False, "ENABLE_ZICFILP": False})


def _read_stdin(cfg: Settings) -> bytes:
    if cfg.STDIN_PATH is None:
        return b""
    try:
        return Path(cfg.STDIN_PATH).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read STDIN_PATH {cfg.STDIN_PATH}: {exc}") from exc


def simulate(
    prog: LoadedProgram,
    cfg: Settings,
    *,
    on_retire: Optional[Callable[[RetiredOp], None]] = None,
    trace_path: str | Path | None = None,
    cost_table: Optional[CostTable] = None,
    stdin: Optional[bytes] = None,
) -> Simulation:
    """Map *prog*, run it to completion under *cfg* and keep the final state."""
    hart, mem = build_image(prog, cfg)
    hooks: list[Callable[[RetiredOp], None]] = []
    acc: Optional[CycleAccumulator] = None
    if cfg.TIMING:
        acc = CycleAccumulator(cost_table or resolve_cost_table(cfg))
        hooks.append(acc)
    writer: Optional[TraceWriter] = None
    path = trace_path if trace_path is not None else cfg.TRACE_PATH
    if path is not None:
        writer = TraceWriter(path)
        hooks.append(writer)
    if on_retire is not None:
        hooks.append(on_retire)

    def dispatch(r: RetiredOp) -> None:
        for hook in hooks:
            hook(r)

    report = run(
        hart,
        mem,
        cfg.INSTRUCTION_LIMIT,
        options=ExecOptions(protect_ret=cfg.LP_PROTECT_RET),
        io=ConsoleIO(stdin=stdin if stdin is not None else _read_stdin(cfg)),
        on_retire=dispatch if hooks else None,
        program=prog.name,
    )
    if writer is not None:
        writer.flush()
    report.enables = {"zicfiss": cfg.ENABLE_ZICFISS, "zicfilp": cfg.ENABLE_ZICFILP}
    if acc is not None:
        report.cycles = acc.report()
    return Simulation(report=report, hart=hart, mem=mem)


def run_program(prog: LoadedProgram, cfg: Settings, **kwargs: Any) -> RunReport:
    return simulate(prog, cfg, **kwargs).report


def run_pair(prog: LoadedProgram, baseline: LoadedProgram, cfg: Settings) -> RunReport:
    """Run *prog* under *cfg* and *baseline* with CFI off; attach paired overheads.

    The size comparison is always attached; the cycle comparison only
    when timing is on.
    """
    table = resolve_cost_table(cfg) if cfg.TIMING else None
    report = run_program(prog, cfg, cost_table=table)
    base_cfg = baseline_settings(cfg).model_copy(update={"TRACE_PATH": None})
    base_report = run_program(baseline, base_cfg, cost_table=table)
    if cfg.TIMING:
        report.cycles = compare_cycles(report, base_report)
    report.size = analyze_size(prog, baseline)
    return report


def check_config(cfg: Settings, output_dir: str | Path | None = None) -> None:
    """Raise PreflightError unless every preflight check passes."""
    result = run_preflight(cfg, output_dir=output_dir)
    if not result.ok:
        raise PreflightError(result.results)


def run_file(
    path: str | Path, cfg: Settings, *, baseline: str | Path | None = None,
) -> RunReport:
    prog = load_program_file(path, text_base=cfg.TEXT_BASE)
    if baseline is None:
        return run_program(prog, cfg)
    base_prog = load_program_file(baseline, text_base=cfg.TEXT_BASE)
    return run_pair(prog, base_prog, cfg)


def run_batch(paths: Iterable[str | Path], cfg: Settings) -> list[RunReport]:
    """Run independent programs on a thread pool; reports are sorted by program name."""
    items = list(paths)
    if not items:
        return []
    # One trace file cannot hold several interleaved runs.
    batch_cfg = cfg.model_copy(update={"TRACE_PATH": None})
    workers = min(cfg.MAX_WORKERS, len(items))
    logger.info("Running %d program(s) on %d worker(s)", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rvcfi-run") as pool:
        reports = list(pool.map(lambda p: run_file(p, batch_cfg), items))
    return sorted(reports, key=lambda r: (r.program, sorted(r.enables.items())))

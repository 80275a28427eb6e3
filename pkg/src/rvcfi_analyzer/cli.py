from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, NoReturn, Optional

import click
from rich.console import Console

from .config import Settings, load_settings
from .exceptions import GenbenchError, PreflightError, ReportSchemaError, RVCFIError
from .models import EXIT_CONFIG_ERROR
from .utils.logger import PACKAGE_LOGGER, setup_cli_logging, setup_file_handler

EXIT_ATTACK_FAILED = 1

_console = Console()


def _fail(exc: Exception, code: int = EXIT_CONFIG_ERROR) -> NoReturn:
    click.echo(f"Error: {exc}", err=True)
    raise SystemExit(code)


def _settings(config_path: Optional[str], **overrides: Any) -> Settings:
    try:
        cfg = load_settings(config_path, **overrides)
    except RVCFIError as exc:
        _fail(exc)
    if cfg.LOG_DIR:
        setup_file_handler(logging.getLogger(PACKAGE_LOGGER), Path(cfg.LOG_DIR))
    return cfg


def _preflight_or_exit(cfg: Settings) -> None:
    from .run import check_config

    try:
        check_config(cfg)
    except PreflightError as exc:
        for r in exc.results:
            if not r["OK"]:
                click.echo(f"Preflight L{r['LEVEL']} {r['NAME']}: {r['DETAIL']}", err=True)
        raise SystemExit(EXIT_CONFIG_ERROR)


config_option = click.option(
    "--config", "config_path",
    type=click.Path(exists=True, dir_okay=False), default=None,
    help="YAML config file (flat keys, optional CFI/RUN/MEMORY/TIMING sections).",
)


class RvcfiGroup(click.Group):
    """Usage errors exit with EXIT_CONFIG_ERROR; exit code 2 is reserved for CFI faults."""

    def parse_args(self, ctx: click.Context, args: list[str]) -> list[str]:
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as exc:
            exc.exit_code = EXIT_CONFIG_ERROR
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EXIT_CONFIG_ERROR
            raise


@click.group(cls=RvcfiGroup)
@click.option("-v", "--verbose", count=True, help="Increase verbosity (repeat for more).")
@click.option("-q", "--quiet", is_flag=True, default=False, help="Suppress all but warnings.")
@click.version_option(package_name="rvcfi-analyzer")
@click.pass_context
def main(ctx: click.Context, verbose: int, quiet: bool) -> None:
    """rvcfi: RV64 simulator with Zicfiss/Zicfilp control-flow integrity."""
    ctx.ensure_object(dict)
    verbosity = -1 if quiet else verbose
    ctx.obj["verbosity"] = verbosity
    setup_cli_logging(verbosity=verbosity)


@main.command()
@click.argument("programs", nargs=-1, required=True, type=click.Path(dir_okay=False))
@config_option
@click.option("--enable-zicfiss/--disable-zicfiss", "enable_zicfiss", default=None,
              help="Shadow stacks (default: on).")
@click.option("--enable-zicfilp/--disable-zicfilp", "enable_zicfilp", default=None,
              help="Landing pads (default: on).")
@click.option("--lp-protect-ret/--no-lp-protect-ret", "lp_protect_ret", default=None,
              help="Require an lpad after returns as well as indirect calls/jumps.")
@click.option("--timing/--no-timing", default=None, help="Run the cycle model.")
@click.option("--cost-table", "cost_table", type=click.Path(exists=True, dir_okay=False),
              default=None, help="YAML cost table for the cycle model.")
@click.option("--limit", type=int, default=None, help="Instruction limit.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="Write a JSON-lines retirement trace.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None,
              help="Write the run report(s) as JSON.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Write the run report(s) as a CSV table.")
@click.option("--stdin", "stdin_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Bytes served to the program's read(0, ...) calls.")
@click.option("--baseline", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Uninstrumented build; adds paired cycle and size overhead.")
def run(
    programs: tuple[str, ...],
    config_path: Optional[str],
    enable_zicfiss: Optional[bool],
    enable_zicfilp: Optional[bool],
    lp_protect_ret: Optional[bool],
    timing: Optional[bool],
    cost_table: Optional[str],
    limit: Optional[int],
    trace_path: Optional[str],
    json_path: Optional[str],
    csv_path: Optional[str],
    stdin_path: Optional[str],
    baseline: Optional[str],
) -> None:
    """Simulate one or more programs (assembler source or static RV64 ELF)."""
    from .reporting.generator import cmd_report, print_table, run_table
    from .run import run_batch, run_file
    from .utils.io import write_json

    cfg = _settings(
        config_path,
        ENABLE_ZICFISS=enable_zicfiss,
        ENABLE_ZICFILP=enable_zicfilp,
        LP_PROTECT_RET=lp_protect_ret,
        TIMING=timing,
        COST_TABLE_PATH=cost_table,
        INSTRUCTION_LIMIT=limit,
        TRACE_PATH=trace_path,
        JSON_PATH=json_path,
        CSV_PATH=csv_path,
        STDIN_PATH=stdin_path,
    )
    if baseline is not None and len(programs) > 1:
        raise click.BadParameter(
            "--baseline pairs with exactly one program", param_hint="--baseline",
        )
    _preflight_or_exit(cfg)

    try:
        if len(programs) == 1:
            reports = [run_file(programs[0], cfg, baseline=baseline)]
        else:
            reports = run_batch(programs, cfg)
    except RVCFIError as exc:
        _fail(exc)

    for report in reports:
        print_table(run_table(report), _console)
        if report.stdout:
            click.echo(report.stdout, nl=not report.stdout.endswith("\n"))
    dicts = [r.to_dict() for r in reports]
    if cfg.JSON_PATH:
        write_json(Path(cfg.JSON_PATH), dicts[0] if len(dicts) == 1 else dicts)
    if cfg.CSV_PATH:
        cmd_report(dicts, cfg.CSV_PATH)
    raise SystemExit(max(r.status.exit_code for r in reports))


@main.command()
@click.argument("scenarios", nargs=-1)
@config_option
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None,
              help="Write the verdicts as JSON.")
@click.option("--failures-dir", type=click.Path(file_okay=False), default=None,
              help="Write failing scenarios with their full trace here.")
def attack(
    scenarios: tuple[str, ...],
    config_path: Optional[str],
    json_path: Optional[str],
    failures_dir: Optional[str],
) -> None:
    """Run attack scenarios (default: all) unprotected and protected."""
    from .harness.attacks import SCENARIOS, run_attacks
    from .reporting.generator import attack_table, print_table
    from .utils.io import write_json

    unknown = [s for s in scenarios if s not in SCENARIOS]
    if unknown:
        raise click.BadParameter(
            f"unknown scenario(s) {', '.join(unknown)}; choose from {', '.join(SCENARIOS)}",
            param_hint="SCENARIOS",
        )
    cfg = _settings(config_path)
    _preflight_or_exit(cfg)
    try:
        verdicts = run_attacks(cfg, list(scenarios) or None, failures_dir=failures_dir)
    except RVCFIError as exc:
        _fail(exc)
    print_table(attack_table(verdicts), _console)
    if json_path:
        write_json(Path(json_path), [v.to_dict() for v in verdicts])
    raise SystemExit(0 if all(v.passed for v in verdicts) else EXIT_ATTACK_FAILED)


@main.command()
@click.argument("profile", type=click.Choice(["call-heavy", "leaf-heavy", "indirect-heavy",
                                              "call-tree"]))
@click.option("--depth", type=int, default=8, show_default=True, help="Call chain depth.")
@click.option("--width", type=int, default=4, show_default=True,
              help="Indirect call targets per iteration.")
@click.option("--iters", type=int, default=100, show_default=True, help="Outer loop iterations.")
@click.option("--work", type=int, default=16, show_default=True,
              help="Counted-loop trips in each leaf.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for call-tree.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".",
              show_default=True, help="Output directory.")
def genbench(
    profile: str, depth: int, width: int, iters: int, work: int, seed: int, out_dir: str,
) -> None:
    """Generate a baseline/instrumented program pair with its expected CFI counts."""
    from .harness.genbench import GenParams, generate, generate_call_tree

    try:
        if profile == "call-tree":
            pair = generate_call_tree(seed)
        else:
            pair = generate(profile, GenParams(depth=depth, width=width, iters=iters, work=work))
    except GenbenchError as exc:
        _fail(exc)
    for path in pair.write(out_dir):
        click.echo(str(path))
    exp = pair.expected
    counts = ", ".join(f"{k}={v}" for k, v in exp.cfi_counts.items())
    click.echo(f"expected CFI retired: {exp.cfi_retired} ({counts})")
    click.echo(f"expected retired: baseline={exp.baseline_retired} "
               f"instrumented={exp.instrumented_retired}")
    click.echo(f"expected CFI bytes: {exp.cfi_bytes}")


@main.command()
@click.argument("reports", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), required=True,
              help="Output CSV path.")
def report(reports: tuple[str, ...], csv_path: str) -> None:
    """Merge run or size report JSON files into one CSV table."""
    from .reporting.generator import cmd_report, load_report_files

    try:
        n = cmd_report(load_report_files(reports), csv_path)
    except ReportSchemaError as exc:
        _fail(exc)
    click.echo(f"Wrote {n} row(s) to {csv_path}")


@main.command("analyze-size")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option("--baseline", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Uninstrumented build to compare against.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def analyze_size_cmd(
    program: str,
    config_path: Optional[str],
    baseline: Optional[str],
    json_path: Optional[str],
    csv_path: Optional[str],
) -> None:
    """Count CFI instructions and text bytes by linear sweep."""
    from .program.loader import load_program_file
    from .program.size import analyze_size
    from .reporting.generator import cmd_report, print_table, size_table
    from .utils.io import write_json

    cfg = _settings(config_path)
    try:
        prog = load_program_file(program, text_base=cfg.TEXT_BASE)
        base = load_program_file(baseline, text_base=cfg.TEXT_BASE) if baseline else None
    except RVCFIError as exc:
        _fail(exc)
    size = analyze_size(prog, base)
    print_table(size_table([size]), _console)
    if json_path:
        write_json(Path(json_path), size.to_dict())
    if csv_path:
        cmd_report([size.to_dict()], csv_path)


@main.command()
@config_option
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Write reports/preflight.{md,json} here.")
def preflight(config_path: Optional[str], output_dir: Optional[str]) -> None:
    """Validate a config (limits, memory layout, cost table) without running anything."""
    from .preflight.checks import run_preflight

    cfg = _settings(config_path)
    result = run_preflight(cfg, output_dir=Path(output_dir) if output_dir else None)
    for r in result.results:
        status = "PASS" if r["OK"] else "FAIL"
        click.echo(f"L{r['LEVEL']} [{status}] {r['NAME']}: {r['DETAIL']}")
    if result.ok:
        click.echo("Preflight passed.")
    else:
        click.echo("Preflight FAILED.", err=True)
        raise SystemExit(EXIT_CONFIG_ERROR)


if __name__ == "__main__":
    main()

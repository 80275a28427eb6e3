"""Synthetic benchmark pairs with closed-form CFI instruction counts.

Every profile renders one instruction stream twice: the baseline drops the
lines marked as CFI instrumentation, the instrumented variant keeps them.
Instrumentation follows what a CFI-aware compiler emits:

- ``sspush ra`` / ``sspopchk ra`` bracket every non-leaf function,
- ``lpad 0`` follows every call (return sites, since returns are
  landing-pad checked by default),
- ``lpad L`` opens every indirectly called function, with the caller
  loading ``L << 12`` into x7 (``lui t2, L``) in both variants.

All instructions are 4 bytes, so the instrumented text is larger by
exactly ``4 * (lpads + 2 * push/pop pairs)``.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..exceptions import GenbenchError
from ..models import CFI_COUNT_NAMES
from ..program.assembler import li_sequence

logger = logging.getLogger(__name__)

PROFILES = ("call-heavy", "leaf-heavy", "indirect-heavy")

BOUNDS: dict[str, tuple[int, int]] = {
    "depth": (1, 64),
    "width": (1, 64),
    "iters": (1, 1_000_000),
    "work": (0, 1_000_000),
}

_BODY_REGS = ("a0", "a1", "a2", "a3", "a4", "a5")
_EXIT_RETIRED = 3  # li a0 / li a7 / ecall


@dataclass(frozen=True)
class GenParams:
    depth: int = 8
    width: int = 4
    iters: int = 100
    work: int = 16

    def validate(self) -> GenParams:
        for name, (lo, hi) in BOUNDS.items():
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise GenbenchError(f"{name}={value} outside [{lo}, {hi}]")
        return self

    def to_dict(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in BOUNDS}


@dataclass
class Expectation:
    """Analytic counts for one generated pair."""

    cfi_counts: dict[str, int]
    static_counts: dict[str, int]
    baseline_retired: int
    instrumented_retired: int

    @property
    def cfi_retired(self) -> int:
        return sum(self.cfi_counts.values())

    @property
    def cfi_fraction(self) -> float:
        return self.cfi_retired / self.instrumented_retired

    @property
    def cfi_bytes(self) -> int:
        return 4 * sum(self.static_counts.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "cfi_counts": dict(self.cfi_counts),
            "static_counts": dict(self.static_counts),
            "baseline_retired": self.baseline_retired,
            "instrumented_retired": self.instrumented_retired,
            "cfi_bytes": self.cfi_bytes,
            "cfi_fraction": self.cfi_fraction,
        }


@dataclass
class BenchPair:
    name: str
    baseline: str
    instrumented: str
    expected: Expectation
    params: dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write ``<name>.base.s``, ``<name>.cfi.s`` and ``<name>.expected.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        base = out / f"{self.name}.base.s"
        cfi = out / f"{self.name}.cfi.s"
        meta = out / f"{self.name}.expected.json"
        base.write_text(self.baseline, encoding="utf-8")
        cfi.write_text(self.instrumented, encoding="utf-8")
        payload = {"name": self.name, "params": self.params, **self.expected.to_dict()}
        meta.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return [base, cfi, meta]


class _Listing:
    """Instruction lines tagged as plain or CFI instrumentation."""

    def __init__(self, title: str) -> None:
        self.lines: list[tuple[str, Optional[str]]] = [(f"# {title}", None)]

    def label(self, name: str) -> None:
        self.lines.append((f"{name}:", None))

    def op(self, text: str) -> None:
        self.lines.append((f"    {text}", None))

    def cfi(self, text: str) -> None:
        self.lines.append((f"    {text}", text.split()[0]))

    def static_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(CFI_COUNT_NAMES, 0)
        for _, mnemonic in self.lines:
            if mnemonic is not None:
                counts[mnemonic] += 1
        return counts

    def render(self, *, instrumented: bool) -> str:
        kept = [text for text, tag in self.lines if instrumented or tag is None]
        return "\n".join(kept) + "\n"


def _li_len(value: int) -> int:
    return len(li_sequence(value))


def _work_retired(work: int) -> int:
    return 0 if work == 0 else _li_len(work) + 3 * work


def _emit_work(lst: _Listing, prefix: str, work: int) -> None:
    if work == 0:
        return
    lst.op(f"li t0, {work}")
    lst.label(f"{prefix}_work")
    lst.op("addi a0, a0, 1")
    lst.op("addi t0, t0, -1")
    lst.op(f"bnez t0, {prefix}_work")


def _emit_exit(lst: _Listing) -> None:
    lst.op("li a0, 0")
    lst.op("li a7, 93")
    lst.op("ecall")


def _counts(**given: int) -> dict[str, int]:
    counts = dict.fromkeys(CFI_COUNT_NAMES, 0)
    counts.update(given)
    return counts


def _pair(name: str, lst: _Listing, expected: Expectation, params: dict[str, Any]) -> BenchPair:
    static = lst.static_counts()
    if static != expected.static_counts:
        raise GenbenchError(
            f"{name}: emitted CFI lines {static} disagree with {expected.static_counts}"
        )
    return BenchPair(
        name=name,
        baseline=lst.render(instrumented=False),
        instrumented=lst.render(instrumented=True),
        expected=expected,
        params=params,
    )


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

def _call_heavy(p: GenParams) -> BenchPair:
    """A loop calling a chain of *depth* nested functions ending in a counted leaf."""
    d, i = p.depth, p.iters
    lst = _Listing(f"call-heavy depth={d} iters={i} work={p.work}")
    lst.label("_start")
    lst.op(f"li s0, {i}")
    lst.label("loop")
    lst.op("call f1")
    lst.cfi("lpad 0")
    lst.op("addi s0, s0, -1")
    lst.op("bnez s0, loop")
    _emit_exit(lst)
    for k in range(1, d):
        lst.label(f"f{k}")
        lst.cfi("sspush ra")
        lst.op("addi sp, sp, -16")
        lst.op("sd ra, 8(sp)")
        lst.op(f"call f{k + 1}")
        lst.cfi("lpad 0")
        lst.op("ld ra, 8(sp)")
        lst.op("addi sp, sp, 16")
        lst.cfi("sspopchk ra")
        lst.op("ret")
    lst.label(f"f{d}")
    _emit_work(lst, f"f{d}", p.work)
    lst.op("ret")

    per_iter_base = 3 + 6 * (d - 1) + _work_retired(p.work) + 1
    baseline = _li_len(i) + i * per_iter_base + _EXIT_RETIRED
    expected = Expectation(
        cfi_counts=_counts(lpad=i * d, sspush=i * (d - 1), sspopchk=i * (d - 1)),
        static_counts=_counts(lpad=d, sspush=d - 1, sspopchk=d - 1),
        baseline_retired=baseline,
        instrumented_retired=baseline + i * (3 * d - 2),
    )
    return _pair("call-heavy", lst, expected, p.to_dict())


def _leaf_heavy(p: GenParams) -> BenchPair:
    """Tight counted loop with no calls inside and a single call at the end."""
    i = p.iters
    lst = _Listing(f"leaf-heavy iters={i} work={p.work}")
    lst.label("_start")
    lst.op(f"li s0, {i}")
    lst.label("loop")
    _emit_work(lst, "loop", p.work)
    lst.op("addi s0, s0, -1")
    lst.op("bnez s0, loop")
    lst.op("call finish")
    lst.cfi("lpad 0")
    _emit_exit(lst)
    lst.label("finish")
    lst.op("ret")

    baseline = _li_len(i) + i * (_work_retired(p.work) + 2) + 2 + _EXIT_RETIRED
    expected = Expectation(
        cfi_counts=_counts(lpad=1),
        static_counts=_counts(lpad=1),
        baseline_retired=baseline,
        instrumented_retired=baseline + 1,
    )
    return _pair("leaf-heavy", lst, expected, p.to_dict())


def _indirect_heavy(p: GenParams) -> BenchPair:
    """A loop calling *width* leaf functions through pointers, each with its own label."""
    w, i = p.width, p.iters
    lst = _Listing(f"indirect-heavy width={w} iters={i} work={p.work}")
    lst.label("_start")
    lst.op(f"li s0, {i}")
    lst.label("loop")
    for k in range(1, w + 1):
        lst.op(f"la t1, g{k}")
        lst.op(f"lui t2, {k}")
        lst.op("jalr ra, 0(t1)")
        lst.cfi("lpad 0")
    lst.op("addi s0, s0, -1")
    lst.op("bnez s0, loop")
    _emit_exit(lst)
    for k in range(1, w + 1):
        lst.label(f"g{k}")
        lst.cfi(f"lpad {k}")
        _emit_work(lst, f"g{k}", p.work)
        lst.op("ret")

    per_iter_base = w * (4 + _work_retired(p.work) + 1) + 2
    baseline = _li_len(i) + i * per_iter_base + _EXIT_RETIRED
    expected = Expectation(
        cfi_counts=_counts(lpad=2 * w * i),
        static_counts=_counts(lpad=2 * w),
        baseline_retired=baseline,
        instrumented_retired=baseline + 2 * w * i,
    )
    return _pair("indirect-heavy", lst, expected, p.to_dict())


_GENERATORS = {
    "call-heavy": _call_heavy,
    "leaf-heavy": _leaf_heavy,
    "indirect-heavy": _indirect_heavy,
}


def generate(profile: str, params: Optional[GenParams] = None) -> BenchPair:
    """Generate the (baseline, instrumented) pair for *profile*."""
    if profile not in _GENERATORS:
        raise GenbenchError(f"unknown profile {profile!r}; choose from {', '.join(PROFILES)}")
    p = (params or GenParams()).validate()
    pair = _GENERATORS[profile](p)
    logger.info(
        "Generated %s: %d CFI instruction(s) expected over %d retired",
        profile, pair.expected.cfi_retired, pair.expected.instrumented_retired,
    )
    return pair


# ---------------------------------------------------------------------------
# Random call trees
# ---------------------------------------------------------------------------

@dataclass
class _Node:
    index: int
    children: list[_Node] = field(default_factory=list)
    indirect: list[bool] = field(default_factory=list)


def _random_tree(rng: random.Random, max_depth: int, max_children: int) -> list[_Node]:
    nodes = [_Node(1)]
    frontier = [(nodes[0], 1)]
    while frontier:
        node, depth = frontier.pop(0)
        if depth >= max_depth:
            continue
        for _ in range(rng.randint(0, max_children)):
            child = _Node(len(nodes) + 1)
            nodes.append(child)
            node.children.append(child)
            node.indirect.append(rng.random() < 0.5)
            frontier.append((child, depth + 1))
    return nodes


def _random_op(rng: random.Random) -> str:
    r = rng.choice(_BODY_REGS)
    r2 = rng.choice(_BODY_REGS)
    choice = rng.randrange(6)
    if choice == 0:
        return f"addi {r}, {r}, {rng.randint(-2048, 2047)}"
    if choice == 1:
        return f"xor {r}, {r}, {r2}"
    if choice == 2:
        return f"add {r}, {r}, {r2}"
    if choice == 3:
        return f"slli {r}, {r}, {rng.randint(0, 7)}"
    if choice == 4:
        return f"mul {r}, {r}, {r2}"
    return f"sd {r}, 0(sp)"


def generate_call_tree(seed: int, *, max_depth: int = 4, max_children: int = 3,
                       max_ops: int = 6) -> BenchPair:
    """Random bracketed call tree; every function runs exactly once.

    Calls are direct or through a pointer at random. Every function opens
    with a labelled ``lpad`` and owns a 16-byte frame; non-leaf functions
    keep ``ra`` in it.
    """
    if not 1 <= max_depth <= 8 or not 0 <= max_children <= 4 or max_ops < 0:
        raise GenbenchError(
            f"call tree bounds: max_depth={max_depth} max_children={max_children} "
            f"max_ops={max_ops}"
        )
    rng = random.Random(seed)
    nodes = _random_tree(rng, max_depth, max_children)
    lst = _Listing(f"call-tree seed={seed}")
    retired = 0

    def op(text: str, n: int = 1) -> None:
        nonlocal retired
        lst.op(text)
        retired += n

    lst.label("_start")
    for reg in _BODY_REGS:
        value = rng.randint(-(1 << 31), (1 << 31) - 1)
        op(f"li {reg}, {value}", _li_len(value))
    op("call f1")
    lst.cfi("lpad 0")
    op("li a7, 93")
    op("ecall")

    non_leaf = 0
    for node in nodes:
        lst.label(f"f{node.index}")
        lst.cfi(f"lpad {node.index}")
        if node.children:
            non_leaf += 1
            lst.cfi("sspush ra")
        op("addi sp, sp, -16")
        if node.children:
            op("sd ra, 8(sp)")
        for _ in range(rng.randint(0, max_ops)):
            op(_random_op(rng))
        for child, indirect in zip(node.children, node.indirect):
            if indirect:
                op(f"la t1, f{child.index}", 2)
                op(f"lui t2, {child.index}")
                op("jalr ra, 0(t1)")
            else:
                op(f"call f{child.index}")
            lst.cfi("lpad 0")
            for _ in range(rng.randint(0, max_ops // 2)):
                op(_random_op(rng))
        if node.children:
            op("ld ra, 8(sp)")
        op("addi sp, sp, 16")
        if node.children:
            lst.cfi("sspopchk ra")
        op("ret")

    n = len(nodes)
    static = _counts(lpad=2 * n, sspush=non_leaf, sspopchk=non_leaf)
    expected = Expectation(
        cfi_counts=dict(static),
        static_counts=static,
        baseline_retired=retired,
        instrumented_retired=retired + sum(static.values()),
    )
    params = {"seed": seed, "max_depth": max_depth, "max_children": max_children,
              "max_ops": max_ops, "functions": n}
    return _pair(f"call-tree-{seed}", lst, expected, params)

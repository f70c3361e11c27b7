"""Line-oriented text formats for traces, block maps, schedules and variable-size instances."""
from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Tuple

from .core import BlockMap, ItemId, LoadOp
from .oracle import OfflineSchedule, VarSizeInstance

TRACE_HEADER = "#gc-trace v1"
BLOCKS_HEADER = "#gc-blocks v1"
SCHEDULE_HEADER = "#gc-schedule v1"
VARSIZE_HEADER = "#varsize v1"


class FormatError(ValueError):
    pass


def _lines(text: str) -> List[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip()]


def dumps_trace(trace: Iterable[ItemId]) -> str:
    return "\n".join([TRACE_HEADER, *(str(i) for i in trace)]) + "\n"


def loads_trace(text: str) -> List[ItemId]:
    lines = _lines(text)
    if not lines or lines[0] != TRACE_HEADER:
        raise FormatError(f"trace must start with {TRACE_HEADER!r}")
    try:
        return [ItemId.parse(ln) for ln in lines[1:] if not ln.startswith("#")]
    except ValueError as e:
        raise FormatError(str(e)) from None


def dumps_blocks(bmap: BlockMap) -> str:
    rows = [f"{BLOCKS_HEADER} B={bmap.max_block_size}"]
    rows += [f"{b} {n}" for b, n in sorted(bmap.blocks.items())]
    return "\n".join(rows) + "\n"


def loads_blocks(text: str) -> BlockMap:
    lines = _lines(text)
    m = re.fullmatch(re.escape(BLOCKS_HEADER) + r"\s+B=(\d+)", lines[0]) if lines else None
    if not m:
        raise FormatError(f"block map must start with '{BLOCKS_HEADER} B=<int>'")
    blocks = {}
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"bad block line {ln!r}")
        b, n = int(parts[0]), int(parts[1])
        if b in blocks:
            raise FormatError(f"block {b} listed twice")
        blocks[b] = n
    return BlockMap(int(m.group(1)), blocks)


def dumps_schedule(schedule: OfflineSchedule) -> str:
    return "\n".join([f"{SCHEDULE_HEADER} cost={schedule.claimed_cost}", *schedule.lines()]) + "\n"


def loads_schedule(text: str) -> OfflineSchedule:
    lines = _lines(text)
    if not lines or not lines[0].startswith(SCHEDULE_HEADER):
        raise FormatError(f"schedule must start with {SCHEDULE_HEADER!r}")
    ops = []
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        toks = ln.split()
        if len(toks) < 4 or toks[0] != "pos" or toks[2] != "load" or "evict" not in toks:
            raise FormatError(f"bad schedule line {ln!r}")
        cut = toks.index("evict")
        loaded = frozenset(ItemId.parse(t) for t in toks[3:cut])
        evicted = frozenset(ItemId.parse(t) for t in toks[cut + 1:])
        ops.append(LoadOp(int(toks[1]), loaded, evicted))
    return OfflineSchedule(ops)


def dumps_varsize(inst: VarSizeInstance) -> str:
    rows = [f"{VARSIZE_HEADER} cap={inst.capacity}"]
    rows += [f"size {k} {v}" for k, v in inst.sizes.items()]
    rows += [f"access {k}" for k in inst.trace]
    return "\n".join(rows) + "\n"


def loads_varsize(text: str) -> VarSizeInstance:
    lines = _lines(text)
    m = re.fullmatch(re.escape(VARSIZE_HEADER) + r"\s+cap=(\S+)", lines[0]) if lines else None
    if not m:
        raise FormatError(f"instance must start with '{VARSIZE_HEADER} cap=<rational>'")
    sizes, trace = {}, []
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        toks = ln.split()
        if toks[0] == "size" and len(toks) == 3:
            sizes[toks[1]] = Fraction(toks[2])
        elif toks[0] == "access" and len(toks) == 2:
            trace.append(toks[1])
        else:
            raise FormatError(f"bad instance line {ln!r}")
    try:
        return VarSizeInstance(sizes, Fraction(m.group(1)), trace)
    except ValueError as e:
        raise FormatError(str(e)) from None


def read_trace(path) -> List[ItemId]:
    return loads_trace(Path(path).read_text(encoding="utf-8"))


def read_blocks(path) -> BlockMap:
    return loads_blocks(Path(path).read_text(encoding="utf-8"))


def read_schedule(path) -> OfflineSchedule:
    return loads_schedule(Path(path).read_text(encoding="utf-8"))


def read_varsize(path) -> VarSizeInstance:
    return loads_varsize(Path(path).read_text(encoding="utf-8"))


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def write_trace_files(prefix, trace, bmap, schedule=None) -> Tuple[Path, ...]:
    prefix = str(prefix)
    out = [Path(prefix + ".trace"), Path(prefix + ".blocks")]
    write_text(out[0], dumps_trace(trace))
    write_text(out[1], dumps_blocks(bmap))
    if schedule is not None:
        out.append(Path(prefix + ".schedule"))
        write_text(out[2], dumps_schedule(schedule))
    return tuple(out)

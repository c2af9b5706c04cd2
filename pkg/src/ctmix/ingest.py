"""Readers and writers for foreign instruction traces and mix-vector CSVs.

Trace files hold one ``index mnemonic`` record per line, indices strictly
increasing from 0, with an optional ``# arch: <tag>`` header. Mix CSVs have a
fixed header, a ``round`` column and one count column per instruction class.
"""
from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Iterable, TextIO

from .classify import COLUMNS, MnemonicMap, UnknownMnemonicError, builtin_map
from .mix import MixVector
from .vm import Trace, TraceEvent

MIX_CSV_HEADER = ("round",) + COLUMNS


class IngestError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _text(source) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if isinstance(source, str):
        return source
    return source.read()


# ==================================================================================================
# Foreign traces
# ==================================================================================================
def parse_trace(source: str | Path | TextIO, mapping: MnemonicMap | None = None) -> Trace:
    """Parse a trace file and classify each record with ``mapping``."""
    mapping = mapping or builtin_map()
    events = []
    last = -1
    for lineno, raw in enumerate(_text(source).splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise IngestError(f"expected 'index mnemonic', got {line!r}", lineno)
        try:
            index = int(parts[0])
        except ValueError:
            raise IngestError(f"bad index {parts[0]!r}", lineno) from None
        if last < 0 and index != 0:
            raise IngestError(f"first index must be 0, got {index}", lineno)
        if index <= last:
            raise IngestError(f"index {index} does not increase (previous {last})", lineno)
        last = index
        mnemonic = parts[1]
        try:
            cls = mapping.classify(mnemonic)
        except UnknownMnemonicError:
            raise IngestError(f"unknown mnemonic {mnemonic!r}", lineno) from None
        events.append(TraceEvent(index, mnemonic, cls))
    return Trace.from_events(events)


def trace_arch(source: str | Path | TextIO) -> str:
    for raw in _text(source).splitlines():
        line = raw.strip()
        if line.startswith("#") and line[1:].strip().lower().startswith("arch:"):
            return line[1:].strip()[5:].strip()
    return ""


def format_trace(trace: Iterable[TraceEvent], arch: str = "") -> str:
    """Serialise a trace; records are numbered by position."""
    out = [f"# arch: {arch}"] if arch else []
    out.extend(f"{k} {e.mnemonic}" for k, e in enumerate(trace))
    return "\n".join(out) + "\n"


# ==================================================================================================
# Mix-vector CSV
# ==================================================================================================
def parse_mix_csv_rounds(source: str | Path | TextIO) -> list[tuple[int, MixVector]]:
    rows = list(csv.reader(io.StringIO(_text(source))))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise IngestError("empty mix CSV (no header)")
    header = tuple(cell.strip() for cell in rows[0])
    if header != MIX_CSV_HEADER:
        raise IngestError("header mismatch; expected " + ",".join(MIX_CSV_HEADER), 1)
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(MIX_CSV_HEADER):
            raise IngestError(f"expected {len(MIX_CSV_HEADER)} columns, got {len(row)}", lineno)
        values = []
        for name, cell in zip(MIX_CSV_HEADER, row):
            cell = cell.strip()
            if not re.fullmatch(r"[0-9]+", cell):
                raise IngestError(f"column {name}: {cell!r} is not a non-negative integer", lineno)
            values.append(int(cell))
        out.append((values[0], MixVector(tuple(values[1:]))))
    return out


def parse_mix_csv(source: str | Path | TextIO) -> list[MixVector]:
    return [vec for _, vec in parse_mix_csv_rounds(source)]


def format_mix_csv(vectors: Iterable) -> str:
    """Write MixVectors (or ``(round, MixVector)`` pairs) as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MIX_CSV_HEADER)
    for k, item in enumerate(vectors):
        rnd, vec = item if isinstance(item, tuple) else (k, item)
        writer.writerow((rnd, *vec.counts))
    return buf.getvalue()

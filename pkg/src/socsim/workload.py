"""Request streams that drive the masters.

Two sources are supported:

* trace files, one request per line in the v1 format::

      <cycle> <master_id> <R|W> <0xHEXADDR> <size_bytes>

  with ``#`` starting a comment and blank lines ignored;

* synthetic profiles, where request ``i`` of a master is a pure function
  of ``(profile, seed, master_id, i)``.  Two runs with the same profile
  and seed produce identical streams no matter how the simulation
  interleaves them.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .errors import ConfigError
from .transaction import READ, WRITE

TRACE_FORMAT = "v1"

PATTERN_SATURATING = "saturating"
PATTERN_PERIODIC = "periodic"
PATTERN_BURSTY = "bursty"
PATTERNS = (PATTERN_SATURATING, PATTERN_PERIODIC, PATTERN_BURSTY)


@dataclass(frozen=True)
class TraceRecord:
    cycle: int
    master: int
    kind: str   # READ or WRITE
    addr: int
    size: int


@dataclass(frozen=True)
class Request:
    """One pending request: ready at ``earliest``, issued when the
    master's outstanding window allows."""

    earliest: int
    kind: str
    addr: int
    size: int


_LINE_RE = re.compile(
    r"^\s*(\d+)\s+(\d+)\s+([RW])\s+(0[xX][0-9a-fA-F]+)\s+(\d+)\s*$"
)


def parse_trace(text: str, source: str = "<trace>") -> list[TraceRecord]:
    """Parse a v1 trace.  Raises ConfigError listing every bad line."""
    records, problems = _scan_trace(text, source)
    if problems:
        raise ConfigError(problems)
    return records


def lint_trace(text: str, source: str = "<trace>") -> list[str]:
    """Return all problems found in a trace, empty when clean."""
    _records, problems = _scan_trace(text, source)
    return problems


def _scan_trace(text: str, source: str) -> tuple[list[TraceRecord], list[str]]:
    records: list[TraceRecord] = []
    problems: list[str] = []
    last_cycle = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None:
            problems.append(
                f"{source}:{lineno}: not of the form "
                f"'<cycle> <master_id> <R|W> <0xHEXADDR> <size_bytes>': {raw.strip()!r}"
            )
            continue
        cycle = int(m.group(1))
        master = int(m.group(2))
        kind = READ if m.group(3) == "R" else WRITE
        addr = int(m.group(4), 16)
        size = int(m.group(5))
        bad = False
        if cycle < last_cycle:
            problems.append(
                f"{source}:{lineno}: cycle {cycle} goes backwards "
                f"(previous record was at {last_cycle})"
            )
            bad = True
        last_cycle = max(last_cycle, cycle)
        if size < 1:
            problems.append(f"{source}:{lineno}: size must be >= 1, got {size}")
            bad = True
        if not bad:
            records.append(TraceRecord(cycle, master, kind, addr, size))
    return records, problems


def emit_trace(records: list[TraceRecord]) -> str:
    """Render records in the v1 format; parse(emit(r)) == r."""
    lines = [f"# trace-format: {TRACE_FORMAT}"]
    for r in records:
        letter = "R" if r.kind == READ else "W"
        lines.append(f"{r.cycle} {r.master} {letter} 0x{r.addr:08x} {r.size}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SyntheticProfile:
    pattern: str = PATTERN_SATURATING
    kind_mix: float = 1.0       # fraction of reads, rest are writes
    base: int = 0
    footprint: int = 4096       # bytes of address range cycled through
    stride: int = 64
    size: int = 8
    count: int | None = None    # total requests, None = unbounded
    period: int = 100           # periodic: gap between requests; bursty: gap between burst starts
    burst_len: int = 4          # bursty only
    phase: int = 0

    def validate(self, where: str = "profile") -> list[str]:
        problems = []
        if self.pattern not in PATTERNS:
            problems.append(f"{where}.pattern: unknown pattern {self.pattern!r}, "
                            f"expected one of {', '.join(PATTERNS)}")
        if not 0.0 <= self.kind_mix <= 1.0:
            problems.append(f"{where}.kind_mix: must be in [0, 1], got {self.kind_mix}")
        for name in ("footprint", "stride", "size"):
            if getattr(self, name) < 1:
                problems.append(f"{where}.{name}: must be >= 1, got {getattr(self, name)}")
        if self.base < 0:
            problems.append(f"{where}.base: must be >= 0, got {self.base}")
        if self.count is not None and self.count < 0:
            problems.append(f"{where}.count: must be >= 0, got {self.count}")
        if self.pattern in (PATTERN_PERIODIC, PATTERN_BURSTY) and self.period < 1:
            problems.append(f"{where}.period: must be >= 1, got {self.period}")
        if self.pattern == PATTERN_BURSTY and self.burst_len < 1:
            problems.append(f"{where}.burst_len: must be >= 1, got {self.burst_len}")
        if self.phase < 0:
            problems.append(f"{where}.phase: must be >= 0, got {self.phase}")
        return problems


def _request_rng(seed: int, master: int, index: int) -> random.Random:
    # independent generator per (seed, master, index) so request i never
    # depends on whether requests 0..i-1 were ever generated
    return random.Random((seed * 1000003 + master) * 2654435761 + index)


def synthetic_request(profile: SyntheticProfile, seed: int, master: int,
                      index: int) -> Request | None:
    """Request ``index`` of a synthetic stream, or None past ``count``."""
    if profile.count is not None and index >= profile.count:
        return None
    if profile.pattern == PATTERN_SATURATING:
        earliest = profile.phase
    elif profile.pattern == PATTERN_PERIODIC:
        earliest = profile.phase + index * profile.period
    else:  # bursty: burst b starts at phase + b*period, whole burst ready then
        burst = index // profile.burst_len
        earliest = profile.phase + burst * profile.period
    rng = _request_rng(seed, master, index)
    kind = READ if rng.random() < profile.kind_mix else WRITE
    addr = profile.base + (index * profile.stride) % profile.footprint
    return Request(earliest, kind, addr, profile.size)


class SyntheticStream:
    def __init__(self, profile: SyntheticProfile, seed: int, master: int):
        self.profile = profile
        self.seed = seed
        self.master = master

    def get(self, index: int) -> Request | None:
        return synthetic_request(self.profile, self.seed, self.master, index)


class TraceStream:
    """The per-master view of a shared trace."""

    def __init__(self, records: list[TraceRecord], master: int):
        self._requests = [
            Request(r.cycle, r.kind, r.addr, r.size)
            for r in records if r.master == master
        ]

    def get(self, index: int) -> Request | None:
        if index >= len(self._requests):
            return None
        return self._requests[index]

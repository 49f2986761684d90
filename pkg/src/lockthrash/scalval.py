"""Locating scalability bottlenecks by comparing two per-function profiles.

Each function's time is expressed per computation cycle, the wall time in
which ``n`` cores complete ``n`` units of work. A function that scales
perfectly takes the same time per cycle at any core count; the growth
between the single-core and multi-core profile is its scalability value.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field


def computation_cycle(n: int, throughput: float) -> float:
    if throughput <= 0:
        raise ValueError(f"throughput must be positive, got {throughput}")
    return n / throughput


@dataclass(frozen=True)
class Profile:
    core_count: int
    entries: dict[str, float]
    # work units per unit time; profiles read from CSV are already normalized
    throughput: float = 1.0

    def __post_init__(self):
        if self.core_count < 1:
            raise ValueError("core_count must be >= 1")
        if self.throughput <= 0:
            raise ValueError("throughput must be positive")
        if any(t < 0 for t in self.entries.values()):
            raise ValueError("function times must be non-negative")

    @classmethod
    def from_shares(cls, core_count: int, throughput: float, shares: dict[str, float]) -> Profile:
        """From each function's share of all sampled CPU time."""
        cycle = computation_cycle(core_count, throughput)
        return cls(core_count, {f: s * cycle for f, s in shares.items()}, throughput)

    @classmethod
    def from_sim(cls, result) -> Profile:
        """Per-event-kind breakdown of a simulator run: cycles per completed section."""
        if result.completed <= 0:
            raise ValueError("run completed no critical sections")
        return cls(
            result.cores_used,
            {k: c / result.completed for k, c in result.event_cycles.items()},
            result.speedup_basis,
        )


@dataclass(frozen=True)
class Row:
    func: str
    Ts: float
    Tm: float
    value: float
    weight: float


@dataclass(frozen=True)
class ScalabilityReport:
    rows: tuple[Row, ...] = field(default_factory=tuple)

    @property
    def positive_total(self) -> float:
        return math.fsum(r.value for r in self.rows if r.value > 0)

    def rank(self, func: str) -> int:
        """1-based position of ``func``."""
        for i, r in enumerate(self.rows, 1):
            if r.func == func:
                return i
        raise KeyError(func)


def scalability_values(single: Profile, multi: Profile) -> ScalabilityReport:
    """Value Tm - Ts per function; weights over the positive values only.

    A function missing from one profile counts as zero time there. Rows are
    sorted by value, largest first, ties by name.
    """
    funcs = set(single.entries) | set(multi.entries)
    raw = [(f, single.entries.get(f, 0.0), multi.entries.get(f, 0.0)) for f in funcs]
    total = math.fsum(tm - ts for _, ts, tm in raw if tm - ts > 0)
    rows = [
        Row(f, ts, tm, tm - ts, (tm - ts) / total if tm - ts > 0 and total > 0 else 0.0)
        for f, ts, tm in raw
    ]
    rows.sort(key=lambda r: (-r.value, r.func))
    return ScalabilityReport(tuple(rows))


def top_coverage(report: ScalabilityReport, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.fsum(r.weight for r in report.rows[:k])


def parse_profile_csv(text: str, core_count: int = 1) -> Profile:
    """Columns ``func,time_per_cycle``; lines starting with ``#`` are skipped."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0][:2]] != ["func", "time_per_cycle"]:
        raise ValueError("profile CSV must start with the header func,time_per_cycle")
    entries: dict[str, float] = {}
    for r in rows[1:]:
        entries[r[0]] = entries.get(r[0], 0.0) + float(r[1])
    return Profile(core_count, entries)


def profile_to_csv(profile: Profile) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["func", "time_per_cycle"])
    for f, t in profile.entries.items():
        w.writerow([f, repr(float(t))])
    return out.getvalue()


def report_to_csv(report: ScalabilityReport, top: int | None = None) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["rank", "func", "Ts", "Tm", "value", "weight"])
    for i, r in enumerate(report.rows[:top] if top else report.rows, 1):
        w.writerow([i, r.func, f"{r.Ts:.6g}", f"{r.Tm:.6g}", f"{r.value:.6g}", f"{r.weight:.6f}"])
    return out.getvalue()

"""Core-count sweeps, result tables, and the figure data sets."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import policies
from .engine import DEFAULT_MAX_TICKS, KINDS, EngineInvariantError, SimResult, run
from .model import PLATFORMS, ConfigError, SimConfig, bundled_config, on_platform

ACCEPTANCE_TICKS = 50_000

RUN_COLUMNS = (
    "row",
    "config",
    "policy",
    "cores",
    "seed",
    "throughput",
    "speedup",
    "lock_wait_fraction",
    "spin_lockmiss_share",
    "events_handled",
    *(f"count_{k.name}" for k in KINDS),
    "mean_lock_queue",
    "max_lock_queue",
    "mean_bank_queue",
    "max_bank_queue",
    "error",
)


@dataclass(frozen=True)
class ExperimentPlan:
    config: SimConfig
    cores: tuple[int, ...]
    seeds: tuple[int, ...] = (1,)
    policy: policies.LockPolicy = field(default_factory=policies.Ticket)
    max_ticks: int = DEFAULT_MAX_TICKS
    out: Path | None = None
    format: str = "csv"

    def __post_init__(self):
        cores = tuple(sorted(set(self.cores)))
        if not cores or cores[0] < 1:
            raise ConfigError("core counts must be positive and non-empty")
        if cores[-1] > self.config.platform.total_cores:
            raise ConfigError(f"{cores[-1]} cores requested but the platform has {self.config.platform.total_cores}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        object.__setattr__(self, "cores", cores)
        object.__setattr__(self, "seeds", tuple(self.seeds))


@dataclass
class SweepResult:
    plan: ExperimentPlan
    rows: list[dict]

    def runs(self) -> list[dict]:
        return [r for r in self.rows if r["row"] == "run"]

    def aggregates(self) -> list[dict]:
        return [r for r in self.rows if r["row"] == "mean"]

    def curve(self, column: str = "speedup") -> dict[int, float]:
        return {r["cores"]: r[column] for r in self.aggregates()}

    @property
    def failed(self) -> bool:
        return any(r["error"] for r in self.rows)

    def peak(self) -> int:
        return peak_of(self.curve())


def peak_of(curve: dict[int, float]) -> int:
    """Core count of the highest value, smallest count on ties."""
    return max(curve, key=lambda n: (curve[n], -n))


def _one(args) -> tuple[SimResult | None, str]:
    config, cores, policy, max_ticks, seed = args
    try:
        return run(config.platform, config.workload, cores, policy, max_ticks=max_ticks, seed=seed), ""
    except EngineInvariantError as exc:
        return None, f"invariant: {exc}"


def _run_all(jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_one, jobs))
    return [_one(j) for j in jobs]


def _row(plan: ExperimentPlan, cores, seed, res: SimResult | None, base: float | None, err: str) -> dict:
    row = dict.fromkeys(RUN_COLUMNS, "")
    row.update(row="run", config=plan.config.name, policy=policies.format_policy(plan.policy), cores=cores, seed=seed)
    if res is None:
        row["error"] = err
        return row
    row.update(
        throughput=res.throughput,
        speedup=res.speedup_basis / base if base else math.nan,
        lock_wait_fraction=res.mean_lock_wait_fraction,
        spin_lockmiss_share=res.spin_lockmiss_share(),
        events_handled=res.events_handled,
        mean_lock_queue=res.mean_lock_queue(),
        max_lock_queue=res.max_lock_queue(),
        mean_bank_queue=res.mean_bank_queue(),
        max_bank_queue=res.max_bank_queue(),
    )
    for k in KINDS:
        row[f"count_{k.name}"] = res.event_counts[k.name]
    return row


def _mean_row(plan: ExperimentPlan, cores: int, runs: list[dict]) -> dict:
    row = dict.fromkeys(RUN_COLUMNS, "")
    row.update(row="mean", config=plan.config.name, policy=policies.format_policy(plan.policy), cores=cores, seed="")
    ok = [r for r in runs if not r["error"]]
    if not ok:
        row["error"] = "no successful runs"
        return row
    for col in RUN_COLUMNS[5:-1]:
        values = [r[col] for r in ok]
        if col.startswith("max_"):
            row[col] = max(values)
        else:
            row[col] = math.fsum(values) / len(values)
    if len(ok) < len(runs):
        row["error"] = f"{len(runs) - len(ok)} run(s) failed"
    return row


def sweep(plan: ExperimentPlan, workers: int = 1) -> SweepResult:
    """One row per (cores, seed) and a mean row per core count.

    Speedup is measured against a one-core run with the same seed. Results
    depend only on the plan, never on ``workers``.
    """
    jobs = [(plan.config, 1, plan.policy, plan.max_ticks, s) for s in plan.seeds]
    jobs += [(plan.config, n, plan.policy, plan.max_ticks, s) for n in plan.cores if n != 1 for s in plan.seeds]
    results = _run_all(jobs, workers)
    by_key = {(j[1], j[4]): r for j, r in zip(jobs, results)}
    rows = []
    for n in plan.cores:
        group = []
        for s in plan.seeds:
            base = by_key[(1, s)][0]
            res, err = by_key[(n, s)]
            group.append(_row(plan, n, s, res, base.speedup_basis if base else None, err))
        rows.extend(group)
        rows.append(_mean_row(plan, n, group))
    out = SweepResult(plan, rows)
    if plan.out is not None:
        Path(plan.out).write_text(render(rows, plan.format))
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 10))
    return v


def render(rows: list[dict], fmt: str = "csv", columns=None) -> str:
    columns = list(columns or (rows[0].keys() if rows else RUN_COLUMNS))
    if fmt == "json":
        return json.dumps([{c: _fmt(r.get(c, "")) for c in columns} for r in rows], indent=1) + "\n"
    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({c: _fmt(r.get(c, "")) for c in columns})
    return out.getvalue()


# -- figure data -------------------------------------------------------------

FIGURES = ("fig3_8", "fig3_9", "fig3_12", "fig3_13")
ALL_CORES = tuple(range(1, 33))


def _curves_table(curves: dict[str, dict[int, float]]) -> list[dict]:
    cores = sorted({n for c in curves.values() for n in c})
    return [{"cores": n, **{name: c.get(n, "") for name, c in curves.items()}} for n in cores]


def figure_repro(
    name: str,
    out_dir: Path | None = None,
    seeds=(1, 2, 3),
    max_ticks: int = ACCEPTANCE_TICKS,
    cores=ALL_CORES,
    workers: int = 1,
    fmt: str = "csv",
) -> dict[str, list[dict]]:
    """Build the data behind one figure; returns ``{file name: rows}``.

    fig3_8: speedup of c1..c4 on the 8x4 platform. fig3_9: share of each
    event kind in handled events. fig3_12: c1 and c3 on platforms p1, p2, p3.
    fig3_13: c3 and c4 at memory latency 1, 5 and 10.
    """
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")

    def go(config):
        return sweep(ExperimentPlan(config, tuple(cores), tuple(seeds), max_ticks=max_ticks), workers)

    files: dict[str, list[dict]] = {}
    if name in ("fig3_8", "fig3_9"):
        sweeps = {c: go(bundled_config(c)) for c in ("c1", "c2", "c3", "c4")}
        if name == "fig3_8":
            files["fig3_8_speedup"] = _curves_table({c: s.curve() for c, s in sweeps.items()})
            files["fig3_8_lock_wait"] = _curves_table({c: s.curve("lock_wait_fraction") for c, s in sweeps.items()})
        else:
            rows = []
            for c, s in sweeps.items():
                for agg in s.aggregates():
                    total = math.fsum(agg[f"count_{k.name}"] for k in KINDS)
                    rows.append(
                        {"config": c, "cores": agg["cores"], **{k.name: agg[f"count_{k.name}"] / total for k in KINDS}}
                    )
            files["fig3_9_event_mix"] = rows
    elif name == "fig3_12":
        curves = {}
        for c in ("c1", "c3"):
            for p, platform in PLATFORMS.items():
                curves[f"{c}_{p}"] = go(on_platform(bundled_config(c), platform)).curve()
        files["fig3_12_speedup"] = _curves_table(curves)
    else:
        curves = {}
        for c in ("c3", "c4"):
            base = bundled_config(c)
            for lat in (1, 5, 10):
                curves[f"{c}_lat{lat}"] = go(on_platform(base, base.platform.with_latency(lat))).curve()
        files["fig3_13_speedup"] = _curves_table(curves)
        files["fig3_13_peaks"] = [{"curve": k, "peak_cores": peak_of(v)} for k, v in curves.items()]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for fname, rows in files.items():
            (out_dir / f"{fname}.{fmt}").write_text(render(rows, fmt))
    return files

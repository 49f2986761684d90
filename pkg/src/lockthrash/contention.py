"""Shared-cache contention analysis from co-run measurements.

A co-run table holds each application's solo time and its time when run
next to every other application. From it come the degradation matrix, each
application's intensity (how much it slows others, the row norm) and
sensitivity (how much others slow it, the column norm). A cheap heuristic
metric is good when it tracks intensity closely and stays stable when the
application itself runs under contention.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CoRunTable:
    names: tuple[str, ...]
    solo_times: np.ndarray
    corun_times: np.ndarray  # [background i, target j]

    def __post_init__(self):
        names = tuple(self.names)
        solo = np.asarray(self.solo_times, dtype=float)
        corun = np.asarray(self.corun_times, dtype=float)
        n = len(names)
        if solo.shape != (n,) or corun.shape != (n, n):
            raise ValueError(f"expected {n} solo times and a {n}x{n} co-run matrix")
        if np.any(solo <= 0) or np.any(corun <= 0):
            raise ValueError("execution times must be positive")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "solo_times", solo)
        object.__setattr__(self, "corun_times", corun)


@dataclass(frozen=True)
class MetricVector:
    name: str
    values: np.ndarray
    degradation: np.ndarray  # co-run inflation of the metric, same layout as the time matrix

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "degradation", np.asarray(self.degradation, dtype=float))
        n = len(self.values)
        if self.degradation.shape != (n, n):
            raise ValueError(f"metric {self.name!r}: degradation matrix must be {n}x{n}")


@dataclass(frozen=True)
class MetricScore:
    name: str
    E: float
    S: float

    @property
    def ratio(self) -> float:
        return self.E / self.S if self.S else math.inf


def degradation(table: CoRunTable) -> np.ndarray:
    """d[i, j] = (T[i, j] - T_j) / T_j."""
    return (table.corun_times - table.solo_times[None, :]) / table.solo_times[None, :]


def intensity_sensitivity(d) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(d, dtype=float)
    return np.sqrt((d**2).sum(axis=1)), np.sqrt((d**2).sum(axis=0))


def cosine(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cannot correlate a zero-norm vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def pearson(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return cosine(a - a.mean(), b - b.mean())


def instability(md) -> float:
    """Mean over applications of the norm of that application's column."""
    md = np.asarray(md, dtype=float)
    return float(np.mean(np.sqrt((md**2).sum(axis=0))))


def score_metric(intensity, metric: MetricVector) -> MetricScore:
    return MetricScore(metric.name, cosine(intensity, metric.values), instability(metric.degradation))


def choose(scores: list[MetricScore]) -> MetricScore:
    """Highest correlation-to-instability ratio; first listed wins ties."""
    if not scores:
        raise ValueError("no candidate metrics")
    return max(scores, key=lambda s: s.ratio)


def select_metric(intensity, candidates: list[MetricVector]) -> tuple[MetricScore, list[MetricScore]]:
    scores = [score_metric(intensity, c) for c in candidates]
    return choose(scores), scores


def running_access_rate(history) -> float:
    """Cumulative accesses over cumulative instructions."""
    history = list(history)
    instructions = math.fsum(i for _, i in history)
    if instructions <= 0:
        raise ValueError("history contains no instructions")
    return math.fsum(s for s, _ in history) / instructions


def workload_stats(runs) -> tuple[float, float]:
    """Mean and spread of one workload kind's execution times.

    ``runs[j][i]`` is instance ``i`` of execution ``j``. Returns the grand
    mean and the mean squared deviation of per-execution means from it.
    """
    arr = [list(map(float, r)) for r in runs]
    if not arr or any(not r for r in arr):
        raise ValueError("need at least one execution with at least one instance")
    lengths = {len(r) for r in arr}
    if len(lengths) != 1:
        raise ValueError("every execution must have the same number of instances")
    data = np.array(arr)
    c = float(data.mean())
    d = float(((data.mean(axis=1) - c) ** 2).mean())
    return c, d


def pick_complement(current_rate: float, candidates, midpoint: float, maxcnt: int) -> int | None:
    """Index of the waiting task whose rate, added to ``current_rate``, lands
    closest to ``midpoint``. Only the first ``maxcnt`` candidates are looked at."""
    best, best_d = None, math.inf
    for idx, rate in enumerate(list(candidates)[: max(maxcnt, 0)]):
        d = abs(rate + current_rate - midpoint)
        if d < best_d:
            best, best_d = idx, d
    return best


# -- CSV ---------------------------------------------------------------------

SOLO_ROW = "solo"


def _rows(text: str) -> list[list[str]]:
    return [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]


def parse_corun_csv(text: str) -> CoRunTable:
    """Header row of target names, one row per background, plus a ``solo`` row."""
    rows = _rows(text)
    header, body = rows[0][1:], rows[1:]
    solo = [r for r in body if r[0] == SOLO_ROW]
    if len(solo) != 1:
        raise ValueError("co-run table needs exactly one 'solo' row")
    order = {r[0]: r for r in body if r[0] != SOLO_ROW}
    missing = [n for n in header if n not in order]
    if missing:
        raise ValueError(f"co-run table has no background row for {', '.join(missing)}")
    matrix = [[float(x) for x in order[n][1:]] for n in header]
    return CoRunTable(header, [float(x) for x in solo[0][1:]], matrix)


def write_corun_csv(table: CoRunTable) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["background", *table.names])
    for name, row in zip(table.names, table.corun_times):
        w.writerow([name, *(repr(float(x)) for x in row)])
    w.writerow([SOLO_ROW, *(repr(float(x)) for x in table.solo_times)])
    return out.getvalue()


def parse_metrics_csv(text: str, names) -> list[MetricVector]:
    """Rows ``metric,background,<app...>``; background ``value`` holds V_k, the
    remaining rows hold the metric's co-run degradation matrix."""
    rows = _rows(text)
    header = rows[0][2:]
    if list(header) != list(names):
        raise ValueError("metric columns must match the co-run table's application order")
    grouped: dict[str, dict[str, list[float]]] = {}
    for r in rows[1:]:
        grouped.setdefault(r[0], {})[r[1]] = [float(x) for x in r[2:]]
    out = []
    for metric, parts in grouped.items():
        if "value" not in parts:
            raise ValueError(f"metric {metric!r} has no 'value' row")
        try:
            md = [parts[n] for n in names]
        except KeyError as exc:
            raise ValueError(f"metric {metric!r} has no row for background {exc}") from None
        out.append(MetricVector(metric, parts["value"], md))
    return out


def parse_scores_csv(text: str) -> list[MetricScore]:
    """Precomputed ``metric,E,S`` rows."""
    rows = _rows(text)
    return [MetricScore(r[0], float(r[1]), float(r[2])) for r in rows[1:]]

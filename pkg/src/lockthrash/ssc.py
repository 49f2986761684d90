"""Sizing the set of cores that lock-heavy tasks are confined to.

Throughput is modeled as ``n * (1 - p)`` where ``p`` is the mean fraction of
time a core spends waiting for locks at ``n`` cores. The doubling search
asks an oracle for ``p`` at a handful of core counts; the exhaustive search
asks at every count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

Oracle = Callable[[int], float]


def throughput_model(n: int, p_bar: float) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p_bar <= 1.0:
        raise ValueError(f"p_bar must lie in [0, 1], got {p_bar}")
    return n * (1.0 - p_bar)


@dataclass(frozen=True)
class SscModel:
    n: int
    p_bar: float

    @property
    def T(self) -> float:
        return throughput_model(self.n, self.p_bar)


@dataclass
class SearchState:
    climbing: int = 1
    current_n: int = 1
    last_n: int = 1
    last_T: float = 0.0
    confirmations: int = 0
    direction: int = 0


@dataclass
class SearchResult:
    n: int
    T: float
    queries: int
    trace: list[SscModel] = field(default_factory=list)


def query_bound(max_n: int) -> int:
    """Oracle calls the doubling search may make with one sample per step."""
    return 2 * math.ceil(math.log2(max_n)) + 2 if max_n > 1 else 2


def search_optimal(oracle: Oracle, max_n: int, samples: int = 1, max_steps: int | None = None) -> SearchResult:
    """Doubling ascent that only moves after two agreeing comparisons.

    Every step measures T at the current n (the mean of ``samples`` oracle
    calls) and compares it with the throughput recorded at the last move.
    Two rises in a row double n; two falls in a row fall back to the
    previous n and stop. A rise confirmed at ``max_n`` stops there. A
    deterministic oracle therefore costs exactly two steps per visited n.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if max_steps is None:
        max_steps = 8 * query_bound(max_n)
    st = SearchState()
    trace: list[SscModel] = []
    calls = 0
    measured = {}
    for _ in range(max_steps):
        p = math.fsum(oracle(st.current_n) for _ in range(samples)) / samples
        calls += samples
        m = SscModel(st.current_n, p)
        trace.append(m)
        measured[st.current_n] = m.T
        direction = 1 if m.T > st.last_T else -1
        st.confirmations = st.confirmations + 1 if direction == st.direction else 1
        st.direction = direction
        if st.confirmations < 2:
            continue
        if direction > 0:
            if st.current_n >= max_n:
                return SearchResult(st.current_n, m.T, calls, trace)
            st.last_n, st.last_T = st.current_n, m.T
            st.current_n = min(2 * st.current_n, max_n)
            st.climbing += 1
        else:
            n = st.last_n
            return SearchResult(n, measured.get(n, st.last_T), calls, trace)
        st.confirmations = 0
        st.direction = 0
    # a noisy oracle never settled; keep the best point seen
    n = max(measured, key=lambda k: (measured[k], -k))
    return SearchResult(n, measured[n], calls, trace)


def exhaustive_optimal(oracle: Oracle, max_n: int, samples: int = 1) -> SearchResult:
    """argmax of T over 1..max_n, ties to the smallest n."""
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    trace = []
    for n in range(1, max_n + 1):
        p = math.fsum(oracle(n) for _ in range(samples)) / samples
        trace.append(SscModel(n, p))
    best = max(trace, key=lambda m: (m.T, -m.n))
    return SearchResult(best.n, best.T, max_n * samples, trace)


def simulator_oracle(config, seeds=(1, 2, 3), max_ticks: int = 50_000, policy=None) -> Oracle:
    """Mean lock-wait fraction from simulator runs, memoized per core count."""
    from .engine import run

    cache: dict[int, float] = {}

    def oracle(n: int) -> float:
        if n not in cache:
            fracs = [
                run(config.platform, config.workload, n, policy, max_ticks=max_ticks, seed=s).mean_lock_wait_fraction
                for s in seeds
            ]
            cache[n] = min(1.0, math.fsum(fracs) / len(fracs))
        return cache[n]

    return oracle

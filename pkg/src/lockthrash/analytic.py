"""Exact mean-value analysis of the closed queuing model of a lock workload.

Cores are the customers. Non-critical code is a delay (infinite-server)
center, each lock is a single-server queuing center. Unlike the simulator,
this model has no term for coherence traffic that grows with the number of
waiters, so its throughput saturates but never falls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import WorkloadConfig


@dataclass(frozen=True)
class Center:
    service_time: float
    visit_ratio: float
    name: str = ""


@dataclass(frozen=True)
class QueuingModel:
    customers: int
    think_time: float
    centers: tuple[Center, ...]

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(self.centers))
        if self.customers < 1:
            raise ValueError("customers must be >= 1")
        if self.think_time < 0:
            raise ValueError("think_time must be >= 0")
        if not self.centers:
            raise ValueError("at least one queuing center is required")
        for c in self.centers:
            if c.visit_ratio <= 0:
                raise ValueError(f"visit ratio must be positive, got {c.visit_ratio}")
            if c.service_time < 0:
                raise ValueError(f"service time must be non-negative, got {c.service_time}")
        if all(c.service_time == 0 for c in self.centers) and self.think_time == 0:
            raise ValueError("all service times are zero: throughput is unbounded")

    @property
    def demands(self) -> list[float]:
        return [c.visit_ratio * c.service_time for c in self.centers]


@dataclass(frozen=True)
class MvaRow:
    n: int
    throughput: float
    speedup: float
    queue_lengths: tuple[float, ...]
    residence_times: tuple[float, ...]


def mva_solve(model: QueuingModel) -> list[MvaRow]:
    """Exact MVA recursion for n = 1..N.

    R_k(n) = s_k (1 + Q_k(n-1)),  X(n) = n / (Z + sum_k v_k R_k(n)),
    Q_k(n) = X(n) v_k R_k(n),  Q_k(0) = 0.
    """
    if all(c.service_time == 0 for c in model.centers):
        raise ValueError("all service times are zero")
    queues = [0.0] * len(model.centers)
    rows = []
    x1 = None
    for n in range(1, model.customers + 1):
        residence = [c.service_time * (1.0 + q) for c, q in zip(model.centers, queues)]
        cycle = model.think_time + math.fsum(c.visit_ratio * r for c, r in zip(model.centers, residence))
        x = n / cycle
        queues = [x * c.visit_ratio * r for c, r in zip(model.centers, residence)]
        if x1 is None:
            x1 = x
        rows.append(MvaRow(n, x, x / x1, tuple(queues), tuple(residence)))
    return rows


def workload_to_model(workload: WorkloadConfig, mem_latency: int, customers: int) -> QueuingModel:
    """Expected section lengths become think time and per-lock service times.

    Lock-word traffic (the LOCK_MISS/STORE pairs) is deliberately left out:
    the analytic model only sees the section bodies.
    """
    think = math.fsum(s.probability * s.expected_cycles(mem_latency) for s in workload.non_critical)
    centers = []
    for lock in workload.locks:
        specs = [s for s in workload.critical if s.lock_id == lock]
        visit = math.fsum(s.probability for s in specs)
        if visit <= 0:
            continue
        service = math.fsum(s.probability * s.expected_cycles(mem_latency) for s in specs) / visit
        centers.append(Center(service, visit, name=lock))
    return QueuingModel(customers, think, centers)


def throughput_bound(model: QueuingModel, n: int) -> float:
    """Asymptotic bound min(n / (Z + D), 1 / D_max)."""
    demands = model.demands
    total = model.think_time + math.fsum(demands)
    return min(n / total, 1.0 / max(demands)) if max(demands) > 0 else n / total

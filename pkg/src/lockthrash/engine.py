"""Discrete-event simulation of cores contending for ticket-style locks.

Each core owns an event queue and a timestamp. Cores with a valid timestamp
sit in a binary heap; the main loop pops the earliest core, handles the
event at the head of its queue, pushes it back with its new timestamp and
moves the clock to the new heap root. A core spinning on a lock it cannot
take yet has no valid timestamp and stays off the heap until a write to
the lock word (or a wake-up) gives it something to do.

Memory banks serialize accesses: an access that finds its bank busy
completes ``mem_latency`` cycles after the previous access to that bank.
"""

from __future__ import annotations

import bisect
import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field

from . import policies
from .model import (
    ConfigError,
    Event,
    EventKind,
    PlatformConfig,
    WorkloadConfig,
    expand_enter_c,
    expand_enter_nc,
    expand_exit_c,
)
from .policies import LockPolicy, Ticket, WaitMode
from .rng import BANK_STREAM, SECTION_STREAM, stream

INVALID = -1
DEFAULT_MAX_TICKS = 10**7
DEFAULT_SAMPLE_EVERY = 1000
WARMUP_FRACTION = 0.05

INSTRUCTION = EventKind.INSTRUCTION
STORE = EventKind.STORE
ENTER_C = EventKind.ENTER_C
LOCK_MISS = EventKind.LOCK_MISS
CACHE_MISS = EventKind.CACHE_MISS
SPIN = EventKind.SPIN
EXIT_C = EventKind.EXIT_C
ENTER_NC = EventKind.ENTER_NC
KINDS = tuple(EventKind)


class EngineInvariantError(RuntimeError):
    """The simulation reached a state the event rules forbid."""


@dataclass
class CoreState:
    core_id: int
    # head of the queue is the *last* element, so splicing is append-only
    event_queue: list = field(default_factory=list)
    timestamp: int = 0
    counts: list = field(default_factory=lambda: [0] * len(KINDS))
    cycles: list = field(default_factory=lambda: [0] * len(KINDS))
    lock_cycles: int = 0
    completed_cycles: int = 0
    # when the core went off the heap (spinning or parked), else None
    asleep_since: int | None = None
    park_done: int = 0
    pending_mode: WaitMode = WaitMode.SPIN_BROADCAST

    @property
    def head(self) -> Event | None:
        return self.event_queue[-1] if self.event_queue else None


@dataclass
class LockState:
    lock_id: str
    bank: int
    waiters: deque = field(default_factory=deque)
    modes: dict = field(default_factory=dict)
    # cores parked before taking a ticket
    parked: set = field(default_factory=set)
    # completion time of the latest release store
    free_at: int = 0


@dataclass
class BankState:
    bank_id: int
    last_access_end: int = 0


@dataclass
class SimResult:
    cores_used: int
    total_ticks: int
    window: int
    throughput: float
    speedup_basis: float
    completed: int
    per_core_lock_wait_fraction: list[float]
    event_counts: dict[str, int]
    event_cycles: dict[str, int]
    lock_queue_len_trace: list[tuple[int, ...]]
    bank_queue_len_trace: list[tuple[int, ...]]
    events_handled: int
    log: list | None = None

    @property
    def mean_lock_wait_fraction(self) -> float:
        return math.fsum(self.per_core_lock_wait_fraction) / len(self.per_core_lock_wait_fraction)

    def spin_lockmiss_share(self) -> float:
        total = sum(self.event_counts.values())
        if not total:
            return 0.0
        return (self.event_counts["SPIN"] + self.event_counts["LOCK_MISS"]) / total

    def mean_lock_queue(self) -> float:
        return _trace_mean(self.lock_queue_len_trace)

    def max_lock_queue(self) -> int:
        return max((max(s) for s in self.lock_queue_len_trace if s), default=0)

    def mean_bank_queue(self) -> float:
        return _trace_mean(self.bank_queue_len_trace)

    def max_bank_queue(self) -> int:
        return max((max(s) for s in self.bank_queue_len_trace if s), default=0)


def _trace_mean(trace) -> float:
    values = [v for sample in trace for v in sample]
    return math.fsum(values) / len(values) if values else 0.0


class Simulator:
    """One simulation run. Build it, then call :meth:`run`."""

    def __init__(
        self,
        platform: PlatformConfig,
        workload: WorkloadConfig,
        cores: int,
        policy: LockPolicy | None = None,
        max_ticks: int = DEFAULT_MAX_TICKS,
        seed: int = 0,
        *,
        log: bool = False,
        sample_every: int = DEFAULT_SAMPLE_EVERY,
        warmup_fraction: float = WARMUP_FRACTION,
    ):
        if not isinstance(cores, int) or cores < 1:
            raise ConfigError(f"cores must be a positive integer, got {cores!r}")
        if cores > platform.total_cores:
            raise ConfigError(f"{cores} cores requested but the platform has {platform.total_cores}")
        if max_ticks <= 0:
            raise ConfigError("max_ticks must be positive")
        workload.validate_for(platform)

        self.platform = platform
        self.workload = workload
        self.policy = policy if policy is not None else Ticket()
        self.max_ticks = max_ticks
        self.seed = seed
        self.latency = platform.mem_latency
        self.warmup = int(max_ticks * warmup_fraction)
        self.sample_every = sample_every
        self.next_sample = 0

        self.section_rng = stream(seed, SECTION_STREAM)
        self.bank_rng = stream(seed, BANK_STREAM)

        self.locks = {lid: LockState(lid, bank) for lid, bank in workload.locks.items()}
        self.banks = [BankState(b) for b in range(platform.memory_banks)]
        self.cores = [CoreState(c, [Event(ENTER_NC)]) for c in range(cores)]
        self.tick = 0
        self.heap = [(0, c) for c in range(cores)]
        heapq.heapify(self.heap)

        self.broadcasts = policies.broadcasts(self.policy)
        self.park_cost = policies.park_cost(self.policy)
        self.parks_outside = policies.parks_before_ticket(self.policy)
        self.sleeping: set[int] = set()

        # expansions are immutable, so each is built once, stored head-last
        self._nc = [tuple(reversed(expand_enter_nc(s))) for s in workload.non_critical]
        self._nc_cum = _cumulative(s.probability for s in workload.non_critical)
        self._cs = [tuple(reversed(expand_enter_c(s))) for s in workload.critical]
        self._cs_cum = _cumulative(s.probability for s in workload.critical)
        by_lock = {}
        for s in workload.critical:
            by_lock.setdefault(s.lock_id, s)
        self._exit = {lid: tuple(reversed(expand_exit_c(s))) for lid, s in by_lock.items()}
        self._lock_miss = {
            lid: Event(LOCK_MISS, lock=lid, bank=s.lock_bank, injected=True) for lid, s in by_lock.items()
        }

        self.lock_trace: list[tuple[int, ...]] = []
        self.bank_trace: list[tuple[int, ...]] = []
        self.events_handled = 0
        self.log: list | None = [] if log else None

    # -- main loop -------------------------------------------------------

    def poll_event(self) -> int:
        """Remove and return the core with the smallest timestamp (ties: lowest id)."""
        if not self.heap:
            raise EngineInvariantError("no schedulable core: every core is waiting")
        ts, cid = heapq.heappop(self.heap)
        if self.cores[cid].timestamp != ts:
            raise EngineInvariantError(f"core {cid} in heap with stale timestamp {ts}")
        return cid

    def update_tick(self) -> int:
        """Advance the clock to the heap root's timestamp."""
        if not self.heap:
            raise EngineInvariantError("no schedulable core: every core is waiting")
        ts = self.heap[0][0]
        if ts < self.tick:
            raise EngineInvariantError(f"clock would move backwards from {self.tick} to {ts}")
        self.tick = ts
        while self.next_sample <= ts and self.next_sample < self.max_ticks:
            self._sample()
            self.next_sample += self.sample_every
        return ts

    def run(self) -> SimResult:
        heap = self.heap
        handle = self.handle_event
        push = heapq.heappush
        pop = heapq.heappop
        cores = self.cores
        max_ticks = self.max_ticks
        self.update_tick()
        while self.tick < max_ticks:
            ts, cid = pop(heap)
            core = cores[cid]
            if core.timestamp != ts:
                raise EngineInvariantError(f"core {cid} in heap with stale timestamp {ts}")
            handle(core)
            if core.timestamp != INVALID:
                push(heap, (core.timestamp, cid))
            self.update_tick()
        return self._result()

    # -- event handling --------------------------------------------------

    def _attribute(self, core: CoreState, kind: int, start: int, end: int, lock_time: bool) -> None:
        lo = start if start > self.warmup else self.warmup
        hi = end if end < self.max_ticks else self.max_ticks
        if hi > lo:
            core.cycles[kind] += hi - lo
            if lock_time:
                core.lock_cycles += hi - lo

    def _memory(self, bank: int, now: int) -> int:
        b = self.banks[bank]
        start = b.last_access_end if b.last_access_end > now else now
        done = start + self.latency
        b.last_access_end = done
        return done

    def _select(self, cum, rng) -> int:
        return bisect.bisect_right(cum, rng.random() * cum[-1]) if len(cum) > 1 else 0

    def handle_event(self, core: CoreState) -> None:
        queue = core.event_queue
        ev = queue.pop()
        kind = ev.kind
        now = core.timestamp
        cid = core.core_id
        counted = now >= self.warmup
        self.events_handled += 1
        log = self.log

        if kind is INSTRUCTION:
            core.timestamp = end = now + ev.duration
            self._attribute(core, kind, now, end, ev.injected)
            if log is not None:
                log.append((now, cid, kind, end, ev.lock, "wake" if ev.injected else None))

        elif kind is CACHE_MISS:
            bank = self.bank_rng.below(len(self.banks))
            core.timestamp = end = self._memory(bank, now)
            self._attribute(core, kind, now, end, False)
            if log is not None:
                log.append((now, cid, kind, end, bank, None))

        elif kind is LOCK_MISS:
            core.timestamp = end = self._memory(ev.bank, now)
            self._attribute(core, kind, now, end, ev.injected)
            if log is not None:
                log.append((now, cid, kind, end, ev.bank, ev.lock))

        elif kind is STORE:
            lock = self.locks[ev.lock]
            if queue and queue[-1].kind is SPIN:
                mode = policies.on_acquire_attempt(self.policy, lock.waiters, cid)
                if mode is WaitMode.PARKED and self.parks_outside:
                    # park before taking a ticket; the store is retried on wake-up
                    queue.append(ev)
                    lock.parked.add(cid)
                    self._sleep(core, now)
                    if log is not None:
                        log.append((now, cid, None, INVALID, ev.lock, "park"))
                    return
                core.pending_mode = mode
                core.timestamp = end = self._memory(ev.bank, now)
                self._attribute(core, kind, now, end, False)
                if log is not None:
                    log.append((now, cid, kind, end, ev.bank, "ticket", ev.lock))
            else:
                if not lock.waiters or lock.waiters[0] != cid:
                    raise EngineInvariantError(f"core {cid} releases lock {lock.lock_id} it does not hold")
                core.timestamp = end = self._memory(ev.bank, now)
                self._attribute(core, kind, now, end, False)
                lock.waiters.popleft()
                del lock.modes[cid]
                lock.free_at = end
                if counted and end <= self.max_ticks:
                    core.completed_cycles += 1
                if log is not None:
                    log.append((now, cid, kind, end, ev.bank, "release", ev.lock))
                if self.broadcasts:
                    self._broadcast(lock, cid, now)
                for woken, cost in policies.on_release(self.policy, lock, cid, self.sleeping, len(self.cores)):
                    self._wake(self.cores[woken], lock, cost, now)

        elif kind is SPIN:
            lock = self.locks[ev.lock]
            if cid not in lock.modes:
                # the ticket store has completed: join the FIFO
                lock.modes[cid] = core.pending_mode
                lock.waiters.append(cid)
                if log is not None:
                    log.append((now, cid, None, now, ev.lock, "enqueue"))
                if self.broadcasts:
                    self._broadcast(lock, cid, now)
            if lock.waiters[0] == cid:
                # a release store still in flight keeps the lock busy
                end = lock.free_at if lock.free_at > now else now
                core.timestamp = end
                self._attribute(core, kind, now, end, True)
                if log is not None:
                    log.append((now, cid, kind, end, ev.lock, "acquire"))
            else:
                queue.append(ev)
                mode = lock.modes[cid]
                if mode is WaitMode.PARKED:
                    core.park_done = now + self.park_cost
                if mode is not WaitMode.SPIN_BROADCAST:
                    self.sleeping.add(cid)
                self._sleep(core, now)
                if log is not None:
                    log.append((now, cid, kind, INVALID, ev.lock, mode.value))

        elif kind is ENTER_NC:
            queue.extend(self._nc[self._select(self._nc_cum, self.section_rng)])
            if log is not None:
                log.append((now, cid, kind, now, None, None))

        elif kind is ENTER_C:
            queue.extend(self._cs[self._select(self._cs_cum, self.section_rng)])
            if log is not None:
                log.append((now, cid, kind, now, None, None))

        elif kind is EXIT_C:
            queue.extend(self._exit[ev.lock])
            if log is not None:
                log.append((now, cid, kind, now, ev.lock, None))

        else:  # pragma: no cover
            raise EngineInvariantError(f"unknown event {ev!r}")

        if counted:
            core.counts[kind] += 1

    def _broadcast(self, lock: LockState, writer: int, now: int) -> None:
        """Every other spinning waiter re-reads the lock word: one LOCK_MISS each."""
        miss = self._lock_miss[lock.lock_id]
        modes = lock.modes
        cores = self.cores
        for cid in lock.waiters:
            if cid == writer or modes[cid] is not WaitMode.SPIN_BROADCAST:
                continue
            other = cores[cid]
            q = other.event_queue
            if q and q[-1].kind is SPIN:
                q.append(miss)
                if other.timestamp == INVALID:
                    self._resume(other, now)

    def _wake(self, core: CoreState, lock: LockState, cost: int, now: int) -> None:
        q = core.event_queue
        cid = core.core_id
        if core.timestamp != INVALID:
            raise EngineInvariantError(f"woken core {cid} is not asleep")
        if cid in lock.parked:
            # retry the ticket store once the wake-up has propagated
            lock.parked.discard(cid)
            if cost:
                q.append(Event(INSTRUCTION, cost, lock=lock.lock_id, injected=True))
        else:
            extra = cost + max(core.park_done - now, 0)
            q.append(self._lock_miss[lock.lock_id])
            if extra:
                q.append(Event(INSTRUCTION, extra, lock=lock.lock_id, injected=True))
            self.sleeping.discard(cid)
        self._resume(core, now)
        if self.log is not None:
            self.log.append((now, cid, None, now, lock.lock_id, "woken", cost))

    def _sleep(self, core: CoreState, now: int) -> None:
        core.timestamp = INVALID
        core.asleep_since = now

    def _resume(self, core: CoreState, now: int) -> None:
        self._attribute(core, SPIN, core.asleep_since, now, True)
        core.asleep_since = None
        core.timestamp = now
        heapq.heappush(self.heap, (now, core.core_id))

    # -- reporting -------------------------------------------------------

    def _sample(self) -> None:
        t = self.next_sample
        self.lock_trace.append(tuple(len(lock.waiters) for lock in self.locks.values()))
        lat = self.latency
        if lat:
            self.bank_trace.append(tuple(max(-(-(b.last_access_end - t) // lat), 0) for b in self.banks))
        else:
            self.bank_trace.append(tuple(0 for _ in self.banks))

    def _result(self) -> SimResult:
        window = self.max_ticks - self.warmup
        fractions = []
        for core in self.cores:
            if core.asleep_since is not None:
                self._attribute(core, SPIN, core.asleep_since, self.max_ticks, True)
                core.asleep_since = self.max_ticks
            fractions.append(min(core.lock_cycles / window, 1.0))
        completed = sum(c.completed_cycles for c in self.cores)
        aggregate = completed / window
        counts = {k.name: sum(c.counts[k] for c in self.cores) for k in KINDS}
        cycles = {k.name: sum(c.cycles[k] for c in self.cores) for k in KINDS}
        return SimResult(
            cores_used=len(self.cores),
            total_ticks=self.tick,
            window=window,
            throughput=aggregate / len(self.cores),
            speedup_basis=aggregate,
            completed=completed,
            per_core_lock_wait_fraction=fractions,
            event_counts=counts,
            event_cycles=cycles,
            lock_queue_len_trace=self.lock_trace,
            bank_queue_len_trace=self.bank_trace,
            events_handled=self.events_handled,
            log=self.log,
        )


def _cumulative(probs) -> list[float]:
    return list(itertools.accumulate(probs))


def run(
    platform: PlatformConfig,
    workload: WorkloadConfig,
    cores: int,
    policy: LockPolicy | None = None,
    max_ticks: int = DEFAULT_MAX_TICKS,
    seed: int = 0,
    **kwargs,
) -> SimResult:
    """Simulate ``cores`` cores for ``max_ticks`` cycles and summarize."""
    return Simulator(platform, workload, cores, policy, max_ticks, seed, **kwargs).run()

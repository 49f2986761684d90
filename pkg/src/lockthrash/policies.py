"""Lock-waiting policies layered on the engine's FIFO lock queues.

Every policy keeps the same queue discipline, so mutual exclusion and FIFO
order never depend on the policy. What differs is how a waiter burns time:
spinning on the shared lock word (and paying a coherence miss on every
queue change), parking until woken, or spinning on a private flag.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

DEFAULT_THRESHOLD = 0
DEFAULT_WAKE_COST = 380
DEFAULT_CTX_SWITCH_COST = 11624


class WaitMode(enum.Enum):
    SPIN_BROADCAST = "spin"
    PARKED = "parked"
    LOCAL_SPIN = "local"


@dataclass(frozen=True)
class Ticket:
    name = "ticket"


@dataclass(frozen=True)
class RequesterThreshold:
    """Spin while at most ``threshold`` cores already wait, otherwise park."""

    threshold: float = DEFAULT_THRESHOLD
    wake_cost: int = DEFAULT_WAKE_COST
    name = "requester"

    def __post_init__(self):
        if self.threshold < 0 or self.wake_cost < 0:
            raise ValueError("threshold and wake_cost must be non-negative")


@dataclass(frozen=True)
class Blocking:
    ctx_switch_cost: int = DEFAULT_CTX_SWITCH_COST
    name = "blocking"

    def __post_init__(self):
        if self.ctx_switch_cost < 0:
            raise ValueError("ctx_switch_cost must be non-negative")


@dataclass(frozen=True)
class LocalSpin:
    notify_cost: int = 0
    name = "localspin"

    def __post_init__(self):
        if self.notify_cost < 0:
            raise ValueError("notify_cost must be non-negative")


LockPolicy = Ticket | RequesterThreshold | Blocking | LocalSpin


def on_acquire_attempt(policy: LockPolicy, queue, core: int) -> WaitMode:
    """Wait mode for ``core`` about to take a ticket on a lock whose FIFO is ``queue``."""
    if isinstance(policy, Ticket):
        return WaitMode.SPIN_BROADCAST
    if isinstance(policy, RequesterThreshold):
        # outstanding tickets (next - owner) include the holder, so a busy
        # lock with threshold 0 parks the newcomer at once
        if len(queue) > policy.threshold:
            return WaitMode.PARKED
        return WaitMode.SPIN_BROADCAST
    if isinstance(policy, Blocking):
        return WaitMode.PARKED
    if isinstance(policy, LocalSpin):
        return WaitMode.LOCAL_SPIN
    raise TypeError(f"unknown lock policy {policy!r}")


def broadcasts(policy: LockPolicy) -> bool:
    """Whether writes to the lock word invalidate every spinning waiter."""
    return isinstance(policy, (Ticket, RequesterThreshold))


def parks_before_ticket(policy: LockPolicy) -> bool:
    """Parked cores wait outside the ticket FIFO and retry the acquire when woken."""
    return isinstance(policy, RequesterThreshold)


def park_cost(policy: LockPolicy) -> int:
    return policy.ctx_switch_cost if isinstance(policy, Blocking) else 0


def on_release(policy: LockPolicy, lock, releaser: int, sleeping, ncores: int) -> list[tuple[int, int]]:
    """Wake actions ``(core, extra_cost)`` after ``releaser`` has left ``lock``.

    ``lock`` exposes ``waiters`` (the ticket FIFO, holder gone), ``modes`` and
    ``parked`` (cores waiting outside the FIFO). ``sleeping`` holds cores that
    are off the scheduler inside the FIFO. Broadcast misses to spinning
    waiters are the engine's job, not a wake action.
    """
    if isinstance(policy, RequesterThreshold):
        if not lock.parked:
            return []
        # first non-empty per-CPU wait list after the releaser's CPU
        woken = min(lock.parked, key=lambda c: (c - releaser - 1) % ncores)
        return [(woken, policy.wake_cost)]
    if not lock.waiters:
        return []
    head = lock.waiters[0]
    if head not in sleeping:
        return []
    if isinstance(policy, Blocking):
        return [(head, policy.ctx_switch_cost)]
    if isinstance(policy, LocalSpin):
        return [(head, policy.notify_cost)]
    return []


def parse_policy(text: str) -> LockPolicy:
    """Parse ``ticket``, ``requester:<threshold>:<wake>``, ``blocking:<ctx>`` or ``localspin:<notify>``.

    Omitted numbers take their defaults; ``inf`` is accepted as a threshold.
    """
    name, *args = text.strip().lower().split(":")
    try:
        if name == "ticket" and not args:
            return Ticket()
        if name == "requester" and len(args) <= 2:
            threshold = float(args[0]) if args and args[0] else DEFAULT_THRESHOLD
            if math.isfinite(threshold):
                threshold = int(threshold)
            wake = int(args[1]) if len(args) > 1 else DEFAULT_WAKE_COST
            return RequesterThreshold(threshold, wake)
        if name == "blocking" and len(args) <= 1:
            return Blocking(int(args[0]) if args and args[0] else DEFAULT_CTX_SWITCH_COST)
        if name == "localspin" and len(args) <= 1:
            return LocalSpin(int(args[0]) if args and args[0] else 0)
    except ValueError as exc:
        raise ValueError(f"bad policy {text!r}: {exc}") from None
    raise ValueError(
        f"bad policy {text!r}; expected ticket | requester:<threshold>:<wake> | blocking:<ctx> | localspin:<notify>"
    )


def format_policy(policy: LockPolicy) -> str:
    if isinstance(policy, Ticket):
        return "ticket"
    if isinstance(policy, RequesterThreshold):
        t = "inf" if math.isinf(policy.threshold) else str(int(policy.threshold))
        return f"requester:{t}:{policy.wake_cost}"
    if isinstance(policy, Blocking):
        return f"blocking:{policy.ctx_switch_cost}"
    return f"localspin:{policy.notify_cost}"

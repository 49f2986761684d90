"""Checks over a simulator event log.

Log entries are tuples ``(now, core, kind, end, resource, note, *extra)``;
see ``Simulator.handle_event`` for what each kind records.
"""

from collections import defaultdict

from lockthrash.engine import INVALID
from lockthrash.model import EventKind

MEMORY_KINDS = (EventKind.CACHE_MISS, EventKind.LOCK_MISS, EventKind.STORE)


def _lock_of(entry):
    note = entry[5]
    if note in ("ticket", "release"):
        return entry[6]
    return entry[4]


def clock_monotone(log):
    return all(a[0] <= b[0] for a, b in zip(log, log[1:]))


def mutual_exclusion(log):
    """Per lock, acquire/release alternate and no acquire lands before the previous release completes."""
    holder, free_at = {}, defaultdict(int)
    for e in log:
        if e[5] == "acquire":
            lock = e[4]
            if holder.get(lock) is not None or e[3] < free_at[lock]:
                return False
            holder[lock] = e[1]
        elif e[5] == "release":
            lock = e[6]
            if holder.get(lock) != e[1]:
                return False
            holder[lock] = None
            free_at[lock] = e[3]
    return True


def fifo_order(log):
    enq, acq = defaultdict(list), defaultdict(list)
    for e in log:
        if e[5] == "enqueue":
            enq[e[4]].append(e[1])
        elif e[5] == "acquire":
            acq[e[4]].append(e[1])
    return all(acq[lock] == enq[lock][: len(acq[lock])] for lock in enq)


def conservation(log, ncores):
    counts = defaultdict(lambda: defaultdict(int))
    for e in log:
        if e[2] in (EventKind.ENTER_NC, EventKind.ENTER_C, EventKind.EXIT_C):
            counts[e[1]][e[2]] += 1
    for c in range(ncores):
        nc, ec, xc = (counts[c][k] for k in (EventKind.ENTER_NC, EventKind.ENTER_C, EventKind.EXIT_C))
        if not (nc - ec in (0, 1) and ec - xc in (0, 1) and nc - xc in (0, 1)):
            return False
    return True


def bank_serialized(log, latency):
    ends = defaultdict(list)
    for e in log:
        if e[2] in MEMORY_KINDS and e[3] != INVALID:
            if e[3] - e[0] < latency:
                return False
            ends[e[4]].append(e[3])
    for seq in ends.values():
        seq.sort()
        if any(b - a < latency for a, b in zip(seq, seq[1:])):
            return False
    return True


def parked_cores_silent(log):
    """No LOCK_MISS is handled by a core between parking and its wake-up."""
    parked = set()
    for e in log:
        cid = e[1]
        if e[5] in ("park", "parked", "local"):
            parked.add(cid)
        elif e[5] == "woken":
            parked.discard(cid)
        elif cid in parked:
            return False
    return True


def lock_miss_total(log):
    return sum(1 for e in log if e[2] == EventKind.LOCK_MISS)


def check_all(log, ncores, latency):
    return {
        "clock monotone": clock_monotone(log),
        "mutual exclusion": mutual_exclusion(log),
        "fifo acquisition": fifo_order(log),
        "conservation": conservation(log, ncores),
        "bank serialization": bank_serialized(log, latency),
        "parked cores silent": parked_cores_silent(log),
    }

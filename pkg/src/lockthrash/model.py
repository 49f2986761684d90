"""Domain types, the event grammar, and the YAML config format."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import yaml

PROB_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid platform or workload description."""


class Topology(str, enum.Enum):
    UMA = "UMA"
    NUMA = "NUMA"


class EventKind(enum.IntEnum):
    INSTRUCTION = 0
    STORE = 1
    ENTER_C = 2
    LOCK_MISS = 3
    CACHE_MISS = 4
    SPIN = 5
    EXIT_C = 6
    ENTER_NC = 7

    @property
    def atomic(self) -> bool:
        return self not in COMPOSITE


COMPOSITE = frozenset({EventKind.ENTER_C, EventKind.EXIT_C, EventKind.ENTER_NC})


class Event(NamedTuple):
    kind: EventKind
    duration: int = 0
    lock: str | None = None
    bank: int | None = None
    # set on lock-word misses and wake-ups caused by waiting, not by the grammar
    injected: bool = False

    def __repr__(self) -> str:
        if self.kind is EventKind.INSTRUCTION:
            return f"INSTRUCTION({self.duration})"
        return self.kind.name


@dataclass(frozen=True)
class PlatformConfig:
    chips: int
    cores_per_chip: int
    memory_banks: int
    mem_latency: int
    topology: Topology = Topology.NUMA

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        for name in ("chips", "cores_per_chip", "memory_banks"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"platform.{name} must be a positive integer, got {value!r}")
        if not isinstance(self.mem_latency, int) or self.mem_latency < 0:
            raise ConfigError(f"platform.mem_latency must be a non-negative integer, got {self.mem_latency!r}")
        if self.topology is Topology.UMA and self.memory_banks != 1:
            raise ConfigError("UMA platforms have exactly one memory bank")

    @property
    def total_cores(self) -> int:
        return self.chips * self.cores_per_chip

    def with_latency(self, mem_latency: int) -> PlatformConfig:
        return PlatformConfig(self.chips, self.cores_per_chip, self.memory_banks, mem_latency, self.topology)


@dataclass(frozen=True)
class SectionSpec:
    miss_interval: int
    miss_count: int
    probability: float

    def __post_init__(self):
        if not isinstance(self.miss_interval, int) or self.miss_interval < 0:
            raise ConfigError(f"interval must be a non-negative integer, got {self.miss_interval!r}")
        if not isinstance(self.miss_count, int) or self.miss_count < 0:
            raise ConfigError(f"misses must be a non-negative integer, got {self.miss_count!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError(f"prob must lie in [0, 1], got {self.probability!r}")

    def expected_cycles(self, mem_latency: int) -> float:
        """Uncontended length of the section body: instructions plus misses."""
        return (self.miss_count + 1) * self.miss_interval + self.miss_count * mem_latency


@dataclass(frozen=True)
class CriticalSectionSpec(SectionSpec):
    lock_id: str = "0"
    lock_bank: int = 0

    def __post_init__(self):
        super().__post_init__()
        if not isinstance(self.lock_bank, int) or self.lock_bank < 0:
            raise ConfigError(f"bank must be a non-negative integer, got {self.lock_bank!r}")


def _check_probabilities(specs, label):
    total = math.fsum(s.probability for s in specs)
    if abs(total - 1.0) > PROB_TOL:
        raise ConfigError(f"{label} probabilities sum to {total!r}, expected 1")


@dataclass(frozen=True)
class WorkloadConfig:
    non_critical: tuple[SectionSpec, ...]
    critical: tuple[CriticalSectionSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "non_critical", tuple(self.non_critical))
        object.__setattr__(self, "critical", tuple(self.critical))
        if not self.non_critical or not self.critical:
            raise ConfigError("a workload needs at least one critical and one non-critical section")
        _check_probabilities(self.non_critical, "non-critical")
        _check_probabilities(self.critical, "critical")
        banks: dict[str, int] = {}
        for cs in self.critical:
            if banks.setdefault(cs.lock_id, cs.lock_bank) != cs.lock_bank:
                raise ConfigError(f"lock {cs.lock_id!r} is placed on more than one bank")

    @property
    def locks(self) -> dict[str, int]:
        """Lock id -> bank, in first-appearance order."""
        out: dict[str, int] = {}
        for cs in self.critical:
            out.setdefault(cs.lock_id, cs.lock_bank)
        return out

    def validate_for(self, platform: PlatformConfig) -> None:
        for lock, bank in self.locks.items():
            if bank >= platform.memory_banks:
                raise ConfigError(
                    f"lock {lock!r} lives on bank {bank} but the platform has {platform.memory_banks} bank(s)"
                )


@dataclass(frozen=True)
class SimConfig:
    platform: PlatformConfig
    workload: WorkloadConfig
    name: str = ""

    def __post_init__(self):
        self.workload.validate_for(self.platform)


# -- event grammar -----------------------------------------------------------

def _body(interval: int, misses: int) -> list[Event]:
    work = Event(EventKind.INSTRUCTION, interval)
    miss = Event(EventKind.CACHE_MISS)
    return [work, miss] * misses + [work]


def expand_enter_c(spec: CriticalSectionSpec) -> list[Event]:
    """ENTER_C -> LOCK_MISS STORE SPIN (INSTRUCTION CACHE_MISS)* INSTRUCTION EXIT_C."""
    lock, bank = spec.lock_id, spec.lock_bank
    return [
        Event(EventKind.LOCK_MISS, lock=lock, bank=bank),
        Event(EventKind.STORE, lock=lock, bank=bank),
        Event(EventKind.SPIN, lock=lock, bank=bank),
        *_body(spec.miss_interval, spec.miss_count),
        Event(EventKind.EXIT_C, lock=lock, bank=bank),
    ]


def expand_exit_c(spec: CriticalSectionSpec) -> list[Event]:
    """EXIT_C -> LOCK_MISS STORE ENTER_NC, on the bank of the lock being released."""
    lock, bank = spec.lock_id, spec.lock_bank
    return [
        Event(EventKind.LOCK_MISS, lock=lock, bank=bank),
        Event(EventKind.STORE, lock=lock, bank=bank),
        Event(EventKind.ENTER_NC),
    ]


def expand_enter_nc(spec: SectionSpec) -> list[Event]:
    """ENTER_NC -> (INSTRUCTION CACHE_MISS)* INSTRUCTION ENTER_C.

    CACHE_MISS events carry no bank; the engine picks one when it handles them.
    """
    return [*_body(spec.miss_interval, spec.miss_count), Event(EventKind.ENTER_C)]


# -- config files ------------------------------------------------------------

def _section_from(entry: dict, critical: bool) -> SectionSpec:
    try:
        kwargs = dict(miss_interval=entry["interval"], miss_count=entry["misses"], probability=float(entry["prob"]))
        if critical:
            return CriticalSectionSpec(**kwargs, lock_id=str(entry["lock"]), lock_bank=entry["bank"])
        return SectionSpec(**kwargs)
    except KeyError as exc:
        raise ConfigError(f"section entry {entry!r} is missing key {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"bad section entry {entry!r}: {exc}") from None


def config_from_dict(data: dict, name: str = "") -> SimConfig:
    if not isinstance(data, dict) or "platform" not in data or "workload" not in data:
        raise ConfigError("config needs top-level 'platform' and 'workload' mappings")
    plat = data["platform"]
    try:
        platform = PlatformConfig(
            chips=plat["chips"],
            cores_per_chip=plat["cores_per_chip"],
            memory_banks=plat["memory_banks"],
            mem_latency=plat["mem_latency"],
            topology=plat.get("topology", "NUMA"),
        )
    except KeyError as exc:
        raise ConfigError(f"platform is missing key {exc}") from None
    wl = data["workload"]
    workload = WorkloadConfig(
        non_critical=[_section_from(e, False) for e in wl.get("noncritical", [])],
        critical=[_section_from(e, True) for e in wl.get("critical", [])],
    )
    return SimConfig(platform, workload, name=str(data.get("name", name)))


def config_to_dict(config: SimConfig) -> dict:
    p, w = config.platform, config.workload
    return {
        "name": config.name,
        "platform": {
            "chips": p.chips,
            "cores_per_chip": p.cores_per_chip,
            "memory_banks": p.memory_banks,
            "mem_latency": p.mem_latency,
            "topology": p.topology.value,
        },
        "workload": {
            "noncritical": [
                {"interval": s.miss_interval, "misses": s.miss_count, "prob": s.probability} for s in w.non_critical
            ],
            "critical": [
                {
                    "interval": s.miss_interval,
                    "misses": s.miss_count,
                    "prob": s.probability,
                    "lock": s.lock_id,
                    "bank": s.lock_bank,
                }
                for s in w.critical
            ],
        },
    }


def parse_config(text: str, name: str = "") -> SimConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return config_from_dict(data, name)


def dump_config(config: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)


def load_config(path: str | Path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, name=path.stem)


CONFIG_DIR = Path(__file__).parent / "configs"
BUNDLED = ("c1", "c2", "c3", "c4")


def bundled_config(name: str) -> SimConfig:
    """One of the shipped workloads c1..c4 on the 8x4 NUMA platform."""
    if name not in BUNDLED:
        raise ConfigError(f"unknown bundled config {name!r}; choose from {', '.join(BUNDLED)}")
    return load_config(CONFIG_DIR / f"{name}.yaml")


# Platforms used for the architecture comparison.
PLATFORMS = {
    "p1": PlatformConfig(chips=8, cores_per_chip=4, memory_banks=8, mem_latency=1),
    "p2": PlatformConfig(chips=32, cores_per_chip=1, memory_banks=32, mem_latency=1),
    "p3": PlatformConfig(chips=1, cores_per_chip=32, memory_banks=1, mem_latency=1),
}


def on_platform(config: SimConfig, platform: PlatformConfig) -> SimConfig:
    return SimConfig(platform, config.workload, name=config.name)


"""SplitMix64 random streams.

The engine never touches :mod:`random`; every draw comes from one of these
generators so a run is reproducible from its integer seed alone, across
Python versions and platforms.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# Stream ids mixed into the run seed.
SECTION_STREAM = 1
BANK_STREAM = 2


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Steele/Lea/Flood SplitMix64: state += golden gamma, output = mix(state)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return _mix(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by multiply-shift (Lemire, no rejection)."""
        return (self.next_u64() * n) >> 64


def stream(seed: int, stream_id: int) -> SplitMix64:
    """Derive an independent generator for ``stream_id`` from a run seed."""
    return SplitMix64(_mix((seed & MASK64) ^ _mix(stream_id * GOLDEN & MASK64)))

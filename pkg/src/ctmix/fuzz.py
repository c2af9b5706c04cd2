"""Havoc-style secret generation on a splitmix64 stream.

Round 0 is the base secret. Every later round starts from the base secret
and stacks ``k`` random mutations, ``k`` drawn from the configured range.
Each round seeds its own generator with ``splitmix64(seed ^ round)``, so any
round can be regenerated on its own and rounds may run in any order.
"""
from __future__ import annotations

from dataclasses import dataclass

M64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

INTERESTING = (0x00, 0x01, 0x7F, 0x80, 0xFF)
ARITH_MAX = 35

# mutation operators, drawn uniformly
BIT_FLIP, RANDOM_BYTE, ARITH, SWAP, BLOCK_COPY, INTERESTING_BYTE = range(6)
NUM_MUTATORS = 6


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def splitmix64(x: int) -> int:
    """First output of a splitmix64 generator seeded with ``x``."""
    return _mix((x + GOLDEN_GAMMA) & M64)


class Prng:
    """splitmix64 generator."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & M64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & M64
        return _mix(self.state)

    def below(self, n: int) -> int:
        """Value in ``[0, n)`` by multiply-shift of one 64-bit draw."""
        return (self.next() * n) >> 64


@dataclass(frozen=True)
class FuzzConfig:
    seed: int
    rounds: int
    base_secret: bytes
    mutations: tuple[int, int] = (1, 16)

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_secret", bytes(self.base_secret))
        object.__setattr__(self, "seed", self.seed & M64)
        if self.rounds < 2:
            raise ValueError("need at least 2 rounds to form a comparison pair")
        if not self.base_secret:
            raise ValueError("base secret must be non-empty")
        lo, hi = self.mutations
        # lo == 0 is allowed only so tests can force unmutated rounds
        if not 0 <= lo <= hi <= 16:
            raise ValueError(f"mutations per round must lie in [1, 16], got {self.mutations}")

    @property
    def secret_length(self) -> int:
        return len(self.base_secret)


def round_prng(seed: int, round_index: int) -> Prng:
    return Prng(splitmix64((seed ^ round_index) & M64))


def mutate(buf: bytearray, prng: Prng, count: int) -> bytearray:
    """Apply ``count`` havoc mutations to ``buf`` in place (length preserved)."""
    n = len(buf)
    for _ in range(count):
        kind = prng.below(NUM_MUTATORS)
        if kind == BIT_FLIP:
            bit = prng.below(8 * n)
            buf[bit >> 3] ^= 1 << (bit & 7)
        elif kind == RANDOM_BYTE:
            pos = prng.below(n)
            buf[pos] = prng.next() & 0xFF
        elif kind == ARITH:
            pos = prng.below(n)
            delta = 1 + prng.below(ARITH_MAX)
            if prng.below(2):
                delta = -delta
            buf[pos] = (buf[pos] + delta) & 0xFF
        elif kind == SWAP:
            i = prng.below(n)
            j = prng.below(n)
            buf[i], buf[j] = buf[j], buf[i]
        elif kind == BLOCK_COPY:
            size = 1 + prng.below(max(1, n // 4))
            src = prng.below(n - size + 1)
            dst = prng.below(n - size + 1)
            buf[dst:dst + size] = bytes(buf[src:src + size])
        else:
            pos = prng.below(n)
            buf[pos] = INTERESTING[prng.below(len(INTERESTING))]
    return buf


def next_secret(cfg: FuzzConfig, round_index: int) -> bytes:
    if not 0 <= round_index < cfg.rounds:
        raise IndexError(f"round {round_index} outside [0, {cfg.rounds})")
    if round_index == 0:
        return cfg.base_secret
    prng = round_prng(cfg.seed, round_index)
    lo, hi = cfg.mutations
    count = lo + prng.below(hi - lo + 1)
    return bytes(mutate(bytearray(cfg.base_secret), prng, count))


def secrets(cfg: FuzzConfig) -> list[bytes]:
    return [next_secret(cfg, r) for r in range(cfg.rounds)]

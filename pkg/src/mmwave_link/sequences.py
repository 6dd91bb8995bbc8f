"""Degree-5 m-sequences and the Gold pair behind the preamble and scrambler words."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEGREE = 5
PERIOD = 2 ** DEGREE - 1

PREAMBLE_POLY = (5, 2, 0)          # x^5 + x^2 + 1
SCRAMBLER_POLY = (5, 4, 3, 2, 0)   # x^5 + x^4 + x^3 + x^2 + 1
SEED_ALL_ONES = 0b11111


def generate_msequence(poly: tuple[int, ...], seed: int) -> np.ndarray:
    """One period of the LFSR sequence for ``poly`` (exponent tuple).

    The sequence obeys a[n+5] = XOR of a[n+k] for every lower exponent k of
    the polynomial. ``seed`` loads a[0..4], most significant bit first.
    """
    if max(poly) != DEGREE or 0 not in poly:
        raise ValueError(f"need a degree-{DEGREE} polynomial with constant term, got {poly}")
    if not 0 < seed < 2 ** DEGREE:
        raise ValueError("seed must be a nonzero 5-bit state")
    taps = [k for k in poly if k != DEGREE]
    a = [(seed >> (DEGREE - 1 - i)) & 1 for i in range(DEGREE)]
    while len(a) < PERIOD + DEGREE:
        n = len(a) - DEGREE
        bit = 0
        for k in taps:
            bit ^= a[n + k]
        a.append(bit)
    states = {tuple(a[n:n + DEGREE]) for n in range(PERIOD)}
    if len(states) != PERIOD:
        raise ValueError(f"polynomial {poly} is not primitive")
    return np.array(a[:PERIOD], dtype=np.uint8)


@dataclass(frozen=True)
class PnSequence:
    chips: tuple[int, ...]
    extension_bit: int

    @classmethod
    def from_chips(cls, chips) -> "PnSequence":
        chips = tuple(int(c) for c in chips)
        # pick the extra bit that leaves the 32-bit word with 16 ones
        ext = 1 if sum(chips) < 16 else 0
        return cls(chips, ext)

    @property
    def bits(self) -> np.ndarray:
        return np.array(self.chips + (self.extension_bit,), dtype=np.uint8)

    @property
    def word(self) -> bytes:
        return np.packbits(self.bits).tobytes()


@dataclass(frozen=True)
class GoldPair:
    preamble: PnSequence
    scrambler: PnSequence


@lru_cache(maxsize=None)
def build_gold_pair() -> GoldPair:
    return GoldPair(
        preamble=PnSequence.from_chips(generate_msequence(PREAMBLE_POLY, SEED_ALL_ONES)),
        scrambler=PnSequence.from_chips(generate_msequence(SCRAMBLER_POLY, SEED_ALL_ONES)),
    )


GOLD = build_gold_pair()
PREAMBLE_WORD = GOLD.preamble.word
SCRAMBLER_WORD = GOLD.scrambler.word
PREAMBLE_BITS = GOLD.preamble.bits

"""Tree parameters and height generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def ceil_log(base: int, x: int) -> int:
    """Smallest h >= 0 with base**h >= x (exact integer arithmetic)."""
    h, p = 0, 1
    while p < x:
        p *= base
        h += 1
    return h


def ceil_loglog(base: int, x: int) -> int:
    """Smallest h >= 0 with base**(base**h) >= x."""
    h = 0
    while base ** (base ** h) < x:
        h += 1
    return h


@dataclass(frozen=True)
class TreeConfig:
    """Shape of a PIM-tree.

    ``h_l1``/``h_l2`` default to the derived values; ``h_l2`` is floored at
    2 so that the L2 layer always has a shadow-carrying level (see README).
    """

    P: int = 64
    B: int = 16
    h_l1: int | None = None
    h_l2: int | None = None
    imbalance_factor: float = 3.0
    seed: int = 0
    accounting: str = "unpadded"
    min_h_l2: int = 2
    H_L1: int = field(init=False)
    H_L2: int = field(init=False)

    def __post_init__(self):
        if self.P < 1 or self.B < 2:
            raise ValueError("need P >= 1 and B >= 2")
        h1 = self.h_l1 if self.h_l1 is not None else max(1, ceil_loglog(self.B, self.P))
        h2 = self.h_l2 if self.h_l2 is not None else max(self.min_h_l2, ceil_log(self.B, self.P) - h1)
        if h1 < 1 or h2 < 1:
            raise ValueError("layer heights must be >= 1")
        object.__setattr__(self, "H_L1", h1)
        object.__setattr__(self, "H_L2", h2)

    @property
    def K_L2(self) -> int:
        return self.B * self.H_L2

    @property
    def K_L1(self) -> int:
        return self.B

    @property
    def lower_height(self) -> int:
        """Levels held in L1 + L2; keys taller than this also live in L3."""
        return self.H_L1 + self.H_L2

    @property
    def s_min(self) -> int:
        """Batch size from which load balance is expected."""
        return int(self.P * math.log2(max(self.P, 2)) * self.B * self.H_L2)


def generate_heights(rng: np.random.Generator, B: int, count: int) -> list[int]:
    """Geometric heights: P[h >= k+1 | h >= k] = 1/B."""
    if count == 0:
        return []
    return rng.geometric(1.0 - 1.0 / B, size=count).tolist()


def check_balance(loads, factor: float = 3.0) -> bool:
    """True iff max(loads) <= factor * mean(loads)."""
    loads = list(loads)
    if not loads:
        return True
    total = sum(loads)
    return max(loads) * len(loads) <= factor * total

"""Pure-Python versions of the batch kernels (reference and fallback)."""

from __future__ import annotations

from typing import Sequence

MASK64 = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def hash_modules(keys: Sequence[int], P: int) -> list[int]:
    """Home module of each key's data node."""
    return [splitmix64(k) % P for k in keys]


def tally(mods: Sequence[int], weights: Sequence[int] | None, P: int) -> list[int]:
    out = [0] * P
    if weights is None:
        for m in mods:
            out[m] += 1
    else:
        for m, w in zip(mods, weights):
            out[m] += w
    return out


def merge_intervals(lefts: Sequence[int], rights: Sequence[int]):
    """Coalesce closed intervals.

    Sorts by left end and keeps a running max of right ends.  Returns
    ``(starts, ends, group)``: sorted, pairwise disjoint merged intervals
    and, for each input ``j``, the index of the merged interval holding it.
    """
    n = len(lefts)
    order = sorted(range(n), key=lambda j: (lefts[j], rights[j]))
    starts: list[int] = []
    ends: list[int] = []
    group = [0] * n
    reach = -1
    for j in order:
        lo, hi = lefts[j], rights[j]
        if not starts or lo > reach:
            starts.append(lo)
            ends.append(hi)
            reach = hi
        elif hi > reach:
            reach = hi
            ends[-1] = hi
        group[j] = len(starts) - 1
    return starts, ends, group


def fnv1a(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def wiki_key(word: str, doc_id: int) -> int:
    if not 0 <= doc_id < (1 << 23):
        raise ValueError(f"doc id {doc_id} does not fit in 23 bits")
    w = word.lower()
    key = 0
    for i in range(5):
        c = w[i] if i < len(w) else ""
        code = ord(c) - 96 if c and "a" <= c <= "z" else 0
        key = (key << 5) | code
    h = fnv1a(w.encode("utf-8")) & 0x7FFF
    return (((key << 15) | h) << 23) | doc_id

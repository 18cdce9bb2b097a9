"""Brute-force reference index on a sorted map.

It shares no traversal code with the simulated indexes.  Heights are
supplied by the caller so that per-level key sets can be compared exactly.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from sortedcontainers import SortedDict

from .workloads import OpBatch


class Oracle:
    def __init__(self):
        self.map: SortedDict = SortedDict()  # key -> (value, height)

    def __len__(self) -> int:
        return len(self.map)

    def insert(self, pairs: Iterable[tuple[int, int]], heights: Sequence[int] | None = None) -> None:
        pairs = list(pairs)
        hs = heights if heights is not None else [1] * len(pairs)
        # the batch is combined first: the last occurrence of a key wins
        latest = {k: (v, h) for (k, v), h in zip(pairs, hs)}
        for k, (v, h) in latest.items():
            old = self.map.get(k)
            self.map[k] = (v, old[1] if old else int(h))

    def delete(self, keys: Iterable[int]) -> None:
        for k in keys:
            self.map.pop(k, None)

    def get(self, keys: Iterable[int]) -> list:
        out = []
        for k in keys:
            e = self.map.get(k)
            out.append(None if e is None else e[0])
        return out

    def update(self, pairs: Iterable[tuple[int, int]]) -> list[bool]:
        pairs = list(pairs)
        for k, v in pairs:
            if k in self.map:
                self.map[k] = (v, self.map[k][1])
        return [k in self.map for k, _ in pairs]

    def predecessor(self, keys: Iterable[int]) -> list:
        out = []
        m = self.map
        for q in keys:
            i = m.bisect_right(q)
            if i == 0:
                out.append(None)
            else:
                k = m.keys()[i - 1]
                out.append((k, m[k][0]))
        return out

    def scan(self, ranges: Iterable[tuple[int, int]]) -> list:
        out = []
        for l, r in ranges:
            if not 0 <= l <= r < 1 << 64:
                out.append(None)
                continue
            out.append([(k, self.map[k][0]) for k in self.map.irange(l, r)])
        return out

    def level_keys(self, level: int) -> list[int]:
        return [k for k, (_, h) in self.map.items() if h >= level]

    def replay(self, batch: OpBatch, heights: Sequence[int] | None = None):
        """Apply one batch; returns what a query batch should answer."""
        kind = batch.op
        if kind == "get":
            return self.get(batch.keys)
        if kind == "predecessor":
            return self.predecessor(batch.keys)
        if kind == "scan":
            return self.scan(zip(batch.keys, batch.values))
        if kind == "update":
            return self.update(zip(batch.keys, batch.values))
        if kind == "insert":
            return self.insert(zip(batch.keys, batch.values), heights)
        if kind == "delete":
            return self.delete(batch.keys)
        raise ValueError(f"unknown op {kind!r}")

"""Range-partitioned competitor: module m owns keys in [split[m-1], split[m]).

Each module keeps a local sorted index plus a hash map for point lookups.
Splits are fixed once from the warm-up keys and never rebalanced.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Sequence

from sortedcontainers import SortedList

from .pim_model import Buffer, PimMachine, make_ptr
from .pim_tree.batching import Round, check_key

LOCAL_ADDR = 0
ENTRY_WORDS = 2  # memory charged per stored key (key + value)

GET, UPDATE, PRED, MAX, INSERT, DELETE, SCAN = range(7)


class LocalIndex:
    __slots__ = ("keys", "values")

    def __init__(self):
        self.keys = SortedList()
        self.values: dict[int, int] = {}


def _program(mod, tasks):
    out = Buffer()
    if not tasks:
        return out
    idx: LocalIndex = mod.load(make_ptr(mod.id, LOCAL_ADDR))
    keys, values = idx.keys, idx.values
    words = 0
    for t in tasks:
        code = t[0]
        if code == GET:
            out.append(values.get(t[1]))
            words += 1
        elif code == UPDATE:
            ok = t[1] in values
            if ok:
                values[t[1]] = t[2]
            out.append(ok)
            words += 1
        elif code == PRED:
            i = keys.bisect_right(t[1])
            if i:
                k = keys[i - 1]
                out.append((k, values[k]))
                words += 2
            else:
                out.append(None)
                words += 1
        elif code == MAX:
            if keys:
                k = keys[-1]
                out.append((k, values[k]))
                words += 2
            else:
                out.append(None)
                words += 1
        elif code == INSERT:
            k = t[1]
            if k not in values:
                mod.charge(ENTRY_WORDS)
                keys.add(k)
            values[k] = t[2]
            out.append(None)
        elif code == DELETE:
            if t[1] in values:
                del values[t[1]]
                keys.remove(t[1])
                mod.used_words -= ENTRY_WORDS
            out.append(None)
        else:
            rows = [(k, values[k]) for k in keys.irange(t[1], t[2])]
            out.append(rows)
            words += 2 * len(rows)
    out.words = words
    return out


def equal_count_splits(keys: Iterable[int], P: int) -> list[int]:
    """P-1 strictly increasing boundaries splitting ``keys`` into equal counts."""
    ks = sorted(set(keys))
    n = len(ks)
    out: list[int] = []
    for m in range(1, P):
        if n == 0:
            break
        b = ks[min(m * n // P, n - 1)]
        if not out or b > out[-1]:
            out.append(b)
    return out


def capacity_for(total_keys: int, P: int, factor: float) -> int:
    """Per-module capacity in words: ``factor`` times the fair share."""
    return int(factor * ENTRY_WORDS * total_keys / P) + ENTRY_WORDS


class RangePartitionedIndex:
    name = "range"

    def __init__(self, P: int = 64, accounting: str = "unpadded", capacity_words: int | None = None,
                 splits: Sequence[int] | None = None):
        self.P = P
        self.machine = PimMachine(P, accounting, capacity_words)
        self.splits: list[int] = list(splits) if splits is not None else []
        self._fixed = splits is not None
        with self.machine.inspect() as m:
            for mod in m.modules:
                mod.alloc(LocalIndex())

    def owner(self, key: int) -> int:
        return bisect_right(self.splits, key)

    def fit_splits(self, keys: Iterable[int]) -> None:
        if self._fixed:
            raise RuntimeError("splits are already fixed")
        self.splits = equal_count_splits(keys, self.P)
        self._fixed = True

    def _run(self, rnd: Round):
        if not rnd:
            return [[] for _ in range(self.P)]
        return self.machine.run_round(rnd.tasks, _program)

    def get_batch(self, keys: Iterable[int]) -> list[int | None]:
        ks = [check_key(k) for k in keys]
        uniq = list(dict.fromkeys(ks))
        rnd = Round(self.P)
        for k in uniq:
            rnd.add(self.owner(k), (GET, k), 2, k)
        found = dict(rnd.results(self._run(rnd)))
        return [found[k] for k in ks]

    def update_batch(self, pairs: Iterable[tuple[int, int]]) -> list[bool]:
        pairs = [(check_key(k), int(v)) for k, v in pairs]
        latest = dict(pairs)
        rnd = Round(self.P)
        for k, v in latest.items():
            rnd.add(self.owner(k), (UPDATE, k, v), 3, k)
        ok = dict(rnd.results(self._run(rnd)))
        return [ok[k] for k, _ in pairs]

    def predecessor_batch(self, queries: Iterable[int]) -> list[tuple[int, int] | None]:
        qs = [check_key(q) for q in queries]
        uniq = list(dict.fromkeys(qs))
        rnd = Round(self.P)
        for q in uniq:
            rnd.add(self.owner(q), (PRED, q), 2, q)
        ans = {}
        miss: dict[int, list[int]] = {}
        for q, r in rnd.results(self._run(rnd)):
            if r is None and self.owner(q) > 0:
                miss.setdefault(self.owner(q) - 1, []).append(q)
            else:
                ans[q] = r
        # a miss falls back to the maximum of the nearest non-empty module on the left
        while miss:
            rnd = Round(self.P)
            for m in miss:
                rnd.add(m, (MAX,), 1, m)
            nxt: dict[int, list[int]] = {}
            for m, r in rnd.results(self._run(rnd)):
                if r is None and m > 0:
                    nxt.setdefault(m - 1, []).extend(miss[m])
                else:
                    for q in miss[m]:
                        ans[q] = r
            miss = nxt
        return [ans[q] for q in qs]

    def insert_batch(self, pairs: Iterable[tuple[int, int]], heights=None) -> None:
        latest = {check_key(k): int(v) for k, v in pairs}
        if not latest:
            return
        if not self._fixed:
            self.fit_splits(latest)
        rnd = Round(self.P)
        for k in sorted(latest):
            rnd.add(self.owner(k), (INSERT, k, latest[k]), 3)
        self._run(rnd)

    def delete_batch(self, keys: Iterable[int]) -> None:
        rnd = Round(self.P)
        for k in sorted({check_key(k) for k in keys}):
            rnd.add(self.owner(k), (DELETE, k), 2)
        self._run(rnd)

    def fragments(self, l: int, r: int) -> list[tuple[int, int, int]]:
        """(module, lo, hi) pieces of [l, r] cut at the range splits."""
        out = []
        m = self.owner(l)
        lo = l
        while True:
            end = self.splits[m] - 1 if m < len(self.splits) else r
            if end >= r:
                out.append((m, lo, r))
                return out
            out.append((m, lo, end))
            lo = end + 1
            m += 1

    def scan_batch(self, ranges: Iterable[tuple[int, int]]) -> list[list[tuple[int, int]] | None]:
        ranges = [(int(l), int(r)) for l, r in ranges]
        out: list = [None] * len(ranges)
        rnd = Round(self.P)
        for j, (l, r) in enumerate(ranges):
            if 0 <= l <= r < 1 << 64:
                out[j] = []
                for m, lo, hi in self.fragments(l, r):
                    rnd.add(m, (SCAN, lo, hi), 3, j)
        for j, rows in rnd.results(self._run(rnd)):
            out[j].extend(rows)
        return out

    def module_sizes(self) -> list[int]:
        with self.machine.inspect() as m:
            return [len(mod.load(make_ptr(mod.id, LOCAL_ADDR)).keys) for mod in m.modules]

"""Batched range scans."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from typing import Iterable, Sequence

from ..kernels import merge_intervals, tally
from ..pim_model import PTR_SHIFT
from . import program as op
from .batching import Round
from .config import check_balance
from .layout import KEY_LIMIT, entry_words
from .program import FETCH_ALL, SEARCH, expand_range

SPLIT_FACTOR = 16


def plan_ranges(ranges: Sequence[tuple[int, int]], split_factor: float = SPLIT_FACTOR):
    """Merge overlapping ranges and cut merged ones that are too wide.

    Returns ``(merged, group, pieces, piece_span)``: merged disjoint ranges,
    the merged range holding each input, the executable pieces, and for each
    merged range its ``[first, last)`` piece indices.
    """
    if not ranges:
        return [], [], [], []
    lefts = [r[0] for r in ranges]
    rights = [r[1] for r in ranges]
    starts, ends, group = merge_intervals(lefts, rights)
    mean_w = sum(r - l + 1 for l, r in ranges) / len(ranges)
    limit = max(1, int(split_factor * mean_w))
    pieces = []
    span = []
    for a, b in zip(starts, ends):
        first = len(pieces)
        while b - a + 1 > limit:
            pieces.append((a, a + limit - 1))
            a += limit
        pieces.append((a, b))
        span.append((first, len(pieces)))
    return list(zip(starts, ends)), group, pieces, span


class ScanMixin:
    def scan_batch(self, ranges: Iterable[tuple[int, int]],
                   split_factor: float = SPLIT_FACTOR) -> list[list[tuple[int, int]] | None]:
        """All (key, value) with L <= key <= R, per input range.

        Ill-formed ranges (L > R or outside the key space) yield None.
        """
        ranges = [(int(l), int(r)) for l, r in ranges]
        valid = [j for j, (l, r) in enumerate(ranges) if 0 <= l <= r < KEY_LIMIT]
        out: list = [None] * len(ranges)
        if not valid:
            return out
        merged, group, pieces, span = plan_ranges([ranges[j] for j in valid], split_factor)
        found = self._scan_pieces(pieces)
        per_merged = []
        for a, b in span:
            rows = [kv for p in range(a, b) for kv in found[p]]
            per_merged.append(([k for k, _ in rows], rows))
        for j, g in zip(valid, group):
            l, r = ranges[j]
            mk, rows = per_merged[g]
            out[j] = rows[bisect_left(mk, l):bisect_right(mk, r)]
        return out

    def _scan_pieces(self, pieces):
        """Execute disjoint ranges; returns sorted (key, value) rows per piece."""
        cfg = self.config
        P, H1, top = self.P, cfg.H_L1, cfg.lower_height
        n = len(pieces)
        # items: (level, piece, ptr, tag, lo, hi)
        items = []

        def extend(level, pc, full, part):
            for p in full:
                items.append((level, pc, p, FETCH_ALL, 0, 0))
            for p, lo, hi in part:
                items.append((level, pc, p, SEARCH, lo, hi))

        rnd = Round(P)
        for pc, (L, R) in enumerate(pieces):
            rnd.add(pc * P // n, (op.L3_SCAN, L, R), 3, pc)
        for pc, (full, part) in rnd.results(self._run(rnd)):
            extend(top, pc, full, part)

        # pull contended boundary nodes in L2
        K2 = cfg.K_L2
        for _ in range(cfg.H_L2):
            l2 = [it for it in items if it[0] > H1]
            if not l2:
                break
            loads = tally([it[2] >> PTR_SHIFT for it in l2], None, P)
            if check_balance(loads, cfg.imbalance_factor):
                break
            groups: dict[int, list] = {}
            for it in l2:
                if it[3] == SEARCH:
                    groups.setdefault(it[2], []).append(it)
            heavy = [p for p, g in groups.items() if len(g) > K2]
            if not heavy:
                break
            rnd = Round(P)
            for p in heavy:
                rnd.add(p >> PTR_SHIFT, (op.FETCH, p), 2, p)
            hot = set(heavy)
            items = [it for it in items if not (it[3] == SEARCH and it[2] in hot)]
            for p, (keys, children) in rnd.results(self._run(rnd)):
                for level, pc, _, _, lo, hi in groups[p]:
                    L, R = pieces[pc]
                    full, part = expand_range(keys, children, max(L, lo), min(R, hi - 1), hi)
                    extend(level - 1, pc, full, part)

        # one push through the shadows turns every L2 item into L1 items
        l2 = [it for it in items if it[0] > H1]
        if l2:
            items = [it for it in items if it[0] <= H1]
            rnd = Round(P)
            for it in l2:
                level, pc, p, tag, lo, hi = it
                L, R = pieces[pc]
                rnd.add(p >> PTR_SHIFT, (op.WALK_SCAN, p, tag, L, R, lo, hi), 2 if tag == FETCH_ALL else 6, pc)
            for pc, (full, part) in rnd.results(self._run(rnd)):
                extend(H1, pc, full, part)

        # push-pull through L1
        K1 = cfg.K_L1
        rows: list[list] = [[] for _ in range(n)]
        for level in range(H1, 0, -1):
            groups = {}
            for it in items:
                if it[3] == SEARCH:
                    groups.setdefault(it[2], []).append(it)
            hot = {p for p, g in groups.items() if len(g) > K1}
            rnd = Round(P)
            for p in hot:
                rnd.add(p >> PTR_SHIFT, (op.FETCH, p), 2, (None, p))
            for it in items:
                _, pc, p, tag, lo, hi = it
                if tag == SEARCH and p in hot:
                    continue
                L, R = pieces[pc]
                rnd.add(p >> PTR_SHIFT, (op.SCAN_STEP, p, tag, L, R, lo, hi),
                        2 if tag == FETCH_ALL else 6, (pc, p))
            items = []
            for (pc, p), r in rnd.results(self._run(rnd)):
                if pc is None:
                    keys, children = r
                    for _, pc2, _, _, lo, hi in groups[p]:
                        L, R = pieces[pc2]
                        a, b = max(L, lo), min(R, hi - 1)
                        if level == 1:
                            i0 = max(bisect_left(keys, a), 0)
                            i1 = bisect_right(keys, b)
                            rows[pc2].extend((k, c) for k, c in zip(keys[i0:i1], children[i0:i1]) if k >= 0)
                        else:
                            full, part = expand_range(keys, children, a, b, hi)
                            extend(level - 1, pc2, full, part)
                elif level == 1:
                    rows[pc].extend(r)
                else:
                    extend(level - 1, pc, r[0], r[1])

        # values
        rnd = Round(P)
        for pc, rs in enumerate(rows):
            for k, d in rs:
                rnd.add(d >> PTR_SHIFT, (op.READ, d), 2, (pc, k))
        result: list[list] = [[] for _ in range(n)]
        for (pc, k), v in rnd.results(self._run(rnd)):
            result[pc].append((k, v))
        for r in result:
            r.sort()
        return result

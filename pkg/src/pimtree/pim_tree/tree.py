"""Host-side algorithms of the PIM-tree."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..kernels import hash_modules, tally
from ..pim_model import NULL_PTR, PTR_SHIFT, Buffer, PimMachine, make_ptr
from . import program as op
from .config import TreeConfig, check_balance, generate_heights
from .layout import (HASH_ADDR, HEADER, KEY_LIMIT, L3_ADDR, SENTINEL, ChunkNode, L3Index,
                     ShadowCopy, entry_words)
from .batching import Round, check_key
from .program import TreeProgram
from .shadow import apply_shadow_ops, merge_entries, op_words


@dataclass
class SearchInfo:
    """What one search did: pulled nodes per round as (ptr, words)."""

    l2_pulls: list[list[tuple[int, int]]] = field(default_factory=list)
    l1_pulls: list[list[tuple[int, int]]] = field(default_factory=list)
    rounds: int = 0


@dataclass
class SearchResult:
    keys: list  # predecessor key per query (SENTINEL if none)
    dptrs: list
    values: list | None
    trace: list | None  # per query, per level: (ptr, lo, hi); lo/hi are None in L1


class PimTree:
    """Batch-parallel ordered index on a simulated PIM machine."""

    name = "pim-tree"

    def __init__(self, config: TreeConfig | None = None, **overrides):
        cfg = config if config is not None else TreeConfig(**overrides)
        self.config = cfg
        self.P = cfg.P
        self.machine = PimMachine(cfg.P, cfg.accounting)
        self.rng = np.random.Generator(np.random.PCG64(cfg.seed))
        self.program = TreeProgram(cfg.H_L1)
        self.l3 = L3Index()
        self.sentinels: dict[int, int] = {}
        self.last_search: SearchInfo | None = None
        self._build_skeleton()

    # -- setup --------------------------------------------------------------

    def _build_skeleton(self) -> None:
        """Hash tables, the shared L3 replica, and one sentinel chunk per level."""
        cfg = self.config
        top = cfg.lower_height
        mods = self.rng.integers(0, self.P, size=top).tolist()
        with self.machine.inspect() as m:
            for mod in m.modules:
                assert mod.alloc({}) == make_ptr(mod.id, HASH_ADDR)
                assert mod.alloc(self.l3) == make_ptr(mod.id, L3_ADDR)
            child = NULL_PTR
            for lv in range(1, top + 1):
                shadow = None
                if lv >= cfg.H_L1 + 2:
                    shadow = {self.sentinels[d]: ShadowCopy(d, [SENTINEL], [self.sentinels[d - 1]])
                              for d in range(cfg.H_L1 + 1, lv)}
                ptr = m.modules[mods[lv - 1]].alloc(ChunkNode(lv, [SENTINEL], [child], shadow=shadow))
                self.sentinels[lv] = ptr
                child = ptr
        self.l3.insert(SENTINEL, self.sentinels[top])

    def generate_heights(self, count: int) -> list[int]:
        return generate_heights(self.rng, self.config.B, count)

    def _run(self, rnd: Round, broadcast=None):
        if not rnd and not broadcast:
            return [[] for _ in range(self.P)]
        return self.machine.run_round(rnd.tasks, self.program, broadcast)

    # -- search -------------------------------------------------------------

    def _search(self, qs: Sequence[int], traced: Sequence[bool] | None = None,
                values: bool = True) -> SearchResult:
        """Predecessor search for sorted distinct ``qs``.

        With ``traced`` the result carries per-level traces; queries flagged
        True get L2 entries with their node ranges.
        """
        cfg = self.config
        P, H1, top = self.P, cfg.H_L1, cfg.lower_height
        n = len(qs)
        info = SearchInfo()
        rounds0 = self.machine.rounds
        tr = traced is not None
        cur = [0] * n
        lvl = [top] * n
        qhi = [0] * n
        trace = [[None] * (top + 1) for _ in range(n)] if tr else None

        # stage 1: L3, queries spread evenly
        rnd = Round(P)
        for i, q in enumerate(qs):
            rnd.add(i * P // n, (op.L3, q, bool(tr and traced[i])), 2, i)
        for i, r in rnd.results(self._run(rnd)):
            if type(r) is tuple:
                cur[i] = r[0]
                qhi[i] = r[2]
                trace[i][top] = r
            else:
                cur[i] = r

        # stage 2: pull-only rounds on contended L2 nodes
        pending = list(range(n))
        K2 = cfg.K_L2
        for _ in range(cfg.H_L2):
            if not pending:
                break
            groups: dict[int, list[int]] = {}
            for i in pending:
                groups.setdefault(cur[i], []).append(i)
            loads = tally([p >> PTR_SHIFT for p in groups], [len(g) for g in groups.values()], P)
            if check_balance(loads, cfg.imbalance_factor):
                break
            heavy = [p for p, g in groups.items() if len(g) > K2]
            if not heavy:
                break
            rnd = Round(P)
            for p in heavy:
                rnd.add(p >> PTR_SHIFT, (op.FETCH, p), 2, p)
            pulled = []
            for p, (keys, children) in rnd.results(self._run(rnd)):
                pulled.append((p, entry_words(len(keys))))
                nk = len(keys)
                for i in groups[p]:
                    j = bisect_right(keys, qs[i]) - 1
                    child = children[j]
                    lvl[i] -= 1
                    cur[i] = child
                    if tr and traced[i]:
                        c_hi = keys[j + 1] if j + 1 < nk else qhi[i]
                        qhi[i] = c_hi
                        trace[i][lvl[i]] = (child, keys[j], c_hi)
            info.l2_pulls.append(pulled)
            pending = [i for i in pending if lvl[i] > H1]

        # stage 3: one push through the shadow subtrees
        if pending:
            rnd = Round(P)
            for i in pending:
                t = bool(tr and traced[i])
                rnd.add(cur[i] >> PTR_SHIFT, (op.WALK, cur[i], qs[i], qhi[i], t), 4 if t else 3, i)
            for i, (l1, path) in rnd.results(self._run(rnd)):
                for ent in path:
                    lvl[i] -= 1
                    trace[i][lvl[i]] = ent
                cur[i] = l1
                lvl[i] = H1

        # stage 4: push-pull through L1
        K1 = cfg.K_L1
        pred = [SENTINEL] * n
        dptr = [NULL_PTR] * n
        for level in range(H1, 0, -1):
            groups = {}
            for i in range(n):
                groups.setdefault(cur[i], []).append(i)
            rnd = Round(P)
            for p, g in groups.items():
                if len(g) > K1:
                    rnd.add(p >> PTR_SHIFT, (op.FETCH, p), 2, (True, p))
                else:
                    for i in g:
                        rnd.add(p >> PTR_SHIFT, (op.STEP, p, qs[i]), 3, (False, i))
                if tr:
                    for i in g:
                        trace[i][level] = (p, None, None)
            pulled = []
            for (is_pull, x), r in rnd.results(self._run(rnd)):
                if is_pull:
                    keys, children = r
                    pulled.append((x, entry_words(len(keys))))
                    for i in groups[x]:
                        j = bisect_right(keys, qs[i]) - 1
                        if level == 1:
                            pred[i] = keys[j]
                            dptr[i] = children[j]
                        else:
                            cur[i] = children[j]
                elif level == 1:
                    pred[x], dptr[x] = r
                else:
                    cur[x] = r
            info.l1_pulls.append(pulled)

        vals = None
        if values:
            rnd = Round(P)
            for d in dict.fromkeys(dptr):
                if d != NULL_PTR:
                    rnd.add(d >> PTR_SHIFT, (op.READ, d), 2, d)
            got = dict(rnd.results(self._run(rnd))) if rnd else {}
            vals = [got.get(d) for d in dptr]
        info.rounds = self.machine.rounds - rounds0
        self.last_search = info
        return SearchResult(pred, dptr, vals, trace)

    # -- point operations ---------------------------------------------------

    def predecessor_batch(self, queries: Iterable[int]) -> list[tuple[int, int] | None]:
        """Largest stored key <= q (with its value) for every q; None if none."""
        qs = [check_key(q) for q in queries]
        if not qs:
            return []
        uniq = sorted(set(qs))
        res = self._search(uniq)
        ans = {}
        for q, k, v in zip(uniq, res.keys, res.values):
            ans[q] = None if k == SENTINEL else (k, v)
        return [ans[q] for q in qs]

    def get_batch(self, keys: Iterable[int]) -> list[int | None]:
        ks = [check_key(k) for k in keys]
        if not ks:
            return []
        uniq = list(dict.fromkeys(ks))
        rnd = Round(self.P)
        for k, m in zip(uniq, hash_modules(uniq, self.P)):
            rnd.add(m, (op.GET, k), 2, k)
        found = dict(rnd.results(self._run(rnd)))
        return [found[k] for k in ks]

    def update_batch(self, pairs: Iterable[tuple[int, int]]) -> list[bool]:
        pairs = [(check_key(k), int(v)) for k, v in pairs]
        if not pairs:
            return []
        latest = dict(pairs)
        uniq = list(latest)
        rnd = Round(self.P)
        for k, m in zip(uniq, hash_modules(uniq, self.P)):
            rnd.add(m, (op.UPDATE, k, latest[k]), 3, k)
        ok = dict(rnd.results(self._run(rnd)))
        return [ok[k] for k, _ in pairs]

    # -- insert -------------------------------------------------------------

    def insert_batch(self, pairs: Iterable[tuple[int, int]], heights: Sequence[int] | None = None) -> None:
        """Insert (key, value) pairs; an existing key just gets the new value.

        ``heights`` (one per pair, input order) overrides the tree's RNG.
        """
        pairs = list(pairs)
        if heights is None:
            heights = self.generate_heights(len(pairs))
        elif len(heights) != len(pairs):
            raise ValueError("need one height per pair")
        latest: dict[int, tuple[int, int]] = {}
        for (k, v), h in zip(pairs, heights):
            h = int(h)
            if h < 1:
                raise ValueError("heights must be >= 1")
            latest[check_key(k)] = (int(v), h)
        if not latest:
            return
        cfg = self.config
        P, H1, top = self.P, cfg.H_L1, cfg.lower_height
        keys = sorted(latest)
        vals = [latest[k][0] for k in keys]
        hs = [latest[k][1] for k in keys]
        res = self._search(keys, [h > H1 for h in hs], values=False)
        trace = res.trace
        new = [i for i in range(len(keys)) if res.keys[i] != keys[i]]
        old = [i for i in range(len(keys)) if res.keys[i] == keys[i]]

        # round A: data nodes, empty chunks, cut right parts of split nodes
        rnd = Round(P)
        for i in old:
            d = res.dptrs[i]
            rnd.add(d >> PTR_SHIFT, (op.WRITE_VALUE, d, vals[i]), 3)
        if not new:
            self._run(rnd)
            return
        for i, m in zip(new, hash_modules([keys[i] for i in new], P)):
            rnd.add(m, (op.NEW_DATA, keys[i], vals[i], hs[i]), 4, ("d", i))
        allocs = [(i, lv) for i in new for lv in range(1, min(hs[i] - 1, top) + 1)]
        if allocs:
            for (i, lv), m in zip(allocs, self.rng.integers(0, P, size=len(allocs)).tolist()):
                rnd.add(m, (op.ALLOC, lv), 1, ("c", i, lv))
        groups: list[dict[int, list[int]]] = [{} for _ in range(top + 1)]
        for i in new:
            t = trace[i]
            for lv in range(1, min(hs[i], top) + 1):
                groups[lv].setdefault(t[lv][0], []).append(i)
        for lv in range(1, top + 1):
            for C, g in groups[lv].items():
                first = next((i for i in g if hs[i] > lv), None)
                if first is not None:
                    rnd.add(C >> PTR_SHIFT, (op.CUT, C, keys[first]), 3, ("x", lv, C))
        dptr: dict[int, int] = {}
        chunk: dict[tuple[int, int], int] = {}
        cuts: dict[tuple[int, int], tuple] = {}
        for tag, r in rnd.results(self._run(rnd)):
            if tag is None:
                continue
            if tag[0] == "d":
                dptr[tag[1]] = r
            elif tag[0] == "c":
                chunk[(tag[1], tag[2])] = r
            else:
                cuts[(tag[1], tag[2])] = r

        # host: contents of every touched node
        rnd = Round(P)
        split_keys: list[dict[int, list[int]]] = [{} for _ in range(top + 1)]
        piece_of: list[dict[int, int]] = [{} for _ in range(top + 1)]
        pieces = []  # [lv, ptr, keys, children, prev, next, origin]
        changes = []  # (lv, ops, representative query, position key)
        for lv in range(1, top + 1):
            for C, g in groups[lv].items():
                if lv == 1:
                    kids = {i: dptr[i] for i in g}
                else:
                    kids = {i: chunk[(i, lv - 1)] for i in g}
                sp = [i for i in g if hs[i] > lv]
                s0 = keys[sp[0]] if sp else None
                pre = [i for i in g if s0 is None or keys[i] < s0]
                pre_k = [keys[i] for i in pre]
                pre_c = [kids[i] for i in pre]
                ops = []
                if pre:
                    ops.append(("ins", C, pre_k, pre_c))
                if not sp:
                    rnd.add(C >> PTR_SHIFT, (op.INSERT, C, pre_k, pre_c, None),
                            HEADER + 1 + entry_words(len(pre)))
                else:
                    ops.append(("cut", C, s0))
                    rk, rc, nxt, moved = cuts[(lv, C)]
                    rest = [i for i in g if keys[i] >= s0]
                    ek, ec = merge_entries(rk, rc, [keys[i] for i in rest], [kids[i] for i in rest])
                    sk = [keys[i] for i in sp]
                    ptrs = [chunk[(i, lv)] for i in sp]
                    bounds = [bisect_left(ek, s) for s in sk] + [len(ek)]
                    split_keys[lv][C] = sk
                    for s, p in zip(sk, ptrs):
                        piece_of[lv][s] = p
                    for j, i in enumerate(sp):
                        prev = C if j == 0 else ptrs[j - 1]
                        nx = ptrs[j + 1] if j + 1 < len(sp) else nxt
                        pk, pc = ek[bounds[j]:bounds[j + 1]], ec[bounds[j]:bounds[j + 1]]
                        pieces.append([lv, ptrs[j], pk, pc, prev, nx, moved, sk, j])
                        changes.append((lv, [("add", ptrs[j], lv, pk, pc)], i, keys[i]))
                    rnd.add(C >> PTR_SHIFT, (op.INSERT, C, pre_k, pre_c, ptrs[0]),
                            HEADER + 2 + entry_words(len(pre)))
                    if nxt != NULL_PTR:
                        rnd.add(nxt >> PTR_SHIFT, (op.SET_PREV, nxt, ptrs[-1]), 3)
                if ops:
                    changes.append((lv, ops, g[0], trace[g[0]][lv][1]))

        # shadow maintenance: route every L2 change to its ancestors
        def owner(m: int, A: int, x: int) -> int:
            sk = split_keys[m].get(A)
            if not sk or x < sk[0]:
                return A
            return piece_of[m][sk[bisect_right(sk, x) - 1]]

        ops_for: dict[int, list] = {}
        for lv, ops, rep, x in changes:
            if lv <= H1:
                continue
            t = trace[rep]
            for m in range(lv + 1, top + 1):
                ops_for.setdefault(owner(m, t[m][0], x), []).extend(ops)
        for lv, ptr, pk, pc, prev, nx, moved, sk, j in pieces:
            shadow = None
            words = HEADER + 3 + entry_words(len(pk))
            if lv >= H1 + 2:
                hi = sk[j + 1] if j + 1 < len(sk) else None
                shadow = {p: cp.clone() for p, cp in moved
                          if cp.keys[0] >= sk[j] and (hi is None or cp.keys[0] < hi)}
                apply_shadow_ops(shadow, ops_for.pop(ptr, ()))
                words += sum(1 + cp.words() for cp in shadow.values())
            rnd.add(ptr >> PTR_SHIFT, (op.WRITE, ptr, lv, pk, pc, prev, nx, shadow), words)
        for A, ops in ops_for.items():
            rnd.add(A >> PTR_SHIFT, (op.SHADOW_OPS, A, ops), HEADER + 1 + sum(op_words(o) for o in ops))

        tall = [(keys[i], chunk[(i, top)]) for i in new if hs[i] > top]
        bcast = Buffer(tall, words=HEADER + 2 * len(tall)) if tall else None
        self._run(rnd, bcast)
        for k, p in tall:
            self.l3.insert(k, p)

    # -- delete -------------------------------------------------------------

    def delete_batch(self, keys: Iterable[int]) -> None:
        """Remove keys; absent keys are ignored."""
        ks = sorted({check_key(k) for k in keys})
        if not ks:
            return
        cfg = self.config
        P, H1, top = self.P, cfg.H_L1, cfg.lower_height
        rnd = Round(P)
        for k, m in zip(ks, hash_modules(ks, P)):
            rnd.add(m, (op.HEIGHT, k), 2, k)
        hmap = dict(rnd.results(self._run(rnd)))
        keys_ = [k for k in ks if hmap[k] > 0]
        if not keys_:
            return
        hs = [hmap[k] for k in keys_]
        res = self._search(keys_, [h > H1 for h in hs], values=False)
        trace = res.trace

        # round A: drop data nodes, remove keys, fetch remainders of dissolved nodes
        rnd = Round(P)
        for k, m in zip(keys_, hash_modules(keys_, P)):
            rnd.add(m, (op.DEL_DATA, k), 2)
        groups: list[dict[int, list[int]]] = [{} for _ in range(top + 1)]
        for i, h in enumerate(hs):
            t = trace[i]
            for lv in range(1, min(h, top) + 1):
                groups[lv].setdefault(t[lv][0], []).append(i)
        for lv in range(1, top + 1):
            for D, g in groups[lv].items():
                rm = [keys_[i] for i in g]
                piv = next((i for i in g if hs[i] > lv), None)
                if piv is None:
                    rnd.add(D >> PTR_SHIFT, (op.REMOVE, D, rm), HEADER + 1 + len(rm))
                else:
                    rnd.add(D >> PTR_SHIFT, (op.REMOVE_FETCH, D, rm), HEADER + 1 + len(rm), (lv, D, piv))
        removed: list[dict[int, tuple]] = [{} for _ in range(top + 1)]
        for tag, r in rnd.results(self._run(rnd)):
            if tag is not None:
                lv, D, piv = tag
                removed[lv][D] = (piv,) + tuple(r)

        # host: splice remainders into the nearest surviving left neighbour
        rnd = Round(P)
        target: list[dict[int, int]] = [{} for _ in range(top + 1)]
        gone = set()
        appends = []  # (lv, T, keys, children, next, first pivot)
        for lv in range(1, top + 1):
            rem = removed[lv]
            gone.update(rem)
            acc: dict[int, list] = {}
            for D in sorted(rem, key=lambda d: keys_[rem[d][0]]):
                piv, rk, rc, prev, nxt, _ = rem[D]
                T = target[lv][prev] if prev in rem else prev
                target[lv][D] = T
                if T not in acc:
                    acc[T] = [lv, T, [], [], nxt, piv]
                    appends.append(acc[T])
                a = acc[T]
                a[2].extend(rk)
                a[3].extend(rc)
                a[4] = nxt
        for lv, T, ak, ac, nxt, _ in appends:
            rnd.add(T >> PTR_SHIFT, (op.APPEND, T, ak, ac, nxt), HEADER + 2 + entry_words(len(ak)))
            if nxt != NULL_PTR:
                rnd.add(nxt >> PTR_SHIFT, (op.SET_PREV, nxt, T), 3)

        # shadow maintenance
        ops_for: dict[int, list] = {}

        def route(lv: int, rep: int, ops) -> None:
            t = trace[rep]
            for m in range(lv + 1, top + 1):
                A = t[m][0]
                A = target[m].get(A, A)
                ops_for.setdefault(A, []).extend(ops)

        for lv in range(H1 + 1, top):
            for D, g in groups[lv].items():
                if D in removed[lv]:
                    route(lv, removed[lv][D][0], [("drop", D)])
                else:
                    route(lv, g[0], [("rm", D, [keys_[i] for i in g])])
        for lv, T, ak, ac, _, piv in appends:
            if H1 < lv < top and ak:
                route(lv, piv, [("app", T, ak, ac)])
        for lv in range(H1 + 2, top + 1):
            for D, (_, _, _, _, _, moved) in removed[lv].items():
                adds = [("add", p, cp.level, cp.keys, cp.children) for p, cp in moved if p not in gone]
                if adds:
                    ops_for.setdefault(target[lv][D], []).extend(adds)
        for A, ops in ops_for.items():
            rnd.add(A >> PTR_SHIFT, (op.SHADOW_OPS, A, ops), HEADER + 1 + sum(op_words(o) for o in ops))

        tall = [keys_[i] for i in range(len(keys_)) if hs[i] > top]
        bcast = Buffer(tall, words=HEADER + len(tall)) if tall else None
        self._run(rnd, bcast)
        for k in tall:
            self.l3.delete(k)

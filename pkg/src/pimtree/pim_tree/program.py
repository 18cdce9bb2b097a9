"""Module-side program: executes the task tuples the host scatters.

Each task is a tuple whose first element is an opcode.  Every op appends
exactly one reply (``None`` for acknowledgements, which cost nothing) and
returns the reply's size in words.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right

from ..pim_model import Buffer, NULL_PTR, make_ptr
from .layout import HASH_ADDR, L3_ADDR, ChunkNode, DataNode, ShadowCopy, entry_words, shadow_words
from .shadow import apply_shadow_ops, merge_entries, remove_keys

(L3, FETCH, WALK, STEP, READ, GET, UPDATE, HEIGHT, NEW_DATA, DEL_DATA,
 WRITE_VALUE, ALLOC, CUT, INSERT, WRITE, SET_PREV, SHADOW_OPS, REMOVE,
 REMOVE_FETCH, APPEND, L3_SCAN, WALK_SCAN, SCAN_STEP) = range(23)

# Task sizes in words (header included) for fixed-size tasks.
TASK_WORDS = {
    L3: 2, FETCH: 2, STEP: 3, READ: 2, GET: 2, UPDATE: 3, HEIGHT: 2,
    NEW_DATA: 4, DEL_DATA: 2, WRITE_VALUE: 3, ALLOC: 1, CUT: 3, SET_PREV: 3,
    L3_SCAN: 3, WALK_SCAN: 6, SCAN_STEP: 6,
}

FETCH_ALL, SEARCH = 0, 1


def expand_range(keys, children, L, R, hi):
    """Children of a node overlapping [L, R] (already clipped to the node).

    Returns ``(full, partial)``: pointers of children lying entirely inside
    the range, and ``(ptr, lo, hi)`` for the one or two boundary children.
    """
    j0 = bisect_right(keys, L) - 1
    j1 = bisect_right(keys, R) - 1
    if j0 < 0:
        j0 = 0
    n = len(keys)

    def part(j):
        return (children[j], keys[j], keys[j + 1] if j + 1 < n else hi)

    if j1 <= j0:
        return [], [part(j0)]
    return children[j0 + 1:j1], [part(j0), part(j1)]


def shadow_leaves(shadow, keys, children, level, bottom):
    """All pointers one level below ``bottom`` reachable from a (copy of a) node."""
    if level == bottom:
        return list(children)
    out = []
    for c in children:
        cp = shadow[c]
        out.extend(shadow_leaves(shadow, cp.keys, cp.children, level - 1, bottom))
    return out


class TreeProgram:
    def __init__(self, h_l1: int):
        self.bottom_l2 = h_l1 + 1
        self.table = [
            self.l3, self.fetch, self.walk, self.step, self.read, self.get,
            self.update, self.height, self.new_data, self.del_data,
            self.write_value, self.alloc, self.cut, self.insert, self.write,
            self.set_prev, self.shadow_ops, self.remove, self.remove_fetch,
            self.append, self.l3_scan, self.walk_scan, self.scan_step,
        ]
        self.ht: dict = {}
        self.l3_index = None

    def __call__(self, mod, tasks):
        out = Buffer()
        if not tasks:
            return out
        self.ht = mod.load(make_ptr(mod.id, HASH_ADDR))
        self.l3_index = mod.load(make_ptr(mod.id, L3_ADDR))
        table = self.table
        words = 0
        for t in tasks:
            words += table[t[0]](mod, t, out)
        out.words = words
        return out

    # -- search -------------------------------------------------------------

    def l3(self, mod, t, out):
        _, ptr, lo, hi = self.l3_index.route(t[1])
        if t[2]:
            out.append((ptr, lo, hi))
            return 3
        out.append(ptr)
        return 1

    def fetch(self, mod, t, out):
        node = mod.load(t[1])
        out.append((node.keys, node.children))
        return entry_words(len(node.keys))

    def walk(self, mod, t, out):
        _, ptr, key, hi, traced = t
        node = mod.load(ptr)
        shadow = node.shadow
        keys, children, level = node.keys, node.children, node.level
        path = []
        bottom = self.bottom_l2
        while True:
            j = bisect_right(keys, key) - 1
            child = children[j]
            if level == bottom:
                break
            if traced:
                c_hi = keys[j + 1] if j + 1 < len(keys) else hi
                path.append((child, keys[j], c_hi))
                hi = c_hi
            cp = shadow[child]
            keys, children = cp.keys, cp.children
            level -= 1
        out.append((child, path))
        return 1 + 3 * len(path)

    def step(self, mod, t, out):
        node = mod.load(t[1])
        keys = node.keys
        j = bisect_right(keys, t[2]) - 1
        if node.level == 1:
            out.append((keys[j], node.children[j]))
            return 2
        out.append(node.children[j])
        return 1

    # -- data nodes ---------------------------------------------------------

    def read(self, mod, t, out):
        out.append(mod.load(t[1]).value)
        return 1

    def get(self, mod, t, out):
        p = self.ht.get(t[1])
        out.append(None if p is None else mod.load(p).value)
        return 1

    def update(self, mod, t, out):
        p = self.ht.get(t[1])
        if p is None:
            out.append(False)
        else:
            mod.load(p).value = t[2]
            out.append(True)
        return 1

    def height(self, mod, t, out):
        p = self.ht.get(t[1])
        out.append(0 if p is None else mod.load(p).height)
        return 1

    def new_data(self, mod, t, out):
        _, key, value, h = t
        p = mod.alloc(DataNode(key, value, h))
        self.ht[key] = p
        out.append(p)
        return 1

    def del_data(self, mod, t, out):
        p = self.ht.pop(t[1])
        mod.free(p)
        out.append(None)
        return 0

    def write_value(self, mod, t, out):
        mod.load(t[1]).value = t[2]
        out.append(None)
        return 0

    # -- structure ----------------------------------------------------------

    def alloc(self, mod, t, out):
        out.append(mod.alloc(ChunkNode(t[1], [], [])))
        return 1

    def cut(self, mod, t, out):
        _, ptr, key = t
        node = mod.load(ptr)
        j = bisect_left(node.keys, key)
        rk, rc = node.keys[j:], node.children[j:]
        del node.keys[j:]
        del node.children[j:]
        moved = []
        if node.shadow is not None:
            moved = [p for p, cp in node.shadow.items() if cp.keys[0] >= key]
            moved = [(p, node.shadow.pop(p)) for p in moved]
        out.append((rk, rc, node.next, moved))
        return entry_words(len(rk)) + 1 + sum(1 + cp.words() for _, cp in moved)

    def insert(self, mod, t, out):
        _, ptr, keys, children, new_next = t
        node = mod.load(ptr)
        if keys:
            node.keys, node.children = merge_entries(node.keys, node.children, keys, children)
        if new_next is not None:
            node.next = new_next
        out.append(None)
        return 0

    def write(self, mod, t, out):
        _, ptr, level, keys, children, prev, nxt, shadow = t
        mod.store(ptr, ChunkNode(level, list(keys), list(children), prev, nxt, shadow))
        out.append(None)
        return 0

    def set_prev(self, mod, t, out):
        mod.load(t[1]).prev = t[2]
        out.append(None)
        return 0

    def shadow_ops(self, mod, t, out):
        apply_shadow_ops(mod.load(t[1]).shadow, t[2])
        out.append(None)
        return 0

    def remove(self, mod, t, out):
        node = mod.load(t[1])
        remove_keys(node.keys, node.children, set(t[2]))
        out.append(None)
        return 0

    def remove_fetch(self, mod, t, out):
        node = mod.free(t[1])
        remove_keys(node.keys, node.children, set(t[2]))
        moved = list(node.shadow.items()) if node.shadow else []
        out.append((node.keys, node.children, node.prev, node.next, moved))
        return entry_words(len(node.keys)) + 2 + sum(1 + cp.words() for _, cp in moved)

    def append(self, mod, t, out):
        _, ptr, keys, children, new_next = t
        node = mod.load(ptr)
        node.keys.extend(keys)
        node.children.extend(children)
        node.next = new_next
        out.append(None)
        return 0

    # -- scan ---------------------------------------------------------------

    def l3_scan(self, mod, t, out):
        _, L, R = t
        idx = self.l3_index
        full, part = expand_range(idx.keys, idx.ptrs, L, R, 1 << 64)
        out.append((full, part))
        return len(full) + 3 * len(part)

    def walk_scan(self, mod, t, out):
        _, ptr, tag, L, R, lo, hi = t
        node = mod.load(ptr)
        shadow = node.shadow
        bottom = self.bottom_l2
        full_out: list = []
        part_out: list = []
        if tag == FETCH_ALL:
            full_out = shadow_leaves(shadow, node.keys, node.children, node.level, bottom)
        else:
            stack = [(node.keys, node.children, node.level, max(L, lo), min(R, hi - 1), hi)]
            while stack:
                keys, children, level, a, b, h = stack.pop()
                full, part = expand_range(keys, children, a, b, h)
                if level == bottom:
                    full_out.extend(full)
                    part_out.extend(part)
                    continue
                for c in full:
                    cp = shadow[c]
                    full_out.extend(shadow_leaves(shadow, cp.keys, cp.children, level - 1, bottom))
                for c, clo, chi in part:
                    cp = shadow[c]
                    stack.append((cp.keys, cp.children, level - 1, max(a, clo), min(b, chi - 1), chi))
        out.append((full_out, part_out))
        return len(full_out) + 3 * len(part_out)

    def scan_step(self, mod, t, out):
        _, ptr, tag, L, R, lo, hi = t
        node = mod.load(ptr)
        if node.level == 1:
            keys, children = node.keys, node.children
            if tag == FETCH_ALL:
                i0, i1 = 0, len(keys)
            else:
                i0 = bisect_left(keys, L)
                i1 = bisect_right(keys, R)
            if i0 < i1 and keys[i0] < 0:
                i0 += 1
            ents = list(zip(keys[i0:i1], children[i0:i1]))
            out.append(ents)
            return entry_words(len(ents))
        if tag == FETCH_ALL:
            full, part = list(node.children), []
        else:
            full, part = expand_range(node.keys, node.children, max(L, lo), min(R, hi - 1), hi)
        out.append((full, part))
        return len(full) + 3 * len(part)

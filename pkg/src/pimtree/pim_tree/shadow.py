"""Shadow-subtree edit operations.

A shadow is a dict ``physical ptr -> ShadowCopy``.  Updates travel as small
op tuples, applied in a fixed order (adds, then removals/truncations, then
insertions/appends, then drops) so that op lists can be built in any order:

``("add", ptr, level, keys, children)``  new copy
``("cut", ptr, key)``                    drop entries >= key
``("rm", ptr, keys)``                    drop the given keys
``("ins", ptr, keys, children)``         merge sorted entries in
``("app", ptr, keys, children)``         append entries past the end
``("drop", ptr)``                        forget the copy (idempotent)
"""

from __future__ import annotations

from bisect import bisect_left
from heapq import merge

from .layout import HEADER, ShadowCopy, entry_words

_PRIORITY = {"add": 0, "cut": 1, "rm": 1, "ins": 2, "app": 2, "drop": 3}


def op_words(op) -> int:
    kind = op[0]
    if kind == "add":
        return HEADER + 2 + entry_words(len(op[3]))
    if kind in ("ins", "app"):
        return HEADER + 1 + entry_words(len(op[2]))
    if kind == "cut":
        return HEADER + 2
    if kind == "rm":
        return HEADER + 1 + len(op[2])
    return HEADER + 1


def merge_entries(keys, children, new_keys, new_children):
    """Merge two sorted entry lists; returns fresh lists."""
    if not new_keys:
        return list(keys), list(children)
    pairs = list(merge(zip(keys, children), zip(new_keys, new_children)))
    return [k for k, _ in pairs], [c for _, c in pairs]


def remove_keys(keys, children, gone) -> None:
    """In-place removal of the keys in ``gone`` (a set)."""
    keep = [i for i, k in enumerate(keys) if k not in gone]
    keys[:] = [keys[i] for i in keep]
    children[:] = [children[i] for i in keep]


def apply_shadow_ops(shadow: dict, ops) -> None:
    for op in sorted(ops, key=lambda o: _PRIORITY[o[0]]):
        kind, ptr = op[0], op[1]
        if kind == "add":
            shadow[ptr] = ShadowCopy(op[2], list(op[3]), list(op[4]))
        elif kind == "drop":
            shadow.pop(ptr, None)
        else:
            cp = shadow[ptr]
            if kind == "cut":
                j = bisect_left(cp.keys, op[2])
                del cp.keys[j:]
                del cp.children[j:]
            elif kind == "rm":
                remove_keys(cp.keys, cp.children, set(op[2]))
            elif kind == "app":
                cp.keys.extend(op[2])
                cp.children.extend(op[3])
            else:
                cp.keys, cp.children = merge_entries(cp.keys, cp.children, op[2], op[3])

"""Node records stored in module memory, and the word-cost convention.

Cost convention (one word = 8 bytes): every task or reply element costs one
header word (opcode plus small flags such as a level) and one word per key,
value, height or packed pointer it carries.  A chunk node's contents cost
two words per entry (key + child pointer).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass

SENTINEL = -1
KEY_LIMIT = 1 << 64

HASH_ADDR = 0
L3_ADDR = 1

HEADER = 1


def entry_words(n: int) -> int:
    return 2 * n


class ChunkNode:
    """Chunked skip-list node.

    ``keys[0]`` is the pivot.  ``shadow`` maps the physical pointer of each
    L2 node below this one to its local copy; it is ``None`` outside the
    shadow-carrying L2 levels.
    """

    __slots__ = ("level", "keys", "children", "prev", "next", "shadow")

    def __init__(self, level, keys, children, prev=-1, next=-1, shadow=None):
        self.level = level
        self.keys = keys
        self.children = children
        self.prev = prev
        self.next = next
        self.shadow = shadow

    def __repr__(self):
        return f"ChunkNode(level={self.level}, keys={self.keys})"


class ShadowCopy:
    __slots__ = ("level", "keys", "children")

    def __init__(self, level: int, keys: list, children: list):
        self.level = level
        self.keys = keys
        self.children = children

    def words(self) -> int:
        return 2 + entry_words(len(self.keys))

    def clone(self) -> "ShadowCopy":
        return ShadowCopy(self.level, list(self.keys), list(self.children))

    def __eq__(self, other):
        return (isinstance(other, ShadowCopy) and self.level == other.level
                and self.keys == other.keys and self.children == other.children)

    def __repr__(self):
        return f"ShadowCopy({self.level}, {self.keys})"


@dataclass(slots=True)
class DataNode:
    key: int
    value: int
    height: int


def shadow_words(entries) -> int:
    return sum(c.words() for c in entries)


class L3Index:
    """Sorted map from top-level pivot keys to L2 root chunks.

    One instance stands for the identical replica on every module.
    """

    __slots__ = ("keys", "ptrs")

    def __init__(self, keys=None, ptrs=None):
        self.keys = keys or []
        self.ptrs = ptrs or []

    def route(self, key: int):
        i = bisect_right(self.keys, key) - 1
        hi = self.keys[i + 1] if i + 1 < len(self.keys) else KEY_LIMIT
        return i, self.ptrs[i], self.keys[i], hi

    def insert(self, key: int, ptr: int) -> None:
        i = bisect_left(self.keys, key)
        self.keys.insert(i, key)
        self.ptrs.insert(i, ptr)

    def delete(self, key: int) -> None:
        i = bisect_left(self.keys, key)
        if i < len(self.keys) and self.keys[i] == key:
            del self.keys[i]
            del self.ptrs[i]

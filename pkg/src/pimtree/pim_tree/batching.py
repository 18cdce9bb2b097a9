"""Helpers for assembling one bulk-synchronous round on the host."""

from __future__ import annotations

from ..pim_model import Buffer
from .layout import KEY_LIMIT


def check_key(k: int) -> int:
    k = int(k)
    if not 0 <= k < KEY_LIMIT:
        raise ValueError(f"key {k} outside the unsigned 64-bit range")
    return k


class Round:
    """Per-module task buffers plus host-side tags to match replies."""

    __slots__ = ("tasks", "tags")

    def __init__(self, P: int):
        self.tasks = [Buffer() for _ in range(P)]
        self.tags: list[list] = [[] for _ in range(P)]

    def add(self, module: int, task: tuple, words: int, tag=None) -> None:
        buf = self.tasks[module]
        buf.append(task)
        buf.words += words
        self.tags[module].append(tag)

    def __bool__(self) -> bool:
        return any(self.tasks)

    def results(self, replies):
        for tags, reps in zip(self.tags, replies):
            yield from zip(tags, reps)

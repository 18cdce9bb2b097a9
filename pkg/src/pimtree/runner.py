"""Uniform batch dispatch over any index with the batch API."""

from __future__ import annotations

from typing import Protocol, Sequence

from .workloads import OpBatch


class BatchIndex(Protocol):
    name: str

    def get_batch(self, keys): ...
    def update_batch(self, pairs): ...
    def predecessor_batch(self, keys): ...
    def insert_batch(self, pairs, heights=None): ...
    def delete_batch(self, keys): ...
    def scan_batch(self, ranges): ...


def run_batch(index: BatchIndex, batch: OpBatch, heights: Sequence[int] | None = None):
    """Execute one batch; query batches return their answers, updates None."""
    op = batch.op
    if op == "get":
        return index.get_batch(batch.keys)
    if op == "predecessor":
        return index.predecessor_batch(batch.keys)
    if op == "scan":
        return index.scan_batch(list(zip(batch.keys, batch.values)))
    if op == "update":
        return index.update_batch(batch.pairs)
    if op == "insert":
        return index.insert_batch(batch.pairs, heights)
    if op == "delete":
        return index.delete_batch(batch.keys)
    raise ValueError(f"unknown op {op!r}")

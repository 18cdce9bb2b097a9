"""Uncounted structural inspection of a PimTree (tests and debugging)."""

from __future__ import annotations

from ..pim_model import NULL_PTR
from .layout import SENTINEL


def _walk_level(machine, head):
    ptr, prev = head, NULL_PTR
    while ptr != NULL_PTR:
        node = machine.debug_load(ptr)
        yield ptr, prev, node
        prev, ptr = ptr, node.next


def level_keys(tree, level: int) -> list[int]:
    """Keys stored at ``level`` (sentinel excluded), left to right."""
    out = []
    for _, _, node in _walk_level(tree.machine, tree.sentinels[level]):
        out.extend(node.keys)
    return [k for k in out if k != SENTINEL]


def l3_keys(tree) -> list[int]:
    return [k for k in tree.l3.keys if k != SENTINEL]


def physical_subtree(tree, ptr) -> dict:
    """Search subtree of an L2 node restricted to L2, keyed by pointer."""
    bottom = tree.config.H_L1 + 1
    out = {}
    stack = [ptr]
    while stack:
        node = tree.machine.debug_load(stack.pop())
        if node.level <= bottom:
            continue
        for c in node.children:
            child = tree.machine.debug_load(c)
            out[c] = (child.level, list(child.keys), list(child.children))
            stack.append(c)
    return out


def verify_shadow_integrity(tree) -> list[str]:
    """Empty list iff every L2 shadow equals its physical search subtree."""
    cfg = tree.config
    problems = []
    for lv in range(cfg.H_L1 + 2, cfg.lower_height + 1):
        for ptr, _, node in _walk_level(tree.machine, tree.sentinels[lv]):
            want = physical_subtree(tree, ptr)
            have = node.shadow or {}
            for p in want.keys() - have.keys():
                problems.append(f"node {ptr:#x}: shadow lacks {p:#x}")
            for p in have.keys() - want.keys():
                problems.append(f"node {ptr:#x}: stale shadow entry {p:#x}")
            for p in want.keys() & have.keys():
                cp = have[p]
                if (cp.level, cp.keys, cp.children) != want[p]:
                    problems.append(f"node {ptr:#x}: shadow copy of {p:#x} differs")
    return problems


def check_structure(tree) -> list[str]:
    """Links, ordering, child pivots and L3 consistency."""
    cfg = tree.config
    top = cfg.lower_height
    m = tree.machine
    problems = []
    for lv in range(1, top + 1):
        last = None
        for ptr, prev, node in _walk_level(m, tree.sentinels[lv]):
            if node.level != lv:
                problems.append(f"{ptr:#x}: level {node.level} on level-{lv} list")
            if node.prev != prev:
                problems.append(f"{ptr:#x}: prev {node.prev:#x} != {prev:#x}")
            if not node.keys or len(node.keys) != len(node.children):
                problems.append(f"{ptr:#x}: malformed entries")
                continue
            if any(a >= b for a, b in zip(node.keys, node.keys[1:])):
                problems.append(f"{ptr:#x}: keys not increasing")
            if last is not None and node.keys[0] <= last:
                problems.append(f"{ptr:#x}: overlaps left neighbour")
            last = node.keys[-1]
            for k, c in zip(node.keys, node.children):
                if k == SENTINEL and lv == 1:
                    continue
                child = m.debug_load(c)
                if lv == 1:
                    if child.key != k:
                        problems.append(f"{ptr:#x}: data pointer for {k} holds {child.key}")
                elif child.keys[0] != k or child.level != lv - 1:
                    problems.append(f"{ptr:#x}: child of {k} has pivot {child.keys[0]}")
    top_pivots = []
    for ptr, _, node in _walk_level(m, tree.sentinels[top]):
        top_pivots.append((node.keys[0], ptr))
    if top_pivots != list(zip(tree.l3.keys, tree.l3.ptrs)):
        problems.append("L3 does not index exactly the top-level chunks")
    return problems


def corrupt_shadow(tree) -> bool:
    """Test hook: alter one key in one shadow copy. False if no shadow exists."""
    cfg = tree.config
    for lv in range(cfg.H_L1 + 2, cfg.lower_height + 1):
        for _, _, node in _walk_level(tree.machine, tree.sentinels[lv]):
            for cp in (node.shadow or {}).values():
                cp.keys[-1] += 1
                return True
    return False

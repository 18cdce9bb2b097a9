"""Workload generation: skewed keys, YCSB-style mixes, text-key encoding.

Scripts serialise to a line format::

    # pimtree workload v1
    warmup <n>
    I <key> <value>            (n lines)
    batch <op> <count>
    G <key> | U <key> <value> | P <key> | I <key> <value> | D <key> | S <lkey> <rkey>
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sortedcontainers import SortedList

from .kernels import wiki_key

KEY_SPACE = 1 << 64
VALUE_LIMIT = 1 << 63
OPS = ("get", "update", "predecessor", "insert", "delete", "scan")
_CODE = {"get": "G", "update": "U", "predecessor": "P", "insert": "I", "delete": "D", "scan": "S"}
_OP_OF = {v: k for k, v in _CODE.items()}
# Which key universe each micro operation draws from.
EXISTING_KEY_OPS = frozenset({"get", "update", "delete"})
SCAN_EXPECTED = 100


@dataclass
class OpBatch:
    """Same-type operations executed as one batch.

    ``values`` holds values for insert/update and right ends for scans.
    """

    op: str
    keys: list[int]
    values: list[int] | None = None

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown op {self.op!r}")
        if self.op in ("update", "insert", "scan") and (self.values is None or len(self.values) != len(self.keys)):
            raise ValueError(f"{self.op} batch needs one value per key")

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.keys, self.values or ()))


@dataclass
class WorkloadScript:
    warmup: list[tuple[int, int]] = field(default_factory=list)
    batches: list[OpBatch] = field(default_factory=list)

    def op_count(self) -> int:
        return sum(len(b) for b in self.batches)

    def dumps(self) -> str:
        lines = ["# pimtree workload v1", f"warmup {len(self.warmup)}"]
        lines += [f"I {k} {v}" for k, v in self.warmup]
        for b in self.batches:
            lines.append(f"batch {b.op} {len(b)}")
            c = _CODE[b.op]
            if b.values is None:
                lines += [f"{c} {k}" for k in b.keys]
            else:
                lines += [f"{c} {k} {v}" for k, v in zip(b.keys, b.values)]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "WorkloadScript":
        script = cls()
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        pos = 0

        def body(n, code):
            nonlocal pos
            rows = lines[pos:pos + n]
            pos += n
            if len(rows) != n or any(r[0] != code for r in rows):
                raise ValueError(f"malformed script near line {pos}")
            return rows

        while pos < len(lines):
            head = lines[pos]
            pos += 1
            if head[0] == "warmup":
                rows = body(int(head[1]), "I")
                script.warmup = [(int(r[1]), int(r[2])) for r in rows]
            elif head[0] == "batch":
                op, n = head[1], int(head[2])
                if op not in _CODE:
                    raise ValueError(f"unknown op {op!r} in script")
                rows = body(n, _CODE[op])
                keys = [int(r[1]) for r in rows]
                vals = [int(r[2]) for r in rows] if len(rows) and len(rows[0]) > 2 else None
                if vals is None and op in ("update", "insert", "scan"):
                    vals = []
                script.batches.append(OpBatch(op, keys, vals))
            else:
                raise ValueError(f"unexpected line {' '.join(head)!r}")
        return script

    @classmethod
    def load(cls, path) -> "WorkloadScript":
        return cls.loads(Path(path).read_text())


# -- skewed key generation ----------------------------------------------------


@dataclass(frozen=True)
class SkewSpec:
    """Part-then-uniform skew: Zipf(alpha) over ``parts`` equal parts.

    ``shuffle_period`` is in operations; None reshuffles once per batch.
    """

    alpha: float = 0.0
    parts: int = 2048
    shuffle_period: int | None = None
    universe: str = "all"  # "all" (64-bit space) or "existing" (live keys)

    def __post_init__(self):
        if self.alpha < 0 or self.parts < 1:
            raise ValueError("need alpha >= 0 and parts >= 1")
        if self.universe not in ("all", "existing"):
            raise ValueError(f"unknown universe {self.universe!r}")


def zipf_pmf(parts: int, alpha: float) -> np.ndarray:
    w = np.arange(1, parts + 1, dtype=np.float64) ** -alpha
    return w / w.sum()


class PartSampler:
    """Draws part ids; the rank-to-part permutation is reshuffled periodically."""

    def __init__(self, spec: SkewSpec, rng: np.random.Generator, parts: int | None = None):
        self.spec = spec
        self.rng = rng
        self.parts = parts or spec.parts
        self.cdf = np.cumsum(zipf_pmf(self.parts, spec.alpha))
        self.cdf[-1] = 1.0
        self.perm = rng.permutation(self.parts)
        self.since_shuffle = 0

    def shuffle(self) -> None:
        self.perm = self.rng.permutation(self.parts)
        self.since_shuffle = 0

    def draw(self, count: int) -> np.ndarray:
        period = self.spec.shuffle_period
        if period is None:
            self.shuffle()
            return self._ranks(count)
        out = []
        left = count
        while left:
            if self.since_shuffle >= period:
                self.shuffle()
            take = min(left, period - self.since_shuffle)
            out.append(self._ranks(take))
            self.since_shuffle += take
            left -= take
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    def _ranks(self, count: int) -> np.ndarray:
        u = self.rng.random(count)
        ranks = np.searchsorted(self.cdf, u, side="right")
        return self.perm[np.minimum(ranks, self.parts - 1)]


def gen_modified_zipfian(spec: SkewSpec, count: int, rng: np.random.Generator,
                         live_keys: Sequence[int] | None = None,
                         sampler: PartSampler | None = None) -> list[int]:
    """Keys drawn by choosing a part by Zipf rank, then uniformly inside it."""
    if count == 0:
        return []
    if spec.universe == "existing":
        if live_keys is None or len(live_keys) == 0:
            raise ValueError("existing-key workload needs a non-empty live key set")
        n = len(live_keys)
        parts = min(spec.parts, n)
        sampler = sampler if sampler is not None and sampler.parts == parts else PartSampler(spec, rng, parts)
        p = sampler.draw(count).astype(np.int64)
        lo = p * n // parts
        hi = (p + 1) * n // parts
        idx = lo + (rng.random(count) * (hi - lo)).astype(np.int64)
        return [live_keys[i] for i in idx.tolist()]
    sampler = sampler or PartSampler(spec, rng)
    width = KEY_SPACE // spec.parts
    p = sampler.draw(count).astype(np.uint64)
    off = rng.integers(0, width, size=count, dtype=np.uint64)
    return (p * np.uint64(width) + off).tolist()


def uniform_keys(rng: np.random.Generator, count: int) -> list[int]:
    return rng.integers(0, KEY_SPACE, size=count, dtype=np.uint64).tolist()


def random_values(rng: np.random.Generator, count: int) -> list[int]:
    return rng.integers(0, VALUE_LIMIT, size=count, dtype=np.int64).tolist()


def distinct_uniform_keys(rng: np.random.Generator, count: int) -> list[int]:
    keys = np.unique(rng.integers(0, KEY_SPACE, size=count, dtype=np.uint64))
    while len(keys) < count:
        extra = rng.integers(0, KEY_SPACE, size=count - len(keys), dtype=np.uint64)
        keys = np.unique(np.concatenate([keys, extra]))
    return rng.permutation(keys).tolist()


class ScriptBuilder:
    """Stateful generator that tracks the live key set across batches."""

    def __init__(self, rng: np.random.Generator, alpha: float = 0.0, parts: int = 2048,
                 shuffle_period: int | None = None):
        self.rng = rng
        self.alpha = alpha
        self.parts = parts
        self.shuffle_period = shuffle_period
        self.live: SortedList = SortedList()
        self.script = WorkloadScript()

    def spec(self, universe: str) -> SkewSpec:
        return SkewSpec(self.alpha, self.parts, self.shuffle_period, universe)

    def warmup(self, n: int) -> None:
        keys = distinct_uniform_keys(self.rng, n)
        vals = random_values(self.rng, n)
        self.script.warmup = list(zip(keys, vals))
        self.live.update(keys)

    def keys_for(self, op: str, count: int) -> list[int]:
        universe = "existing" if op in EXISTING_KEY_OPS and len(self.live) else "all"
        return gen_modified_zipfian(self.spec(universe), count, self.rng, self.live)

    def scan_width(self) -> int:
        return max(1, SCAN_EXPECTED * KEY_SPACE // max(len(self.live), 1))

    def add(self, op: str, count: int) -> OpBatch:
        keys = self.keys_for(op, count)
        vals = None
        if op in ("insert", "update"):
            vals = random_values(self.rng, count)
        elif op == "scan":
            w = self.scan_width()
            vals = [min(k + w - 1, KEY_SPACE - 1) for k in keys]
        batch = OpBatch(op, keys, vals)
        self.script.batches.append(batch)
        if op == "insert":
            for k in set(keys):
                if k not in self.live:
                    self.live.add(k)
        elif op == "delete":
            for k in set(keys):
                self.live.discard(k)
        return batch


def gen_micro(op: str, init: int, ops: int, batch_size: int, alpha: float, seed: int,
              parts: int = 2048, shuffle_period: int | None = None) -> WorkloadScript:
    """Warm-up inserts followed by same-type batches of one operation."""
    if op not in OPS:
        raise ValueError(f"unknown op {op!r}")
    b = ScriptBuilder(np.random.default_rng(seed), alpha, parts, shuffle_period)
    b.warmup(init)
    left = ops
    while left > 0:
        n = min(batch_size, left)
        b.add(op, n)
        left -= n
    return b.script


YCSB_MIXES = {
    "A": {"predecessor": 0.5, "insert": 0.5},
    "B": {"predecessor": 0.95, "insert": 0.05},
    "C": {"predecessor": 1.0},
    "D": {"insert": 1.0},
    "E": {"scan": 0.95, "insert": 0.05},
}


def gen_ycsb(workload: str, count: int, spec: SkewSpec, rng: np.random.Generator,
             init: int = 0, batch_unit: int = 10**6) -> WorkloadScript:
    """YCSB-style mix; ops of a type are flushed as a batch once their
    expected returned size reaches ``batch_unit`` (1 per point op, 100 per scan)."""
    mix = YCSB_MIXES.get(workload.upper())
    if mix is None:
        raise ValueError(f"unknown YCSB workload {workload!r}")
    b = ScriptBuilder(rng, spec.alpha, spec.parts, spec.shuffle_period)
    if init:
        b.warmup(init)
    names = list(mix)
    picks = rng.choice(len(names), size=count, p=[mix[n] for n in names]) if count else []
    pending = dict.fromkeys(names, 0)
    for t in np.asarray(picks).tolist():
        name = names[t]
        pending[name] += 1
        size = SCAN_EXPECTED if name == "scan" else 1
        if pending[name] * size >= batch_unit:
            b.add(name, pending[name])
            pending[name] = 0
    for name in names:
        if pending[name]:
            b.add(name, pending[name])
    return b.script


def gen_mixed(init: int, point_ops: int, scans: int, batch_size: int, alpha: float,
              seed: int, scan_batch: int | None = None) -> WorkloadScript:
    """Warm-up, then batches of get/update/predecessor/insert/delete in random
    order, interleaved with scan batches."""
    rng = np.random.default_rng(seed)
    b = ScriptBuilder(rng, alpha)
    b.warmup(init)
    kinds = ["get", "update", "predecessor", "insert", "delete"]
    plan = []
    left = point_ops
    while left > 0:
        n = min(batch_size, left)
        plan.append((kinds[int(rng.integers(len(kinds)))], n))
        left -= n
    sb = scan_batch or max(1, batch_size // SCAN_EXPECTED)
    left = scans
    while left > 0:
        n = min(sb, left)
        plan.insert(int(rng.integers(len(plan) + 1)), ("scan", n))
        left -= n
    for op, n in plan:
        b.add(op, n)
    return b.script


# -- text keys ----------------------------------------------------------------

_WORD = re.compile(r"[A-Za-z]+")


def encode_wiki_key(word: str, doc_id: int) -> int:
    """5 bits for each of the first 5 letters, a 15-bit word hash, a 23-bit doc id.

    Letters a..z (case-folded) code as 1..26; padding and other characters as 0.
    """
    return wiki_key(word, doc_id)


def wiki_pairs(lines: Iterable[str]) -> list[tuple[int, int]]:
    """(key, doc id) for every word occurrence; line number = document id."""
    out = []
    for doc, line in enumerate(lines):
        for w in _WORD.findall(line):
            out.append((encode_wiki_key(w, doc), doc))
    return out


def gen_wiki(path, ops: int, batch_size: int, seed: int) -> WorkloadScript:
    """Index every (word, doc) pair, then look up random words by predecessor
    of their largest possible key (latest document holding a word with that
    prefix and hash)."""
    text = Path(path).read_text(encoding="utf-8", errors="replace").splitlines()
    pairs = list(dict(wiki_pairs(text)).items())
    rng = np.random.default_rng(seed)
    script = WorkloadScript(warmup=pairs)
    if not pairs or ops <= 0:
        return script
    words = sorted({w.lower() for line in text for w in _WORD.findall(line)})
    picks = rng.integers(0, len(words), size=ops).tolist()
    queries = [encode_wiki_key(words[i], (1 << 23) - 1) for i in picks]
    for a in range(0, ops, batch_size):
        script.batches.append(OpBatch("predecessor", queries[a:a + batch_size]))
    return script

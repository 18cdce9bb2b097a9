"""Bulk-synchronous simulation of a processing-in-memory machine.

The host talks to ``P`` modules through four primitives: ``scatter`` and
``broadcast`` fill task buffers, ``launch`` runs a handler on every module,
``gather`` collects the reply buffers.  Every word that crosses the
host/module boundary is counted, both as sent (unpadded) and as if every
buffer were padded to the longest one in its transfer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

WORD_BYTES = 8

PTR_SHIFT = 40
ADDR_MASK = (1 << PTR_SHIFT) - 1
NULL_PTR = -1

ACCOUNTING_MODES = ("unpadded", "padded")


class SimulationError(RuntimeError):
    """Base class for faults raised by the simulated machine."""


class IsolationFault(SimulationError):
    """A module touched memory that does not belong to it."""


class ProtocolError(SimulationError):
    """Primitives were called out of order."""


class ConfigurationError(ValueError):
    """Bad machine parameters or buffer shapes."""


class MemoryOverflow(SimulationError):
    def __init__(self, module: int, used: int, capacity: int):
        super().__init__(f"module {module} out of memory: {used} > {capacity} words")
        self.module = module
        self.used = used
        self.capacity = capacity


def make_ptr(module: int, addr: int) -> int:
    """Pack (module, address) into one word."""
    return (module << PTR_SHIFT) | addr


def ptr_module(ptr: int) -> int:
    return ptr >> PTR_SHIFT


def ptr_addr(ptr: int) -> int:
    return ptr & ADDR_MASK


@dataclass(frozen=True)
class PimPointer:
    module: int
    addr: int

    def pack(self) -> int:
        return make_ptr(self.module, self.addr)

    @classmethod
    def unpack(cls, word: int) -> "PimPointer":
        return cls(word >> PTR_SHIFT, word & ADDR_MASK)


class Buffer(list):
    """A list of tasks or replies that knows its size in words.

    Plain lists are billed one word per element.
    """

    __slots__ = ("words",)

    def __init__(self, items: Iterable[Any] = (), words: int | None = None):
        super().__init__(items)
        self.words = len(self) if words is None else words


def buffer_words(buf: Sequence[Any]) -> int:
    w = getattr(buf, "words", None)
    return len(buf) if w is None else w


@dataclass(frozen=True)
class RoundRecord:
    round_id: int
    recv: tuple[int, ...]
    sent: tuple[int, ...]
    padded_recv: tuple[int, ...]
    padded_sent: tuple[int, ...]
    host_out: int
    host_in: int

    def load(self, padded: bool = False) -> tuple[int, ...]:
        r, s = (self.padded_recv, self.padded_sent) if padded else (self.recv, self.sent)
        return tuple(a + b for a, b in zip(r, s))


@dataclass(frozen=True)
class CommStats:
    """Immutable counter snapshot.

    ``per_module_sent``/``per_module_recv`` follow the machine's accounting
    mode; the ``unpadded_*`` and ``padded_*`` fields are always present.
    """

    accounting: str
    rounds: int
    unpadded_sent: tuple[int, ...]
    unpadded_recv: tuple[int, ...]
    padded_sent: tuple[int, ...]
    padded_recv: tuple[int, ...]
    work: tuple[int, ...]
    host_out: int
    host_in: int
    per_round_log: tuple[RoundRecord, ...] = field(repr=False)

    @property
    def P(self) -> int:
        return len(self.work)

    @property
    def per_module_sent(self) -> tuple[int, ...]:
        return self.padded_sent if self.accounting == "padded" else self.unpadded_sent

    @property
    def per_module_recv(self) -> tuple[int, ...]:
        return self.padded_recv if self.accounting == "padded" else self.unpadded_recv

    @property
    def per_module_words(self) -> tuple[int, ...]:
        return tuple(a + b for a, b in zip(self.per_module_sent, self.per_module_recv))

    @property
    def total_words(self) -> int:
        return sum(self.per_module_words)

    def imbalance(self) -> float:
        return imbalance_ratio(self.per_module_words)

    def delta(self, earlier: "CommStats") -> "CommStats":
        """Counters accumulated since ``earlier`` (same machine)."""

        def sub(a, b):
            return tuple(x - y for x, y in zip(a, b))

        return CommStats(
            accounting=self.accounting,
            rounds=self.rounds - earlier.rounds,
            unpadded_sent=sub(self.unpadded_sent, earlier.unpadded_sent),
            unpadded_recv=sub(self.unpadded_recv, earlier.unpadded_recv),
            padded_sent=sub(self.padded_sent, earlier.padded_sent),
            padded_recv=sub(self.padded_recv, earlier.padded_recv),
            work=sub(self.work, earlier.work),
            host_out=self.host_out - earlier.host_out,
            host_in=self.host_in - earlier.host_in,
            per_round_log=self.per_round_log[len(earlier.per_round_log):],
        )


def imbalance_ratio(loads: Sequence[float]) -> float:
    """max/mean of a load vector; 1.0 for an all-zero vector."""
    total = sum(loads)
    if total == 0:
        return 1.0
    return max(loads) * len(loads) / total


class PimModule:
    """One module: private memory plus task/reply buffers.

    Memory is only reachable while this module's handler is running (or
    inside :meth:`PimMachine.inspect`).
    """

    __slots__ = (
        "id", "memory", "next_addr", "tasks", "replies", "broadcast_buf",
        "used_words", "capacity", "_machine",
    )

    def __init__(self, machine: "PimMachine", mid: int, capacity: int | None):
        self._machine = machine
        self.id = mid
        self.memory: dict[int, Any] = {}
        self.next_addr = 0
        self.tasks: list = []
        self.replies: list = []
        self.broadcast_buf: list = []
        self.used_words = 0
        self.capacity = capacity

    def _guard(self) -> None:
        m = self._machine
        if m._active is not self and not m._inspecting:
            raise IsolationFault(f"module {self.id} memory accessed from outside its handler")

    def _own(self, ptr: int) -> int:
        if ptr < 0 or ptr >> PTR_SHIFT != self.id:
            raise IsolationFault(f"module {self.id} dereferenced foreign pointer {ptr:#x}")
        return ptr & ADDR_MASK

    def alloc(self, obj: Any, words: int = 0) -> int:
        """Store ``obj`` at a fresh address and return its packed pointer."""
        self._guard()
        addr = self.next_addr
        self.next_addr += 1
        self.memory[addr] = obj
        if words:
            self.charge(words)
        return make_ptr(self.id, addr)

    def load(self, ptr: int) -> Any:
        self._guard()
        return self.memory[self._own(ptr)]

    def store(self, ptr: int, obj: Any) -> None:
        self._guard()
        addr = self._own(ptr)
        if addr not in self.memory:
            raise KeyError(f"store to unallocated address {addr} on module {self.id}")
        self.memory[addr] = obj

    def free(self, ptr: int, words: int = 0) -> Any:
        self._guard()
        obj = self.memory.pop(self._own(ptr))
        if words:
            self.used_words -= words
        return obj

    def charge(self, words: int) -> None:
        """Account ``words`` of local memory use; may overflow."""
        self.used_words += words
        if self.capacity is not None and self.used_words > self.capacity:
            raise MemoryOverflow(self.id, self.used_words, self.capacity)


Handler = Callable[[PimModule, list], Sequence[Any]]


class PimMachine:
    def __init__(self, P: int, accounting: str = "unpadded", capacity_words: int | None = None):
        if P < 1:
            raise ConfigurationError("P must be >= 1")
        if accounting not in ACCOUNTING_MODES:
            raise ConfigurationError(f"unknown accounting mode {accounting!r}")
        self.P = P
        self.accounting = accounting
        self.word_size = WORD_BYTES
        self.modules = [PimModule(self, m, capacity_words) for m in range(P)]
        self._active: PimModule | None = None
        self._inspecting = False
        self._launched = False
        self.rounds = 0
        self._sent = [0] * P
        self._recv = [0] * P
        self._psent = [0] * P
        self._precv = [0] * P
        self._work = [0] * P
        self._host_out = 0
        self._host_in = 0
        self._log: list[RoundRecord] = []
        # traffic since the previous round closed, per module
        self._cur_recv = [0] * P
        self._cur_precv = [0] * P
        self._cur_out = 0

    # -- transfers -------------------------------------------------------

    def _charge_recv(self, lengths: Sequence[int]) -> None:
        top = max(lengths) if lengths else 0
        if top == 0:
            return
        for m, n in enumerate(lengths):
            self._recv[m] += n
            self._precv[m] += top
            self._cur_recv[m] += n
            self._cur_precv[m] += top
        out = sum(lengths)
        self._host_out += out
        self._cur_out += out

    def scatter(self, buffers: Sequence[Sequence[Any]]) -> None:
        if len(buffers) != self.P:
            raise ConfigurationError(f"scatter needs {self.P} buffers, got {len(buffers)}")
        lengths = [buffer_words(b) for b in buffers]
        for mod, buf in zip(self.modules, buffers):
            mod.tasks = buf
        self._charge_recv(lengths)

    def broadcast(self, buffer: Sequence[Any]) -> None:
        n = buffer_words(buffer)
        for mod in self.modules:
            mod.broadcast_buf = buffer
        self._charge_recv([n] * self.P)

    def launch(self, handler: Handler) -> None:
        self.rounds += 1
        try:
            for mod in self.modules:
                self._active = mod
                replies = handler(mod, mod.tasks)
                self._work[mod.id] += len(mod.tasks)
                mod.replies = [] if replies is None else replies
        finally:
            self._active = None
        for mod in self.modules:
            mod.tasks = []
            mod.broadcast_buf = []
        self._launched = True

    def gather(self) -> list[Sequence[Any]]:
        if not self._launched:
            raise ProtocolError("gather without a preceding launch")
        self._launched = False
        out = [mod.replies for mod in self.modules]
        lengths = [buffer_words(r) for r in out]
        top = max(lengths) if lengths else 0
        padded = [top] * self.P if top else [0] * self.P
        for m, n in enumerate(lengths):
            self._sent[m] += n
            self._psent[m] += padded[m]
            mod = self.modules[m]
            mod.replies = []
        host_in = sum(lengths)
        self._host_in += host_in
        self._log.append(RoundRecord(
            round_id=self.rounds,
            recv=tuple(self._cur_recv),
            sent=tuple(lengths),
            padded_recv=tuple(self._cur_precv),
            padded_sent=tuple(padded),
            host_out=self._cur_out,
            host_in=host_in,
        ))
        self._cur_recv = [0] * self.P
        self._cur_precv = [0] * self.P
        self._cur_out = 0
        return out

    def run_round(self, buffers: Sequence[Sequence[Any]] | None, handler: Handler,
                  broadcast: Sequence[Any] | None = None) -> list[Sequence[Any]]:
        """scatter (+ broadcast) -> launch -> gather."""
        if buffers is not None:
            self.scatter(buffers)
        if broadcast:
            self.broadcast(broadcast)
        self.launch(handler)
        return self.gather()

    # -- inspection ------------------------------------------------------

    def snapshot_stats(self) -> CommStats:
        return CommStats(
            accounting=self.accounting,
            rounds=self.rounds,
            unpadded_sent=tuple(self._sent),
            unpadded_recv=tuple(self._recv),
            padded_sent=tuple(self._psent),
            padded_recv=tuple(self._precv),
            work=tuple(self._work),
            host_out=self._host_out,
            host_in=self._host_in,
            per_round_log=tuple(self._log),
        )

    def inspect(self) -> "_Inspection":
        """Uncounted host-side access to module memory, for checks and tests."""
        return _Inspection(self)

    def debug_load(self, ptr: int) -> Any:
        with self.inspect():
            return self.modules[ptr_module(ptr)].load(ptr)


class _Inspection:
    def __init__(self, machine: PimMachine):
        self.machine = machine

    def __enter__(self) -> PimMachine:
        self._prev = self.machine._inspecting
        self.machine._inspecting = True
        return self.machine

    def __exit__(self, *exc) -> None:
        self.machine._inspecting = self._prev

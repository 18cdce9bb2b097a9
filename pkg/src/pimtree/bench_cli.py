"""Experiment runner: ``pimtree bench | gen-workload | compare``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .baseline_range import RangePartitionedIndex, capacity_for
from .pim_model import CommStats, MemoryOverflow
from .pim_tree import PimTree, TreeConfig
from .runner import run_batch
from .workloads import OPS, SkewSpec, WorkloadScript, gen_micro, gen_wiki, gen_ycsb

COLUMNS = ["alpha", "batch", "op", "ops", "rounds", "total_words", "per_op_words",
           "max_module_words", "mean_module_words", "imbalance", "status"]
INDEXES = ("pim-tree", "range")


class BenchError(Exception):
    """Bad configuration or input; reported as a machine-readable error."""


@dataclass
class RunConfig:
    index: str = "pim-tree"
    pim_modules: int = 64
    fanout: int = 16
    init_size: int = 100_000
    ops: int = 100_000
    batch_size: int = 12_288
    alpha: tuple[float, ...] = (0.0,)
    workload: str = "predecessor"
    seed: int = 0
    accounting: str = "unpadded"
    capacity_factor: float | None = None
    parts: int = 2048
    out: str | None = field(default=None, metadata={"echo": False})
    format: str = "csv"

    def __post_init__(self):
        if isinstance(self.alpha, (int, float)):
            self.alpha = (float(self.alpha),)
        self.alpha = tuple(float(a) for a in self.alpha)

    def validate(self) -> None:
        if self.index not in INDEXES:
            raise BenchError(f"unknown index kind {self.index!r}")
        if self.pim_modules < 1 or self.fanout < 2 or self.batch_size < 1:
            raise BenchError("pim_modules, fanout and batch_size must be positive")
        if self.init_size < 0 or self.ops < 0:
            raise BenchError("counts must be non-negative")
        if self.format not in ("csv", "json"):
            raise BenchError(f"unknown format {self.format!r}")
        if self.accounting not in ("unpadded", "padded"):
            raise BenchError(f"unknown accounting mode {self.accounting!r}")
        if any(a < 0 for a in self.alpha):
            raise BenchError("alpha must be >= 0")
        kind, _, arg = self.workload.partition(":")
        if kind not in OPS and kind not in ("ycsb", "wiki", "script"):
            raise BenchError(f"unknown workload {self.workload!r}")
        if kind in ("wiki", "script") and not arg:
            raise BenchError(f"workload {kind} needs a file: {kind}:<path>")

    def echo(self) -> dict:
        d = asdict(self)
        for f in fields(self):
            if f.metadata.get("echo") is False:
                d.pop(f.name)
        d["alpha"] = list(self.alpha)
        return d

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise BenchError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def build_script(cfg: RunConfig, alpha: float) -> WorkloadScript:
    kind, _, arg = cfg.workload.partition(":")
    if kind in OPS:
        return gen_micro(kind, cfg.init_size, cfg.ops, cfg.batch_size, alpha, cfg.seed, cfg.parts)
    if kind == "ycsb":
        spec = SkewSpec(alpha, cfg.parts)
        return gen_ycsb(arg or "A", cfg.ops, spec, np.random.default_rng(cfg.seed), cfg.init_size, cfg.batch_size)
    if kind == "wiki":
        return gen_wiki(arg, cfg.ops, cfg.batch_size, cfg.seed)
    return WorkloadScript.load(arg)


def make_index(cfg: RunConfig, script: WorkloadScript):
    if cfg.index == "pim-tree":
        return PimTree(TreeConfig(P=cfg.pim_modules, B=cfg.fanout, seed=cfg.seed, accounting=cfg.accounting))
    cap = None
    if cfg.capacity_factor is not None:
        inserts = sum(len(b) for b in script.batches if b.op == "insert")
        cap = capacity_for(len(script.warmup) + inserts, cfg.pim_modules, cfg.capacity_factor)
    return RangePartitionedIndex(cfg.pim_modules, cfg.accounting, cap)


def batch_row(alpha: float, batch_id, op: str, n: int, d: CommStats, status: str = "ok") -> dict:
    loads = d.per_module_words
    total = sum(loads)
    mean = total / len(loads)
    return {
        "alpha": f"{alpha:g}", "batch": batch_id, "op": op, "ops": n, "rounds": d.rounds,
        "total_words": total, "per_op_words": f"{total / n:.4f}" if n else "0.0000",
        "max_module_words": max(loads), "mean_module_words": f"{mean:.4f}",
        "imbalance": f"{(max(loads) / mean) if mean else 1.0:.4f}", "status": status,
    }


def summary_row(alpha: float, workload: str, rows: list[dict]) -> dict:
    n = sum(r["ops"] for r in rows)
    total = sum(r["total_words"] for r in rows)
    k = max(len(rows), 1)
    status = next((r["status"] for r in rows if r["status"] != "ok"), "ok")
    return {
        "alpha": f"{alpha:g}", "batch": "summary", "op": workload, "ops": n,
        "rounds": sum(r["rounds"] for r in rows), "total_words": total,
        "per_op_words": f"{total / n:.4f}" if n else "0.0000",
        "max_module_words": sum(r["max_module_words"] for r in rows),
        "mean_module_words": f"{sum(float(r['mean_module_words']) for r in rows):.4f}",
        "imbalance": f"{sum(float(r['imbalance']) for r in rows) / k:.4f}", "status": status,
    }


def run(cfg: RunConfig) -> dict:
    """Run every alpha of ``cfg``; returns ``{"config": ..., "rows": [...]}``."""
    cfg.validate()
    rows: list[dict] = []
    if cfg.ops == 0:
        return {"config": cfg.echo(), "rows": rows}
    for alpha in cfg.alpha:
        script = build_script(cfg, alpha)
        index = make_index(cfg, script)
        batch_rows: list[dict] = []
        try:
            if script.warmup:
                index.insert_batch(script.warmup)
        except MemoryOverflow:
            batch_rows.append(batch_row(alpha, "warmup", "insert", len(script.warmup),
                                        index.machine.snapshot_stats(), "overflow"))
            script.batches = []
        for i, batch in enumerate(script.batches):
            before = index.machine.snapshot_stats()
            status = "ok"
            try:
                run_batch(index, batch)
            except MemoryOverflow:
                status = "overflow"
            d = index.machine.snapshot_stats().delta(before)
            batch_rows.append(batch_row(alpha, i, batch.op, len(batch), d, status))
            if status != "ok":
                break
        rows.extend(batch_rows)
        rows.append(summary_row(alpha, cfg.workload, batch_rows))
    return {"config": cfg.echo(), "rows": rows}


def render(report: dict, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# config " + json.dumps(report["config"], sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(report["rows"])
    return buf.getvalue()


def read_report(path) -> list[dict]:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return [{k: str(v) for k, v in r.items()} for r in json.loads(text)["rows"]]
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def compare(rows_a: Sequence[dict], rows_b: Sequence[dict]) -> list[dict]:
    """Per-alpha ratios (A over B) of per-op words and imbalance."""
    def by_alpha(rows):
        out: dict[str, dict] = {}
        for r in rows:
            slot = out.setdefault(r["alpha"], {"batches": [], "summary": None})
            if r["batch"] == "summary":
                slot["summary"] = r
            else:
                slot["batches"].append(r)
        return out

    a, b = by_alpha(rows_a), by_alpha(rows_b)
    if a.keys() != b.keys():
        raise BenchError(f"schedule mismatch: alphas {sorted(a)} vs {sorted(b)}")
    table = []
    for alpha in a:
        sa, sb = a[alpha]["summary"], b[alpha]["summary"]
        if sa is None or sb is None:
            raise BenchError(f"schedule mismatch: missing summary for alpha {alpha}")
        failed = sa["status"] != "ok" or sb["status"] != "ok"
        sched_a = [(r["op"], r["ops"]) for r in a[alpha]["batches"]]
        sched_b = [(r["op"], r["ops"]) for r in b[alpha]["batches"]]
        if not failed and sched_a != sched_b:
            raise BenchError(f"schedule mismatch at alpha {alpha}")

        def ratio(x, y):
            x, y = float(x), float(y)
            return f"{x / y:.4f}" if y else ("1.0000" if x == 0 else "inf")

        table.append({
            "alpha": alpha,
            "per_op_words_ratio": ratio(sa["per_op_words"], sb["per_op_words"]),
            "imbalance_ratio": ratio(sa["imbalance"], sb["imbalance"]),
            "status_a": sa["status"], "status_b": sb["status"],
        })
    return table


# -- command line --------------------------------------------------------------


def _alphas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pimtree", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        # defaults are None so that only explicit flags override --config
        sp.add_argument("--config", help="JSON file with RunConfig fields")
        sp.add_argument("--pim-modules", type=int)
        sp.add_argument("--fanout", type=int)
        sp.add_argument("--init-size", type=int)
        sp.add_argument("--ops", type=int)
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--alpha", type=_alphas, help="one value or a comma-separated list")
        sp.add_argument("--workload", help="get|update|predecessor|insert|delete|scan|ycsb:A..E|wiki:FILE|script:FILE")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--parts", type=int, help="key-space parts for the skewed sampler")
        sp.add_argument("--out")

    b = sub.add_parser("bench", help="run an index on a workload and report traffic")
    common(b)
    b.add_argument("--index", choices=INDEXES)
    b.add_argument("--accounting", choices=("unpadded", "padded"))
    b.add_argument("--capacity-factor", type=float, help="range index: per-module capacity as a multiple of the fair share")
    b.add_argument("--format", choices=("csv", "json"))

    g = sub.add_parser("gen-workload", help="write a workload script")
    common(g)

    c = sub.add_parser("compare", help="ratio table of two reports")
    c.add_argument("report_a")
    c.add_argument("report_b")
    c.add_argument("--out")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(ns.config) if ns.config else RunConfig()
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.__post_init__()
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    ns = _parser().parse_args(argv)
    try:
        if ns.command == "compare":
            table = compare(read_report(ns.report_a), read_report(ns.report_b))
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=["alpha", "per_op_words_ratio", "imbalance_ratio",
                                                "status_a", "status_b"], lineterminator="\n")
            w.writeheader()
            w.writerows(table)
            _emit(buf.getvalue(), ns.out)
            return 0
        cfg = config_from_args(ns)
        if ns.command == "gen-workload":
            cfg.validate()
            if len(cfg.alpha) != 1:
                raise BenchError("gen-workload takes a single alpha")
            _emit(build_script(cfg, cfg.alpha[0]).dumps(), cfg.out)
            return 0
        _emit(render(run(cfg), cfg.format), cfg.out)
        return 0
    except (BenchError, ValueError, OSError) as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

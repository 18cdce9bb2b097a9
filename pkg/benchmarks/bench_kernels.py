"""Time the compiled batch kernels against their pure-Python versions.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from pimtree import _kernels_py as py

try:
    from pimtree import _kernels as cy
except ImportError:
    cy = None


def cases(n: int, rng: np.random.Generator):
    keys = rng.integers(0, 1 << 64, n, dtype=np.uint64).tolist()
    mods = rng.integers(0, 64, n).tolist()
    weights = rng.integers(1, 100, n).tolist()
    lefts = rng.integers(0, 1 << 40, n // 10).tolist()
    rights = [l + int(w) for l, w in zip(lefts, rng.integers(0, 1 << 30, len(lefts)))]
    words = ["".join(chr(97 + int(c)) for c in rng.integers(0, 26, 8)) for _ in range(n // 10)]
    return {
        "hash_modules": lambda m: m.hash_modules(keys, 64),
        "tally": lambda m: m.tally(mods, weights, 64),
        "merge_intervals": lambda m: m.merge_intervals(lefts, rights),
        "wiki_key": lambda m: [m.wiki_key(w, i) for i, w in enumerate(words)],
    }


def _plain(result):
    if isinstance(result, tuple):
        return [list(x) for x in result]
    return list(result)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if cy is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':<16}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases(args.n, np.random.default_rng(0)).items():
        assert _plain(fn(py)) == _plain(fn(cy)), f"{name}: backends disagree"
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<16}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()

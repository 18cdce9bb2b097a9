"""Kernel backend selection.

The compiled extension is used when it was built; set
``PIMTREE_PURE_PYTHON=1`` to force the pure-Python versions.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("PIMTREE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

splitmix64 = _impl.splitmix64
hash_modules = _impl.hash_modules
tally = _impl.tally
merge_intervals = _impl.merge_intervals
fnv1a = _impl.fnv1a
wiki_key = _impl.wiki_key

__all__ = ["BACKEND", "splitmix64", "hash_modules", "tally", "merge_intervals", "fnv1a", "wiki_key"]

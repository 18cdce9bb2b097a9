"""The PIM-tree index."""

from .config import TreeConfig, check_balance, generate_heights
from .integrity import check_structure, l3_keys, level_keys, verify_shadow_integrity
from .layout import KEY_LIMIT, SENTINEL
from .scan import ScanMixin, plan_ranges
from .tree import PimTree as _TreeCore, SearchInfo


class PimTree(ScanMixin, _TreeCore):
    """Batch-parallel ordered index on a simulated PIM machine."""

    def verify_shadow_integrity(self) -> list[str]:
        return verify_shadow_integrity(self)

    def check_structure(self) -> list[str]:
        return check_structure(self)

    def level_keys(self, level: int) -> list[int]:
        return level_keys(self, level)

    def l3_keys(self) -> list[int]:
        return l3_keys(self)


__all__ = [
    "PimTree", "TreeConfig", "SearchInfo", "check_balance", "generate_heights",
    "plan_ranges", "KEY_LIMIT", "SENTINEL",
]

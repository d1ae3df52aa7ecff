"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``HYPLAB_PURE=1`` to force
the numpy fallback. ``BACKEND`` names the module in use.
"""

from __future__ import annotations

import os

if os.environ.get("HYPLAB_PURE", "") not in ("", "0"):
    from hyplab import _pykernels as _impl
else:
    try:
        from hyplab import _ckernels as _impl
    except ImportError:
        from hyplab import _pykernels as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernels") else "python"

LADDER_LIMIT = _impl.LADDER_LIMIT
farey_ladder = _impl.farey_ladder
bfs_all_pairs = _impl.bfs_all_pairs
canonical_predecessors = _impl.canonical_predecessors
delta_four_point = _impl.delta_four_point
interval_distance_table = _impl.interval_distance_table
delta_interval_slim = _impl.delta_interval_slim
farey_box_bfs = _impl.farey_box_bfs

__all__ = [
    "BACKEND",
    "LADDER_LIMIT",
    "farey_ladder",
    "bfs_all_pairs",
    "canonical_predecessors",
    "delta_four_point",
    "interval_distance_table",
    "delta_interval_slim",
    "farey_box_bfs",
]

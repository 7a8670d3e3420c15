"""Grid-shape budgeting: how many nodes each subdomain's uniform grid gets.

The total node budget is the oversampling ratio times the point count.  Each
leaf receives a share proportional to its point count, shaped to match its
box aspect ratio.  Rounding residue against the ideal share is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .cloud import BoundingBox
from .errors import SubgridError
from .kdtree import Partition


@dataclass(frozen=True)
class GridShape:
    """Per-axis node counts over a box: >= 2 on non-degenerate axes, 1 on degenerate."""

    dims: Tuple[int, ...]
    box: BoundingBox

    def __post_init__(self) -> None:
        dims = tuple(int(v) for v in self.dims)
        if len(dims) != self.box.dims:
            raise SubgridError("grid shape must have one entry per box axis")
        for v, deg in zip(dims, ~self.box.nondegenerate_axes()):
            if deg and v != 1:
                raise SubgridError("degenerate axes carry exactly one node")
            if not deg and v < 2:
                raise SubgridError("non-degenerate axes need at least two nodes")
        object.__setattr__(self, "dims", dims)

    @property
    def n_nodes(self) -> int:
        out = 1
        for v in self.dims:
            out *= v
        return out


def shape_for(box: BoundingBox, target_nodes: float) -> GridShape:
    """Aspect-ratio-matched node counts for one box with a given node budget.

    N_i = clamp(round(target^(1/d') * L_i / g), 2, inf) on the d' non-degenerate
    axes (g is their geometric extent mean), 1 on degenerate axes.  Rounding
    is nearest-even.
    """
    ext = box.extents
    nondeg = box.nondegenerate_axes()
    d_eff = int(nondeg.sum())
    dims = np.ones(box.dims, dtype=np.int64)
    if d_eff > 0:
        g = float(np.exp(np.mean(np.log(ext[nondeg]))))
        side = max(float(target_nodes), 0.0) ** (1.0 / d_eff)
        raw = np.rint(side * ext[nondeg] / g)
        dims[nondeg] = np.maximum(raw, 2.0).astype(np.int64)
    return GridShape(tuple(int(v) for v in dims), box)


def allocate_shapes(partition: Partition, oversampling_ratio: float) -> List[GridShape]:
    """One GridShape per leaf, budgeted by the oversampling ratio.

    Total budget S = round(ratio * m); leaf k targets S * m_k / m nodes.
    """
    if not oversampling_ratio > 0.0:
        raise SubgridError("oversampling ratio must be positive")
    m = partition.total_points
    budget = float(np.rint(oversampling_ratio * m))
    shapes = []
    for ids, box in zip(partition.leaf_ids, partition.boxes):
        shapes.append(shape_for(box, budget * ids.size / m))
    return shapes

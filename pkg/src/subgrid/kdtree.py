"""Greedy k-d tree decomposition of a point cloud into near-uniform subdomains.

The tree greedily splits whichever leaf carries the most point-count-weighted
divergence from uniformity.  A split happens on the leaf box's largest axis,
at whichever of a fixed set of equidistant interior thresholds maximizes the
divergence gain (parent divergence minus count-weighted child divergences,
each measured on the child's own tight box).  The loop stops at the requested
leaf count, or earlier if every leaf is unsplittable; early termination is
reported on the result, never raised.

All tie-breaks go to the lowest index / smallest threshold, so identical
inputs give bit-identical partitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cloud import Array, BoundingBox, PointCloud, bounding_box
from .errors import SubgridError
from .histogram import (
    bin_spec_for,
    cell_indices,
    kl_divergence_of_counts,
    kl_to_uniform,
    spec_from_extents,
)

DEFAULT_CANDIDATES = 5


@dataclass(frozen=True)
class SplitCandidate:
    """A scored hyperplane: split axis, threshold, divergence gain."""

    axis: int
    threshold: float
    gain: float


@dataclass(frozen=True)
class SplitRecord:
    """One executed iteration of the greedy loop."""

    leaf: int
    axis: int
    threshold: float
    gain: float
    objective_after: float


@dataclass(frozen=True)
class TreeNode:
    """Binary split node.  Child references: >= 0 is a node index into the
    node list; < 0 encodes leaf index -(ref + 1)."""

    axis: int
    threshold: float
    left: int
    right: int


def leaf_ref(leaf_index: int) -> int:
    return -(leaf_index + 1)


def ref_is_leaf(ref: int) -> bool:
    return ref < 0


def ref_leaf_index(ref: int) -> int:
    return -ref - 1


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of a cloud by leaf sub-clouds with their tight boxes.

    subclouds may be None for partitions loaded from disk without their
    cloud; leaf_ids always carries each leaf's point ids (manifest order of
    the originating cloud).  splits is the execution log of decompose, absent
    on loaded partitions.
    """

    leaf_ids: Tuple[Array, ...]
    boxes: Tuple[BoundingBox, ...]
    nodes: Tuple[TreeNode, ...]
    unsplittable: Tuple[bool, ...]
    subclouds: Optional[Tuple[PointCloud, ...]] = None
    splits: Optional[Tuple[SplitRecord, ...]] = None

    def __post_init__(self) -> None:
        k = len(self.leaf_ids)
        if k < 1:
            raise SubgridError("partition must have at least one leaf")
        if len(self.boxes) != k or len(self.unsplittable) != k:
            raise SubgridError("per-leaf fields must have matching lengths")
        if self.subclouds is not None and len(self.subclouds) != k:
            raise SubgridError("per-leaf fields must have matching lengths")
        ids = []
        for a in self.leaf_ids:
            arr = np.ascontiguousarray(a, dtype=np.int64)
            arr.flags.writeable = False
            ids.append(arr)
        object.__setattr__(self, "leaf_ids", tuple(ids))

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    @property
    def total_points(self) -> int:
        return int(sum(a.size for a in self.leaf_ids))

    @property
    def early_terminated(self) -> bool:
        """True when the greedy loop stopped before reaching its leaf target."""
        return all(self.unsplittable)


# ---------------------------------------------------------------------------
# internal engine: raw array stats shared by the public ops and decompose


def _tight_box(pts: Array) -> BoundingBox:
    return BoundingBox(pts.min(axis=0), pts.max(axis=0))


def _stats(pts: Array) -> Tuple[BoundingBox, float]:
    """Tight box and divergence-from-uniform of a non-empty coordinate array."""
    box = _tight_box(pts)
    spec = spec_from_extents(pts.shape[0], box.extents)
    flat = cell_indices(pts, box, spec)
    counts = np.bincount(flat, minlength=spec.n_cells)
    kl = max(kl_divergence_of_counts(counts, pts.shape[0]), 0.0)
    return box, kl


def _thresholds(lo: float, hi: float, n_max: int) -> List[float]:
    step = (hi - lo) / (n_max + 1)
    return [lo + i * step for i in range(1, n_max + 1)]


@dataclass
class _Leaf:
    rows: Array
    box: BoundingBox
    kl: float
    unsplittable: bool = False

    @property
    def priority(self) -> float:
        return self.rows.size * self.kl


def _best_split_rows(pts: Array, leaf: _Leaf, n_max: int):
    """Best candidate on the largest-extent axis, or None if unsplittable.

    Returns (axis, threshold, gain, (lrows, lbox, lkl), (rrows, rbox, rkl)).
    """
    ext = leaf.box.extents
    if not (ext > 0.0).any():
        return None
    axis = int(np.argmax(ext))
    coords = pts[leaf.rows, axis]
    total = leaf.rows.size
    best = None
    for b in _thresholds(float(leaf.box.lo[axis]), float(leaf.box.hi[axis]), n_max):
        mask = coords <= b
        nl = int(mask.sum())
        nr = total - nl
        if nl == 0 or nr == 0:
            continue
        lrows = leaf.rows[mask]
        rrows = leaf.rows[~mask]
        lbox, lkl = _stats(pts[lrows])
        rbox, rkl = _stats(pts[rrows])
        gain = leaf.kl - (nl / total) * lkl - (nr / total) * rkl
        if best is None or gain > best[2]:
            best = (axis, b, gain, (lrows, lbox, lkl), (rrows, rbox, rkl))
    return best


# ---------------------------------------------------------------------------
# public operations


def candidate_thresholds(cloud: PointCloud, axis: int, n_max: int = DEFAULT_CANDIDATES) -> List[float]:
    """The n_max equidistant strictly-interior thresholds on the given axis."""
    if n_max < 1:
        raise SubgridError("candidate count must be >= 1")
    if not 0 <= axis < cloud.dims:
        raise SubgridError(f"axis {axis} out of range for {cloud.dims}-dimensional cloud")
    box = bounding_box(cloud)
    if box.extents[axis] == 0.0:
        raise SubgridError("zero-extent axis")
    return _thresholds(float(box.lo[axis]), float(box.hi[axis]), n_max)


def split_gain(cloud: PointCloud, axis: int, b: float) -> float:
    """Divergence gain of splitting at x[axis] = b.

    Parent divergence minus count-weighted child divergences; every term uses
    that (sub)cloud's own bin counts and tight box.
    """
    if not 0 <= axis < cloud.dims:
        raise SubgridError(f"axis {axis} out of range for {cloud.dims}-dimensional cloud")
    pts = cloud.points
    mask = pts[:, axis] <= b
    nl = int(mask.sum())
    nr = cloud.count - nl
    if nl == 0 or nr == 0:
        raise SubgridError("degenerate split: one side is empty")
    _, parent_kl = _stats(pts)
    _, lkl = _stats(pts[mask])
    _, rkl = _stats(pts[~mask])
    return parent_kl - (nl / cloud.count) * lkl - (nr / cloud.count) * rkl


def best_split(cloud: PointCloud, n_max: int = DEFAULT_CANDIDATES) -> Optional[SplitCandidate]:
    """Gain-maximizing candidate on the largest-extent axis, or None.

    None means unsplittable: the box is fully degenerate or every candidate
    leaves one side empty.  Ties on gain go to the smallest threshold.
    """
    if n_max < 1:
        raise SubgridError("candidate count must be >= 1")
    box, kl = _stats(cloud.points)
    leaf = _Leaf(np.arange(cloud.count), box, kl)
    found = _best_split_rows(cloud.points, leaf, n_max)
    if found is None:
        return None
    axis, b, gain = found[0], found[1], found[2]
    return SplitCandidate(axis, b, gain)


def decompose(cloud: PointCloud, n: int, n_max: int = DEFAULT_CANDIDATES) -> Partition:
    """Greedy decomposition into at most n leaves.

    Each iteration splits the leaf with the highest count-weighted divergence
    (ties to the lowest leaf index).  Leaves with no valid split are flagged
    unsplittable and skipped; if every leaf ends up flagged before n leaves
    exist, the loop stops early and the flags report it.
    """
    m = cloud.count
    if m == 0:
        raise SubgridError("empty point cloud")
    if n < 1:
        raise SubgridError("subdomain count must be >= 1")
    if n > m:
        raise SubgridError(f"cannot split {m} points into {n} subdomains")
    if n_max < 1:
        raise SubgridError("candidate count must be >= 1")

    pts = cloud.points
    box0, kl0 = _stats(pts)
    leaves: List[_Leaf] = [_Leaf(np.arange(m, dtype=np.int64), box0, kl0)]
    hooks: List[Optional[Tuple[int, str]]] = [None]  # where each leaf is referenced
    raw_nodes: List[dict] = []
    records: List[SplitRecord] = []

    while len(leaves) < n:
        pick = -1
        pick_priority = -np.inf
        for i, leaf in enumerate(leaves):
            if leaf.unsplittable:
                continue
            if leaf.priority > pick_priority:
                pick_priority = leaf.priority
                pick = i
        if pick < 0:
            break  # early termination: every leaf unsplittable

        leaf = leaves[pick]
        found = _best_split_rows(pts, leaf, n_max)
        if found is None:
            leaf.unsplittable = True
            continue
        axis, b, gain, (lrows, lbox, lkl), (rrows, rbox, rkl) = found

        node_idx = len(raw_nodes)
        right_idx = len(leaves)
        raw_nodes.append(
            {"axis": axis, "threshold": b, "left": leaf_ref(pick), "right": leaf_ref(right_idx)}
        )
        hook = hooks[pick]
        if hook is not None:
            parent, side = hook
            raw_nodes[parent][side] = node_idx
        leaves[pick] = _Leaf(lrows, lbox, lkl)
        hooks[pick] = (node_idx, "left")
        leaves.append(_Leaf(rrows, rbox, rkl))
        hooks.append((node_idx, "right"))

        obj = sum(x.priority for x in leaves) / m
        records.append(SplitRecord(pick, axis, b, gain, obj))

    return Partition(
        leaf_ids=tuple(cloud.ids[x.rows] for x in leaves),
        boxes=tuple(x.box for x in leaves),
        nodes=tuple(TreeNode(**nd) for nd in raw_nodes),
        unsplittable=tuple(x.unsplittable for x in leaves),
        subclouds=tuple(cloud.take(x.rows) for x in leaves),
        splits=tuple(records),
    )


def objective(partition: Partition) -> float:
    """Count-weighted sum of per-leaf divergences (lower is more uniform)."""
    if partition.subclouds is None:
        raise SubgridError("partition was loaded without its point cloud")
    m = partition.total_points
    total = 0.0
    for sub in partition.subclouds:
        total += (sub.count / m) * kl_to_uniform(sub, bin_spec_for(sub))
    return total


def route_points(partition: Partition, points) -> Array:
    """Leaf index for arbitrary query points, by descending the split tree.

    The hyperplanes cover all of space, so every point lands in exactly one
    leaf even outside the original cloud's bounds.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    out = np.zeros(pts.shape[0], dtype=np.int64)
    if not partition.nodes:
        return out
    stack = [(0, np.arange(pts.shape[0]))]
    while stack:
        ref, rows = stack.pop()
        if rows.size == 0:
            continue
        node = partition.nodes[ref]
        mask = pts[rows, node.axis] <= node.threshold
        for child, sel in ((node.left, rows[mask]), (node.right, rows[~mask])):
            if ref_is_leaf(child):
                out[sel] = ref_leaf_index(child)
            else:
                stack.append((child, sel))
    return out


def rows_by_leaf(partition: Partition, ids) -> List[Array]:
    """Row positions of an external cloud's points, grouped by owning leaf.

    Matches on point ids.  Raises when an id is absent from every leaf; a
    leaf owning none of the external ids yields an empty row array.
    """
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    all_ids = np.concatenate(partition.leaf_ids)
    labels = np.repeat(
        np.arange(partition.n_leaves, dtype=np.int64),
        [a.size for a in partition.leaf_ids],
    )
    order = np.argsort(all_ids, kind="stable")
    sorted_ids = all_ids[order]
    sorted_labels = labels[order]
    pos = np.searchsorted(sorted_ids, ids)
    bad = (pos >= sorted_ids.size) | (sorted_ids[np.minimum(pos, sorted_ids.size - 1)] != ids)
    if bad.any():
        raise SubgridError("point ids not covered by partition")
    leaf_of_row = sorted_labels[pos]
    return [np.flatnonzero(leaf_of_row == k) for k in range(partition.n_leaves)]

"""Point-cloud and bounding-box primitives.

Everything downstream (histograms, tree splits, grid interpolation) operates
on the two types defined here.  Both are immutable: operations that look like
mutation return new objects, and the wrapped numpy buffers are marked
read-only so accidental in-place edits fail loudly.

A cloud may be empty (m = 0).  Splitting can legitimately produce an empty
side, so emptiness is not a construction error; operations that need at least
one point (bounding boxes, histograms) raise instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .errors import SubgridError

Array = np.ndarray


def _readonly_f64(a, name: str, ndim: int) -> Array:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != ndim:
        raise SubgridError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise SubgridError(f"{name} must be finite")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PointCloud:
    """A scattered sample: coordinates, optional per-point values, stable ids.

    points : (m, d) float64
    values : (m, C) float64 or None
    ids    : (m,) int64, unique; identity survives any split or reordering
    """

    points: Array
    values: Optional[Array] = None
    ids: Optional[Array] = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts = _readonly_f64(pts, "points", 2)
        if pts.shape[1] < 1:
            raise SubgridError("points must have at least one coordinate axis")
        object.__setattr__(self, "points", pts)

        if self.values is not None:
            vals = np.asarray(self.values, dtype=np.float64)
            if vals.ndim == 1:
                vals = vals[:, None]
            vals = _readonly_f64(vals, "values", 2)
            if vals.shape[0] != pts.shape[0]:
                raise SubgridError(
                    f"values rows ({vals.shape[0]}) must match point count ({pts.shape[0]})"
                )
            object.__setattr__(self, "values", vals)

        if self.ids is None:
            ids = np.arange(pts.shape[0], dtype=np.int64)
        else:
            ids = np.ascontiguousarray(self.ids, dtype=np.int64)
            if ids.shape != (pts.shape[0],):
                raise SubgridError("ids must be a 1-d array matching the point count")
            if np.unique(ids).size != ids.size:
                raise SubgridError("ids must be unique")
            ids = ids.copy()
        ids.flags.writeable = False
        object.__setattr__(self, "ids", ids)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def channels(self) -> int:
        return 0 if self.values is None else self.values.shape[1]

    def take(self, rows) -> "PointCloud":
        """Sub-cloud at the given row positions; values and ids follow along."""
        rows = np.asarray(rows)
        vals = None if self.values is None else self.values[rows]
        return PointCloud(self.points[rows], vals, self.ids[rows])

    def with_values(self, values) -> "PointCloud":
        return PointCloud(self.points, values, self.ids)

    def with_ids(self, ids) -> "PointCloud":
        return PointCloud(self.points, self.values, ids)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box [lo_i, hi_i] per axis.  Degenerate axes (lo == hi) are legal."""

    lo: Array
    hi: Array

    def __post_init__(self) -> None:
        lo = _readonly_f64(self.lo, "lo", 1)
        hi = _readonly_f64(self.hi, "hi", 1)
        if lo.shape != hi.shape:
            raise SubgridError("lo and hi must have the same length")
        if np.any(lo > hi):
            raise SubgridError("box must satisfy lo <= hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dims(self) -> int:
        return self.lo.shape[0]

    @property
    def extents(self) -> Array:
        return self.hi - self.lo

    def nondegenerate_axes(self) -> Array:
        """Boolean mask of axes with positive extent."""
        return self.extents > 0.0

    def is_degenerate(self) -> bool:
        """True when every axis has zero extent (e.g. all points coincident)."""
        return bool(np.all(self.extents == 0.0))

    def diameter(self) -> float:
        return float(np.sqrt(np.sum(self.extents ** 2)))

    def contains(self, points, slack: float = 0.0) -> Array:
        pts = np.asarray(points, dtype=np.float64)
        return np.all((pts >= self.lo - slack) & (pts <= self.hi + slack), axis=-1)


def bounding_box(cloud: PointCloud) -> BoundingBox:
    """Tight axis-aligned bounding box of the cloud."""
    if cloud.count == 0:
        raise SubgridError("empty point cloud")
    return BoundingBox(cloud.points.min(axis=0), cloud.points.max(axis=0))


def split_cloud(cloud: PointCloud, axis: int, threshold: float) -> Tuple[PointCloud, PointCloud]:
    """Partition by the hyperplane x[axis] = threshold.

    A point exactly at the threshold goes to the first (<=) side.  Either
    side may be empty; callers that cannot handle an empty side must check.
    """
    if not 0 <= axis < cloud.dims:
        raise SubgridError(f"axis {axis} out of range for {cloud.dims}-dimensional cloud")
    mask = cloud.points[:, axis] <= threshold
    rows = np.arange(cloud.count)
    return cloud.take(rows[mask]), cloud.take(rows[~mask])


def stack_clouds(clouds: Iterable[PointCloud]) -> PointCloud:
    """Concatenate clouds into one with fresh sequential ids (0..total-1).

    Used to build a single unified decomposition for a family of samples
    whose geometries vary within a limited range.
    """
    clouds = list(clouds)
    if not clouds:
        raise SubgridError("no clouds to stack")
    d = clouds[0].dims
    if any(c.dims != d for c in clouds):
        raise SubgridError("clouds must share dimensionality to be stacked")
    pts = np.concatenate([c.points for c in clouds], axis=0)
    with_vals = [c.values is not None for c in clouds]
    if not any(with_vals):
        return PointCloud(pts)
    if not all(with_vals):
        raise SubgridError("cannot stack clouds where only some carry values")
    channels = clouds[0].channels
    if any(c.channels != channels for c in clouds):
        raise SubgridError("stacked clouds must share a channel count")
    return PointCloud(pts, values=np.concatenate([c.values for c in clouds], axis=0))

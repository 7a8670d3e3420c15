"""Interpolation between scattered points and uniform subdomain grids.

Forward (scatter_to_grid) is k-nearest inverse-distance weighting: robust in
any dimension, deterministic, and needs no mesh.  Backward (grid_to_points)
is multilinear, which makes the grid-to-point map linear in the grid values;
that linearity is what lets a triangle inequality split total error into an
operator term and an interpolation term downstream.

Node layout everywhere: row-major flat order with axis 0 slowest; node j on
axis i sits at lo_i + j * (hi_i - lo_i) / (N_i - 1), so box corners are nodes.
Degenerate axes hold a single node at lo_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .allocation import GridShape
from .cloud import Array, BoundingBox, PointCloud, bounding_box
from .errors import SubgridError

BOX_TOLERANCE = 1e-9  # relative slack for "inside the box" checks
EXACT_COPY_TOLERANCE = 1e-12  # relative distance under which a node copies a point


@dataclass(frozen=True)
class SubdomainGrid:
    """Values on a uniform grid over one subdomain box.

    values: (n_nodes, C) float64, flat row-major with axis 0 slowest.
    """

    shape: GridShape
    values: Array

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] != self.shape.n_nodes:
            raise SubgridError(
                f"values must be (n_nodes, C) with n_nodes={self.shape.n_nodes}, got {vals.shape}"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    def with_values(self, values) -> "SubdomainGrid":
        return SubdomainGrid(self.shape, values)

    def reshaped(self) -> Array:
        """View of the values as (*dims, C)."""
        return self.values.reshape(*self.shape.dims, self.channels)


def grid_axes(shape: GridShape) -> List[Array]:
    """Per-axis node coordinate arrays."""
    out = []
    for i, n in enumerate(shape.dims):
        lo = shape.box.lo[i]
        if n == 1:
            out.append(np.array([lo]))
        else:
            ext = shape.box.hi[i] - lo
            out.append(lo + np.arange(n) * (ext / (n - 1)))
    return out


def grid_nodes(shape: GridShape) -> Array:
    """All node coordinates, (n_nodes, d), row-major with axis 0 slowest."""
    axes = grid_axes(shape)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def scatter_to_grid(cloud: PointCloud, shape: GridShape, neighbors: int = 8) -> SubdomainGrid:
    """Scattered values onto grid nodes via inverse-square-distance weighting.

    Each node averages its K = min(neighbors, m) nearest points with weights
    1/dist^2, anchored at the nearest point's value so a constant field stays
    bit-exact.  A node within 1e-12 * diam(box) of a point copies that
    point's value outright.
    """
    if cloud.values is None:
        raise SubgridError("point cloud has no values to interpolate")
    if cloud.count == 0:
        raise SubgridError("empty point cloud")
    box = shape.box
    diam = box.diameter()
    inside = box.contains(cloud.points, slack=BOX_TOLERANCE * diam)
    if not inside.all():
        raise SubgridError("point outside grid box beyond tolerance")

    nodes = grid_nodes(shape)
    k = min(int(neighbors), cloud.count)
    if k < 1:
        raise SubgridError("neighbor count must be >= 1")
    tree = cKDTree(cloud.points)
    dist, idx = tree.query(nodes, k=k)
    if k == 1:
        dist = dist[:, None]
        idx = idx[:, None]

    gathered = cloud.values[idx]  # (n_nodes, k, C)
    anchor = gathered[:, 0, :]  # nearest point's value per node
    out = anchor.copy()

    copy_mask = dist[:, 0] <= EXACT_COPY_TOLERANCE * diam
    far = ~copy_mask
    if far.any():
        w = 1.0 / (dist[far] ** 2)  # strictly positive: sorted dists exceed tolerance
        num = np.sum(w[:, :, None] * (gathered[far] - anchor[far, None, :]), axis=1)
        den = np.sum(w, axis=1)
        out[far] = anchor[far] + num / den[:, None]
    return SubdomainGrid(shape, out)


def _corner_lerp(values: Array, flat: Array, axes: List, level: int) -> Array:
    if level == len(axes):
        return values[flat]
    t, stride = axes[level]
    v0 = _corner_lerp(values, flat, axes, level + 1)
    v1 = _corner_lerp(values, flat + stride, axes, level + 1)
    return v0 + t[:, None] * (v1 - v0)


def grid_to_points(grid: SubdomainGrid, queries: Union[PointCloud, Array]) -> Array:
    """Multilinear interpolation of grid values at query points, (q, C).

    Queries outside the box are clamped to its faces.  The map from grid
    values to outputs is linear, and exactly linear fields are reproduced.
    """
    pts = queries.points if isinstance(queries, PointCloud) else np.asarray(queries, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    box = grid.shape.box
    if pts.shape[1] != box.dims:
        raise SubgridError("query dimensionality must match the grid box")
    x = np.clip(pts, box.lo, box.hi)

    dims = grid.shape.dims
    strides = []
    acc = 1
    for n in reversed(dims):
        strides.append(acc)
        acc *= n
    strides = strides[::-1]

    base = np.zeros(x.shape[0], dtype=np.int64)
    lerp_axes = []
    for i, n in enumerate(dims):
        if n == 1:
            continue
        ext = box.hi[i] - box.lo[i]
        h = ext / (n - 1)
        u = (x[:, i] - box.lo[i]) / h
        b = np.clip(np.floor(u), 0, n - 2).astype(np.int64)
        t = np.clip(u - b, 0.0, 1.0)
        base += b * strides[i]
        lerp_axes.append((t, strides[i]))
    return _corner_lerp(grid.values, base, lerp_axes, 0)


def l2_relative_error(truth: Sequence, pred: Sequence) -> float:
    """Mean over samples of sqrt(sum (u - p)^2 / sum u^2), points and channels jointly.

    Accepts one array per sample (lists of equal-shaped arrays) or a single
    pair of arrays treated as one sample.
    """
    if isinstance(truth, np.ndarray):
        truth = [truth]
    if isinstance(pred, np.ndarray):
        pred = [pred]
    truth = [np.asarray(t, dtype=np.float64) for t in truth]
    pred = [np.asarray(p, dtype=np.float64) for p in pred]
    if len(truth) != len(pred) or len(truth) == 0:
        raise SubgridError("truth and prediction sample counts must match and be non-empty")
    total = 0.0
    for t, p in zip(truth, pred):
        if t.shape != p.shape:
            raise SubgridError("truth and prediction shapes must match")
        den = float(np.sum(t * t))
        if den == 0.0:
            raise SubgridError("zero-norm reference")
        num = float(np.sum((t - p) ** 2))
        total += np.sqrt(num / den)
    return total / len(truth)


def default_kde_shape(box: BoundingBox, nodes_per_axis: int = 32) -> GridShape:
    dims = tuple(nodes_per_axis if nd else 1 for nd in box.nondegenerate_axes())
    return GridShape(dims, box)


def gaussian_kde_grid(
    cloud: PointCloud,
    bandwidth: float = 0.05,
    shape: Optional[GridShape] = None,
) -> SubdomainGrid:
    """Gaussian kernel density of the cloud, evaluated on a uniform grid.

    Node value = (1/m) * sum_p exp(-|node - x_p|^2 / (2 h^2)) / (2 pi h^2)^(d/2).
    Defaults: bandwidth 0.05, 32 nodes per non-degenerate axis over the
    cloud's tight box.  Single output channel.
    """
    if not bandwidth > 0.0:
        raise SubgridError("bandwidth must be positive")
    if shape is None:
        shape = default_kde_shape(bounding_box(cloud))
    nodes = grid_nodes(shape)
    d = cloud.dims
    if nodes.shape[1] != d:
        raise SubgridError("grid box dimensionality must match the cloud")
    h2 = bandwidth * bandwidth
    norm = cloud.count * (2.0 * np.pi * h2) ** (d / 2.0)
    out = np.empty(nodes.shape[0])
    chunk = max(1, int(2_000_000 // max(cloud.count, 1)))
    for start in range(0, nodes.shape[0], chunk):
        block = nodes[start : start + chunk]
        d2 = np.sum((block[:, None, :] - cloud.points[None, :, :]) ** 2, axis=-1)
        out[start : start + chunk] = np.exp(-d2 / (2.0 * h2)).sum(axis=1)
    return SubdomainGrid(shape, (out / norm)[:, None])

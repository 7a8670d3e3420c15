"""Histogram density estimation and divergence from uniformity.

How far a cloud is from filling its bounding box evenly is measured by the
KL divergence between a histogram estimate of the point distribution and
the uniform distribution over the box.  Bin counts adapt to the box aspect
ratio while keeping the total cell count at or below the point count, so
the estimate never has more cells than samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .cloud import Array, BoundingBox, PointCloud, bounding_box
from .errors import SubgridError


@dataclass(frozen=True)
class BinSpec:
    """Per-axis bin counts N_1..N_d, each >= 1."""

    bins: Tuple[int, ...]

    def __post_init__(self) -> None:
        bins = tuple(int(b) for b in self.bins)
        if len(bins) < 1 or any(b < 1 for b in bins):
            raise SubgridError("bin counts must be positive integers")
        object.__setattr__(self, "bins", bins)

    @property
    def n_cells(self) -> int:
        out = 1
        for b in self.bins:
            out *= b
        return out


@dataclass(frozen=True)
class Histogram:
    """Flat cell counts (row-major, axis 0 slowest) plus the total they sum to."""

    spec: BinSpec
    counts: Array
    total: int

    def __post_init__(self) -> None:
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size != self.spec.n_cells:
            raise SubgridError("counts must be flat with one entry per cell")
        if int(counts.sum()) != int(self.total):
            raise SubgridError("counts must sum to the total")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(self.total))


def _shrink_to_budget(bins: np.ndarray, cap: int) -> None:
    """Decrement the largest count (ties -> lowest axis) until prod(bins) <= cap.

    Exactly equivalent to repeating single decrements, but descends whole
    tiers of tied axes at once so extreme aspect ratios do not cost one
    Python-loop iteration per decrement.  Arithmetic stays in Python ints to
    dodge overflow.
    """
    prod = 1
    for b in bins:
        prod *= int(b)
    while prod > cap:
        v = int(bins.max())
        tier = np.flatnonzero(bins == v)
        t = tier.size
        below = bins[bins < v]
        floor_t = max(int(below.max()) if below.size else 0, 1)
        rest = prod // (v ** t)

        def after(r: int) -> int:
            # product once every tier axis has descended by r
            return rest * (v - r) ** t

        max_r = v - floor_t
        if after(max_r) > cap:
            # tier bottoms out and merges with the next tier (or 1)
            bins[tier] = floor_t
            prod = after(max_r)
            continue
        lo, hi = 1, max_r
        while lo < hi:
            mid = (lo + hi) // 2
            if after(mid) <= cap:
                hi = mid
            else:
                lo = mid + 1
        # the budget is met somewhere inside descent round `lo`; replay that
        # round one literal decrement at a time (ascending axis order)
        bins[tier] = v - lo + 1
        prod = after(lo - 1)
        for i in tier:
            if prod <= cap:
                break
            bins[i] = v - lo
            prod = prod // (v - lo + 1) * (v - lo)


def spec_from_extents(m: int, extents: Array) -> BinSpec:
    """Bin counts for a cloud of m points whose tight box has these extents.

    On non-degenerate axes: N_i = max(1, floor(m^(1/d) * L_i / g)), with L_i
    the axis extent and g the geometric mean of non-degenerate extents.
    Degenerate axes get a single bin.  If the cell count exceeds m, the
    largest N_i is decremented (ties to the lowest axis) until it fits.
    """
    ext = np.asarray(extents, dtype=np.float64)
    d = ext.shape[0]
    if m < 1:
        raise SubgridError("empty point cloud")
    nondeg = ext > 0.0

    bins = np.ones(d, dtype=np.int64)
    if nondeg.any():
        g = float(np.exp(np.mean(np.log(ext[nondeg]))))
        root = float(m) ** (1.0 / d)
        raw = np.floor(root * ext[nondeg] / g)
        # values beyond m would be shrunk back below m anyway (the product
        # budget is m and every other factor is >= 1); clip early so the
        # integer conversion cannot overflow
        raw = np.clip(raw, 1.0, float(m))
        bins[nondeg] = raw.astype(np.int64)
    _shrink_to_budget(bins, m)
    return BinSpec(tuple(int(b) for b in bins))


def bin_spec_for(cloud: PointCloud) -> BinSpec:
    """Aspect-ratio-proportional bin counts for a cloud, capped at m cells."""
    return spec_from_extents(cloud.count, bounding_box(cloud).extents)


def cell_indices(points: Array, box: BoundingBox, spec: BinSpec) -> Array:
    """Flat cell index per point (row-major, axis 0 slowest).

    On axis i the cell is min(N_i - 1, floor(N_i * (x_i - lo_i) / (hi_i - lo_i)));
    degenerate axes map to cell 0.
    """
    pts = np.asarray(points, dtype=np.float64)
    bins = spec.bins
    ext = box.extents
    multi = []
    for i, n in enumerate(bins):
        if n == 1 or ext[i] == 0.0:
            multi.append(np.zeros(pts.shape[0], dtype=np.int64))
            continue
        raw = np.floor(n * (pts[:, i] - box.lo[i]) / ext[i])
        multi.append(np.clip(raw, 0, n - 1).astype(np.int64))
    return np.ravel_multi_index(tuple(multi), bins)


def histogram(cloud: PointCloud, spec: BinSpec) -> Histogram:
    """Count points per cell over the cloud's tight bounding box."""
    if len(spec.bins) != cloud.dims:
        raise SubgridError("bin spec dimensionality must match the cloud")
    box = bounding_box(cloud)
    flat = cell_indices(cloud.points, box, spec)
    counts = np.bincount(flat, minlength=spec.n_cells)
    return Histogram(spec, counts, cloud.count)


def kl_divergence_of_counts(counts: Array, total: int) -> float:
    """KL divergence of an empirical cell distribution from uniform.

    Sum over cells of (c/m) * ln((c/m) * n_cells), with 0 * ln(0) = 0.
    """
    counts = np.asarray(counts)
    n_cells = counts.size
    pos = counts[counts > 0].astype(np.float64)
    p = pos / float(total)
    return float(np.sum(p * np.log(p * n_cells)))


def kl_to_uniform(cloud: PointCloud, spec: BinSpec) -> float:
    """Divergence of the cloud from uniform occupancy of its bounding box.

    Always in [0, ln(prod N_i)]; 0 exactly when every cell holds the same
    count, which includes any single-point cloud (its spec collapses to a
    single cell).
    """
    h = histogram(cloud, spec)
    val = kl_divergence_of_counts(h.counts, h.total)
    # clamp tiny negative round-off; the value is provably >= 0
    return max(val, 0.0)


def uniformity_upper_bound(spec: BinSpec) -> float:
    """Largest attainable divergence for a spec: all mass in one cell."""
    return math.log(spec.n_cells)

"""Benchmark harness: interpolation round-trip quality and decomposition timing.

Round-trip arm: for each oversampling ratio, compare L2 relative error of
global interpolation (single-leaf partition) against the subdomain path on
the same cloud and field.  The round trip is interpolation-only: values are
scattered onto each leaf's own grid and gathered straight back, without the
spectral resize used to stack grids for export (upsizing a non-periodic
field rings at the box faces and would charge that artifact to the
interpolation).  Scaling arm: wall-clock decompose time across cloud sizes.
Timings use a monotonic clock, median over repeats.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path
from statistics import median
from typing import Dict, List, Sequence

import numpy as np

from .allocation import allocate_shapes
from .cloud import PointCloud
from .errors import SubgridError
from .interpolation import grid_to_points, l2_relative_error, scatter_to_grid
from .kdtree import decompose, rows_by_leaf
from .synth import gen_gaussian_mixture

ROUNDTRIP_FIELDS = ["ratio", "arm", "l2re", "seconds"]
SCALING_FIELDS = ["m", "seconds"]


def roundtrip_values(cloud: PointCloud, partition, shapes):
    """Scatter the cloud's values onto each leaf's grid and gather them back."""
    if cloud.values is None:
        raise SubgridError("point cloud has no values to interpolate")
    if len(shapes) != partition.n_leaves:
        raise SubgridError("one grid shape per leaf required")
    rows = rows_by_leaf(partition, cloud.ids)
    out = np.empty((cloud.count, cloud.channels))
    for k in range(partition.n_leaves):
        if rows[k].size == 0:
            raise SubgridError(f"leaf {k} holds no points of this cloud")
        sub = cloud.take(rows[k])
        grid = scatter_to_grid(sub, shapes[k])
        out[rows[k]] = grid_to_points(grid, sub.points)
    return out


def bench_roundtrip(
    cloud: PointCloud,
    n: int,
    ratios: Sequence[float],
    n_max: int = 5,
    repeats: int = 5,
) -> List[Dict]:
    """Round-trip error and time for the global and subdomain arms per ratio."""
    if cloud.values is None:
        raise SubgridError("benchmark cloud needs values")
    if n < 1:
        raise SubgridError("subdomain count must be >= 1")
    arms = [("global", decompose(cloud, 1, n_max))]
    if n > 1:
        arms.append(("subdomain", decompose(cloud, n, n_max)))
    else:
        arms.append(("subdomain", arms[0][1]))
    rows: List[Dict] = []
    for ratio in ratios:
        for label, part in arms:
            shapes = allocate_shapes(part, ratio)
            times = []
            for _ in range(repeats):
                start = time.perf_counter()
                approx = roundtrip_values(cloud, part, shapes)
                times.append(time.perf_counter() - start)
            err = l2_relative_error(cloud.values, approx)
            rows.append(
                {"ratio": float(ratio), "arm": label, "l2re": err, "seconds": median(times)}
            )
    return rows


# the scaling benchmark uses a mildly clustered cloud so splits do real work
_SCALING_CLUSTERS = [
    ([0.3, 0.3], 0.08, 0.25),
    ([0.7, 0.6], 0.05, 0.2),
]


def scaling_cloud(seed: int, d: int, m: int) -> PointCloud:
    clusters = [(list(c) + [0.5] * (d - 2) if d > 2 else list(c)[:d], s, w) for c, s, w in _SCALING_CLUSTERS]
    return gen_gaussian_mixture(seed, d, m, clusters, 1.0 - sum(w for _, _, w in clusters))


def bench_decompose_scaling(
    d: int,
    n: int,
    sizes: Sequence[int],
    seed: int,
    n_max: int = 5,
    repeats: int = 5,
) -> List[Dict]:
    """Median decompose wall time per cloud size, sizes ascending."""
    sizes = [int(s) for s in sizes]
    if sorted(sizes) != sizes:
        raise SubgridError("sizes must be ascending")
    rows: List[Dict] = []
    for m in sizes:
        cloud = scaling_cloud(seed, d, m)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            decompose(cloud, n, n_max)
            times.append(time.perf_counter() - start)
        rows.append({"m": m, "seconds": median(times)})
    return rows


def write_csv(rows: List[Dict], path, fieldnames: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        writer.writerows(rows)


def plot_roundtrip(rows: List[Dict], path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label in ("global", "subdomain"):
        pts = sorted((r["ratio"], r["l2re"]) for r in rows if r["arm"] == label)
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    ax.set_xlabel("oversampling ratio")
    ax.set_ylabel("round-trip L2 relative error")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_scaling(rows: List[Dict], path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    pts = sorted((r["m"], r["seconds"]) for r in rows)
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o")
    ax.set_xlabel("points")
    ax.set_ylabel("decompose seconds (median)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

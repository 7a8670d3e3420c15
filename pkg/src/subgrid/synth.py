"""Seeded synthetic clouds and fields for tests, benchmarks, and demos.

The flagship configuration is a unit-square cloud with a dense central
cluster over a uniform background, carrying a field that is smooth in the
far field but varies sharply at the cluster: a few random-phase sinusoids
plus a narrow Gaussian bump co-located with the dense region.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from .cloud import Array, PointCloud
from .errors import SubgridError

Cluster = Tuple[Sequence[float], float, float]  # center, sigma, weight

_MAX_REJECTION_ROUNDS = 1000
WEIGHT_TOLERANCE = 1e-9


def _apportion(m: int, weights: Sequence[float]) -> np.ndarray:
    """Integer counts summing to m, proportional to weights (largest remainder)."""
    quotas = np.asarray(weights, dtype=np.float64) * m
    counts = np.floor(quotas).astype(np.int64)
    short = m - int(counts.sum())
    if short > 0:
        remainders = quotas - counts
        # stable: biggest remainder first, ties to the lowest index
        order = np.lexsort((np.arange(len(weights)), -remainders))
        counts[order[:short]] += 1
    return counts


def gen_gaussian_mixture(
    seed: int,
    d: int,
    m: int,
    clusters: Sequence[Cluster],
    background_fraction: float,
) -> PointCloud:
    """Mixture of in-box Gaussian clusters over a uniform unit-box background.

    Cluster weights plus the background fraction must sum to 1.  Cluster
    draws falling outside the unit box are redrawn, so each cluster keeps
    its exact point count.  Deterministic for a fixed seed.
    """
    if d < 1 or m < 1:
        raise SubgridError("dimension and point count must be positive")
    weights = [float(w) for (_, _, w) in clusters]
    if any(w < 0 for w in weights) or background_fraction < 0:
        raise SubgridError("invalid mixture: negative weight")
    if abs(sum(weights) + background_fraction - 1.0) > WEIGHT_TOLERANCE:
        raise SubgridError("invalid mixture: weights and background fraction must sum to 1")
    for center, sigma, _ in clusters:
        if len(center) != d:
            raise SubgridError("cluster center dimensionality must match d")
        if not sigma > 0:
            raise SubgridError("cluster sigma must be positive")

    counts = _apportion(m, weights + [background_fraction])
    rng = np.random.default_rng(seed)
    parts = []
    for (center, sigma, _), count in zip(clusters, counts[:-1]):
        if count == 0:
            continue
        center = np.asarray(center, dtype=np.float64)
        draws = np.empty((count, d))
        need = np.arange(count)
        for _ in range(_MAX_REJECTION_ROUNDS):
            draws[need] = center + sigma * rng.standard_normal((need.size, d))
            inside = np.all((draws[need] >= 0.0) & (draws[need] <= 1.0), axis=1)
            need = need[~inside]
            if need.size == 0:
                break
        else:
            raise SubgridError("cluster rejection sampling failed to converge")
        parts.append(draws)
    if counts[-1] > 0:
        parts.append(rng.uniform(0.0, 1.0, size=(int(counts[-1]), d)))
    return PointCloud(np.concatenate(parts, axis=0))


def smooth_bump_field(
    points: Array,
    field_seed: int = 0,
    n_modes: int = 4,
    bump_center: Optional[Sequence[float]] = None,
    bump_sigma: float = 0.02,
    bump_amplitude: float = 3.0,
) -> Array:
    """Sum of low-frequency random-phase sinusoids plus an optional sharp bump.

    Returns an (m, 1) value column.  The sinusoid part stays order-one and
    slowly varying; the bump adds a feature much narrower than the box.
    """
    pts = np.asarray(points, dtype=np.float64)
    rng = np.random.default_rng(field_seed)
    d = pts.shape[1]
    out = np.zeros(pts.shape[0])
    for j in range(n_modes):
        wave = rng.integers(1, 3, size=d) * rng.choice([-1.0, 1.0], size=d)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amplitude = 1.0 / (j + 1)
        out += amplitude * np.sin(2.0 * np.pi * (pts @ wave) + phase)
    if bump_center is not None:
        c = np.asarray(bump_center, dtype=np.float64)
        r2 = np.sum((pts - c) ** 2, axis=1)
        out += bump_amplitude * np.exp(-r2 / (2.0 * bump_sigma * bump_sigma))
    return out[:, None]


# the flagship demo cloud: one dense central cluster over a uniform background.
# the bump is much narrower than a global uniform grid's spacing at these
# point budgets but still a few times wider than the cluster's point spacing,
# which is exactly the regime where per-subdomain grids pay off
CENTER_CLUSTER_SIGMA = 0.035
CENTER_CLUSTER_WEIGHT = 0.5
CENTER_BUMP_SIGMA = 0.008
CENTER_BUMP_AMPLITUDE = 5.0


def dense_center_cloud(seed: int, m: int = 4096, d: int = 2) -> PointCloud:
    """The dense-center benchmark cloud with its smooth-plus-bump field attached."""
    center = [0.5] * d
    cloud = gen_gaussian_mixture(
        seed,
        d,
        m,
        clusters=[(center, CENTER_CLUSTER_SIGMA, CENTER_CLUSTER_WEIGHT)],
        background_fraction=1.0 - CENTER_CLUSTER_WEIGHT,
    )
    values = smooth_bump_field(
        cloud.points,
        field_seed=seed + 10_000,
        bump_center=center,
        bump_sigma=CENTER_BUMP_SIGMA,
        bump_amplitude=CENTER_BUMP_AMPLITUDE,
    )
    return cloud.with_values(values)

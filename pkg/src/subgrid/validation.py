"""Input validation helpers shared by the estimator layer."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .cloud import PointCloud
from .errors import SubgridError


def check_points(X) -> np.ndarray:
    """Validate a coordinate matrix: 2-d, finite, float64, at least one row."""
    return check_array(X, dtype=np.float64, ensure_2d=True)


def check_point_values(V, m: int) -> np.ndarray:
    """Validate per-point values against the fitted point count; returns (m, C)."""
    vals = np.asarray(V, dtype=np.float64)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.ndim != 2 or vals.shape[0] != m:
        raise SubgridError(f"values must be ({m}, C), got shape {vals.shape}")
    if not np.isfinite(vals).all():
        raise SubgridError("values must be finite")
    return vals


def as_point_cloud(X, values=None) -> PointCloud:
    pts = check_points(X)
    return PointCloud(pts, values)

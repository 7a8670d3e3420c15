"""Scikit-learn style wrappers around the decomposition and resampling core.

CloudPartitioner clusters points into axis-aligned subdomains; GridResampler
turns per-point values into a stack of aligned uniform grids and back.  Both
follow the usual conventions: hyperparameters in __init__, learned state in
trailing-underscore attributes, get_params/set_params from BaseEstimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .alignment import AlignedBatch
from .allocation import GridShape, allocate_shapes
from .cloud import PointCloud
from .errors import SubgridError
from .interpolation import SubdomainGrid
from .kdtree import decompose, objective, route_points, rows_by_leaf
from .pipeline import backward_values, forward_batch
from .validation import as_point_cloud, check_point_values, check_points


class CloudPartitioner(ClusterMixin, BaseEstimator):
    """Greedy kd-tree decomposition of a point cloud into n subdomains.

    Leaves are chosen to drive the point distribution inside each box toward
    uniformity; labels are leaf indices.

    Parameters
    ----------
    n_subdomains : int, target number of leaves (the greedy loop may stop
        early when no leaf can be split further).
    n_candidates : int, equidistant interior thresholds tried per split.

    Attributes (after fit)
    ----------------------
    cloud_ : the training points as a PointCloud
    partition_ : the fitted Partition (tree, leaf boxes, per-leaf subclouds)
    labels_ : (m,) leaf index of each training point
    objective_ : mean per-point uniformity divergence of the fitted partition
    n_leaves_ : number of leaves actually produced
    early_terminated_ : True when fewer than n_subdomains leaves were made
    """

    def __init__(self, n_subdomains: int = 8, n_candidates: int = 5):
        self.n_subdomains = n_subdomains
        self.n_candidates = n_candidates

    def fit(self, X, y=None):
        cloud = as_point_cloud(X)
        partition = decompose(cloud, self.n_subdomains, n_max=self.n_candidates)
        self.cloud_ = cloud
        self.partition_ = partition
        rows = rows_by_leaf(partition, cloud.ids)
        labels = np.empty(cloud.count, dtype=np.int64)
        for k, r in enumerate(rows):
            labels[r] = k
        self.labels_ = labels
        self.objective_ = objective(partition)
        self.n_leaves_ = partition.n_leaves
        self.early_terminated_ = partition.early_terminated
        return self

    def predict(self, X):
        """Leaf index for each query point, by descending the fitted tree."""
        check_is_fitted(self, "partition_")
        return route_points(self.partition_, check_points(X))


class GridResampler(BaseEstimator):
    """Map per-point values to a stack of aligned uniform subdomain grids.

    fit() consumes only coordinates: it decomposes the cloud, sizes one grid
    per leaf from the shared node budget, and fixes the common aligned shape.
    transform() then scatters any (m, C) value array sampled at those same
    coordinates into a (n_leaves, C, *grid_shape) tensor; inverse_transform()
    interpolates such a tensor back to the points.

    Parameters
    ----------
    n_subdomains : int, target number of leaves.
    oversampling : float, grid nodes per input point, shared across leaves.
    n_candidates : int, thresholds tried per split during decomposition.
    method : "fft" or "multilinear", resize used to align leaf grids.

    Attributes (after fit)
    ----------------------
    cloud_ : training coordinates as a PointCloud
    partition_ : fitted Partition
    shapes_ : per-leaf GridShape before alignment
    common_dims_ : node counts per axis shared by all aligned grids
    grid_template_ : zero-valued AlignedBatch used to rebuild batches from
        raw tensors in inverse_transform
    """

    def __init__(
        self,
        n_subdomains: int = 8,
        oversampling: float = 1.0,
        n_candidates: int = 5,
        method: str = "fft",
    ):
        self.n_subdomains = n_subdomains
        self.oversampling = oversampling
        self.n_candidates = n_candidates
        self.method = method

    def fit(self, X, y=None):
        cloud = as_point_cloud(X)
        partition = decompose(cloud, self.n_subdomains, n_max=self.n_candidates)
        shapes = allocate_shapes(partition, self.oversampling)

        dims = np.array([s.dims for s in shapes], dtype=np.int64)
        flat = dims == 1
        if np.any(flat.any(axis=0) & ~flat.all(axis=0)):
            raise SubgridError("grids disagree on degenerate axes; cannot align")
        common = tuple(int(v) for v in dims.max(axis=0))

        grids = []
        for shape in shapes:
            aligned_shape = GridShape(common, shape.box)
            grids.append(
                SubdomainGrid(aligned_shape, np.zeros((aligned_shape.n_nodes, 1)))
            )
        self.cloud_ = cloud
        self.partition_ = partition
        self.shapes_ = shapes
        self.common_dims_ = common
        self.grid_template_ = AlignedBatch(
            tuple(grids), tuple(s.dims for s in shapes)
        )
        return self

    def transform(self, V) -> np.ndarray:
        """Values at the fitted points -> (n_leaves, channels, *common_dims)."""
        check_is_fitted(self, "partition_")
        vals = check_point_values(V, self.cloud_.count)
        batch = forward_batch(
            self.cloud_.with_values(vals), self.partition_, self.shapes_,
            method=self.method,
        )
        return batch.stacked()

    def fit_transform(self, X, V) -> np.ndarray:
        return self.fit(X).transform(V)

    def inverse_transform(self, T) -> np.ndarray:
        """(n_leaves, channels, *common_dims) tensor -> values at the points."""
        check_is_fitted(self, "partition_")
        tensor = np.asarray(T, dtype=np.float64)
        expected = (self.partition_.n_leaves,)
        if tensor.ndim < 2 or tensor.shape[:1] != expected or tensor.shape[2:] != self.common_dims_:
            raise SubgridError(
                f"tensor must be (n_leaves, channels, *{self.common_dims_}), "
                f"got shape {tensor.shape}"
            )
        batch = self.grid_template_.with_tensor(tensor)
        return backward_values(batch, self.cloud_, self.partition_)

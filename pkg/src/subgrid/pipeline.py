"""End-to-end composition: scatter per leaf, align, apply an operator on the
aligned batch, interpolate back, and report an error decomposition.

The error report splits the total relative error against the truth values
into an interpolation term (truth values round-tripped through the grids)
and an operator-induced term, tied together by a triangle inequality: the
backward interpolation is linear, so

    |pred - truth| <= |pred - phi(U)| + |phi(U) - truth|

holds exactly, and bound_slack (right side minus left side) stays >= 0 up to
floating-point noise for any operator.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .alignment import AlignedBatch, align
from .allocation import GridShape
from .cloud import Array, PointCloud
from .errors import SubgridError
from .interpolation import grid_to_points, l2_relative_error, scatter_to_grid
from .io import stack_batches, write_aligned_tensor, write_partition
from .kdtree import Partition, rows_by_leaf


@dataclass(frozen=True)
class OperatorSlot:
    """A named AlignedBatch -> AlignedBatch transform.

    The transform may change the channel count but must preserve the common
    grid shape; linear declares whether it commutes with scaling/addition.
    """

    name: str
    fn: Callable[[AlignedBatch], AlignedBatch]
    linear: bool

    def __call__(self, batch: AlignedBatch) -> AlignedBatch:
        out = self.fn(batch)
        if not isinstance(out, AlignedBatch):
            raise SubgridError(f"operator {self.name!r} must return an aligned batch")
        if out.common_dims != batch.common_dims:
            raise SubgridError(f"operator {self.name!r} changed the common grid shape")
        if out.n_leaves != batch.n_leaves:
            raise SubgridError(f"operator {self.name!r} changed the leaf count")
        return out


def identity_operator() -> OperatorSlot:
    return OperatorSlot("identity", lambda b: b, linear=True)


def zero_operator() -> OperatorSlot:
    return OperatorSlot("zero", lambda b: b.with_tensor(np.zeros_like(b.stacked())), linear=True)


def lowpass_operator(keep_fraction: float = 0.25) -> OperatorSlot:
    """Spectral projection: per grid axis, keep the nk = max(1, floor(N * fraction))
    lowest modes (ceil(nk/2) non-negative, floor(nk/2) negative), zero the rest."""
    if not 0.0 < keep_fraction <= 1.0:
        raise SubgridError("keep fraction must be in (0, 1]")

    def fn(batch: AlignedBatch) -> AlignedBatch:
        t = batch.stacked()
        grid_axes = tuple(range(2, t.ndim))
        spec = np.fft.fftn(t, axes=grid_axes)
        for ax, n in zip(grid_axes, t.shape[2:]):
            nk = min(max(1, int(n * keep_fraction)), n)
            keep = np.zeros(n, dtype=bool)
            keep[: (nk + 1) // 2] = True
            if nk // 2 > 0:
                keep[-(nk // 2) :] = True
            shape = [1] * t.ndim
            shape[ax] = n
            spec = spec * keep.reshape(shape)
        return batch.with_tensor(np.fft.ifftn(spec, axes=grid_axes).real)

    return OperatorSlot(f"lowpass[{keep_fraction}]", fn, linear=True)


@dataclass(frozen=True)
class ErrorReport:
    """Relative-error decomposition of one pipeline run.

    total:         |pred - truth| / |truth| at the truth points
    operator_term: |op(A) - U| / |U| on the aligned grids
    interp_term:   |phi(U) - truth| / |truth| at the truth points
    bound_slack:   (operator-induced point term) + interp_term - total; >= 0
                   up to floating point because backward interpolation is
                   linear
    """

    total: float
    operator_term: float
    interp_term: float
    bound_slack: float


def forward_batch(
    cloud: PointCloud,
    partition: Partition,
    shapes: Sequence[GridShape],
    method: str = "fft",
) -> AlignedBatch:
    """Scatter a cloud's values onto each leaf's grid and align the grids."""
    if cloud.values is None:
        raise SubgridError("point cloud has no values to interpolate")
    if len(shapes) != partition.n_leaves:
        raise SubgridError("one grid shape per leaf required")
    rows = rows_by_leaf(partition, cloud.ids)
    grids = []
    for k in range(partition.n_leaves):
        if rows[k].size == 0:
            raise SubgridError(f"leaf {k} holds no points of this cloud")
        grids.append(scatter_to_grid(cloud.take(rows[k]), shapes[k]))
    return align(grids, method=method)


def backward_values(batch: AlignedBatch, cloud: PointCloud, partition: Partition) -> Array:
    """Interpolate an aligned batch back to a cloud's points, leaf by leaf."""
    if batch.n_leaves != partition.n_leaves:
        raise SubgridError("batch and partition leaf counts must match")
    rows = rows_by_leaf(partition, cloud.ids)
    out = np.empty((cloud.count, batch.channels))
    for k in range(partition.n_leaves):
        if rows[k].size:
            out[rows[k]] = grid_to_points(batch.grids[k], cloud.points[rows[k]])
    return out


def run_pipeline(
    sample: PointCloud,
    truth: PointCloud,
    partition: Partition,
    shapes: Sequence[GridShape],
    op: OperatorSlot,
    method: str = "fft",
) -> Tuple[Array, ErrorReport]:
    """Forward-interpolate, apply the operator, interpolate back, and score.

    Returns per-point predictions at the truth cloud's points plus the error
    decomposition against the truth values.
    """
    if truth.values is None:
        raise SubgridError("truth cloud has no values")
    input_batch = forward_batch(sample, partition, shapes, method=method)
    out_batch = op(input_batch)
    truth_batch = forward_batch(truth, partition, shapes, method=method)
    if out_batch.channels != truth_batch.channels:
        raise SubgridError("operator output channels must match the truth channels")

    pred = backward_values(out_batch, truth, partition)
    phi_u = backward_values(truth_batch, truth, partition)

    truth_vals = truth.values
    den = float(np.sum(truth_vals * truth_vals))
    if den == 0.0:
        raise SubgridError("zero-norm reference")

    total = l2_relative_error(truth_vals, pred)
    interp_term = l2_relative_error(truth_vals, phi_u)

    u_grid = truth_batch.stacked()
    g_grid = out_batch.stacked()
    u_norm = float(np.sum(u_grid * u_grid))
    if u_norm == 0.0:
        raise SubgridError("zero-norm reference")
    operator_term = float(np.sqrt(np.sum((g_grid - u_grid) ** 2) / u_norm))

    op_point_term = float(np.sqrt(np.sum((pred - phi_u) ** 2) / den))
    report = ErrorReport(
        total=total,
        operator_term=operator_term,
        interp_term=interp_term,
        bound_slack=op_point_term + interp_term - total,
    )
    return pred, report


def build_dataset(
    samples: Sequence[Tuple[PointCloud, PointCloud]],
    partition: Partition,
    shapes: Sequence[GridShape],
    out_dir,
    method: str = "fft",
    workers: int = 1,
) -> Dict[str, Path]:
    """Write the aligned input/target tensors plus the annotated partition.

    Outputs inputs.json/.bin, targets.json/.bin, and partition.json in
    out_dir.  Byte output is deterministic for fixed inputs regardless of
    worker count.
    """
    samples = list(samples)
    if not samples:
        raise SubgridError("no samples to export")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(pair: Tuple[PointCloud, PointCloud]) -> Tuple[AlignedBatch, AlignedBatch]:
        a, u = pair
        return (
            forward_batch(a, partition, shapes, method=method),
            forward_batch(u, partition, shapes, method=method),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, samples))
    else:
        results = [one(pair) for pair in samples]

    inputs = stack_batches([r[0] for r in results])
    targets = stack_batches([r[1] for r in results])
    paths = {
        "inputs": out_dir / "inputs.json",
        "targets": out_dir / "targets.json",
        "partition": out_dir / "partition.json",
    }
    write_aligned_tensor(inputs, paths["inputs"])
    write_aligned_tensor(targets, paths["targets"])
    write_partition(partition, paths["partition"], shapes=list(shapes))
    return paths

"""File formats: point clouds, partitions, grids, aligned batches.

Every format is a small JSON manifest next to a raw little-endian float64
payload (except partitions, which are pure JSON).  The payload sits at the
manifest path with its suffix swapped to ``.bin``.  Writers emit canonical
bytes (fixed key order, repr-exact floats), so identical inputs produce
identical files; readers reject structural mismatches with FormatError.

Point ids are positional: a cloud file's points are numbered 0..m-1 in file
order, and partition files refer to those positions.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .alignment import AlignedBatch
from .allocation import GridShape
from .cloud import BoundingBox, PointCloud
from .errors import FormatError, SubgridError
from .interpolation import SubdomainGrid
from .kdtree import Partition, TreeNode

FORMAT_VERSION = "1"
_DTYPE_TAG = "f64le"

PathLike = Union[str, Path]


def payload_path(manifest_path: PathLike) -> Path:
    return Path(manifest_path).with_suffix(".bin")


def _write_json(path: PathLike, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def _read_json(path: PathLike) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"manifest {path} must hold a JSON object")
    return obj


def _write_payload(manifest_path: PathLike, array: np.ndarray) -> None:
    payload_path(manifest_path).write_bytes(
        np.ascontiguousarray(array, dtype="<f8").tobytes()
    )


def _read_payload(manifest_path: PathLike, expected_count: int) -> np.ndarray:
    p = payload_path(manifest_path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read payload {p}: {exc}") from exc
    if len(raw) != expected_count * 8:
        raise FormatError(
            f"payload {p} holds {len(raw)} bytes, expected {expected_count * 8}"
        )
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def _require(manifest: dict, key: str, path: PathLike):
    if key not in manifest:
        raise FormatError(f"manifest {path} lacks key {key!r}")
    return manifest[key]


def _require_dtype(manifest: dict, path: PathLike) -> None:
    if _require(manifest, "dtype", path) != _DTYPE_TAG:
        raise FormatError(f"manifest {path} has unsupported dtype {manifest['dtype']!r}")


# ---------------------------------------------------------------------------
# point clouds


def write_point_cloud(cloud: PointCloud, path: PathLike) -> None:
    """Manifest + payload of m*(d+C) floats: coordinates then values per point.

    Ids are not persisted; file order is the identity.
    """
    manifest = {
        "dims": cloud.dims,
        "count": cloud.count,
        "channels": cloud.channels,
        "dtype": _DTYPE_TAG,
    }
    _write_json(path, manifest)
    if cloud.channels:
        rows = np.hstack([cloud.points, cloud.values])
    else:
        rows = cloud.points
    _write_payload(path, rows)


def read_point_cloud(path: PathLike) -> PointCloud:
    manifest = _read_json(path)
    _require_dtype(manifest, path)
    d = int(_require(manifest, "dims", path))
    m = int(_require(manifest, "count", path))
    c = int(_require(manifest, "channels", path))
    if d < 1 or m < 0 or c < 0:
        raise FormatError(f"manifest {path} has invalid dims/count/channels")
    flat = _read_payload(path, m * (d + c))
    rows = flat.reshape(m, d + c)
    try:
        return PointCloud(rows[:, :d], rows[:, d:] if c else None)
    except SubgridError as exc:
        raise FormatError(f"cloud file {path} is invalid: {exc}") from exc


# ---------------------------------------------------------------------------
# partitions


def _box_to_json(box: BoundingBox) -> dict:
    return {"lo": [float(v) for v in box.lo], "hi": [float(v) for v in box.hi]}


def _box_from_json(obj, path: PathLike) -> BoundingBox:
    try:
        return BoundingBox(np.asarray(obj["lo"], dtype=np.float64), np.asarray(obj["hi"], dtype=np.float64))
    except (KeyError, TypeError, SubgridError) as exc:
        raise FormatError(f"partition file {path} has an invalid box: {exc}") from exc


def write_partition(
    partition: Partition, path: PathLike, shapes: Optional[List[GridShape]] = None
) -> None:
    """Partition JSON; pass shapes to annotate each leaf with its grid."""
    if shapes is not None and len(shapes) != partition.n_leaves:
        raise SubgridError("one grid shape per leaf required")
    nodes = [
        {"axis": nd.axis, "threshold": float(nd.threshold), "left": nd.left, "right": nd.right}
        for nd in partition.nodes
    ]
    leaves = []
    for k in range(partition.n_leaves):
        leaf = {
            "point_ids": [int(i) for i in partition.leaf_ids[k]],
            "box": _box_to_json(partition.boxes[k]),
            "unsplittable": bool(partition.unsplittable[k]),
        }
        if shapes is not None:
            leaves.append({**leaf, "grid": list(shapes[k].dims)})
        else:
            leaves.append(leaf)
    _write_json(path, {"nodes": nodes, "leaves": leaves})


def read_partition(path: PathLike) -> Tuple[Partition, Optional[List[GridShape]]]:
    """Partition plus its grid shapes if every leaf carries an annotation.

    The returned partition has no subclouds; use bind_partition to attach a
    cloud when per-leaf point access is needed.
    """
    obj = _read_json(path)
    raw_nodes = _require(obj, "nodes", path)
    raw_leaves = _require(obj, "leaves", path)
    if not isinstance(raw_nodes, list) or not isinstance(raw_leaves, list) or not raw_leaves:
        raise FormatError(f"partition file {path} must list nodes and leaves")
    try:
        nodes = tuple(
            TreeNode(int(nd["axis"]), float(nd["threshold"]), int(nd["left"]), int(nd["right"]))
            for nd in raw_nodes
        )
        leaf_ids = tuple(np.asarray(lf["point_ids"], dtype=np.int64) for lf in raw_leaves)
        boxes = tuple(_box_from_json(lf["box"], path) for lf in raw_leaves)
        unsplittable = tuple(bool(lf["unsplittable"]) for lf in raw_leaves)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"partition file {path} is malformed: {exc}") from exc
    try:
        partition = Partition(leaf_ids, boxes, nodes, unsplittable)
    except SubgridError as exc:
        raise FormatError(f"partition file {path} is invalid: {exc}") from exc

    annotated = ["grid" in lf for lf in raw_leaves]
    shapes: Optional[List[GridShape]] = None
    if all(annotated):
        try:
            shapes = [
                GridShape(tuple(int(v) for v in lf["grid"]), box)
                for lf, box in zip(raw_leaves, boxes)
            ]
        except (TypeError, ValueError, SubgridError) as exc:
            raise FormatError(f"partition file {path} has invalid grids: {exc}") from exc
    elif any(annotated):
        raise FormatError(f"partition file {path} annotates grids on only some leaves")
    return partition, shapes


def bind_partition(partition: Partition, cloud: PointCloud) -> Partition:
    """Attach subclouds to a loaded partition by matching point ids."""
    id_to_row = {int(v): i for i, v in enumerate(cloud.ids)}
    subclouds = []
    for ids in partition.leaf_ids:
        try:
            rows = np.array([id_to_row[int(v)] for v in ids], dtype=np.int64)
        except KeyError:
            raise SubgridError("point ids not covered by partition") from None
        subclouds.append(cloud.take(rows))
    return Partition(
        leaf_ids=partition.leaf_ids,
        boxes=partition.boxes,
        nodes=partition.nodes,
        unsplittable=partition.unsplittable,
        subclouds=tuple(subclouds),
        splits=partition.splits,
    )


# ---------------------------------------------------------------------------
# grids


def write_grid(grid: SubdomainGrid, path: PathLike) -> None:
    manifest = {
        "shape": list(grid.shape.dims),
        "channels": grid.channels,
        "box": _box_to_json(grid.shape.box),
        "dtype": _DTYPE_TAG,
    }
    _write_json(path, manifest)
    _write_payload(path, grid.values)


def read_grid(path: PathLike) -> SubdomainGrid:
    manifest = _read_json(path)
    _require_dtype(manifest, path)
    dims = tuple(int(v) for v in _require(manifest, "shape", path))
    channels = int(_require(manifest, "channels", path))
    box = _box_from_json(_require(manifest, "box", path), path)
    if channels < 1:
        raise FormatError(f"grid file {path} needs at least one channel")
    try:
        shape = GridShape(dims, box)
    except SubgridError as exc:
        raise FormatError(f"grid file {path} is invalid: {exc}") from exc
    flat = _read_payload(path, shape.n_nodes * channels)
    return SubdomainGrid(shape, flat.reshape(shape.n_nodes, channels))


# ---------------------------------------------------------------------------
# aligned batches


def write_aligned_tensor(tensor: np.ndarray, path: PathLike) -> None:
    """Export tensor (samples, leaves, channels, *shape) with its manifest."""
    t = np.ascontiguousarray(tensor, dtype=np.float64)
    if t.ndim < 4:
        raise SubgridError("aligned tensor must be (samples, leaves, channels, *shape)")
    manifest = {
        "samples": t.shape[0],
        "leaves": t.shape[1],
        "channels": t.shape[2],
        "shape": list(t.shape[3:]),
        "dtype": _DTYPE_TAG,
    }
    _write_json(path, manifest)
    _write_payload(path, t)


def read_aligned_tensor(path: PathLike) -> np.ndarray:
    manifest = _read_json(path)
    _require_dtype(manifest, path)
    n = int(_require(manifest, "samples", path))
    k = int(_require(manifest, "leaves", path))
    c = int(_require(manifest, "channels", path))
    dims = tuple(int(v) for v in _require(manifest, "shape", path))
    count = n * k * c
    for v in dims:
        count *= v
    flat = _read_payload(path, count)
    return flat.reshape((n, k, c) + dims)


def stack_batches(batches: List[AlignedBatch]) -> np.ndarray:
    """Stack per-sample batches into the export tensor (N, K, C, *shape)."""
    if not batches:
        raise SubgridError("no batches to stack")
    return np.stack([b.stacked() for b in batches])

"""Spectral grid resizing and stacking of subdomain grids to a common shape.

Resizing treats grid values as periodic samples: the per-axis DFT spectrum is
zero-padded (upsizing) or truncated (downsizing).  An even-size source's
Nyquist bin is split half-and-half into the +/- frequency pair on upsizing;
downsizing sums that pair back into the target's Nyquist slot, which makes
upsize-then-downsize an exact round trip on band content.  Values are
anchored at the first node before the transform so constant fields survive
bit-exactly, independent of rounding in the FFT pair.

A plain multilinear resampling mode is available as an alternative where
spectral ringing on non-periodic fields is unacceptable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .allocation import GridShape
from .errors import SubgridError
from .interpolation import SubdomainGrid, grid_nodes, grid_to_points

Array = np.ndarray


def _resize_axis_spectral(a: Array, axis: int, m_new: int) -> Array:
    """Resize one axis of a real array by DFT zero-padding/truncation."""
    n = a.shape[axis]
    if m_new == n:
        return a
    moved = np.moveaxis(a, axis, 0)
    spec = np.fft.fft(moved, axis=0)
    out_spec = np.zeros((m_new,) + moved.shape[1:], dtype=np.complex128)
    if m_new > n:
        if n % 2 == 0:
            h = n // 2
            out_spec[:h] = spec[:h]
            out_spec[h] = 0.5 * spec[h]
            out_spec[m_new - h] = 0.5 * spec[h]
            out_spec[m_new - h + 1 :] = spec[n - h + 1 :]
        else:
            h = (n - 1) // 2
            out_spec[: h + 1] = spec[: h + 1]
            out_spec[m_new - h :] = spec[n - h :]
    else:
        if m_new % 2 == 0:
            h = m_new // 2
            out_spec[:h] = spec[:h]
            out_spec[h] = spec[h] + spec[n - h]
            out_spec[h + 1 :] = spec[n - h + 1 :]
        else:
            h = (m_new - 1) // 2
            out_spec[: h + 1] = spec[: h + 1]
            out_spec[m_new - h :] = spec[n - h :]
    resized = np.fft.ifft(out_spec, axis=0).real * (m_new / n)
    return np.moveaxis(resized, 0, axis)


def _check_new_dims(grid: SubdomainGrid, new_dims: Sequence[int]) -> Tuple[int, ...]:
    dims = tuple(int(v) for v in new_dims)
    if len(dims) != len(grid.shape.dims):
        raise SubgridError("new shape must have one entry per axis")
    if any(v < 1 for v in dims):
        raise SubgridError("node counts must be >= 1")
    nondeg = grid.shape.box.nondegenerate_axes()
    for i, v in enumerate(dims):
        if not nondeg[i] and v != 1:
            raise SubgridError("degenerate axes stay at one node")
    return dims


def fft_resize(grid: SubdomainGrid, new_dims: Sequence[int]) -> SubdomainGrid:
    """Spectrally resize a grid to new per-axis node counts.

    Same-shape calls return the grid unchanged (bit-exact identity).
    Constant fields are preserved exactly at any target shape.
    """
    dims = _check_new_dims(grid, new_dims)
    if dims == grid.shape.dims:
        return grid
    anchor = grid.values[0, :].copy()  # first-node value per channel
    arr = grid.reshaped() - anchor
    for axis, (old, new) in enumerate(zip(grid.shape.dims, dims)):
        if new != old:
            arr = _resize_axis_spectral(arr, axis, new)
    arr = arr + anchor
    new_shape = GridShape(dims, grid.shape.box)
    return SubdomainGrid(new_shape, arr.reshape(-1, grid.channels))


def multilinear_resize(grid: SubdomainGrid, new_dims: Sequence[int]) -> SubdomainGrid:
    """Resample a grid onto new node counts with multilinear interpolation."""
    dims = _check_new_dims(grid, new_dims)
    if dims == grid.shape.dims:
        return grid
    new_shape = GridShape(dims, grid.shape.box)
    values = grid_to_points(grid, grid_nodes(new_shape))
    return SubdomainGrid(new_shape, values)


RESIZE_METHODS = {"fft": fft_resize, "multilinear": multilinear_resize}


@dataclass(frozen=True)
class AlignedBatch:
    """Subdomain grids resized to one common shape, stacked in leaf order.

    common_dims is the coordinate-wise maximum of the source shapes;
    source_dims records each grid's shape before alignment.
    """

    grids: Tuple[SubdomainGrid, ...]
    source_dims: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.grids) == 0:
            raise SubgridError("aligned batch needs at least one grid")
        dims0 = self.grids[0].shape.dims
        c0 = self.grids[0].channels
        for g in self.grids:
            if g.shape.dims != dims0:
                raise SubgridError("aligned grids must share one shape")
            if g.channels != c0:
                raise SubgridError("mismatched channel counts")
        if len(self.source_dims) != len(self.grids):
            raise SubgridError("one source shape per grid required")

    @property
    def common_dims(self) -> Tuple[int, ...]:
        return self.grids[0].shape.dims

    @property
    def n_leaves(self) -> int:
        return len(self.grids)

    @property
    def channels(self) -> int:
        return self.grids[0].channels

    def stacked(self) -> Array:
        """Dense tensor (K, C, *common_dims)."""
        return np.stack([np.moveaxis(g.reshaped(), -1, 0) for g in self.grids])

    def with_tensor(self, tensor: Array) -> "AlignedBatch":
        """Batch with the same boxes/shape but new values (K, C', *common_dims)."""
        t = np.asarray(tensor, dtype=np.float64)
        if t.ndim != 2 + len(self.common_dims) or t.shape[0] != self.n_leaves or t.shape[2:] != self.common_dims:
            raise SubgridError(
                f"tensor must be (K, C, *{self.common_dims}) with K={self.n_leaves}, got {t.shape}"
            )
        grids = tuple(
            SubdomainGrid(g.shape, np.moveaxis(t[k], 0, -1).reshape(-1, t.shape[1]))
            for k, g in enumerate(self.grids)
        )
        return AlignedBatch(grids, self.source_dims)


def align(grids: Sequence[SubdomainGrid], method: str = "fft") -> AlignedBatch:
    """Resize grids to their coordinate-wise max shape and stack in order."""
    grids = list(grids)
    if not grids:
        raise SubgridError("aligned batch needs at least one grid")
    channels = grids[0].channels
    if any(g.channels != channels for g in grids):
        raise SubgridError("mismatched channel counts")
    if method not in RESIZE_METHODS:
        raise SubgridError(f"unknown resize method: {method!r}")
    resize = RESIZE_METHODS[method]
    d = len(grids[0].shape.dims)
    if any(len(g.shape.dims) != d for g in grids):
        raise SubgridError("grids must share dimensionality")
    common = tuple(
        max(g.shape.dims[i] for g in grids) for i in range(d)
    )
    source = tuple(g.shape.dims for g in grids)
    resized = []
    for g in grids:
        # an axis that is degenerate in this grid but not in some other grid
        # cannot be brought to the common node count (its nodes coincide)
        nondeg = g.shape.box.nondegenerate_axes()
        if any(common[i] > 1 and not nondeg[i] for i in range(d)):
            raise SubgridError("grids disagree on degenerate axes; cannot align")
        resized.append(resize(g, common))
    return AlignedBatch(tuple(resized), source)

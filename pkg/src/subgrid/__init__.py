"""subgrid: resample non-uniform point clouds onto per-subdomain uniform grids.

The pipeline decomposes a cloud into axis-aligned subdomains wherever the
point density is far from uniform, sizes one uniform grid per subdomain from
a shared node budget, scatters point values onto the grids, aligns the grids
to a common shape spectrally, and interpolates grid fields back to arbitrary
points.  See the README for the file formats and the CLI.
"""

from .alignment import AlignedBatch, align, fft_resize, multilinear_resize
from .allocation import GridShape, allocate_shapes, shape_for
from .bench import (
    ROUNDTRIP_FIELDS,
    SCALING_FIELDS,
    bench_decompose_scaling,
    bench_roundtrip,
    plot_roundtrip,
    plot_scaling,
    roundtrip_values,
    scaling_cloud,
    write_csv,
)
from .cloud import BoundingBox, PointCloud, bounding_box, split_cloud, stack_clouds
from .errors import FormatError, SubgridError
from .estimators import CloudPartitioner, GridResampler
from .histogram import (
    BinSpec,
    bin_spec_for,
    histogram,
    kl_to_uniform,
    uniformity_upper_bound,
)
from .interpolation import (
    SubdomainGrid,
    gaussian_kde_grid,
    grid_axes,
    grid_nodes,
    grid_to_points,
    l2_relative_error,
    scatter_to_grid,
)
from .io import (
    FORMAT_VERSION,
    bind_partition,
    payload_path,
    read_aligned_tensor,
    read_grid,
    read_partition,
    read_point_cloud,
    stack_batches,
    write_aligned_tensor,
    write_grid,
    write_partition,
    write_point_cloud,
)
from .kdtree import (
    Partition,
    SplitCandidate,
    SplitRecord,
    best_split,
    candidate_thresholds,
    decompose,
    objective,
    route_points,
    rows_by_leaf,
    split_gain,
)
from .pipeline import (
    ErrorReport,
    OperatorSlot,
    backward_values,
    build_dataset,
    forward_batch,
    identity_operator,
    lowpass_operator,
    run_pipeline,
    zero_operator,
)
from .synth import dense_center_cloud, gen_gaussian_mixture, smooth_bump_field

__version__ = "0.1.0"

__all__ = [
    "AlignedBatch",
    "BinSpec",
    "BoundingBox",
    "CloudPartitioner",
    "ErrorReport",
    "FORMAT_VERSION",
    "FormatError",
    "GridResampler",
    "GridShape",
    "OperatorSlot",
    "Partition",
    "PointCloud",
    "ROUNDTRIP_FIELDS",
    "SCALING_FIELDS",
    "SplitCandidate",
    "SplitRecord",
    "SubdomainGrid",
    "SubgridError",
    "align",
    "allocate_shapes",
    "backward_values",
    "bench_decompose_scaling",
    "bench_roundtrip",
    "best_split",
    "bin_spec_for",
    "bind_partition",
    "bounding_box",
    "build_dataset",
    "candidate_thresholds",
    "decompose",
    "dense_center_cloud",
    "fft_resize",
    "forward_batch",
    "gaussian_kde_grid",
    "gen_gaussian_mixture",
    "grid_axes",
    "grid_nodes",
    "grid_to_points",
    "histogram",
    "identity_operator",
    "kl_to_uniform",
    "l2_relative_error",
    "lowpass_operator",
    "multilinear_resize",
    "objective",
    "payload_path",
    "plot_roundtrip",
    "plot_scaling",
    "read_aligned_tensor",
    "read_grid",
    "read_partition",
    "read_point_cloud",
    "roundtrip_values",
    "route_points",
    "rows_by_leaf",
    "run_pipeline",
    "scaling_cloud",
    "scatter_to_grid",
    "shape_for",
    "smooth_bump_field",
    "split_cloud",
    "split_gain",
    "stack_batches",
    "stack_clouds",
    "uniformity_upper_bound",
    "write_aligned_tensor",
    "write_csv",
    "write_grid",
    "write_partition",
    "write_point_cloud",
    "zero_operator",
]

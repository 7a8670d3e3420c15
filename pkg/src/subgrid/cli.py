"""Command-line front end for the full workflow.

All flags are long-form.  Human-readable output goes to stdout; --json swaps
it for a single JSON document on stdout.  Failures print one line to stderr
and exit with status 1; exit status 0 means every requested output was
written.  Given identical inputs and flags, every subcommand writes
byte-identical outputs.
"""

from __future__ import annotations

import csv as _csv
import functools
import glob as _glob
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .alignment import AlignedBatch
from .allocation import GridShape, allocate_shapes
from .bench import (
    ROUNDTRIP_FIELDS,
    SCALING_FIELDS,
    bench_decompose_scaling,
    bench_roundtrip,
    plot_roundtrip,
    plot_scaling,
    write_csv,
)
from .cloud import PointCloud
from .errors import SubgridError
from .histogram import bin_spec_for, kl_to_uniform
from .interpolation import SubdomainGrid, l2_relative_error
from .io import (
    FORMAT_VERSION,
    read_aligned_tensor,
    read_partition,
    read_point_cloud,
    write_aligned_tensor,
    write_partition,
    write_point_cloud,
)
from .kdtree import decompose, objective
from .pipeline import backward_values, build_dataset, forward_batch
from .synth import (
    CENTER_BUMP_AMPLITUDE,
    CENTER_BUMP_SIGMA,
    CENTER_CLUSTER_SIGMA,
    CENTER_CLUSTER_WEIGHT,
    gen_gaussian_mixture,
    smooth_bump_field,
)

_IN_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)
_OUT_FILE = click.Path(dir_okay=False, path_type=Path)


def _emit(as_json: bool, payload: dict, human_lines) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2))
    else:
        for line in human_lines:
            click.echo(line)


def _workflow(fn):
    """Translate library errors into a stderr line and exit status 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SubgridError as exc:
            if kwargs.get("as_json"):
                click.echo(json.dumps({"error": str(exc)}), err=True)
            else:
                click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _parse_clusters(text: str):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SubgridError(f"invalid --clusters JSON: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise SubgridError("--clusters must be a non-empty JSON list")
    out = []
    for entry in raw:
        if not isinstance(entry, dict) or not {"center", "sigma", "weight"} <= set(entry):
            raise SubgridError('each cluster needs "center", "sigma", and "weight" keys')
        out.append(
            (
                [float(v) for v in entry["center"]],
                float(entry["sigma"]),
                float(entry["weight"]),
            )
        )
    return out


def _parse_floats(text: str, flag: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise SubgridError(f"{flag} must be a comma-separated number list") from exc
    if not vals:
        raise SubgridError(f"{flag} must name at least one value")
    return vals


def _dims_label(dims) -> str:
    return "x".join(str(v) for v in dims)


@click.group()
@click.version_option(__version__, "--version", message=f"subgrid %(version)s (format {FORMAT_VERSION})")
def main() -> None:
    """Resample non-uniform point clouds onto per-subdomain uniform grids."""


@main.command("synth")
@click.option("--seed", type=int, required=True, help="RNG seed for the point positions.")
@click.option("--dims", type=int, default=2, show_default=True)
@click.option("--count", type=int, default=4096, show_default=True)
@click.option(
    "--clusters",
    "clusters_json",
    type=str,
    default=None,
    help='JSON list of {"center": [..], "sigma": s, "weight": w}; omitted = dense-center preset.',
)
@click.option(
    "--background",
    type=float,
    default=None,
    help="Uniform background fraction (default: 1 - sum of cluster weights).",
)
@click.option("--field", type=click.Choice(["none", "smooth"]), default="smooth", show_default=True)
@click.option("--field-seed", type=int, default=None, help="Value-field seed (default: seed + 10000).")
@click.option("--out", "out_path", type=_OUT_FILE, required=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_synth(seed, dims, count, clusters_json, background, field, field_seed, out_path, as_json):
    """Generate a synthetic point cloud and write it to --out."""
    fseed = seed + 10_000 if field_seed is None else field_seed
    bump_center = None
    if clusters_json is None:
        bump_center = [0.5] * dims
        clusters = [(bump_center, CENTER_CLUSTER_SIGMA, CENTER_CLUSTER_WEIGHT)]
        bg = 1.0 - CENTER_CLUSTER_WEIGHT if background is None else background
    else:
        clusters = _parse_clusters(clusters_json)
        bg = 1.0 - sum(w for _, _, w in clusters) if background is None else background
    cloud = gen_gaussian_mixture(seed, dims, count, clusters, bg)
    if field == "smooth":
        values = smooth_bump_field(
            cloud.points,
            field_seed=fseed,
            bump_center=bump_center,
            bump_sigma=CENTER_BUMP_SIGMA,
            bump_amplitude=CENTER_BUMP_AMPLITUDE,
        )
        cloud = cloud.with_values(values)
    write_point_cloud(cloud, out_path)
    payload = {
        "out": str(out_path),
        "count": cloud.count,
        "dims": cloud.dims,
        "channels": cloud.channels,
    }
    _emit(
        as_json,
        payload,
        [f"wrote {out_path} ({cloud.count} points, {cloud.dims}d, {cloud.channels} channel(s))"],
    )


@main.command("decompose")
@click.option("--cloud", "cloud_path", type=_IN_FILE, required=True)
@click.option("--n", "n_subdomains", type=int, required=True, help="Target leaf count.")
@click.option("--nmax", "n_candidates", type=int, default=5, show_default=True, help="Split thresholds tried per axis.")
@click.option("--out", "out_path", type=_OUT_FILE, required=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_decompose(cloud_path, n_subdomains, n_candidates, out_path, as_json):
    """Split a cloud into subdomains; write the partition tree to --out."""
    cloud = read_point_cloud(cloud_path)
    before = kl_to_uniform(cloud, bin_spec_for(cloud))
    part = decompose(cloud, n_subdomains, n_max=n_candidates)
    after = objective(part)
    write_partition(part, out_path)
    iterations = [
        {
            "iteration": i + 1,
            "leaf": r.leaf,
            "axis": r.axis,
            "threshold": r.threshold,
            "gain": r.gain,
            "objective": r.objective_after,
        }
        for i, r in enumerate(part.splits)
    ]
    payload = {
        "objective_before": before,
        "objective_after": after,
        "iterations": iterations,
        "n_leaves": part.n_leaves,
        "early_terminated": part.early_terminated,
        "out": str(out_path),
    }
    human = [f"objective before: {before:.12g}"]
    for it in iterations:
        human.append(
            f"iter {it['iteration']}: split leaf {it['leaf']} on axis {it['axis']} "
            f"at {it['threshold']:.12g}, gain {it['gain']:.12g}, objective {it['objective']:.12g}"
        )
    human.append(f"objective after: {after:.12g}")
    human.append(f"leaves: {part.n_leaves}" + (" (early termination)" if part.early_terminated else ""))
    human.append(f"wrote {out_path}")
    _emit(as_json, payload, human)


@main.command("allocate")
@click.option("--partition", "partition_path", type=_IN_FILE, required=True)
@click.option("--ratio", type=float, required=True, help="Grid nodes per input point.")
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_allocate(partition_path, ratio, as_json):
    """Size one grid per leaf and annotate the partition file in place."""
    part, _ = read_partition(partition_path)
    shapes = allocate_shapes(part, ratio)
    write_partition(part, partition_path, shapes=shapes)
    total = sum(s.n_nodes for s in shapes)
    payload = {
        "partition": str(partition_path),
        "ratio": ratio,
        "total_nodes": total,
        "points": part.total_points,
        "grids": [{"leaf": k, "dims": list(s.dims), "nodes": s.n_nodes} for k, s in enumerate(shapes)],
    }
    human = [
        f"leaf {k}: grid {_dims_label(s.dims)} ({s.n_nodes} nodes, {len(part.leaf_ids[k])} points)"
        for k, s in enumerate(shapes)
    ]
    human.append(f"total nodes: {total} for {part.total_points} points (ratio {ratio:g})")
    human.append(f"updated {partition_path}")
    _emit(as_json, payload, human)


def _batch_from_tensor(tensor: np.ndarray, part) -> AlignedBatch:
    """Rebuild an aligned batch from a (leaves, channels, *dims) tensor plus leaf boxes."""
    if tensor.shape[0] != len(part.boxes):
        raise SubgridError("tensor leaf count must match the partition")
    dims = tuple(int(v) for v in tensor.shape[2:])
    n_nodes = 1
    for v in dims:
        n_nodes *= v
    grids = tuple(
        SubdomainGrid(GridShape(dims, box), np.zeros((n_nodes, tensor.shape[1])))
        for box in part.boxes
    )
    return AlignedBatch(grids, tuple(dims for _ in grids)).with_tensor(tensor)


@main.command("interp")
@click.option("--cloud", "cloud_path", type=_IN_FILE, required=True)
@click.option("--partition", "partition_path", type=_IN_FILE, required=True)
@click.option("--direction", type=click.Choice(["forward", "backward"]), required=True)
@click.option("--grids", "grids_path", type=_IN_FILE, default=None, help="Aligned tensor input (backward only).")
@click.option("--method", type=click.Choice(["fft", "multilinear"]), default="fft", show_default=True)
@click.option("--out", "out_path", type=_OUT_FILE, required=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_interp(cloud_path, partition_path, direction, grids_path, method, out_path, as_json):
    """Forward: point values -> aligned grid tensor.  Backward: tensor -> point values."""
    cloud = read_point_cloud(cloud_path)
    part, shapes = read_partition(partition_path)
    if direction == "forward":
        if shapes is None:
            raise SubgridError("partition file carries no grid annotations; run allocate first")
        batch = forward_batch(cloud, part, shapes, method=method)
        write_aligned_tensor(batch.stacked()[None], out_path)
        payload = {
            "out": str(out_path),
            "leaves": batch.n_leaves,
            "channels": batch.channels,
            "shape": list(batch.common_dims),
        }
        human = [
            f"wrote {out_path} (1 sample, {batch.n_leaves} leaves, "
            f"{batch.channels} channel(s), grid {_dims_label(batch.common_dims)})"
        ]
        _emit(as_json, payload, human)
    else:
        if grids_path is None:
            raise SubgridError("backward interpolation needs --grids")
        tensor = read_aligned_tensor(grids_path)
        if tensor.shape[0] != 1:
            raise SubgridError("backward interpolation expects a single-sample tensor")
        batch = _batch_from_tensor(tensor[0], part)
        values = backward_values(batch, cloud, part)
        write_point_cloud(PointCloud(cloud.points, values), out_path)
        payload = {"out": str(out_path), "count": cloud.count, "channels": int(values.shape[1])}
        human = [f"wrote {out_path} ({cloud.count} points, {values.shape[1]} channel(s))"]
        if cloud.values is not None and cloud.values.shape == values.shape:
            err = l2_relative_error(cloud.values, values)
            payload["l2re"] = err
            human.append(f"l2 relative error vs. input values: {err:.6e}")
        _emit(as_json, payload, human)


@main.command("roundtrip")
@click.option("--cloud", "cloud_path", type=_IN_FILE, required=True)
@click.option("--n", "n_subdomains", type=int, required=True)
@click.option("--ratio", type=float, required=True)
@click.option("--repeats", type=int, default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_roundtrip(cloud_path, n_subdomains, ratio, repeats, as_json):
    """Round-trip the cloud's values through global vs. subdomain grids."""
    cloud = read_point_cloud(cloud_path)
    rows = bench_roundtrip(cloud, n_subdomains, [ratio], repeats=repeats)
    by_arm = {r["arm"]: r for r in rows}
    payload = {
        "ratio": ratio,
        "n": n_subdomains,
        "global": {"l2re": by_arm["global"]["l2re"], "seconds": by_arm["global"]["seconds"]},
        "subdomain": {"l2re": by_arm["subdomain"]["l2re"], "seconds": by_arm["subdomain"]["seconds"]},
    }
    human = [
        f"global    (1 grid):   l2re {by_arm['global']['l2re']:.6e}",
        f"subdomain ({n_subdomains} grids): l2re {by_arm['subdomain']['l2re']:.6e}",
    ]
    _emit(as_json, payload, human)


@main.command("export")
@click.option("--inputs", "inputs_glob", type=str, required=True, help="Glob of input cloud manifests.")
@click.option("--targets", "targets_glob", type=str, required=True, help="Glob of target cloud manifests.")
@click.option("--partition", "partition_path", type=_IN_FILE, required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--method", type=click.Choice(["fft", "multilinear"]), default="fft", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_export(inputs_glob, targets_glob, partition_path, out_dir, method, workers, as_json):
    """Build aligned input/target tensors for matched cloud pairs."""
    in_paths = sorted(_glob.glob(inputs_glob))
    tg_paths = sorted(_glob.glob(targets_glob))
    if not in_paths:
        raise SubgridError(f"no input clouds match {inputs_glob!r}")
    if len(in_paths) != len(tg_paths):
        raise SubgridError(
            f"input and target counts must match ({len(in_paths)} vs {len(tg_paths)})"
        )
    part, shapes = read_partition(partition_path)
    if shapes is None:
        raise SubgridError("partition file carries no grid annotations; run allocate first")
    samples = [(read_point_cloud(a), read_point_cloud(u)) for a, u in zip(in_paths, tg_paths)]
    paths = build_dataset(samples, part, shapes, out_dir, method=method, workers=workers)
    payload = {
        "samples": len(samples),
        "inputs": str(paths["inputs"]),
        "targets": str(paths["targets"]),
        "partition": str(paths["partition"]),
    }
    human = [
        f"exported {len(samples)} sample(s)",
        f"wrote {paths['inputs']}",
        f"wrote {paths['targets']}",
        f"wrote {paths['partition']}",
    ]
    _emit(as_json, payload, human)


@main.group("bench")
def bench_group() -> None:
    """Benchmarks that write schema-stable CSVs (see plot)."""


@bench_group.command("roundtrip")
@click.option("--cloud", "cloud_path", type=_IN_FILE, required=True)
@click.option("--n", "n_subdomains", type=int, required=True)
@click.option("--ratios", type=str, default="0.25,0.5,1.0,2.0", show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--out", "out_csv", type=_OUT_FILE, required=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_bench_roundtrip(cloud_path, n_subdomains, ratios, repeats, out_csv, as_json):
    """Round-trip error/time across oversampling ratios; CSV columns ratio,arm,l2re,seconds."""
    cloud = read_point_cloud(cloud_path)
    ratio_list = _parse_floats(ratios, "--ratios")
    rows = bench_roundtrip(cloud, n_subdomains, ratio_list, repeats=repeats)
    write_csv(rows, out_csv, ROUNDTRIP_FIELDS)
    payload = {"out": str(out_csv), "rows": rows}
    _emit(as_json, payload, [f"wrote {out_csv} ({len(rows)} rows)"])


@bench_group.command("scaling")
@click.option("--dims", type=int, default=2, show_default=True)
@click.option("--n", "n_subdomains", type=int, default=16, show_default=True)
@click.option("--sizes", type=str, default="12500,25000,50000,100000", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--repeats", type=int, default=3, show_default=True)
@click.option("--out", "out_csv", type=_OUT_FILE, required=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_bench_scaling(dims, n_subdomains, sizes, seed, repeats, out_csv, as_json):
    """Decompose wall time across cloud sizes; CSV columns m,seconds."""
    size_list = [int(v) for v in _parse_floats(sizes, "--sizes")]
    rows = bench_decompose_scaling(dims, n_subdomains, size_list, seed, repeats=repeats)
    write_csv(rows, out_csv, SCALING_FIELDS)
    payload = {"out": str(out_csv), "rows": rows}
    _emit(as_json, payload, [f"wrote {out_csv} ({len(rows)} rows)"])


@main.command("plot")
@click.option("--csv", "csv_path", type=_IN_FILE, required=True)
@click.option("--out", "out_path", type=_OUT_FILE, required=True)
@click.option("--json", "as_json", is_flag=True, help="Structured output.")
@_workflow
def cmd_plot(csv_path, out_path, as_json):
    """Render a benchmark CSV to a PNG; the kind is inferred from the header."""
    with open(csv_path, newline="") as fh:
        reader = _csv.DictReader(fh)
        fields = reader.fieldnames
        raw = list(reader)
    if fields == ROUNDTRIP_FIELDS:
        rows = [
            {"ratio": float(r["ratio"]), "arm": r["arm"], "l2re": float(r["l2re"]), "seconds": float(r["seconds"])}
            for r in raw
        ]
        plot_roundtrip(rows, out_path)
        kind = "roundtrip"
    elif fields == SCALING_FIELDS:
        rows = [{"m": int(r["m"]), "seconds": float(r["seconds"])} for r in raw]
        plot_scaling(rows, out_path)
        kind = "scaling"
    else:
        raise SubgridError(f"unrecognized benchmark CSV header: {fields}")
    _emit(as_json, {"out": str(out_path), "kind": kind}, [f"wrote {out_path} ({kind})"])


if __name__ == "__main__":
    main()

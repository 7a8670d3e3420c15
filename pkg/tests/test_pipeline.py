"""Forward/operator/backward composition and the error decomposition."""

import numpy as np
import pytest

from subgrid import (
    ErrorReport,
    OperatorSlot,
    PointCloud,
    SubgridError,
    allocate_shapes,
    backward_values,
    build_dataset,
    decompose,
    dense_center_cloud,
    forward_batch,
    identity_operator,
    l2_relative_error,
    lowpass_operator,
    read_aligned_tensor,
    read_partition,
    run_pipeline,
    smooth_bump_field,
    zero_operator,
)


def _sample(seed, m=600):
    cloud = dense_center_cloud(seed, m=m)
    return cloud


def _fitted(seed=0, m=600, n=4, ratio=1.0):
    cloud = _sample(seed, m)
    part = decompose(cloud, n)
    shapes = allocate_shapes(part, ratio)
    return cloud, part, shapes


def test_operator_slot_validates_output():
    cloud, part, shapes = _fitted()
    batch = forward_batch(cloud, part, shapes)
    bad_type = OperatorSlot("bad", lambda b: b.stacked(), linear=True)
    with pytest.raises(SubgridError, match="must return an aligned batch"):
        bad_type(batch)

    def reshaped(b):
        t = b.stacked()
        return b.with_tensor(t)

    ok = OperatorSlot("ok", reshaped, linear=True)
    out = ok(batch)
    assert out.common_dims == batch.common_dims


def test_identity_pipeline_total_equals_interp_term():
    cloud, part, shapes = _fitted(seed=1)
    pred, report = run_pipeline(cloud, cloud, part, shapes, identity_operator())
    # same forward batch on both paths, so the two backward passes are the
    # same computation and the decomposition collapses exactly
    assert report.total == report.interp_term
    assert report.operator_term == 0.0
    assert report.bound_slack == pytest.approx(0.0, abs=1e-15)
    assert pred.shape == (cloud.count, 1)


def test_zero_operator_total_is_one():
    cloud, part, shapes = _fitted(seed=2)
    pred, report = run_pipeline(cloud, cloud, part, shapes, zero_operator())
    assert (pred == 0.0).all()
    assert report.total == 1.0
    assert report.operator_term == 1.0


def test_lowpass_bound_slack_nonnegative():
    for seed in range(6):
        cloud, part, shapes = _fitted(seed=seed, m=400, n=3)
        _, report = run_pipeline(cloud, cloud, part, shapes, lowpass_operator(0.5))
        assert report.bound_slack >= -1e-10


def test_lowpass_keep_fraction_validation():
    with pytest.raises(SubgridError, match="keep fraction"):
        lowpass_operator(0.0)
    with pytest.raises(SubgridError, match="keep fraction"):
        lowpass_operator(1.5)


def test_lowpass_full_band_is_near_identity():
    cloud, part, shapes = _fitted(seed=3, m=300, n=3)
    batch = forward_batch(cloud, part, shapes)
    out = lowpass_operator(1.0)(batch)
    assert np.allclose(out.stacked(), batch.stacked(), atol=1e-10)


def test_forward_batch_requires_values():
    cloud, part, shapes = _fitted(seed=4)
    bare = PointCloud(cloud.points)
    with pytest.raises(SubgridError, match="no values"):
        forward_batch(bare, part, shapes)
    with pytest.raises(SubgridError, match="one grid shape per leaf"):
        forward_batch(cloud, part, shapes[:-1])


def test_forward_batch_rejects_empty_leaf():
    cloud, part, shapes = _fitted(seed=5)
    rows = np.flatnonzero(np.isin(cloud.ids, part.leaf_ids[0]))
    only_first_leaf = cloud.take(rows)
    with pytest.raises(SubgridError, match="holds no points"):
        forward_batch(only_first_leaf, part, shapes)


def test_backward_values_leaf_count_mismatch():
    cloud, part, shapes = _fitted(seed=6)
    batch = forward_batch(cloud, part, shapes)
    other = decompose(cloud, part.n_leaves + 2)
    if other.n_leaves != part.n_leaves:
        with pytest.raises(SubgridError, match="leaf counts must match"):
            backward_values(batch, cloud, other)


def test_backward_values_on_subset_cloud():
    cloud, part, shapes = _fitted(seed=7)
    batch = forward_batch(cloud, part, shapes)
    subset = cloud.take(np.arange(0, cloud.count, 3))
    out = backward_values(batch, subset, part)
    full = backward_values(batch, cloud, part)
    assert np.array_equal(out, full[np.arange(0, cloud.count, 3)])


def test_run_pipeline_channel_mismatch():
    cloud, part, shapes = _fitted(seed=8)

    def widen(b):
        t = b.stacked()
        return b.with_tensor(np.concatenate([t, t], axis=1))

    with pytest.raises(SubgridError, match="channels must match"):
        run_pipeline(cloud, cloud, part, shapes, OperatorSlot("widen", widen, linear=True))


def test_run_pipeline_rejects_zero_norm_truth():
    cloud, part, shapes = _fitted(seed=9)
    flat = cloud.with_values(np.zeros((cloud.count, 1)))
    with pytest.raises(SubgridError, match="zero-norm"):
        run_pipeline(flat, flat, part, shapes, identity_operator())


def test_roundtrip_error_shrinks_with_grid_budget():
    # denser grids can only help the scatter/gather round trip on a fixed
    # smooth field; checked over three budget doublings
    cloud, part, _ = _fitted(seed=10, m=800, n=4)
    errors = []
    for ratio in [0.5, 1.0, 2.0, 4.0]:
        shapes = allocate_shapes(part, ratio)
        batch = forward_batch(cloud, part, shapes)
        pred = backward_values(batch, cloud, part)
        errors.append(l2_relative_error(cloud.values, pred))
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


def test_build_dataset_writes_deterministic_files(tmp_path):
    cloud, part, shapes = _fitted(seed=11, m=400, n=3)
    pairs = []
    for field_seed in (1, 2, 3):
        vals = smooth_bump_field(cloud.points, field_seed=field_seed)
        sample = cloud.with_values(vals)
        pairs.append((sample, sample))

    out_a = build_dataset(pairs, part, shapes, tmp_path / "a")
    out_b = build_dataset(pairs, part, shapes, tmp_path / "b", workers=3)
    for key in ("inputs", "targets", "partition"):
        assert out_a[key].read_bytes() == out_b[key].read_bytes()
    bin_a = (tmp_path / "a" / "inputs.bin").read_bytes()
    bin_b = (tmp_path / "b" / "inputs.bin").read_bytes()
    assert bin_a == bin_b

    tensor = read_aligned_tensor(out_a["inputs"])
    assert tensor.shape[:3] == (3, part.n_leaves, 1)
    _, annotated = read_partition(out_a["partition"])
    assert annotated is not None and len(annotated) == part.n_leaves


def test_build_dataset_requires_samples(tmp_path):
    cloud, part, shapes = _fitted(seed=12, m=300, n=3)
    with pytest.raises(SubgridError, match="no samples"):
        build_dataset([], part, shapes, tmp_path)


def test_error_report_fields_are_floats():
    cloud, part, shapes = _fitted(seed=13, m=300, n=3)
    _, report = run_pipeline(cloud, cloud, part, shapes, lowpass_operator(0.25))
    assert isinstance(report, ErrorReport)
    for v in (report.total, report.operator_term, report.interp_term, report.bound_slack):
        assert isinstance(v, float) and np.isfinite(v)

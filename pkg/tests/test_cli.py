"""Command-line interface: happy paths, exit codes, determinism."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from subgrid import FORMAT_VERSION, __version__, payload_path, read_aligned_tensor, read_point_cloud
from subgrid.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def _synth(runner, tmp_path, name="cloud.json", seed=7, count=800, extra=()):
    path = tmp_path / name
    result = runner.invoke(
        main, ["synth", "--seed", str(seed), "--count", str(count), "--out", str(path), *extra]
    )
    assert result.exit_code == 0, result.output
    return path


def _decompose(runner, tmp_path, cloud, n=4, name="part.json"):
    path = tmp_path / name
    result = runner.invoke(main, ["decompose", "--cloud", str(cloud), "--n", str(n), "--out", str(path)])
    assert result.exit_code == 0, result.output
    return path


def test_version_reports_format(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert result.output.strip() == f"subgrid {__version__} (format {FORMAT_VERSION})"


def test_synth_writes_cloud(runner, tmp_path):
    path = _synth(runner, tmp_path)
    cloud = read_point_cloud(path)
    assert cloud.count == 800
    assert cloud.channels == 1


def test_synth_requires_seed(runner, tmp_path):
    result = runner.invoke(main, ["synth", "--out", str(tmp_path / "c.json")])
    assert result.exit_code == 2


def test_synth_json_and_determinism(runner, tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    res = runner.invoke(main, ["synth", "--seed", "1", "--count", "300", "--out", str(a), "--json"])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["count"] == 300 and payload["dims"] == 2
    res = runner.invoke(main, ["synth", "--seed", "1", "--count", "300", "--out", str(b)])
    assert res.exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert payload_path(a).read_bytes() == payload_path(b).read_bytes()


def test_synth_custom_clusters_and_no_field(runner, tmp_path):
    clusters = json.dumps([{"center": [0.3, 0.7], "sigma": 0.05, "weight": 0.6}])
    path = _synth(
        runner,
        tmp_path,
        extra=["--clusters", clusters, "--field", "none"],
    )
    cloud = read_point_cloud(path)
    assert cloud.values is None


def test_synth_rejects_bad_clusters(runner, tmp_path):
    result = runner.invoke(
        main,
        ["synth", "--seed", "0", "--clusters", "[{}]", "--out", str(tmp_path / "c.json")],
    )
    assert result.exit_code == 1
    assert "center" in result.output or "center" in (result.stderr or "")


def test_decompose_reports_objective_trace(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    part = tmp_path / "part.json"
    result = runner.invoke(
        main, ["decompose", "--cloud", str(cloud), "--n", "4", "--out", str(part), "--json"]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["n_leaves"] <= 4
    assert payload["objective_after"] <= payload["objective_before"]
    assert len(payload["iterations"]) == payload["n_leaves"] - 1
    objs = [payload["objective_before"]] + [it["objective"] for it in payload["iterations"]]
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
    assert part.exists()


def test_decompose_human_output_lists_iterations(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    result = runner.invoke(
        main, ["decompose", "--cloud", str(cloud), "--n", "3", "--out", str(tmp_path / "p.json")]
    )
    assert result.exit_code == 0
    assert "objective before:" in result.output
    assert "iter 1: split leaf" in result.output
    assert "objective after:" in result.output


def test_decompose_single_leaf_identity(runner, tmp_path):
    cloud = _synth(runner, tmp_path, count=200)
    part = _decompose(runner, tmp_path, cloud, n=1)
    obj = json.loads(part.read_text())
    assert obj["nodes"] == []
    assert len(obj["leaves"]) == 1
    assert sorted(obj["leaves"][0]["point_ids"]) == list(range(200))


def test_decompose_deterministic_bytes(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    a = _decompose(runner, tmp_path, cloud, name="a.json")
    b = _decompose(runner, tmp_path, cloud, name="b.json")
    assert a.read_bytes() == b.read_bytes()


def test_decompose_missing_cloud_exits_2(runner, tmp_path):
    result = runner.invoke(
        main, ["decompose", "--cloud", str(tmp_path / "nope.json"), "--n", "2", "--out", str(tmp_path / "p.json")]
    )
    # click validates --cloud existence before the command body runs
    assert result.exit_code == 2


def test_corrupt_cloud_exits_1(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(
        main, ["decompose", "--cloud", str(bad), "--n", "2", "--out", str(tmp_path / "p.json")]
    )
    assert result.exit_code == 1
    assert "error:" in result.output or "error:" in (result.stderr or "")


def test_allocate_annotates_partition(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    part = _decompose(runner, tmp_path, cloud)
    result = runner.invoke(main, ["allocate", "--partition", str(part), "--ratio", "1.0", "--json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["points"] == 800
    assert payload["total_nodes"] > 0
    obj = json.loads(part.read_text())
    assert all("grid" in leaf for leaf in obj["leaves"])


def test_interp_forward_requires_allocation(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    part = _decompose(runner, tmp_path, cloud)
    result = runner.invoke(
        main,
        [
            "interp", "--cloud", str(cloud), "--partition", str(part),
            "--direction", "forward", "--out", str(tmp_path / "t.json"),
        ],
    )
    assert result.exit_code == 1
    combined = result.output + (result.stderr or "")
    assert "run allocate first" in combined


def test_interp_forward_backward_cycle(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    part = _decompose(runner, tmp_path, cloud)
    assert runner.invoke(main, ["allocate", "--partition", str(part), "--ratio", "1.0"]).exit_code == 0

    tensor_path = tmp_path / "tensor.json"
    result = runner.invoke(
        main,
        [
            "interp", "--cloud", str(cloud), "--partition", str(part),
            "--direction", "forward", "--out", str(tensor_path), "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    meta = json.loads(result.output)
    tensor = read_aligned_tensor(tensor_path)
    assert tensor.shape == (1, meta["leaves"], meta["channels"], *meta["shape"])

    back_path = tmp_path / "back.json"
    result = runner.invoke(
        main,
        [
            "interp", "--cloud", str(cloud), "--partition", str(part),
            "--direction", "backward", "--grids", str(tensor_path),
            "--out", str(back_path), "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert 0.0 < payload["l2re"] < 1.0
    back = read_point_cloud(back_path)
    orig = read_point_cloud(cloud)
    assert np.array_equal(back.points, orig.points)


def test_interp_backward_requires_grids(runner, tmp_path):
    cloud = _synth(runner, tmp_path)
    part = _decompose(runner, tmp_path, cloud)
    result = runner.invoke(
        main,
        [
            "interp", "--cloud", str(cloud), "--partition", str(part),
            "--direction", "backward", "--out", str(tmp_path / "b.json"),
        ],
    )
    assert result.exit_code == 1
    assert "--grids" in result.output + (result.stderr or "")


def test_roundtrip_command(runner, tmp_path):
    cloud = _synth(runner, tmp_path, count=600)
    result = runner.invoke(
        main, ["roundtrip", "--cloud", str(cloud), "--n", "4", "--ratio", "1.0", "--json"]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert set(payload) == {"ratio", "n", "global", "subdomain"}
    assert payload["global"]["l2re"] > 0


def test_export_builds_dataset(runner, tmp_path):
    base = _synth(runner, tmp_path, name="in_0.json", seed=7)
    _synth(runner, tmp_path, name="in_1.json", seed=7, extra=["--field-seed", "99"])
    part = _decompose(runner, tmp_path, base)
    assert runner.invoke(main, ["allocate", "--partition", str(part), "--ratio", "1.0"]).exit_code == 0
    out_dir = tmp_path / "data"
    result = runner.invoke(
        main,
        [
            "export", "--inputs", str(tmp_path / "in_*.json"),
            "--targets", str(tmp_path / "in_*.json"),
            "--partition", str(part), "--out", str(out_dir), "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["samples"] == 2
    tensor = read_aligned_tensor(out_dir / "inputs.json")
    assert tensor.shape[0] == 2


def test_export_count_mismatch(runner, tmp_path):
    a = _synth(runner, tmp_path, name="in_0.json", seed=7)
    _synth(runner, tmp_path, name="in_1.json", seed=7, extra=["--field-seed", "99"])
    part = _decompose(runner, tmp_path, a)
    assert runner.invoke(main, ["allocate", "--partition", str(part), "--ratio", "1.0"]).exit_code == 0
    result = runner.invoke(
        main,
        [
            "export", "--inputs", str(tmp_path / "in_*.json"),
            "--targets", str(tmp_path / "in_0.json"),
            "--partition", str(part), "--out", str(tmp_path / "d"),
        ],
    )
    assert result.exit_code == 1
    assert "must match" in result.output + (result.stderr or "")


def test_bench_and_plot_cycle(runner, tmp_path):
    cloud = _synth(runner, tmp_path, count=400)
    rt_csv = tmp_path / "rt.csv"
    result = runner.invoke(
        main,
        [
            "bench", "roundtrip", "--cloud", str(cloud), "--n", "3",
            "--ratios", "0.5,1.0", "--repeats", "1", "--out", str(rt_csv),
        ],
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["plot", "--csv", str(rt_csv), "--out", str(tmp_path / "rt.png")])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "rt.png").stat().st_size > 0

    sc_csv = tmp_path / "sc.csv"
    result = runner.invoke(
        main,
        ["bench", "scaling", "--sizes", "200,400", "--repeats", "1", "--n", "4", "--out", str(sc_csv)],
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["plot", "--csv", str(sc_csv), "--out", str(tmp_path / "sc.png"), "--json"])
    assert result.exit_code == 0
    assert json.loads(result.output)["kind"] == "scaling"


def test_plot_rejects_unknown_header(runner, tmp_path):
    weird = tmp_path / "w.csv"
    weird.write_text("a,b\n1,2\n")
    result = runner.invoke(main, ["plot", "--csv", str(weird), "--out", str(tmp_path / "w.png")])
    assert result.exit_code == 1
    assert "unrecognized" in result.output + (result.stderr or "")

"""
Tests for the command line interface
"""

import csv
import json
import math

import numpy as np
import pytest

from app.cli import EXIT_ERROR, EXIT_NO_CLUSTER, EXIT_OK, main
from app.models.bscan import BScanGrid
from app.services.bscan import save_bscan
from app.services.pipemap import bearing_of, load_map
from tests.conftest import forward_signature, make_estimate

SYNTH = ["synth", "--radius", "0.3", "--depth", "1.5", "--alpha-deg", "60"]
NOISY = ["--noise", "0.001", "--seed", "3"]


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def scene_dir(tmp_path, capsys):
    out = tmp_path / "scene"
    assert main(SYNTH + ["-o", str(out)]) == EXIT_OK
    capsys.readouterr()
    return out


def test_synth_writes_scene_files(tmp_path, capsys):
    assert main(SYNTH + ["-o", str(tmp_path / "a")]) == EXIT_OK
    paths = _stdout_json(capsys)
    assert set(paths) == {"bscan", "sidecar", "truth", "mask"}
    sidecar = json.loads((tmp_path / "a" / "bscan.json").read_text())
    assert sidecar["traces"] == 1201
    assert sidecar["samples"] == 1300
    assert sidecar["ground_truth"] == "truth.json"


def test_synth_is_byte_identical_for_a_seed(tmp_path, capsys):
    main(SYNTH + NOISY + ["-o", str(tmp_path / "a")])
    main(SYNTH + NOISY + ["-o", str(tmp_path / "b")])
    for name in ("bscan.f32", "bscan.json", "truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_synth_rejects_zero_obliquity(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--radius", "0.3", "--depth", "1.5", "--alpha-deg", "0", "-o", str(tmp_path)])
    assert exc.value.code == EXIT_ERROR


def test_unknown_command_exits_with_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_ERROR


def test_extract_writes_one_entry_per_cluster(scene_dir, tmp_path):
    out = tmp_path / "extraction.json"
    assert main(["extract", str(scene_dir / "bscan.f32"), "-o", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert len(payload["clusters"]) == 1
    cluster = payload["clusters"][0]
    assert abs(cluster["apex_column"] - 600) <= 1
    # the whole cluster at 2 cm: one point every second trace
    assert len(cluster["points"]) == 601
    assert payload["flags"] == []


def test_extract_honours_the_count_flag(scene_dir, tmp_path):
    out = tmp_path / "extraction.json"
    assert main(["extract", str(scene_dir / "bscan.f32"), "--count", "30", "-o", str(out)]) == EXIT_OK
    cluster = json.loads(out.read_text())["clusters"][0]
    assert len(cluster["points"]) == 30
    xs = [x for x, _ in cluster["points"]]
    assert np.diff(xs) == pytest.approx(np.full(29, 0.02))


def test_run_reports_the_cluster(scene_dir, capsys):
    assert main(["run", str(scene_dir / "bscan.f32")]) == EXIT_OK
    report = _stdout_json(capsys)
    assert len(report["clusters"]) == 1
    cluster = report["clusters"][0]
    assert cluster["error"] is None
    estimate = cluster["estimate"]
    assert math.degrees(estimate["alpha"]) == pytest.approx(60.0, abs=2.0)
    assert estimate["radius"] == pytest.approx(0.3, rel=0.03)
    assert estimate["iterations_used"] <= 10
    assert report["config"]["eiia_max_iterations"] == 10
    assert report["config"]["extract_count"] is None
    assert report["timings_s"] is None


def test_run_is_deterministic(scene_dir, capsys):
    main(["run", str(scene_dir / "bscan.f32"), "--max-iterations", "4"])
    first = capsys.readouterr().out
    main(["run", str(scene_dir / "bscan.f32"), "--max-iterations", "4"])
    assert capsys.readouterr().out == first
    assert json.loads(first)["config"]["eiia_max_iterations"] == 4


def test_run_on_blank_grid_reports_no_cluster(tmp_path, capsys):
    grid = BScanGrid(amplitudes=np.zeros((100, 80)), trace_spacing=0.01, sample_interval=0.1, relative_permittivity=9.0)
    path = save_bscan(grid, tmp_path / "blank.f32")
    assert main(["run", str(path)]) == EXIT_NO_CLUSTER
    report = _stdout_json(capsys)
    assert report["clusters"] == []
    assert "no_cluster" in report["flags"]


def test_run_without_sidecar_fails(tmp_path):
    path = tmp_path / "orphan.f32"
    np.zeros(16, dtype="<f4").tofile(path)
    assert main(["run", str(path)]) == EXIT_ERROR


def test_invalid_config_file_fails(scene_dir, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"iterations": 3}))
    assert main(["run", str(scene_dir / "bscan.f32"), "--config", str(config)]) == EXIT_ERROR


def test_invert_with_bearings(tmp_path, capsys, shallow_ellipse, wide_pivots):
    points, _ = forward_signature(shallow_ellipse, wide_pivots)
    extraction = tmp_path / "points.json"
    extraction.write_text(json.dumps({"points": points}))

    code = main(
        [
            "invert",
            str(extraction),
            "--detecting-bearing",
            "80",
            "--map-bearing",
            "130",
            "--max-iterations",
            "50",
            "--stability-epsilon",
            "1e-10",
        ]
    )
    assert code == EXIT_OK
    estimate = _stdout_json(capsys)
    assert estimate["radius"] == pytest.approx(0.2, rel=0.02)
    assert estimate["chosen_bearing"] == pytest.approx(110.0, abs=2.0)


def test_revise_map_refuses_to_overwrite_input(tmp_path, map_file):
    estimate = tmp_path / "estimate.json"
    estimate.write_text(make_estimate().model_dump_json())
    original = map_file.read_text()
    code = main(
        [
            "revise-map",
            "--map",
            str(map_file),
            "--estimate",
            str(estimate),
            "--detecting-bearing",
            "40",
            "--survey-x",
            "4",
            "--survey-y",
            "1",
            "-o",
            str(map_file),
        ]
    )
    assert code == EXIT_ERROR
    assert map_file.read_text() == original


def test_revise_map_disambiguates_against_segment(tmp_path, map_file, capsys):
    estimate = tmp_path / "estimate.json"
    estimate.write_text(make_estimate(alpha_deg=60.0).model_dump_json())
    out = tmp_path / "revised.json"
    code = main(
        [
            "revise-map",
            "--map",
            str(map_file),
            "--estimate",
            str(estimate),
            "--detecting-bearing",
            "40",
            "--survey-x",
            "4",
            "--survey-y",
            "1",
            "-o",
            str(out),
        ]
    )
    assert code == EXIT_OK
    result = _stdout_json(capsys)
    assert result["segment_id"] == "main"
    assert result["bearing"] == pytest.approx(100.0)

    revised = load_map(out)
    assert bearing_of(revised.segment("main")) == pytest.approx(100.0)
    assert revised.segment("main").radius_m == pytest.approx(0.3)
    assert revised.segment("side") == load_map(map_file).segment("side")


def test_plan_suggests_offset_bearing(map_file, capsys):
    assert main(["plan", "--map", str(map_file), "--x", "4", "--y", "1"]) == EXIT_OK
    result = _stdout_json(capsys)
    assert result == {"segment_id": "main", "map_bearing": 90.0, "detecting_bearing": 170.0, "tie": False}


def test_bench_with_empty_sweep_writes_header_only(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--alphas", "", "-o", str(out)]) == EXIT_OK
    with out.open() as handle:
        rows = list(csv.reader(handle))
    assert rows == [
        [
            "alpha_deg",
            "radius_m",
            "depth_m",
            "noise",
            "seed",
            "eiia_radius_err",
            "hyperbola_radius_err",
            "alpha_err",
            "iterations",
            "status",
        ]
    ]
    summary = json.loads((tmp_path / "bench.summary.json").read_text())
    assert summary["cases"] == 0
    assert _stdout_json(capsys) == summary

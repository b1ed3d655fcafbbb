"""Config validation, runner verdicts, exit codes, artifacts, determinism."""

import json
import os
from pathlib import Path

import numpy as np
import pytest

from srcgeolab.cli import main
from srcgeolab.config import load_config, parse_config
from srcgeolab.errors import ConfigError
from srcgeolab.runner import (
    RunFlags,
    dump_canonical_json,
    run_config_file,
    worker_count,
)
from srcgeolab.zoo import DEFAULT_ENTRIES, ZooRegistry

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "srcgeolab" / "data"


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


MINIMAL = {
    "experiments": [
        {"name": "idx", "kind": "index", "zoo": "euclidean", "steps": 200,
         "basis_n": 16}
    ]
}


def test_minimal_config_parses(tmp_path):
    specs, zoo = load_config(write_config(tmp_path, MINIMAL))
    assert len(specs) == 1 and zoo == []
    assert specs[0].steps == 200 and specs[0].basis_n == 16
    assert specs[0].seed == 0  # documented default


def test_unknown_key_rejected(tmp_path):
    doc = {"experiments": [dict(MINIMAL["experiments"][0], stepz=100)]}
    with pytest.raises(ConfigError) as err:
        load_config(write_config(tmp_path, doc))
    assert "stepz" in str(err.value)


def test_randers_bound_rejected_in_zoo(tmp_path):
    doc = {
        "experiments": MINIMAL["experiments"],
        "zoo": [{"name": "bad", "kind": "euclidean_wind",
                 "params": {"wind": 1.2}, "bounds": [[-1, 1], [-1, 1]]}],
    }
    with pytest.raises(ConfigError) as err:
        load_config(write_config(tmp_path, doc))
    assert "wind" in str(err.value) and "zoo[0]" in str(err.value)


def test_missing_lambda_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config({"experiments": [
            {"name": "c", "kind": "conformal-check", "zoo": "sphere"}
        ]})
    assert "lambda" in str(err.value)


def test_duplicate_names_rejected():
    with pytest.raises(ConfigError):
        parse_config({"experiments": [
            {"name": "a", "kind": "probe", "zoo": "euclidean"},
            {"name": "a", "kind": "probe", "zoo": "sphere"},
        ]})


def test_unknown_zoo_reference_is_input_error(tmp_path):
    doc = {"experiments": [
        {"name": "g", "kind": "geodesic", "zoo": "does-not-exist"}
    ]}
    code = main(["run", str(write_config(tmp_path, doc)),
                 "--out", str(tmp_path / "out")])
    assert code == 2


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path / "out")]) == 2


def test_missing_config_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 2


def test_default_config_covers_every_zoo_entry():
    doc = json.loads((DATA_DIR / "default_config.json").read_text())
    specs, _ = parse_config(doc)
    used = {spec.zoo for spec in specs}
    assert used == {entry.name for entry in DEFAULT_ENTRIES}


def test_default_config_validates():
    doc = json.loads((DATA_DIR / "default_config.json").read_text())
    specs, zoo = parse_config(doc)
    registry = ZooRegistry(zoo)
    for spec in specs:
        registry.entry(spec.zoo)


def test_schema_file_is_valid_json():
    doc = json.loads((DATA_DIR / "config.schema.json").read_text())
    assert doc["type"] == "object"


# -- runner -------------------------------------------------------------------


SMALL = {
    "experiments": [
        {"name": "geo", "kind": "geodesic", "zoo": "euclidean", "steps": 300},
        {"name": "probe", "kind": "probe", "zoo": "euclidean-wind",
         "steps": 300},
    ]
}


def test_run_small_config_passes(tmp_path):
    path = write_config(tmp_path, SMALL)
    report, code = run_config_file(
        path, RunFlags(out_dir=tmp_path / "out", canonical=True)
    )
    assert code == 0
    assert report["overall"]["pass"] is True
    for record in report["experiments"]:
        assert record["status"] == "pass"
        assert "elapsed_s" not in record
    assert (tmp_path / "out" / "report.json").exists()


def test_report_byte_identical(tmp_path):
    path = write_config(tmp_path, SMALL)
    run_config_file(path, RunFlags(out_dir=tmp_path / "a", canonical=True))
    run_config_file(path, RunFlags(out_dir=tmp_path / "b", canonical=True))
    assert (tmp_path / "a" / "report.json").read_bytes() == \
        (tmp_path / "b" / "report.json").read_bytes()


def test_threaded_run_matches_sequential(tmp_path):
    path = write_config(tmp_path, SMALL)
    run_config_file(path, RunFlags(out_dir=tmp_path / "seq", canonical=True))
    os.environ["SRC_GEOLAB_THREADS"] = "2"
    try:
        run_config_file(path, RunFlags(out_dir=tmp_path / "par",
                                       canonical=True))
    finally:
        del os.environ["SRC_GEOLAB_THREADS"]
    assert (tmp_path / "seq" / "report.json").read_bytes() == \
        (tmp_path / "par" / "report.json").read_bytes()


def test_worker_count_env():
    os.environ["SRC_GEOLAB_THREADS"] = "3"
    try:
        assert worker_count(10) == 3
        assert worker_count(2) == 2
    finally:
        del os.environ["SRC_GEOLAB_THREADS"]
    assert worker_count(10) == 1


def test_assertion_failure_exit_one(tmp_path):
    """A too-coarse grid honestly violates the drift verdict."""
    doc = {"experiments": [
        {"name": "coarse", "kind": "geodesic", "zoo": "sphere", "steps": 8}
    ]}
    path = write_config(tmp_path, doc)
    report, code = run_config_file(path, RunFlags(out_dir=tmp_path / "out"))
    assert code == 1
    assert report["experiments"][0]["status"] == "fail"
    assert "elapsed_s" in report["experiments"][0]


def test_numerical_failure_exit_three(tmp_path):
    """Initial data that exits the chart is a numerical failure."""
    doc = {"experiments": [
        {"name": "escape", "kind": "geodesic", "zoo": "euclidean",
         "x0": [0.0, 0.0], "v0": [40.0, 0.0], "steps": 100}
    ]}
    path = write_config(tmp_path, doc)
    report, code = run_config_file(path, RunFlags(out_dir=tmp_path / "out"))
    assert code == 3
    assert report["experiments"][0]["status"] == "numerical-failure"


def test_max_severity_wins(tmp_path):
    doc = {"experiments": [
        {"name": "good", "kind": "geodesic", "zoo": "euclidean",
         "steps": 300},
        {"name": "bad", "kind": "geodesic", "zoo": "euclidean",
         "x0": [0.0, 0.0], "v0": [40.0, 0.0], "steps": 100},
        {"name": "coarse", "kind": "geodesic", "zoo": "sphere", "steps": 8},
    ]}
    path = write_config(tmp_path, doc)
    report, code = run_config_file(path, RunFlags(out_dir=tmp_path / "out"))
    assert code == 3
    statuses = [r["status"] for r in report["experiments"]]
    assert statuses == ["pass", "numerical-failure", "fail"]


def test_csv_float_precision_roundtrip(tmp_path):
    path = write_config(tmp_path, SMALL)
    run_config_file(path, RunFlags(out_dir=tmp_path / "out", canonical=True))
    csv_path = tmp_path / "out" / "geo_trajectory.csv"
    lines = csv_path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[:5] == ["s", "x1", "x2", "v1", "v2"]
    row = lines[2].split(",")
    s_val = float(row[0])
    assert s_val == 1.0 / 300.0  # 17 significant digits round-trip


def test_canonical_json_float_format():
    text = dump_canonical_json({"x": 1.0 / 3.0, "flag": True, "n": None})
    assert "0.33333333333333331" in text
    assert '"flag": true' in text
    assert '"n": null' in text
    assert float("0.33333333333333331") == 1.0 / 3.0


def test_verify_src_shortcut(tmp_path):
    code = main(["verify-src", "--case", "euclidean",
                 "--out", str(tmp_path / "out"), "--steps", "300",
                 "--basis-n", "16", "--canonical-output"])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["experiments"][0]["results"]["mus"] == {
        "conjugate-count": 0, "hessian-E": 0, "spacetime-flow": 0,
        "hessian-J": 0,
    }


def test_probe_shortcut(tmp_path):
    code = main(["probe", "--case", "euclidean-wind",
                 "--out", str(tmp_path / "out"), "--steps", "300"])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    rec = report["experiments"][0]
    assert rec["results"]["verdict"] == "linear"
    assert 0.9 <= rec["results"]["slope"] <= 1.1


def test_plot_subcommand_and_missing_artifact(tmp_path):
    path = write_config(tmp_path, SMALL)
    run_config_file(path, RunFlags(out_dir=tmp_path / "out", canonical=True))
    code = main(["plot", str(tmp_path / "out" / "report.json"),
                 "--out", str(tmp_path / "figs")])
    assert code == 0
    svgs = sorted(p.name for p in (tmp_path / "figs").glob("*.svg"))
    assert svgs == ["geo_trajectory.svg", "probe_residuals.svg"]
    (tmp_path / "out" / "geo_trajectory.csv").unlink()
    code = main(["plot", str(tmp_path / "out" / "report.json"),
                 "--out", str(tmp_path / "figs2")])
    assert code == 2


def test_detj_plot_for_index_experiment(tmp_path):
    """Sphere index run: det J crosses zero once; its figure renders."""
    doc = {"experiments": [
        {"name": "sphere-idx", "kind": "index", "zoo": "sphere",
         "steps": 400, "basis_n": 24}
    ]}
    path = write_config(tmp_path, doc)
    report, code = run_config_file(path, RunFlags(out_dir=tmp_path / "out"))
    assert code == 0
    detj = (tmp_path / "out" / "sphere-idx_detj.csv").read_text().splitlines()
    dets = np.array([float(row.split(",")[1]) for row in detj[2:]])
    assert (np.diff(np.sign(dets)) != 0).sum() == 1
    assert main(["plot", str(tmp_path / "out" / "report.json"),
                 "--out", str(tmp_path / "figs")]) == 0
    svg = tmp_path / "figs" / "sphere-idx_detj.svg"
    assert svg.exists() and svg.stat().st_size > 0


def test_plot_empty_experiments_ok(tmp_path):
    report = {"experiments": []}
    rp = tmp_path / "report.json"
    rp.write_text(json.dumps(report))
    code = main(["plot", str(rp), "--out", str(tmp_path / "figs")])
    assert code == 0
    assert not list((tmp_path / "figs").glob("*.svg"))


def test_zoo_list_command(capsys):
    assert main(["zoo", "list"]) == 0
    out = capsys.readouterr().out
    for entry in DEFAULT_ENTRIES:
        assert entry.name in out


def test_custom_zoo_entry_usable(tmp_path):
    doc = {
        "experiments": [
            {"name": "probe-custom", "kind": "probe", "zoo": "my-wind",
             "steps": 300}
        ],
        "zoo": [{
            "name": "my-wind", "kind": "euclidean_wind",
            "params": {"wind": 0.3}, "bounds": [[-4.0, 4.0], [-4.0, 4.0]],
        }],
    }
    path = write_config(tmp_path, doc)
    report, code = run_config_file(path, RunFlags(out_dir=tmp_path / "out"))
    assert code == 0
    assert report["experiments"][0]["results"]["verdict"] == "linear"

import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from prandtl4 import cli
from prandtl4.diagnostics import functional_E, functional_F
from prandtl4.grid import bump


def run(tmp_path, *args, config=None):
    argv = ["--output", str(tmp_path)]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        argv = ["--config", str(path)] + argv
    return cli.main(argv + list(args))


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_config_rejects_unknown_keys_and_bad_values(tmp_path, capsys):
    assert run(tmp_path, "verify", config={"nonsense": 1}) == cli.EXIT_PROPERTY
    assert "unknown configuration keys" in capsys.readouterr().err
    with pytest.raises(ValueError):
        cli.RunConfig(absTol=0.0)
    with pytest.raises(ValueError):
        cli.RunConfig(datum="file")


def test_kernel_table(tmp_path):
    cfg = {"L": 40.0, "N": 4001, "tList": [0.01, 0.1], "xList": [0.0, 0.5, 1.0],
           "yList": [0.0, 0.5, 1.0]}
    assert run(tmp_path, "kernel-table", config=cfg) == cli.EXIT_OK
    rows = read_rows(tmp_path / "kernel_table.csv")
    assert len(rows) == 2 * 3 * 3
    table = {(float(r["t"]), float(r["x"]), float(r["y"])): r for r in rows}
    for (t, x, y), r in table.items():
        if x == 0.0:
            assert float(r["value"]) == 0.0 and float(r["row_l1"]) == 0.0
        assert float(r["value"]) == pytest.approx(float(table[(t, y, x)]["value"]), abs=1e-8)
        assert float(r["row_l1_scaled"]) <= 1.3


def test_kernel_table_scaled_l1_for_derivatives(tmp_path):
    cfg = {"L": 20.0, "N": 8001, "tList": [1e-3, 1e-2, 0.1], "xList": [2.0], "yList": [2.0]}
    assert run(tmp_path, "kernel-table", "--m", "2", "--kind", "Kb", config=cfg) == cli.EXIT_OK
    scaled = [float(r["row_l1_scaled"]) for r in read_rows(tmp_path / "kernel_table.csv")]
    assert max(scaled) / min(scaled) <= 10


def test_time_below_minimum_is_rejected(tmp_path, capsys):
    assert run(tmp_path, "kernel-table", "--t", "1e-9") == cli.EXIT_PROPERTY
    assert "below the minimum resolvable time" in capsys.readouterr().err


def test_quadrature_failure_exit_code(tmp_path):
    # The tail check fires when the grid is much shorter than the kernel spread.
    cfg = {"L": 2.0, "N": 200, "tList": [1.0], "xList": [1.0], "yList": [1.0]}
    assert run(tmp_path, "kernel-table", config=cfg) == cli.EXIT_QUADRATURE


def test_verify_default_passes(tmp_path):
    assert run(tmp_path, "verify") == cli.EXIT_OK
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["passed"]
    assert {c["name"] for c in report["checks"]} == set(cli.VERIFY_CHECKS)


def test_verify_flags_coarse_grid(tmp_path):
    assert run(tmp_path, "verify", config={"N": 64}) == cli.EXIT_PROPERTY
    checks = {c["name"]: c for c in json.loads((tmp_path / "verify_report.json").read_text())["checks"]}
    assert not checks["smoothing"]["passed"]


def test_evolve_small_data_round_trip(tmp_path):
    cfg = {"L": 60.0, "N": 512, "amplitude": 1e-3, "dtInitial": 0.01}
    assert run(tmp_path, "evolve", "--t-end", "1", config=cfg) == cli.EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["termination"] == "TimeReached"
    assert s["E0"] > 0 and s["riccati_bound"] is None
    for snap in s["snapshots"] + [s["final"]]:
        a = cli.profile_from_csv(tmp_path / snap["file"])
        assert functional_F(a) == pytest.approx(snap["F"], rel=1e-12)
        assert functional_E(a) == pytest.approx(snap["E"], rel=1e-12)
    header = (tmp_path / "final.csv").read_text().splitlines()[0]
    assert header == "y,a,a_y,a_yy"
    root = ET.parse(tmp_path / "profiles.svg").getroot()
    assert root.tag.endswith("svg")
    assert root.findall("{http://www.w3.org/2000/svg}polyline")


def test_evolve_zero_datum(tmp_path):
    cfg = {"L": 60.0, "N": 256, "datum": "zero", "dtInitial": 0.01}
    assert run(tmp_path, "evolve", "--t-end", "0.1", config=cfg) == cli.EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["termination"] == "TimeReached"
    assert max(s["sup"]) == 0.0 and max(s["F"]) == 0.0
    y, a, ay, ayy = cli.read_profile_csv(tmp_path / "final.csv")
    assert not a.any() and not ay.any() and not ayy.any()


def test_evolve_from_file_datum(tmp_path):
    g = cli.RunConfig(L=60.0, N=512).grid
    src = tmp_path / "datum.csv"
    datum = bump(g, 1e-3)
    cli.write_profile_csv(src, datum)
    cfg = {"L": 60.0, "N": 512, "datum": "file", "datumPath": str(src), "dtInitial": 0.01}
    assert run(tmp_path, "evolve", "--t-end", "0.05", config=cfg) == cli.EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["sup0"] == pytest.approx(datum.sup(), rel=1e-12)


def test_evolve_incompatible_datum(tmp_path, capsys):
    cfg = {"amplitude": 1.0, "center": 0.5, "halfWidth": 1.0, "N": 256}
    assert run(tmp_path, "evolve", config=cfg) == cli.EXIT_COMPATIBILITY
    assert "compatibility" in capsys.readouterr().err


def test_thread_limit_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    cfg = {"L": 60.0, "N": 256, "datum": "zero"}
    assert run(tmp_path, "evolve", "--t-end", "0.01", config=cfg) == cli.EXIT_OK


def test_render_svg_handles_flat_curves():
    svg = cli.render_svg([("flat", np.arange(3.0), np.zeros(3))], "t", "c")
    assert ET.fromstring(svg).tag.endswith("svg")


def test_figure1(tmp_path):
    assert run(tmp_path, "figure1") == cli.EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["E0"] == pytest.approx(-34.9, rel=0.02)
    assert s["termination"] == "BlowupDetected"
    assert len([x for x in s["snapshots"] if x["level"] > 0]) >= 4
    assert all(s["figure_checks"].values())
    desc = ET.parse(tmp_path / "figure1.svg").getroot().find("{http://www.w3.org/2000/svg}desc").text
    assert "E(a0) = -34.9" in desc
    for snap in s["snapshots"]:
        a = cli.profile_from_csv(tmp_path / snap["file"])
        assert functional_E(a) == pytest.approx(snap["E"], rel=1e-12)

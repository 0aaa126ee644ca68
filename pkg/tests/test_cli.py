import json

import pytest

from fastslow import SCHEMA_VERSION
from fastslow.cli import _grid, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_grid_parser():
    grid = _grid("1e-6:1e-3:4")
    assert len(grid) == 4
    assert grid[0] == pytest.approx(1e-6)
    assert grid[-1] == pytest.approx(1e-3)
    import argparse

    for bad in ("1:2", "0:1:5", "1e-3:1e-1:1", "a:b:c"):
        with pytest.raises(argparse.ArgumentTypeError):
            _grid(bad)


def test_series_command(capsys):
    code, doc = run(capsys, "series", "--s", "1", "--mu", "1", "--order", "3")
    assert code == 0
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["coefficients"][0] == "y^(-1)"
    assert doc["breakdown_exponents"] == {"x": "-1/2", "y": "1/2"}
    assert "double factorial" in doc["comparison_note"]


def test_blowup_command(capsys):
    code, doc = run(capsys, "blowup", "--s", "2")
    assert code == 0
    assert set(doc["charts"]) == {"K1", "K2"}
    k1 = doc["charts"]["K1"]
    assert k1["coords"] == ["v1", "r1", "eps1"]
    assert k1["extracted_factor"] == {"variable": "r1", "exponent": "3"}
    assert k1["time_rescale"] == "2"


def test_blowup_modified_weights(capsys):
    code, doc = run(capsys, "blowup", "--s", "1", "--weights", "1/10,0")
    assert code == 0
    assert doc["params"]["weights"] == "1/10,0"


def test_center_manifold_command(capsys):
    code, doc = run(
        capsys, "center-manifold", "--s", "1", "--mu", "-1", "--order", "4"
    )
    assert code == 0
    rows = {r["order"]: r for r in doc["comparison"]["rows"]}
    assert rows[1]["agree"] is True
    assert rows[2]["agree"] is False


def test_transport_command(capsys):
    code, doc = run(capsys, "transport", "--s", "1", "--mu", "-1", "--order", "4")
    assert code == 0
    assert doc["comparison"]["leading_terms_agree"] is False
    assert doc["comparison"]["computed_leading"]["y2_exponent"] == "1"


def test_simulate_command(capsys, tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, doc = run(
        capsys, "simulate", "--model", "autocatalator2d:mu=1.1",
        "--eps", "0.05", "--t1", "10", "--csv", str(csv_path),
    )
    assert code == 0
    assert doc["status"] == "done"
    assert len(doc["final_state"]) == 2
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,x,y"


def test_departure_command(capsys):
    code, doc = run(
        capsys, "departure", "--s", "1", "--mu", "-1", "--eps", "1e-5"
    )
    assert code == 0
    pt = doc["points"][0]
    assert pt["criterion"] == pytest.approx(0.5, abs=1e-9)


def test_scaling_fit_command_with_views(capsys, tmp_path):
    csv_path = tmp_path / "pts.csv"
    gp_path = tmp_path / "plot.gp"
    code, doc = run(
        capsys, "scaling-fit", "--s", "1", "--mu", "-1",
        "--eps-decades", "1e-7:1e-4:6",
        "--csv", str(csv_path), "--gnuplot", str(gp_path),
    )
    assert code == 0
    assert doc["verdict"] is True
    assert doc["fit"]["x"]["slope"] == pytest.approx(-0.5, abs=0.05)
    assert csv_path.read_text().startswith("eps,x_star,y_star")
    assert "set logscale xy" in gp_path.read_text()


def test_optimality_command(capsys):
    code, doc = run(
        capsys, "optimality", "--s", "1", "--mu", "-1",
        "--alpha1", "0", "--alpha2", "1/10",
    )
    assert code == 0
    assert doc["fit"]["beta_symbolic"] == "3/10"
    assert doc["verdict"] is True


def test_limit_cycle_command(capsys):
    code, doc = run(capsys, "limit-cycle", "--mu", "11/10", "--eps", "0.02")
    assert code == 0
    assert doc["verdict"] is True
    assert abs(doc["fit"]["return_derivative"]) < 1


def test_out_writes_file(capsys, tmp_path):
    out = tmp_path / "series.json"
    code = main(["series", "--s", "2", "--mu", "-1", "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == SCHEMA_VERSION


def test_runtime_failure_is_structured(capsys):
    # mu > 0 is invalid for departures: exit 1 with an error document
    code, doc = run(capsys, "departure", "--s", "1", "--mu", "1", "--eps", "1e-5")
    assert code == 1
    assert doc["error"]["type"] == "ParameterError"
    assert "mu" in doc["error"]["message"]


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["series", "--mu", "1"])  # missing required --s
    assert exc.value.code == 2

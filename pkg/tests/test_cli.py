import csv
import json
import re
from pathlib import Path

import numpy as np
import pytest

from qfc.cli import main
from qfc.conversion import read_report
from qfc.optimize import SweepResult

BUNDLED = (Path(__file__).parents[1] / "scenarios" / "paper.toml").read_text()


def scenario_file(tmp_path, name="scn.toml", **edits):
    text = BUNDLED
    for key, value in edits.items():
        text, n = re.subn(rf"^{key} = .*$", f"{key} = {value}", text, flags=re.M)
        assert n == 1, key
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_poling_reports_both_geometries(tmp_path, capsys):
    assert main(["poling", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "poling.json").read_text())
    assert data["schema"] == "qfc.poling/1"
    assert data["poling_period_m"] == pytest.approx(360e-9, rel=0.15)
    by = data["periods_by_geometry_m"]
    assert by["co_propagating"] > 10e-6 and by["co_propagating"] != by["counter_propagating"]
    assert "nm" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == ["poling.json"]


def test_third_order_poling_is_three_times(tmp_path):
    m1, m3 = tmp_path / "m1", tmp_path / "m3"
    assert main(["poling", "--out", str(m1)]) == 0
    assert main(["poling", "--scenario", scenario_file(tmp_path, qpm_order=3), "--out", str(m3)]) == 0
    p1 = json.loads((m1 / "poling.json").read_text())["poling_period_m"]
    p3 = json.loads((m3 / "poling.json").read_text())["poling_period_m"]
    assert p3 == pytest.approx(3 * p1, rel=1e-12)


def test_purify_zero_noise_is_pure(tmp_path):
    text = BUNDLED.replace("target_purity = 0.76", "sigma_frequency_ghz = 0.0")
    path = tmp_path / "pure.toml"
    path.write_text(text)
    assert main(["purify", "--scenario", str(path), "--out", str(tmp_path / "o")]) == 0
    rep = read_report(tmp_path / "o" / "report.json")
    assert rep["input_purity"] == pytest.approx(1.0, abs=1e-9)
    assert rep["output_purity"] == pytest.approx(1.0, abs=1e-9)


def test_purify_filter_benchmark_rows(tmp_path):
    assert main(["purify", "--filter-benchmark", "--out", str(tmp_path)]) == 0
    rep = read_report(tmp_path / "report.json")
    methods = [row["method"] for row in rep["filter_benchmark"]]
    assert methods == ["conversion", "passive_lorentzian_1ghz"]
    for row in rep["filter_benchmark"]:
        assert 0 < row["transmission"] <= 1 and 0 < row["output_purity"] <= 1
    spectrum = np.loadtxt(tmp_path / "output_spectrum.csv", delimiter=",", skiprows=1)
    assert spectrum.shape[1] == 2 and np.all(spectrum[:, 1] >= -1e-12)


def test_manifest_reproduces_results_bit_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["purify", "--out", str(a)]) == 0
    assert main(["purify", "--scenario", str(a / "scenario.toml"), "--out", str(b)]) == 0
    assert (a / "report.json").read_text() == (b / "report.json").read_text()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["resolved"] == mb["resolved"] and ma["qfc_version"] == mb["qfc_version"]


@pytest.mark.parametrize("argv", [
    ["figure", "--figure", "spectrogram"],
    ["figure"],
    ["purify", "--threads", "0"],
    ["launch"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_empty_sweep_range_exits_2(tmp_path):
    path = scenario_file(tmp_path, power_range_w="[50.0, 50.0]")
    assert main(["figure", "--figure", "tradeoff", "--scenario", path, "--out", str(tmp_path / "o")]) == 2


def test_unknown_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(BUNDLED.replace("length_mm = 15.0", "length_cm = 1.5"))
    assert main(["poling", "--scenario", str(path), "--out", str(tmp_path)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_output_bluer_than_input_exits_2(tmp_path, capsys):
    path = scenario_file(tmp_path, output_wavelength_nm="800.0")
    assert main(["poling", "--scenario", path, "--out", str(tmp_path / "o")]) == 2
    assert "positive pump frequency" in capsys.readouterr().err


def test_bracket_without_minimum_exits_1(tmp_path, capsys):
    path = scenario_file(tmp_path, lengths_mm="[15.0]", duration_points="3", duration_range_ps="[1.0, 3.0]",
                         duration_bracket_ps="[1.0, 3.0]")
    assert main(["figure", "--figure", "duration", "--scenario", path, "--out", str(tmp_path / "o")]) == 1
    assert "BracketError" in capsys.readouterr().err


def test_unconverged_grid_exits_1(tmp_path, capsys):
    path = scenario_file(tmp_path, points_i="64", points_o="64")
    assert main(["figure", "--figure", "tradeoff", "--scenario", path, "--out", str(tmp_path / "o")]) == 1
    assert "points_i" in capsys.readouterr().err


def test_modes_figure_has_six_states(tmp_path):
    assert main(["figure", "--figure", "modes", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "modes.csv")
    assert [s for s in dict.fromkeys(r["state"] for r in rows)] == ["i", "ii", "iii", "iv", "v", "vi"]
    first = [r for r in rows if r["state"] == "i"]
    assert float(first[0]["input_purity"]) == pytest.approx(1.0, abs=1e-9)
    assert (tmp_path / "modes_schmidt_coefficients.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["convergence_max_change"] < 1e-4


def test_duration_figure_on_reduced_scenario(tmp_path):
    path = scenario_file(tmp_path, lengths_mm="[10.0, 20.0]", duration_points="6")
    assert main(["figure", "--figure", "duration", "--scenario", path, "--out", str(tmp_path / "o")]) == 0
    curves = read_csv(tmp_path / "o" / "duration.csv")
    assert len(curves) == 12
    optima = read_csv(tmp_path / "o" / "duration_optima.csv")
    taus = [float(r["optimal_duration_ps"]) for r in optima]
    assert taus[1] > taus[0]


def test_tradeoff_figure_is_thread_independent(tmp_path):
    path = scenario_file(tmp_path, power_points="9")
    for threads in ("1", "3"):
        assert main(["figure", "--figure", "tradeoff", "--scenario", path, "--threads", threads,
                     "--out", str(tmp_path / threads)]) == 0
    assert (tmp_path / "1" / "tradeoff.csv").read_text() == (tmp_path / "3" / "tradeoff.csv").read_text()
    res = SweepResult.read_csv(tmp_path / "1" / "tradeoff.csv")
    assert len(res.rows) == 9


def test_noise_figure_files_reparse(tmp_path):
    path = scenario_file(tmp_path, noise_points="3", noise_durations_ps="[13.0]")
    assert main(["figure", "--figure", "noise_time", "--scenario", path, "--out", str(tmp_path / "o")]) == 0
    res = SweepResult.read_csv(tmp_path / "o" / "noise_time_tau13ps.csv")
    assert res.variable == "sigma_time" and len(res.rows) == 3


def test_qpm_and_power_figures(tmp_path):
    assert main(["figure", "--figure", "qpm", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "qpm.csv")
    assert [int(r["qpm_order"]) for r in rows] == [1, 3]
    path = scenario_file(tmp_path, power_points="5")
    assert main(["figure", "--figure", "power", "--scenario", path, "--out", str(tmp_path / "p")]) == 0
    summary = read_csv(tmp_path / "p" / "power_summary.csv")
    powers = [float(r["power_for_unit_eta0_w"]) for r in summary]
    assert powers[1] == pytest.approx(60.0, rel=1e-9) and np.all(np.diff(powers) < 0)

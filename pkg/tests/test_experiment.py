import csv
import json
import math

import pytest

from sdde_euler.convergence import ConvergenceReport
from sdde_euler.errors import ConfigurationError
from sdde_euler.experiment import (ERRORS_HEADER, PLOT_HEADER, PRESETS,
                                   ExperimentConfig, emit_plot_data, main,
                                   params_from_dict, run_experiment)


def small_config(tmp_path, **kw):
    base = dict(problem="table1", levels=[3, 4, 5], fine_exponent=9,
                num_paths=40, seed=7, outputs=str(tmp_path), batch_size=16)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict({"problem": {"preset": "table1", "l1": 0.5},
                                      "seed": 3, "levels": [4, 5, 6],
                                      "fine_exponent": 10})
    text = cfg.to_json()
    again = ExperimentConfig.from_json(text)
    assert again.to_json() == text
    assert again == cfg
    assert again.problem.l1 == 0.5 and again.problem.a == -8.0


@pytest.mark.parametrize("raw,field", [
    ({"levels": [5, 4]}, "levels"),
    ({"levels": [6], "fine_exponent": 9}, "fine_exponent"),
    ({"num_paths": 0}, "num_paths"),
    ({"seed": -1}, "seed"),
    ({"seed": 2 ** 64}, "seed"),
    ({"emit": ["pdf"]}, "emit"),
    ({"levels": [6], "emit": ["plot_data"]}, "emit"),
    ({"problem": "nope"}, "problem"),
    ({"problem": {"tau": -1}}, "problem.tau"),
    ({"problem": {"gamma": 1}}, "problem.gamma"),
    ({"colour": "red"}, "colour"),
])
def test_config_validation_names_field(raw, field):
    with pytest.raises(ConfigurationError, match=field.replace(".", r"\.")):
        ExperimentConfig.from_dict(raw)


def test_presets():
    assert params_from_dict("table1").a == -8.0
    assert params_from_dict({"preset": "table1_holder"}).l2 == 0.5
    assert PRESETS["deterministic"].is_deterministic


def test_run_writes_outputs(tmp_path):
    report = run_experiment(small_config(tmp_path))
    with open(tmp_path / "errors.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ERRORS_HEADER
    assert len(rows) == 4
    h, n, rmse = float(rows[1][0]), int(rows[1][1]), float(rows[1][2])
    assert (h, n) == (1 / 8, 8) and rmse == report.errors[0]
    assert rows[1][-1] == "7"

    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["errors"] == report.errors
    assert doc["seed"] == 7 and doc["num_paths"] == 40
    assert doc["levels"] == [[8, 0.125], [16, 0.0625], [32, 0.03125]]
    assert set(ConvergenceReport.__dataclass_fields__) <= set(doc)

    with open(tmp_path / "plot_data.csv", newline="") as fh:
        plot = list(csv.reader(fh))
    assert plot[0] == PLOT_HEADER
    assert [r[2] for r in plot[1:]] == ["data"] * 3 + ["reference"] * 3
    assert b"\r\n" not in (tmp_path / "errors.csv").read_bytes()


def test_errors_printed_with_full_precision(tmp_path):
    report = run_experiment(small_config(tmp_path, emit=["errors_csv"]))
    text = (tmp_path / "errors.csv").read_text().splitlines()[1]
    assert float(text.split(",")[2]) == report.errors[0]
    assert len(text.split(",")[2].replace("0.", "").lstrip("0").split("e")[0]) >= 15


def test_byte_determinism_across_workers(tmp_path):
    outs = []
    for workers in (1, 3):
        d = tmp_path / f"w{workers}"
        run_experiment(small_config(d, workers=workers))
        outs.append({name: (d / name).read_bytes()
                     for name in ("errors.csv", "plot_data.csv")})
    assert outs[0] == outs[1]


def test_zero_preset_single_path(tmp_path):
    cfg = ExperimentConfig.from_dict(
        {"problem": "zero", "levels": [4], "fine_exponent": 8, "num_paths": 1,
         "outputs": str(tmp_path), "emit": ["errors_csv", "report_json"]})
    report = run_experiment(cfg)
    assert report.errors == [0.0]
    assert report.degenerate
    assert json.loads((tmp_path / "report.json").read_text())["degenerate"] is True


def test_additive_preset_zero_error(tmp_path):
    report = run_experiment(small_config(tmp_path, problem="additive", emit=[]))
    assert report.errors == [0.0, 0.0, 0.0]


def test_sup_norm_flag(tmp_path):
    terminal = run_experiment(small_config(tmp_path, emit=[]))
    sup = run_experiment(small_config(tmp_path, emit=[], sup_norm=True))
    assert sup.sup_norm
    assert all(s >= t for s, t in zip(sup.errors, terminal.errors))


def test_plot_data_anchoring(tmp_path):
    report = ConvergenceReport.from_errors([(4, 0.25), (8, 0.125)], [0.1, 0.05], 1, 0)
    path = emit_plot_data(report, tmp_path / "p.csv")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    data = [(float(x), float(y)) for x, y, s in rows if s == "data"]
    ref = [(float(x), float(y)) for x, y, s in rows if s == "reference"]
    assert data == [(2.0, math.log2(0.1)), (3.0, math.log2(0.05))]
    assert ref == [(2.0, math.log2(0.1)), (3.0, math.log2(0.1) - 0.5)]


def test_plot_data_single_level_rejected(tmp_path):
    report = ConvergenceReport.from_errors([(4, 0.25)], [0.1], 1, 0)
    with pytest.raises(ConfigurationError):
        emit_plot_data(report, tmp_path / "p.csv")


def test_cli_overrides_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"levels": [3, 4, 5], "fine_exponent": 9,
                               "num_paths": 5, "seed": 1}))
    out = tmp_path / "out"
    code = main(["--config", str(cfg), "--seed", "11", "--paths", "6",
                 "--preset", "table1_holder", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["seed"] == 11 and doc["num_paths"] == 6
    assert doc["config"]["problem"]["l1"] == 0.5

    cfg.write_text(json.dumps({"levels": [9, 8]}))
    assert main(["--config", str(cfg), "--out", str(out)]) != 0
    assert "levels" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.json")]) != 0


def test_cli_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["--preset", "zero", "--paths", "1", "--out", str(blocker / "sub")])
    assert code != 0

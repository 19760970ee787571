import copy
import csv
import json

import pytest

from rsgd_lab import cli
from rsgd_lab.errors import DivergedError

ANALYZE_DOC = {
    "lr": {"constant": {"eta_max": 1.0}},
    "bs": {"bs_constant": {"b0": 4}},
    "bound": {"f0_gap": 1.0, "L_r": 1.0, "sigma_sq": 1.0, "T": 10},
}


def csv_without_wall_time(path):
    with open(path, newline="") as f:
        return [{k: v for k, v in row.items() if k != "wall_ms"} for row in csv.DictReader(f)]


def test_analyze_prints_the_report(write_config, capsys):
    assert cli.main(["analyze", "--config", str(write_config(ANALYZE_DOC))]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["lemma1"] == pytest.approx(0.45)
    assert report["case"] == "constant_bs_decay"
    assert "critical_batch" not in report


def test_analyze_with_eps_and_output(write_config, tmp_path, capsys):
    out = tmp_path / "reports" / "bound.json"
    code = cli.main(["analyze", "--config", str(write_config(ANALYZE_DOC)), "--eps", "0.5",
                     "--output", str(out)])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert json.loads(out.read_text()) == printed
    assert printed["eps"] == 0.5
    assert "best_batch" in printed["critical_batch"]


def test_invalid_config_exits_2(write_config, capsys):
    doc = copy.deepcopy(ANALYZE_DOC)
    doc["lr"]["constant"]["eta_max"] = -1.0
    assert cli.main(["analyze", "--config", str(write_config(doc))]) == 2
    err = capsys.readouterr().err
    assert "❌ ConfigError" in err
    assert "lr.constant.eta_max" in err


def test_missing_config_exits_2(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_unwritable_output_exits_2(write_config, tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code = cli.main(["analyze", "--config", str(write_config(ANALYZE_DOC)),
                     "--output", str(blocker / "bound.json")])
    assert code == 2
    assert "❌" in capsys.readouterr().err


def test_smoothness_violation_exits_2(write_config):
    doc = copy.deepcopy(ANALYZE_DOC)
    doc["bound"]["L_r"] = 3.0
    assert cli.main(["analyze", "--config", str(write_config(doc))]) == 2


def test_diverged_run_exits_3(write_config, small_pca_doc, monkeypatch, capsys):
    def diverge(*args, **kwargs):
        raise DivergedError(7, "small-seed0")

    monkeypatch.setattr(cli, "run_experiment", diverge)
    assert cli.main(["run", "--config", str(write_config(small_pca_doc))]) == 3
    assert "diverged at iteration 7" in capsys.readouterr().err


def test_run_writes_deterministic_telemetry(write_config, small_pca_doc, tmp_path, capsys):
    path = str(write_config(small_pca_doc))
    assert cli.main(["run", "--config", path, "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--config", path, "--output", str(tmp_path / "b"), "--jobs", "2"]) == 0
    out = capsys.readouterr().out
    assert "| small-seed0 |" in out and "✅" in out
    for name in ("small-seed0.csv", "small-seed1.csv"):
        assert csv_without_wall_time(tmp_path / "a" / name) == csv_without_wall_time(tmp_path / "b" / name)
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert sorted(summary) == ["small-seed0", "small-seed1"]
    assert summary["small-seed0"]["total_sfo"] == 4 * 30
    assert "evd_distance" in summary["small-seed0"]


def test_run_seed_override(write_config, small_pca_doc, tmp_path):
    code = cli.main(["run", "--config", str(write_config(small_pca_doc)), "--seeds", "3",
                     "--output", str(tmp_path / "o")])
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["small-seed3.csv", "summary.json"]


def test_bad_seed_list_exits_2(write_config, small_pca_doc):
    assert cli.main(["run", "--config", str(write_config(small_pca_doc)), "--seeds", "a,b"]) == 2


def test_gen_data(write_config, small_pca_doc, tmp_path, capsys):
    out = tmp_path / "data"
    assert cli.main(["gen-data", "--config", str(write_config(small_pca_doc)), "--output", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["dataset.json", "samples.csv"]
    assert json.loads((out / "dataset.json").read_text())["kind"] == "pca"
    assert capsys.readouterr().out.count("✅") == 2


def test_tradeoff_csv(tmp_path, capsys):
    code = cli.main(["tradeoff", "--gamma", "1.5,3,4", "--b0", "2,4", "--M", "1,3",
                     "--gamma-fixed", "2", "--output", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "tradeoff.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["curve", "x", "value"]
    assert [r[0] for r in rows[1:]] == ["f"] * 4 + ["g"] * 3 + ["h"] * 3
    assert rows[1][1:] == ["1.5", "4"]
    assert rows[-1][1:] == ["3", "2.6666666666666665"]
    assert "f(gamma)" in capsys.readouterr().out


@pytest.mark.parametrize("args", [
    ["--gamma", "a,b,c"],
    ["--gamma", "1.5,3"],
    ["--gamma", "1.5,3,2.5"],
    ["--b0", "1,4"],
    ["--gamma", "0.5,3,4"],
])
def test_tradeoff_bad_ranges_exit_2(tmp_path, args):
    assert cli.main(["tradeoff", "--output", str(tmp_path), *args]) == 2


def test_plot_png(write_config, small_pca_doc, tmp_path):
    out = tmp_path / "runs"
    assert cli.main(["run", "--config", str(write_config(small_pca_doc)), "--output", str(out)]) == 0
    png = tmp_path / "fig" / "gn.png"
    code = cli.main(["plot", str(out / "small-seed0.csv"), str(out / "small-seed1.csv"),
                     "--x", "sfo_cum", "--y", "loss", "--output", str(png)])
    assert code == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_plot_rejects_unknown_axis(tmp_path):
    with pytest.raises(SystemExit) as err:
        cli.main(["plot", str(tmp_path / "a.csv"), "--x", "time"])
    assert err.value.code == 2


def test_plot_bad_csv_exits_2(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("iter,loss\n")
    assert cli.main(["plot", str(path), "--output", str(tmp_path / "a.png")]) == 2


def test_compare_constant_and_increasing(write_config, small_pca_doc, tmp_path, capsys):
    const = copy.deepcopy(small_pca_doc)
    const["run"]["label"] = "const"
    grow = copy.deepcopy(small_pca_doc)
    grow["run"]["label"] = "exp"
    grow["bs"] = {"bs_exp": {"b0": 1, "gamma": 3.0, "K": 10}}
    out = tmp_path / "cmp"
    code = cli.main(["compare", "--config", str(write_config(const, "const.json")),
                     "--config", str(write_config(grow, "exp.json")),
                     "--eps", "100", "--output", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "| const |" in printed and "🏁" in printed
    doc = json.loads((out / "compare.json").read_text())
    totals = {run["label"]: run["total_sfo"] for run in doc["runs"]}
    assert totals == {"const": 4 * 30, "exp": 1 * 10 * (3 ** 3 - 1) // 2}
    assert (out / "exp" / "exp-seed1.csv").exists()
    assert (out / "const-frontier.csv").exists()


def test_compare_duplicate_labels_exit_2(write_config, small_pca_doc, tmp_path):
    path = str(write_config(small_pca_doc))
    assert cli.main(["compare", "--config", path, "--config", path, "--output", str(tmp_path)]) == 2


def test_package_entry_point(write_config, capsys):
    import rsgd_lab

    assert rsgd_lab.main(["analyze", "--config", str(write_config(ANALYZE_DOC))]) == 0
    assert json.loads(capsys.readouterr().out)["T"] == 10

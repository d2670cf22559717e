import json
import subprocess
import sys

import pytest

from cpimodel.cli import main
from cpimodel.regression import ModelSpec
from cpimodel.report import load_model, strip_manifest


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--seed", "4", "--n-series", "6", "--noise", "0.01", "--out", str(d), "--format", "json"]) == 0
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_synth_outputs(synth_dir):
    truth = json.loads((synth_dir / "truth.json").read_text())
    assert truth["first"] == "2003-07" and truth["last"] == "2012-11"
    header = (synth_dir / "cpi.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "date" and len(header.split(",")) == 7
    assert (synth_dir / "prices.csv").read_text().startswith("date,SYN")


def test_search_recovers_truth(synth_dir, tmp_path, capsys):
    code, out, _ = run(capsys, "search", "--prices", synth_dir / "prices.csv", "--cpi", synth_dir / "cpi.csv",
                       "--out", tmp_path, "--top", "3")
    assert code == 0
    assert out.splitlines()[0].split("\t") == ["rank", "C1", "t1", "b1", "C2", "t2", "b2", "c", "d", "sterr", "R2"]
    assert len(out.splitlines()) == 4
    truth = load_model(synth_dir / "truth.json").canonical()
    found = load_model(tmp_path / "search.json")
    assert (found.code1, found.lag1, found.code2, found.lag2) == (truth.code1, truth.lag1, truth.code2, truth.lag2)
    tsv = (tmp_path / "search.tsv").read_text()
    assert tsv.startswith("# command\t")


def test_threads_do_not_change_bytes(synth_dir, tmp_path, capsys):
    bodies = []
    for threads in (1, 3):
        out_dir = tmp_path / f"t{threads}"
        code, _, _ = run(capsys, "search", "--prices", synth_dir / "prices.csv", "--cpi", synth_dir / "cpi.csv",
                         "--out", out_dir, "--threads", threads)
        assert code == 0
        bodies.append(tuple(strip_manifest((out_dir / f"search.{ext}").read_text()) for ext in ("tsv", "json")))
    assert bodies[0] == bodies[1]


def test_stability(synth_dir, tmp_path, capsys):
    code, out, _ = run(capsys, "stability", "--prices", synth_dir / "prices.csv", "--cpi", synth_dir / "cpi.csv",
                       "--window", "3", "--out", tmp_path)
    assert code == 0
    lines = out.splitlines()
    assert lines[1].startswith("2012-11") and lines[3].startswith("2012-09")
    assert lines[-1] == "verdict\treliable (strict)"
    doc = json.loads((tmp_path / "stability.json").read_text())
    assert doc["result"]["strict"] and len(doc["result"]["anchors"]) == 3


def test_corr_and_adf(synth_dir, tmp_path, capsys):
    code, out, _ = run(capsys, "corr", "--cpi", synth_dir / "cpi.csv", "--columns", "X01,X02", "--scan",
                       "--out", tmp_path, "--format", "tsv")
    assert code == 0
    rows = [r.split("\t") for r in out.splitlines()]
    assert rows[0] == ["", "X01", "X02"] and rows[1][1] == "1.000"
    assert "@" in rows[2][1]
    assert not (tmp_path / "corr.json").exists()

    code, out, _ = run(capsys, "adf", "--prices", synth_dir / "prices.csv", "--diff", "--out", tmp_path)
    assert code == 0
    assert out.splitlines()[1].startswith("dSYN\t")


def test_coint_and_sensitivity(synth_dir, tmp_path, capsys):
    model = synth_dir / "truth.json"
    code, out, _ = run(capsys, "coint", "--prices", synth_dir / "prices.csv", "--cpi", synth_dir / "cpi.csv",
                       "--model", model, "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "coint.json").read_text())["result"]
    assert doc["r2"] > 0.9 and doc["cointegrated"]
    assert len(doc["residuals"]) == 113

    code, out, _ = run(capsys, "sensitivity", "--model", model, "--price", "50", "--out", tmp_path)
    assert code == 0
    spec = load_model(model)
    res = json.loads((tmp_path / "sensitivity.json").read_text())["result"]
    assert res["ratio_b1_b2"] == pytest.approx(spec.b1 / spec.b2)
    assert res["percent_per_unit"] == pytest.approx(2 * spec.b1)


def test_compare(tmp_path, capsys):
    cpi = tmp_path / "cpi.csv"
    rows = ["date,F,ORPR"] + [f"2012-{m:02d},229.0,260.0" for m in range(1, 11)]
    cpi.write_text("\n".join(rows) + "\n")
    gs = ModelSpec("F", 3, "ORPR", 2, -13.795, 11.027, 29.935, 33.751)
    jpm = ModelSpec("F", 4, "ORPR", 2, -1.856, 0.993, 7.037, 116.907)
    for name, spec in (("gs", gs), ("jpm", jpm)):
        (tmp_path / f"{name}.json").write_text(json.dumps(spec.to_dict()))
    code, out, _ = run(capsys, "compare", "--model", f"JPM={tmp_path / 'jpm.json'}", "--model", f"GS={tmp_path / 'gs.json'}",
                       "--cpi", cpi, "--growth", "F=-0.3", "--horizon", "2012-11:2013-10", "--out", tmp_path)
    assert code == 0
    assert [line.split("\t")[1] for line in out.splitlines()[1:]] == ["GS", "JPM"]


def test_normalize(tmp_path, capsys):
    prices = tmp_path / "p.csv"
    prices.write_text("date,A,B\n2003-01,10,4\n2003-02,20,8\n2003-03,5,2\n")
    code, out, _ = run(capsys, "normalize", "--prices", prices, "--out", tmp_path)
    assert code == 0
    assert out.splitlines()[2] == "2003-02\t1.000\t1.000"


def test_model_json_round_trip(tmp_path):
    spec = ModelSpec("F", 3, "ORPR", 2, -13.795, 11.027, 29.935, 33.751)
    p = tmp_path / "m.json"
    p.write_text(json.dumps(spec.to_dict()))
    assert load_model(p) == spec


@pytest.mark.parametrize("argv", [
    ["search", "--bogus"],
    ["search", "--cpi", "x.csv"],
    ["frobnicate"],
    ["compare", "--cpi", "x.csv", "--horizon", "2013-01"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1


def test_bad_lag_order(synth_dir, tmp_path, capsys):
    code, _, _ = run(capsys, "adf", "--prices", synth_dir / "prices.csv", "--lags", "many", "--out", tmp_path)
    assert code == 1


def test_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("date,A,B\n2003-01,1,2\n2003-03,1,2\n")
    code, _, err = run(capsys, "search", "--prices", bad, "--cpi", bad, "--out", tmp_path)
    assert code == 2 and "NonMonotoneDates" in err
    code, _, _ = run(capsys, "search", "--prices", tmp_path / "missing.csv", "--cpi", bad, "--out", tmp_path)
    assert code == 2


def test_infeasible(synth_dir, tmp_path, capsys):
    late = tmp_path / "late.csv"
    text = (synth_dir / "cpi.csv").read_text().splitlines()
    late.write_text("\n".join([text[0]] + [r for r in text[1:] if r >= "2010"]) + "\n")
    code, _, err = run(capsys, "search", "--prices", synth_dir / "prices.csv", "--cpi", late, "--out", tmp_path)
    assert code == 3 and "no feasible" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cpimodel", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "search" in proc.stdout

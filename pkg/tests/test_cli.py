import csv
import json

import pytest

from balsub.cli import main

from conftest import OA9


def write_csv_file(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def ex1_csv(tmp_path):
    return write_csv_file(tmp_path / "ex1.csv", ["x"], [[u] for u in range(1, 6) for _ in range(2)])


@pytest.fixture
def oa9_csv(tmp_path):
    rows = [[f"l{v}" for v in r] + [float(i)] for i, r in enumerate(OA9)]
    return write_csv_file(tmp_path / "oa9.csv", ["a", "b", "c", "y"], rows)


class TestSubsample:
    def test_example1_balanced(self, ex1_csv, tmp_path, capsys):
        out = tmp_path / "idx.txt"
        report = tmp_path / "rep.json"
        assert main(["subsample", "--input", ex1_csv, "--n", "5", "--output", str(out),
                     "--report", str(report)]) == 0
        idx = [int(v) for v in out.read_text().split()]
        assert sorted(i // 2 for i in idx) == [0, 1, 2, 3, 4]
        rep = json.loads(report.read_text())
        assert rep["f"] == 0.0 and rep["oa"]
        assert rep["config"]["seed"] == 20230101

    def test_stdout_and_subsample_csv(self, ex1_csv, tmp_path, capsys):
        sub_csv = tmp_path / "sub.csv"
        assert main(["subsample", "--input", ex1_csv, "--n", "3",
                     "--subsample-csv", str(sub_csv)]) == 0
        idx = capsys.readouterr().out.split()
        assert len(idx) == 3
        lines = sub_csv.read_text().splitlines()
        assert lines[0] == "x" and len(lines) == 4

    def test_n_too_large(self, ex1_csv, capsys):
        assert main(["subsample", "--input", ex1_csv, "--n", "11"]) == 2
        err = capsys.readouterr().err
        assert "11" in err and "10" in err

    def test_uniform_deterministic(self, ex1_csv, tmp_path):
        outs = []
        for k in range(2):
            path = tmp_path / f"u{k}.txt"
            assert main(["subsample", "--input", ex1_csv, "--n", "4", "--method", "uniform",
                         "--seed", "7", "--output", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_byte_stable(self, oa9_csv, tmp_path):
        outs = []
        for k in range(2):
            idx, rows = tmp_path / f"i{k}.txt", tmp_path / f"r{k}.csv"
            assert main(["subsample", "--input", oa9_csv, "--response", "y", "--n", "6",
                         "--output", str(idx), "--subsample-csv", str(rows)]) == 0
            outs.append((idx.read_bytes(), rows.read_bytes()))
        assert outs[0] == outs[1]

    def test_trace(self, oa9_csv, tmp_path):
        trace = tmp_path / "t.jsonl"
        assert main(["subsample", "--input", oa9_csv, "--response", "y", "--n", "9",
                     "--output", str(tmp_path / "i.txt"), "--trace", str(trace)]) == 0
        recs = [json.loads(line) for line in trace.read_text().splitlines()]
        assert len(recs) == 9 and recs[-1]["f"] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("argv", [
        ["subsample", "--bogus"],
        ["subsample", "--n", "3"],
        ["frobnicate"],
        [],
    ])
    def test_usage_errors(self, argv, capsys):
        assert main(argv) == 1

    def test_missing_file(self, tmp_path, capsys):
        assert main(["subsample", "--input", str(tmp_path / "no.csv"), "--n", "2"]) == 2


class TestInspect:
    def test_oa9(self, oa9_csv, tmp_path):
        out = tmp_path / "d.json"
        assert main(["inspect", "--input", oa9_csv, "--response", "y", "--output", str(out)]) == 0
        d = json.loads(out.read_text())
        assert d["f"] == 0.0 and d["oa"] is True and d["singular"] is False
        assert d["det_ratio"] == pytest.approx(1.0)
        assert d["leverage_ratio"] == pytest.approx(1.0)

    def test_unobserved_level_singular(self, oa9_csv, tmp_path, capsys):
        idx = tmp_path / "idx.txt"
        idx.write_text("0\n1\n2\n3\n")  # level l2 of column a is missing
        assert main(["inspect", "--input", oa9_csv, "--response", "y", "--indices", str(idx)]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["singular"] is True and d["max_leverage"] is None

    @pytest.mark.parametrize("text", ["", "0\n9\n", "0\n0\n", "a\n"])
    def test_bad_indices(self, oa9_csv, tmp_path, text, capsys):
        idx = tmp_path / "idx.txt"
        idx.write_text(text)
        assert main(["inspect", "--input", oa9_csv, "--response", "y", "--indices", str(idx)]) == 2


class TestSimulate:
    def test_case2(self, tmp_path, capsys):
        code = main(["simulate", "--case", "2", "--N", "3000", "--q", "2,3,4", "--n", "40",
                     "--reps", "10", "--seed", "1", "--out", str(tmp_path)])
        assert code == 0
        rep = json.loads((tmp_path / "report.json").read_text())
        assert rep["methods"]["balanced"]["nonsingular_proportion"] == 1.0
        assert rep["config"]["q"] == [2, 3, 4]
        assert "balanced: nonsingular=1.0000" in capsys.readouterr().out
        with open(tmp_path / "records.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 20

    def test_p_rule(self, tmp_path, capsys):
        assert main(["simulate", "--case", "1", "--N", "500", "--p", "2", "--n", "20",
                     "--reps", "2", "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "report.json").read_text())["config"]["q"] == [2, 3]

    def test_noise_free(self, tmp_path, capsys):
        assert main(["simulate", "--case", "1", "--N", "2000", "--q", "3,3", "--n", "30",
                     "--reps", "5", "--sigma", "0", "--methods", "balanced",
                     "--out", str(tmp_path)]) == 0
        m = json.loads((tmp_path / "report.json").read_text())["methods"]["balanced"]
        assert m["mse"] <= 1e-20

    def test_reps_zero(self, tmp_path, capsys):
        assert main(["simulate", "--case", "2", "--N", "100", "--q", "2,3", "--n", "10",
                     "--reps", "0", "--out", str(tmp_path)]) == 1

    @pytest.mark.parametrize("extra", [
        ["--q", "2,3", "--p", "2"],
        ["--q", "2,1"],
        ["--methods", "iboss"],
    ])
    def test_bad_settings(self, tmp_path, extra, capsys):
        argv = ["simulate", "--case", "2", "--N", "100", "--n", "10", "--reps", "2",
                "--out", str(tmp_path)]
        assert main(argv + extra) == 1

    def test_all_singular_exit(self, ex1_csv, tmp_path, capsys):
        assert main(["simulate", "--input", ex1_csv, "--n", "3", "--reps", "3",
                     "--out", str(tmp_path)]) == 3
        rep = json.loads((tmp_path / "report.json").read_text())
        assert rep["methods"]["balanced"]["mse"] is None

    def test_n_exceeds_N(self, tmp_path, capsys):
        assert main(["simulate", "--case", "2", "--N", "100", "--q", "2,3", "--n", "101",
                     "--out", str(tmp_path)]) == 2

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text("case = 2\nN = 1000\nq = 2,3\nn = 20\nreps = 4\nseed = 3\n")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(cfg), "--reps", "2", "--out", str(out_b)]) == 0
        a = json.loads((out_a / "report.json").read_text())["config"]
        b = json.loads((out_b / "report.json").read_text())["config"]
        assert (a["reps"], b["reps"], a["N"], a["seed"]) == (4, 2, 1000, 3)

    @pytest.mark.parametrize("text", ["colour = red\n", "wspe = sometimes\n"])
    def test_config_errors(self, tmp_path, text, capsys):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text("case = 2\nN = 100\nq = 2,3\nn = 10\n" + text)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1

    def test_byte_stable(self, tmp_path, capsys):
        outs = []
        for k in range(2):
            d = tmp_path / str(k)
            assert main(["simulate", "--case", "3", "--N", "1500", "--q", "2,3,4", "--n", "30",
                         "--reps", "4", "--out", str(d), "--threads", "1"]) == 0
            outs.append(((d / "report.json").read_bytes(), (d / "records.csv").read_bytes()))
        assert outs[0] == outs[1]


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "balsub", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()

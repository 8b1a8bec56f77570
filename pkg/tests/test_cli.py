"""End-to-end CLI behavior: exit codes, output files, reproducibility."""
import csv
import json
import subprocess
import sys

import pytest

from martcheck.cli import main

COIN = "tree_coin.json"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestVerifyDiscrete:
    def test_valid_tree_all_defaults(self, zoo, capsys):
        code, out, err = run(capsys, "verify-discrete",
                             "--tree", str(zoo / COIN), "--p", "2", "3")
        assert code == 0
        lines = [l for l in out.splitlines() if l]
        assert len(lines) == 2 * 2 * 6   # levels 0..1, two p, six ids
        assert all("satisfied" in l for l in lines)

    def test_single_level_single_id(self, zoo, capsys):
        code, out, _ = run(capsys, "verify-discrete",
                           "--tree", str(zoo / COIN), "--p", "2",
                           "--n", "1", "--ineq", "D-BURK-1")
        assert code == 0
        assert out.count("D-BURK-1") == 1
        assert "lhs=1 rhs=1 ratio=1" in out   # squared coin equality

    def test_invalid_tree_exits_1(self, tmp_path, capsys):
        doc = {"m0": [0.0], "tree": {"children": [
            {"prob": 0.7, "incr": [1.0], "node": {}},
            {"prob": 0.7, "incr": [-1.0], "node": {}}]}}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        code, _, err = run(capsys, "verify-discrete",
                           "--tree", str(path), "--p", "2")
        assert code == 1
        assert "error:" in err

    def test_missing_file_exits_1(self, capsys):
        code, _, err = run(capsys, "verify-discrete",
                           "--tree", "/nonexistent.json", "--p", "2")
        assert code == 1
        assert "error: cannot read" in err

    def test_unknown_id_exits_1(self, zoo, capsys):
        code, _, err = run(capsys, "verify-discrete",
                           "--tree", str(zoo / COIN), "--p", "2",
                           "--ineq", "NOT-AN-ID")
        assert code == 1 and "error:" in err

    def test_step_id_rejected_for_trees(self, zoo, capsys):
        code, _, err = run(capsys, "verify-discrete",
                           "--tree", str(zoo / COIN), "--p", "2",
                           "--ineq", "RIO-STEP")
        assert code == 1
        assert "not a tree inequality" in err

    def test_usage_error_exits_1(self, zoo, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify-discrete", "--p", "2"])   # --tree missing
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_out_files(self, zoo, tmp_path, capsys):
        base = str(tmp_path / "run")
        code, out, _ = run(capsys, "verify-discrete",
                           "--tree", str(zoo / COIN), "--p", "2",
                           "--out", base)
        assert code == 0
        doc = json.loads((tmp_path / "run.json").read_text())
        assert set(doc) == {"manifest", "results"}
        assert doc["manifest"]["command"] == "verify-discrete"
        assert doc["manifest"]["version"]
        assert len(doc["results"]) == len(out.strip().splitlines())
        with open(tmp_path / "run.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["inequality", "p", "n_or_t", "lhs", "rhs",
                           "constant", "ratio", "satisfied",
                           "ci_lhs", "ci_rhs", "seed"]
        assert len(rows) == len(doc["results"]) + 1


class TestVerifyContinuous:
    def test_satisfied_exits_0(self, zoo, capsys):
        code, out, _ = run(capsys, "verify-continuous",
                           "--integrand", str(zoo / "spec_const1.json"),
                           "--p", "4", "--paths", "4096", "--seed", "1",
                           "--ineq", "ZAKAI-MAIN")
        assert code == 0
        assert "satisfied" in out

    def test_equality_case_is_inconclusive(self, zoo, capsys):
        argv = ["verify-continuous",
                "--integrand", str(zoo / "spec_const1.json"),
                "--p", "2", "--paths", "2048", "--seed", "1",
                "--ineq", "ZAKAI-MAIN"]
        code, out, _ = run(capsys, *argv)
        assert code == 2
        assert "inconclusive" in out
        code2, _, _ = run(capsys, *(argv + ["--allow-inconclusive"]))
        assert code2 == 0

    def test_out_csv_has_seed_column(self, zoo, tmp_path, capsys):
        base = str(tmp_path / "mc")
        code, _, _ = run(capsys, "verify-continuous",
                         "--integrand", str(zoo / "spec_lin.json"),
                         "--p", "4", "--paths", "2048", "--seed", "9",
                         "--ineq", "C-BURK-1", "--out", base)
        assert code == 0
        with open(tmp_path / "mc.csv", newline="") as fh:
            row = list(csv.DictReader(fh))[0]
        assert row["seed"] == "9"
        assert row["inequality"] == "C-BURK-1"
        assert float(row["ci_lhs"]) > 0


class TestSharpness:
    def test_grid_search(self, zoo, tmp_path, capsys):
        base = str(tmp_path / "sh")
        code, out, _ = run(capsys, "sharpness",
                           "--config", str(zoo / "search_rio_grid.json"),
                           "--out", base)
        assert code == 0
        assert "best_ratio=" in out
        doc = json.loads((tmp_path / "sh.json").read_text())
        assert doc["results"]["best_ratio"] >= 2.999
        assert doc["results"]["bound"] == 3.0
        assert not doc["results"]["exceeded"]

    def test_random_tree_search(self, zoo, capsys):
        code, out, _ = run(capsys, "sharpness",
                           "--config", str(zoo / "search_tree_random.json"))
        assert code == 0
        assert "best_params=" in out


class TestSweepAndTables:
    def test_random_trees(self, capsys):
        code, out, _ = run(capsys, "random-trees", "--count", "10",
                           "--max-depth", "3", "--seed", "4", "--p", "2", "4")
        assert code == 0
        assert "0 violations" in out

    def test_compare_constants(self, capsys):
        code, out, _ = run(capsys, "compare-constants", "--p", "2", "4")
        assert code == 0
        lines = out.strip().splitlines()
        assert "improved=False" in lines[0]   # p=2: constants coincide
        assert "improved=True" in lines[1]

    def test_gaussian_moment(self, capsys):
        code, out, _ = run(capsys, "gaussian-moment", "--p", "4")
        assert code == 0
        assert out.strip().endswith("= 3")


class TestReproducibility:
    def test_rerun_is_byte_identical_apart_from_duration(self, zoo, tmp_path,
                                                         capsys):
        outputs = []
        for tag in ("a", "b"):
            base = str(tmp_path / tag)
            code, _, _ = run(capsys, "verify-continuous",
                             "--integrand", str(zoo / "spec_mixed2d.json"),
                             "--p", "3", "--paths", "3000", "--seed", "17",
                             "--out", base)
            assert code == 0
            doc = json.loads((tmp_path / f"{tag}.json").read_text())
            outputs.append((json.dumps(doc["results"], sort_keys=True),
                            (tmp_path / f"{tag}.csv").read_bytes()))
        assert outputs[0] == outputs[1]

    def test_search_rerun_identical(self, zoo, tmp_path, capsys):
        docs = []
        for tag in ("x", "y"):
            base = str(tmp_path / tag)
            run(capsys, "sharpness",
                "--config", str(zoo / "search_tree_random.json"),
                "--out", base)
            doc = json.loads((tmp_path / f"{tag}.json").read_text())
            docs.append(json.dumps(doc["results"], sort_keys=True))
        assert docs[0] == docs[1]


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "martcheck.cli",
                           "gaussian-moment", "--p", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "1" in proc.stdout

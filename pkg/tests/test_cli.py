import csv
import json
import subprocess
import sys

import pytest

from mfnipr import instance as instance_io
from mfnipr.cli import COLUMNS, ResultRow, format_number, main, parse_budgets
from mfnipr.network import ValidationError

from instances import tiny_instance


@pytest.fixture
def tiny_file(tmp_path):
    path = tmp_path / "tiny.json"
    instance_io.save(tiny_instance(1), path)
    return path


class TestParsing:
    def test_default_grid(self):
        assert parse_budgets("50:140:10") == [50.0 + 10 * i for i in range(10)]

    def test_list_and_empty(self):
        assert parse_budgets("1, 2.5") == [1.0, 2.5]
        assert parse_budgets("") == []

    @pytest.mark.parametrize("bad", ["1:2", "a:b:c", "1:5:0", "x,y"])
    def test_bad(self, bad):
        with pytest.raises(ValidationError, match="--budgets"):
            parse_budgets(bad)

    def test_format_number(self):
        assert format_number(1 / 3) == "0.333333333"
        assert format_number(float("inf")) == "inf"

    def test_row_ordering_and_na(self):
        row = ResultRow("d", "base", "partial", 1.0, 2.0, 3.0, 2.5, 2.5, 1, 1, None, "Optimal")
        assert row.ordered() and row.restructure_gain == 1.0
        assert row.cells()[COLUMNS.index("wall_seconds")] == "NA"


class TestCommands:
    def test_generate(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert main(["generate", "--seed", "2", "--users", "20", "--out", str(out)]) == 0
        assert instance_io.load(out).meta["seed"] == 2
        assert "restructurable arcs" in capsys.readouterr().out

    def test_solve_zero_budget(self, tiny_file, tmp_path, capsys):
        out = tmp_path / "res.json"
        assert main(["solve", "--instance", str(tiny_file), "--budget", "0",
                     "--out", str(out)]) == 0
        rec = json.loads(out.read_text())
        assert rec["status"] == "Optimal" and rec["lower"] == pytest.approx(rec["upper"])
        assert capsys.readouterr().out.startswith("Optimal")

    def test_experiment_empty_budgets(self, tiny_file, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["experiment", "--instance", str(tiny_file), "--budgets", "",
                     "--out", str(out)]) == 0
        assert out.read_text() == ",".join(COLUMNS) + "\n"

    def test_experiment_rows_compare_and_figures(self, tiny_file, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["experiment", "--instance", str(tiny_file), "--budgets", "1,3",
                     "--modes", "partial,baseline", "--no-timing", "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert [(r["budget"], r["mode"]) for r in rows] == [
            ("1", "partial"), ("1", "baseline"), ("3", "partial"), ("3", "baseline")]
        assert all(r["wall_seconds"] == "NA" for r in rows)
        compare = list(csv.DictReader((tmp_path / "sweep_compare.csv").open()))
        assert len(compare) == 2 and all(float(r["objective_difference"]) <= 1e-4 for r in compare)
        assert (tmp_path / "sweep_tiny_partial.png").stat().st_size > 0
        first = out.read_bytes()
        main(["experiment", "--instance", str(tiny_file), "--budgets", "1,3",
              "--modes", "partial,baseline", "--no-timing", "--no-figures", "--out", str(out)])
        assert out.read_bytes() == first

    def test_verify(self, tiny_file, tmp_path, capsys):
        plan = tmp_path / "plan.json"
        users = tiny_instance(1).network.users()
        plan.write_text(json.dumps({"interdicted": users[:1]}))
        assert main(["verify", "--instance", str(tiny_file), "--plan", str(plan)]) == 0
        out = capsys.readouterr().out
        assert "min-cut arcs" in out and "certificate:" in out


class TestExitCodes:
    def test_validation_error(self, tiny_file, tmp_path, capsys):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"nodes": []}))
        assert main(["verify", "--instance", str(tiny_file), "--plan", str(plan)]) == 1
        assert "'interdicted'" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["solve", "--instance", str(tmp_path / "none.json"), "--budget", "1"]) == 2

    def test_bad_mode_list(self, tiny_file, tmp_path):
        assert main(["experiment", "--instance", str(tiny_file), "--modes", "fast",
                     "--out", str(tmp_path / "x.csv")]) == 1

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "mfnipr", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "experiment" in proc.stdout

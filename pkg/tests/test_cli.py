"""Tests for the command-line interface: exit codes, CSV outputs, config files."""

import shutil
import subprocess
import sys

import pytest

from mixrec.cli import main


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


class TestSelftest:
    def test_passes_with_one_line_per_check(self, capsys):
        assert main(["selftest"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[-1] == "selftest passed"
        ok = [ln for ln in lines[:-1] if ln.startswith("ok ")]
        assert len(ok) == 8
        assert len(lines) == 9

    def test_fault_injection_fails(self, monkeypatch, capsys):
        monkeypatch.setenv("MIXREC_SELFTEST_FAULT", "refinement")
        assert main(["selftest"]) == 1
        out = capsys.readouterr().out
        assert "FAIL refinement identity" in out
        assert "selftest passed" not in out


class TestPlan:
    def test_csv_shape_and_determinism(self, tmp_path, capsys):
        args = ["plan", "--d", "2", "--alpha", "2,2", "--r", "3"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        header, rows = read_rows(a)
        assert header == ["x1", "x2"]
        assert len(rows) == 441
        for row in rows:
            assert all(0.0 <= float(v) <= 1.0 for v in row)
        assert a.read_bytes() == b.read_bytes()
        assert "n=441" in capsys.readouterr().out

    def test_missing_required_option_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["plan"])
        assert err.value.code == 2
        assert "missing required option: d" in capsys.readouterr().err

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["bogus"])
        assert err.value.code == 2


class TestRecover:
    def test_csv_row(self, tmp_path):
        out = tmp_path / "rec.csv"
        rc = main(
            ["recover", "--d", "2", "--alpha", "2,2", "--r", "2",
             "--function", "prod_sin", "--out", str(out)]
        )
        assert rc == 0
        header, rows = read_rows(out)
        assert header == ["r", "n", "error", "stderr", "quad_mode", "seed"]
        assert len(rows) == 1
        r, n, error, stderr, mode, seed = rows[0]
        assert (int(r), mode, int(seed)) == (2, "panels", 0)
        assert int(n) > 0
        assert float(error) > 0.0
        assert float(stderr) == 0.0

    def test_polynomial_recovered_exactly(self, tmp_path):
        out = tmp_path / "rec.csv"
        rc = main(
            ["recover", "--d", "2", "--alpha", "2,2", "--r", "2",
             "--function", "poly:2,2", "--out", str(out)]
        )
        assert rc == 0
        _, rows = read_rows(out)
        assert float(rows[0][2]) < 1e-8

    def test_montecarlo_quad_flag(self, tmp_path):
        out = tmp_path / "rec.csv"
        rc = main(
            ["recover", "--d", "2", "--alpha", "2,2", "--r", "2",
             "--quad", "montecarlo", "--N", "20000", "--seed", "1",
             "--out", str(out)]
        )
        assert rc == 0
        _, rows = read_rows(out)
        assert rows[0][4] == "montecarlo"
        assert float(rows[0][3]) > 0.0
        assert int(rows[0][5]) == 1

    def test_unknown_function_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            main(
                ["recover", "--d", "2", "--alpha", "2,2",
                 "--function", "nope", "--out", str(tmp_path / "x.csv")]
            )
        assert err.value.code == 2
        assert "unknown registry function" in capsys.readouterr().err


class TestSweep:
    def test_rows_and_thread_invariance(self, tmp_path):
        args = ["sweep", "--d", "2", "--alpha", "2,2", "--rmin", "1",
                "--rmax", "3", "--function", "prod_sin"]
        one = tmp_path / "one.csv"
        two = tmp_path / "two.csv"
        assert main(args + ["--threads", "1", "--out", str(one)]) == 0
        assert main(args + ["--threads", "2", "--out", str(two)]) == 0
        header, rows = read_rows(one)
        assert header == ["r", "n", "error", "stderr", "quad_mode", "seed"]
        assert [int(row[0]) for row in rows] == [1, 2, 3]
        errs = [float(row[2]) for row in rows]
        assert errs[2] < errs[0]
        assert one.read_bytes() == two.read_bytes()

    def test_threads_env_var(self, tmp_path, monkeypatch):
        base = ["sweep", "--d", "2", "--alpha", "2,2", "--rmin", "1",
                "--rmax", "2"]
        flag = tmp_path / "flag.csv"
        env = tmp_path / "env.csv"
        assert main(base + ["--threads", "1", "--out", str(flag)]) == 0
        monkeypatch.setenv("MIXREC_THREADS", "2")
        assert main(base + ["--out", str(env)]) == 0
        assert flag.read_bytes() == env.read_bytes()

    def test_rmax_below_rmin_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["sweep", "--d", "2", "--alpha", "2,2",
                  "--rmin", "3", "--rmax", "2"])
        assert err.value.code == 2
        assert "rmax must be at least rmin" in capsys.readouterr().err


class TestConfig:
    def write_config(self, tmp_path, text):
        path = tmp_path / "run.cfg"
        path.write_text(text)
        return str(path)

    def test_keys_drive_plan(self, tmp_path, capsys):
        cfg = self.write_config(
            tmp_path,
            "# recovery setup\nd = 2\nalpha = 2,2\nlambda = 1,0\nm = 3,3\nr = 3\n",
        )
        out = tmp_path / "plan.csv"
        assert main(["plan", "--config", cfg, "--out", str(out)]) == 0
        _, rows = read_rows(out)
        assert len(rows) == 225

    def test_flag_overrides_config(self, tmp_path):
        cfg = self.write_config(
            tmp_path, "d = 2\nalpha = 2,2\nlambda = 1,0\nr = 3\n"
        )
        out = tmp_path / "plan.csv"
        rc = main(["plan", "--config", cfg, "--lambda", "0,0", "--out", str(out)])
        assert rc == 0
        _, rows = read_rows(out)
        assert len(rows) == 441

    def test_malformed_line_exits_2(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, "d = 2\nalpha\n")
        with pytest.raises(SystemExit) as err:
            main(["plan", "--config", cfg])
        assert err.value.code == 2
        assert "malformed config line" in capsys.readouterr().err

    def test_missing_file_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["plan", "--config", str(tmp_path / "absent.cfg")])
        assert err.value.code == 2


class TestAdversarial:
    def test_sweep_rows_and_determinism(self, tmp_path):
        args = ["adversarial", "--d", "2", "--alpha", "2,2", "--rmin", "2",
                "--rmax", "3", "--gauge-n", "500"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        header, rows = read_rows(a)
        assert header == ["r", "n", "empty_cells", "gauge", "lower_bound", "seed"]
        assert len(rows) == 2
        for row in rows:
            # fooling level is derived from the point count, not the plan level
            assert int(row[0]) == (2 * int(row[1]) - 1).bit_length()
            assert float(row[4]) > 0.0
        assert a.read_bytes() == b.read_bytes()

    def test_points_file_input(self, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text("x1,x2\n0.5,0.5\n0.25,0.75\n")
        out = tmp_path / "adv.csv"
        rc = main(
            ["adversarial", "--d", "2", "--alpha", "2,2",
             "--points", str(pts), "--gauge-n", "500", "--out", str(out)]
        )
        assert rc == 0
        _, rows = read_rows(out)
        assert len(rows) == 1
        assert int(rows[0][1]) == 2
        assert int(rows[0][2]) > 0


class TestEntryPoints:
    def test_module_invocation(self, tmp_path):
        out = tmp_path / "plan.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "mixrec.cli", "plan", "--d", "1",
             "--alpha", "2", "--r", "2", "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        header, rows = read_rows(out)
        assert header == ["x1"]
        assert len(rows) > 0

    def test_console_script_exists(self):
        assert shutil.which("mixrec") is not None

import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from fockdecay.cli import main

SMALL = """
capacity = 2
x_min = -10
x_max = 15
n_points = 2501
cap_width = 3
n_particles = 2
t_end = 0.02
sample_every = 4
"""


def write_config(tmp_path, text=SMALL, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


class TestBoundStates:
    def test_outputs(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        code = main(["bound-states", "--config", cfg, "--out-dir", str(out),
                     "--dump-absorber"])
        assert code == 0
        header, rows = read_csv(out / "orbitals.csv")
        assert header == ["x", "re_phi_1", "im_phi_1", "re_phi_2", "im_phi_2"]
        assert len(rows) == 2501
        eh, erows = read_csv(out / "energies.csv")
        assert eh == ["k", "energy"]
        assert float(erows[0][1]) < float(erows[1][1]) < 0
        ah, arows = read_csv(out / "absorber.csv")
        assert ah == ["x", "W"]
        assert os.path.exists(out / "manifest.txt")


class TestEvolve:
    def test_timeseries_and_fcs(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["evolve", "--config", cfg, "--out-dir", str(out)]) == 0
        header, rows = read_csv(out / "timeseries.csv")
        assert header == ["t", "P", "S", "norm_1", "norm_2"]
        assert float(rows[0][0]) == 0.0
        assert float(rows[0][2]) == pytest.approx(1.0, abs=1e-9)
        fh, frows = read_csv(out / "fcs.csv")
        assert fh == ["t", "p_0", "p_1", "p_2"]
        for row in frows[:5]:
            assert sum(float(v) for v in row[1:]) == pytest.approx(1.0, abs=1e-9)

    def test_column_count_constant(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        main(["evolve", "--config", cfg, "--out-dir", str(out)])
        header, rows = read_csv(out / "timeseries.csv")
        assert all(len(r) == len(header) for r in rows)


class TestValidationFailures:
    def test_capacity_exceeded_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL + "n_particles = 9\ncapacity = 8\n")
        code = main(["evolve", "--config", cfg, "--out-dir", str(tmp_path / "x")])
        assert code == 2
        assert "exceeds capacity" in capsys.readouterr().err

    def test_cut_outside_grid_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL + "cut = 40\n")
        code = main(["evolve", "--config", cfg, "--out-dir", str(tmp_path / "x")])
        assert code == 2
        assert "absorber" in capsys.readouterr().err

    def test_missing_config_uses_defaults_for_rates(self, tmp_path):
        # all-defaults C=8 rate table needs no evolution and finishes fast
        out = tmp_path / "rates"
        assert main(["rates", "--out-dir", str(out)]) == 0
        header, rows = read_csv(out / "summary.csv")
        assert header == ["k", "E_k", "S", "T", "tau_k", "gamma_k", "low_confidence"]
        assert len(rows) == 9      # 8 levels + Gamma_total footer
        assert rows[-1][0] == "Gamma_total"
        gamma_total = float(rows[-1][5])
        per_level = sum(float(r[5]) for r in rows[:-1])
        assert gamma_total == pytest.approx(2 * per_level, rel=1e-12)


class TestManifestRoundTrip:
    def test_rerun_is_bit_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        assert main(["evolve", "--config", cfg, "--out-dir", str(out1)]) == 0
        assert main(["evolve", "--config", str(out1 / "manifest.txt"),
                     "--out-dir", str(out2)]) == 0
        for name in ("timeseries.csv", "fcs.csv"):
            a = (out1 / name).read_bytes()
            b = (out2 / name).read_bytes()
            assert a == b


class TestReport:
    def test_renders_figures(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        main(["evolve", "--config", cfg, "--out-dir", str(out)])
        assert main(["report", str(out), "--config", cfg]) == 0
        assert (out / "decay.png").exists()
        assert (out / "fcs.png").exists()
        assert (out / "potential.png").exists()

    def test_plot_flag(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["evolve", "--config", cfg, "--out-dir", str(out), "--plot"]) == 0
        assert (out / "decay.png").exists()


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        proc = subprocess.run(
            [sys.executable, "-m", "fockdecay.cli", "bound-states",
             "--config", cfg, "--out-dir", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "orbitals.csv").exists()

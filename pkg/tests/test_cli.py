import dataclasses
from pathlib import Path

import numpy as np
import pytest

from fisher_stab import cli
from fisher_stab.config import RunConfig, load_config, parse_config
from fisher_stab.exceptions import ConfigError

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("FISHER_STAB_OUT", str(tmp_path))
    return tmp_path


def header(path):
    with open(path) as fh:
        return fh.readline()


def golden(name):
    return (GOLDEN / f"{name}.header").read_text()


# config parsing

def test_parse_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.resolved_gammas() == (15.0, 20.0)


def test_parse_values_and_comments():
    text = "# two-mode example\nalpha = 30\nbeta=0.3  # saturation\ngammas = 15, 20\ngrid_m = 100\n\n"
    cfg = parse_config(text)
    assert cfg.beta == 0.3 and cfg.gammas == (15.0, 20.0) and cfg.grid_m == 100


@pytest.mark.parametrize(
    "text",
    ["colour = red", "alpha 30", "alpha = abc", "alpha = nan", "grid_m = 10.5", "window_a = 0.9\nwindow_b = 0.1"],
)
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("alpha = 30\nt_end = 1\n")
    cfg = load_config(path, ["t_end=0.5", "window_a = 0.2"])
    assert cfg.t_end == 0.5 and cfg.window_a == 0.2
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_u0_file_relative_to_config(tmp_path):
    (tmp_path / "u0.txt").write_text(" ".join(["0"] * 11))
    path = tmp_path / "run.cfg"
    path.write_text("grid_m = 10\nu0 = u0.txt\n")
    spec = load_config(path).u0_spec()
    assert spec.shape == (11,)
    path.write_text("grid_m = 20\nu0 = u0.txt\n")
    with pytest.raises(ConfigError):
        load_config(path).u0_spec()


def test_default_gamma_profile():
    assert parse_config("rho = 20").resolved_gammas() == (25.0, 30.0)
    assert parse_config("rho = 60").resolved_gammas() == (65.0, 70.0, 75.0)


# commands and exit codes

def test_spectrum(out, capsys):
    assert cli.main(["spectrum"]) == 0
    assert header(out / "spectrum.csv") == golden("spectrum")
    rows = np.loadtxt(out / "spectrum.csv", delimiter=",", skiprows=1)
    assert rows.shape == (5, 3)
    assert rows[0, 1] == pytest.approx(-20.1304, abs=1e-4)
    assert "N=2" in capsys.readouterr().out


def test_spectrum_no_unstable_modes(out, caplog):
    assert cli.main(["spectrum", "--set", "alpha=0.5", "--set", "rho=0.1"]) == 0
    assert "no control needed" in caplog.text


def test_gains(out):
    assert cli.main(["gains"]) == 0
    assert header(out / "gains.csv") == golden("gains")
    rows = [line.split(",") for line in (out / "gains.csv").read_text().splitlines()[1:]]
    b1 = {(int(r[1]), int(r[2])): float(r[3]) for r in rows if r[0] == "B1"}
    pi2 = np.pi**2
    assert b1[(1, 1)] == pytest.approx(pi2 / (45 - pi2) ** 2, rel=1e-12)
    assert b1[(1, 2)] == pytest.approx(-2 * pi2 / ((45 - pi2) * (45 - 4 * pi2)), rel=1e-12)
    assert (out / "gains_report.txt").exists()


def test_gains_single_mode(out):
    assert cli.main(["gains", "--set", "rho=1"]) == 0
    names = {line.split(",")[0] for line in (out / "gains.csv").read_text().splitlines()[1:]}
    assert {"B0", "B1", "B", "T", "g"} <= names


def test_exit_2_config(out, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("alpha = 30\nbogus = 1\n")
    assert cli.main(["spectrum", "-c", str(bad)]) == 2
    assert cli.main(["sweep", "--a-min", "0.3", "--a-max", "0.1"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_exit_3_gains(out):
    assert cli.main(["gains", "--set", "gammas=15,15"]) == 3
    assert cli.main(["gains", "--set", "gammas=15"]) == 3


def test_exit_4_simulation(out, tmp_path):
    u0 = tmp_path / "u0.txt"
    values = ["0"] * 201
    values[7] = "nan"
    u0.write_text("\n".join(values))
    assert cli.main(["simulate", "--set", f"u0={u0}"]) == 4


def test_exit_5_verify(out, monkeypatch):
    def sabotage(gains):
        return dataclasses.replace(gains, b=np.eye(gains.n))

    monkeypatch.setattr(cli, "_gains_hook", sabotage)
    assert cli.main(["verify"]) == 5
    lines = (out / "verify.csv").read_text().splitlines()
    lyap = [line for line in lines if line.startswith("lyapunov_certificate")]
    assert lyap and lyap[0].endswith(",0")


def test_verify_passes(out):
    assert cli.main(["verify"]) == 0
    assert header(out / "verify.csv") == golden("verify")
    rows = (out / "verify.csv").read_text().splitlines()[1:]
    assert rows and all(r.endswith(",1") for r in rows)


def test_verify_single_mode(out):
    assert cli.main(["verify", "--set", "rho=1"]) == 0


def test_simulate_outputs(out):
    args = ["simulate", "--set", "t_end=0.05", "--set", "snapshot_every=100"]
    assert cli.main(args) == 0
    assert header(out / "trace.csv") == golden("trace")
    assert header(out / "snapshots.csv") == golden("snapshots")
    data = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1)
    assert data.shape == (501, 5)
    assert set(np.unique(data[:, 4])) <= {0.0, 1.0}


def test_simulate_zero_initial(out):
    assert cli.main(["simulate", "--set", "u0=zero", "--set", "t_end=0.01"]) == 0
    data = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 1:] == 0.0)


def test_simulate_open_loop_grows(out):
    assert cli.main(["simulate", "--open-loop", "--set", "t_end=1"]) == 0
    data = np.loadtxt(out / "trace.csv", delimiter=",", skiprows=1)
    assert data[-1, 1] > data[0, 1]
    assert np.all(data[:, 3] == 0.0)


def test_simulate_deterministic(tmp_path, monkeypatch):
    outputs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        monkeypatch.setenv("FISHER_STAB_OUT", str(d))
        assert cli.main(["simulate", "--set", "t_end=0.05", "--set", "snapshot_every=50"]) == 0
        outputs.append(((d / "trace.csv").read_bytes(), (d / "snapshots.csv").read_bytes()))
    assert outputs[0] == outputs[1]


def test_seventeen_digit_roundtrip(out):
    assert cli.main(["spectrum"]) == 0
    line = (out / "spectrum.csv").read_text().splitlines()[1]
    assert float(line.split(",")[1]) == np.pi**2 - 30


@pytest.mark.filterwarnings("ignore:no stabilized")
def test_sweep_single_point(out, capsys):
    assert cli.main(["sweep", "--a-min", "0.24", "--a-max", "0.24"]) == 0
    assert header(out / "sweep.csv") == golden("sweep")
    row = (out / "sweep.csv").read_text().splitlines()[1].split(",")
    assert float(row[0]) == 0.24 and row[1] == "stabilized"

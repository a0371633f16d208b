"""Command-line front end, driven in-process through ``run`` and once as a subprocess."""

import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.signal import find_peaks

from qsolve.cli import EXIT_IO, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, run
from qsolve.profile import load_potential

from _shared import HO_REFERENCE


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


# --- transmit ---------------------------------------------------------------------------

def test_transmit_writes_csv_and_gnuplot(tmp_path):
    out = tmp_path / "rect.csv"
    args = ["transmit", "--potential", "builtin:rect_double_barrier?barrier_width=6,well_width=6"]
    assert run(args + ["--emin", "0.01", "--emax", "1", "--points", "2000", "--out", str(out)]) == EXIT_OK
    header, data = read_csv(out)
    assert header == ["E", "P_T", "ln_PT", "ln_abs_A1"]
    assert data.shape == (2000, 4)
    script = (tmp_path / "rect.gp").read_text()
    assert '"rect.csv"' in script and "using 1:2" in script and "using 1:4" in script
    # sharp resonances: every P_T peak sits on the grid cell of an ln|A_1| dip
    peaks = find_peaks(data[:, 2], prominence=2)[0]
    dips = find_peaks(-data[:, 3], prominence=2)[0]
    assert len(peaks) == len(dips) == 2
    assert np.all(np.abs(peaks - dips) <= 1)


def test_transmit_zero_potential_is_all_ones(tmp_path):
    src = write_json(tmp_path / "zero.json", {"expr": "0*x", "support": [-1, 1]})
    out = tmp_path / "zero.csv"
    assert run(["transmit", "--potential", src, "--emin", "0.1", "--emax", "3", "--points", "50", "--out", str(out)]) == 0
    _, data = read_csv(out)
    np.testing.assert_array_equal(data[:, 1], 1.0)


def test_transmit_engines_agree(tmp_path):
    base = ["transmit", "--potential", "builtin:gaussian_double_barrier", "--segments", "200"]
    base += ["--emin", "0.05", "--emax", "2", "--points", "300"]
    assert run(base + ["--out", str(tmp_path / "r.csv")]) == 0
    assert run(base + ["--engine", "tm", "--out", str(tmp_path / "t.csv")]) == 0
    _, r = read_csv(tmp_path / "r.csv")
    _, t = read_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(r[:, 0], t[:, 0])
    np.testing.assert_allclose(r[:, 1], t[:, 1], rtol=1e-9, atol=0)
    np.testing.assert_allclose(r[:, 3], t[:, 3], rtol=0, atol=1e-7)


def test_transmit_is_byte_deterministic(tmp_path, monkeypatch):
    args = ["transmit", "--potential", "builtin:harmonic_model", "--points", "700"]
    for threads in ("1", "4"):
        (tmp_path / threads).mkdir()
        monkeypatch.setenv("QSOLVE_THREADS", threads)
        assert run(args + ["--out", str(tmp_path / threads / "s.csv")]) == 0
    for name in ("s.csv", "s.gp"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "4" / name).read_bytes()


def test_transmit_to_stdout(capsys):
    assert run(["transmit", "--potential", "builtin:rect_double_barrier", "--points", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "E,P_T,ln_PT,ln_abs_A1" and len(lines) == 4


# --- eigen ------------------------------------------------------------------------------

def test_eigen_harmonic_defaults(tmp_path, capsys):
    out = tmp_path / "ho.json"
    assert run(["eigen", "--potential", "builtin:harmonic_model", "--out", str(out)]) == 0
    states = json.loads(out.read_text())
    assert len(states) == 8
    np.testing.assert_allclose([s["eigenvalue"] for s in states], HO_REFERENCE, atol=1e-2)
    assert [s["node_count"] for s in states] == list(range(8))
    table = capsys.readouterr().out.splitlines()
    assert table[0].split() == ["n", "eigenvalue", "resonance", "nodes", "part", "side"]
    assert len(table) == 9


def test_eigen_asymmetric_defaults(tmp_path):
    out = tmp_path / "asym.json"
    assert run(["eigen", "--potential", "builtin:asym_double_well_model", "--out", str(out)]) == 0
    states = json.loads(out.read_text())
    assert len(states) == 14
    assert states[0]["resonance_energy"] == pytest.approx(5.601849104, abs=1e-3)
    assert states[0]["eigenvalue"] == states[0]["resonance_energy"] - 65.0


def test_eigen_empty_window(tmp_path):
    out = tmp_path / "none.json"
    args = ["eigen", "--potential", "builtin:harmonic_model", "--segments", "400", "--emin", "16.5", "--emax", "30", "--points", "300"]
    assert run(args + ["--out", str(out)]) == 0
    assert json.loads(out.read_text()) == []


def test_eigen_uplifts_a_bare_well(tmp_path):
    src = write_json(tmp_path / "well.json", {"expr": "-100 + 0*x", "support": [0, 1]})
    out = tmp_path / "well_states.json"
    args = ["eigen", "--potential", src, "--uplift", "100", "--flank", "0.5", "--segments", "10"]
    assert run(args + ["--emin", "1", "--emax", "99", "--points", "2000", "--out", str(out)]) == 0
    states = json.loads(out.read_text())
    assert [s["node_count"] for s in states] == list(range(len(states)))
    assert states[0]["eigenvalue"] == pytest.approx(-100 + 0.69 * np.pi**2, abs=1.0)


# --- wavefunction ------------------------------------------------------------------------

def test_wavefunction_zero_potential_is_plane_wave(tmp_path):
    src = write_json(tmp_path / "zero.json", {"breakpoints": [-1, 1], "values": [0.0]})
    out = tmp_path / "psi.csv"
    args = ["wavefunction", "--potential", src, "--energy", "1", "--xmin", "-5", "--xmax", "5"]
    assert run(args + ["--points", "201", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["x", "re_psi", "im_psi", "abs_psi"]
    np.testing.assert_allclose(data[:, 1], np.cos(data[:, 0]), atol=1e-12)
    np.testing.assert_allclose(data[:, 2], np.sin(data[:, 0]), atol=1e-12)
    np.testing.assert_allclose(data[:, 3], 1.0, atol=1e-12)


def test_wavefunction_check_reports_continuity(tmp_path, capsys):
    out = tmp_path / "ho.csv"
    args = ["wavefunction", "--potential", "builtin:harmonic_model", "--energy", "1.0000013169329"]
    assert run(args + ["--check", "--out", str(out)]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("max_discontinuity")
    values = [float(tok.split("=")[1]) for tok in line.split()[1:]]
    assert max(values) < 1e-8
    _, data = read_csv(out)
    x, a = data[:, 0], data[:, 3]
    # oscillatory core, barrier tails, constant modulus outside
    assert a[np.abs(x) < 1].min() > 100 * a[(x > 6) & (x < 10)].max()
    right = a[x > 10.01]
    np.testing.assert_allclose(right, right[0], rtol=1e-9)


def test_wavefunction_needs_energy(capsys):
    assert run(["wavefunction", "--potential", "builtin:rect_double_barrier"]) == EXIT_USAGE
    assert "--energy" in capsys.readouterr().err


# --- discretize ------------------------------------------------------------------------

def test_discretize_expression(tmp_path):
    src = write_json(tmp_path / "x2.json", {"expr": "x^2", "support": [-4, 4]})
    out = tmp_path / "prof.json"
    assert run(["discretize", "--potential", src, "--segments", "4", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["values"] == [9.0, 1.0, 1.0, 9.0]
    assert data["breakpoints"] == [-4.0, -2.0, 0.0, 2.0, 4.0]


def test_discretized_gaussian_converges(tmp_path):
    sweeps = []
    for n in (1000, 4000):
        prof = tmp_path / f"g{n}.json"
        out = tmp_path / f"g{n}.csv"
        assert run(["discretize", "--potential", "builtin:gaussian_double_barrier", "--segments", str(n), "--out", str(prof)]) == 0
        assert run(["transmit", "--potential", str(prof), "--emin", "0.05", "--emax", "1.5", "--points", "300", "--out", str(out)]) == 0
        sweeps.append(read_csv(out)[1])
    assert np.max(np.abs(sweeps[0][:, 1] - sweeps[1][:, 1])) < 1e-5


def test_discretize_round_trip_is_bit_for_bit(tmp_path):
    prof = tmp_path / "ho.json"
    assert run(["discretize", "--potential", "builtin:harmonic_model", "--segments", "500", "--out", str(prof)]) == 0
    window = ["--emin", "0.5", "--emax", "16", "--points", "400"]
    direct, via = tmp_path / "direct.csv", tmp_path / "via.csv"
    assert run(["transmit", "--potential", "builtin:harmonic_model", "--segments", "500", *window, "--out", str(direct)]) == 0
    assert run(["transmit", "--potential", str(prof), *window, "--out", str(via)]) == 0
    assert direct.read_bytes() == via.read_bytes()
    assert load_potential(prof).n_layers == 500 + 2 * 375


def test_invalid_expression_reports_position(tmp_path, capsys):
    src = write_json(tmp_path / "bad.json", {"expr": "x^2 + * 3", "support": [-1, 1]})
    assert run(["discretize", "--potential", src]) == EXIT_USAGE
    assert "position 6" in capsys.readouterr().err


# --- exit codes ------------------------------------------------------------------------

@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["integrate", "--potential", "builtin:harmonic_model"],
        ["transmit"],
        ["transmit", "--potential", "builtin:nope"],
        ["transmit", "--potential", "builtin:harmonic_model?flank_width"],
        ["transmit", "--potential", "builtin:harmonic_model", "--points", "1"],
        ["transmit", "--potential", "builtin:harmonic_model", "--emin", "2", "--emax", "1"],
        ["eigen", "--potential", "builtin:harmonic_model", "--tol-e", "0"],
        ["eigen", "--potential", "builtin:harmonic_model", "--engine", "tm"],
        ["eigen", "--potential", "builtin:double_well", "--uplift", "64"],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("qsolve: ")


def test_io_errors(tmp_path, capsys):
    assert run(["transmit", "--potential", str(tmp_path / "missing.json")]) == EXIT_IO
    (tmp_path / "broken.json").write_text("{not json")
    assert run(["transmit", "--potential", str(tmp_path / "broken.json")]) == EXIT_IO
    out = tmp_path / "no_such_dir" / "x.csv"
    assert run(["transmit", "--potential", "builtin:rect_double_barrier", "--points", "3", "--out", str(out)]) == EXIT_IO


def test_solver_errors_exit_two(monkeypatch, capsys):
    import qsolve.cli as cli
    from qsolve.recursion import RecursionPoleError

    def fail(*args, **kwargs):
        raise RecursionPoleError(3, 0.5)

    monkeypatch.setattr(cli, "compute_coefficients", fail)
    args = ["wavefunction", "--potential", "builtin:rect_double_barrier", "--energy", "0.5"]
    assert run(args) == EXIT_SOLVER
    assert "solver failed" in capsys.readouterr().err


def test_module_entry_point_smoke(tmp_path):
    out = tmp_path / "s.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "qsolve", "transmit", "--potential", "builtin:rect_double_barrier",
         "--points", "10", "--out", str(out)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("E,P_T,ln_PT,ln_abs_A1\n")
    proc = subprocess.run([sys.executable, "-m", "qsolve", "eigen"], capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_USAGE and "--potential" in proc.stderr

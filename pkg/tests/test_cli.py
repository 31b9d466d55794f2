import cmath
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from quadprop import classical as C
from quadprop import cli
from quadprop import kernel as K
from quadprop import scenario as S
from quadprop import states as St
from quadprop.grid import ComplexGridFunction

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _run(command, config, out, *extra):
    return cli.main([command, "--config", str(config), "--out", str(out), *extra])


def test_solve_sho_drift(tmp_path):
    assert _run("solve", CONFIGS / "sho.toml", tmp_path) == 0
    header, data = cli.read_csv(tmp_path / "solve.csv")
    assert header == list(cli.SOLVE_HEADER)
    assert np.max(np.abs(data[:, 8])) <= 1e-10
    assert np.max(np.abs(data[:, 1] - np.cos(data[:, 0]))) <= 1e-9


@pytest.mark.parametrize("text", [
    "preset = 3\n",
    "preset = \"sho\"\n[solve]\nbogus = 1\n",
    "preset = \"sho\"\ninterval = [0.0]\n",
    "preset = \"nope\"\n",
    "preset = \"sho\"\nw0 = \"fast\"\n",
    "preset = \"sho\n",
    "preset = \"sho\"\n[basis]\nt_a = 50.0\n",
])
def test_malformed_config(tmp_path, capsys, text):
    assert _run("solve", _write(tmp_path, text), tmp_path) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert _run("solve", tmp_path / "absent.toml", tmp_path) == 2


def test_tabulated_echoes_grid(tmp_path):
    assert _run("solve", CONFIGS / "tabulated.toml", tmp_path) == 0
    t_table, _ = S.read_table(CONFIGS / "full_quadratic_table.csv")
    _, data = cli.read_csv(tmp_path / "solve.csv")
    assert np.array_equal(data[:, 0], t_table)


def test_kernel_caustic(tmp_path, capsys):
    assert _run("kernel", CONFIGS / "sho_caustic.toml", tmp_path) == 3
    err = capsys.readouterr().err
    assert "caustic at t=3.14159265" in err


def test_kernel_free_closed_form(tmp_path):
    assert _run("kernel", CONFIGS / "free.toml", tmp_path) == 0
    _, d = cli.read_csv(tmp_path / "kernel.csv")
    T = 0.5
    ref = cmath.sqrt(1 / (2j * math.pi * T)) * np.exp(1j * (d[:, 1] - d[:, 0]) ** 2 / (2 * T))
    assert np.max(np.abs(d[:, 2] + 1j * d[:, 3] - ref)) <= 1e-12


def test_kernel_roundtrip_bit_exact(tmp_path):
    assert _run("kernel", CONFIGS / "full_quadratic.toml", tmp_path) == 0
    _, d = cli.read_csv(tmp_path / "kernel.csv")
    sc = S.full_quadratic()
    p = K.Propagator("G", C.standard_basis(sc, 0.5), C.solve_particular(sc, 0.5, slope=0.3))
    xa = np.linspace(-3, 3, 31)
    k = np.asarray(p(xa[:, None], xa[None, :], 1.7)).ravel()
    assert np.array_equal(d[:, 0], np.repeat(xa, 31))
    assert np.array_equal(d[:, 2], k.real)
    assert np.array_equal(d[:, 3], k.imag)


def test_state_ground_is_static(tmp_path):
    cfg = _write(tmp_path, 'preset = "sho"\n[state]\nn = 0\ntimes = [0.0, 1.0, 2.5]\ngrid = [-5.0, 5.0, 101]\n')
    assert _run("state", cfg, tmp_path) == 0
    _, d = cli.read_csv(tmp_path / "state.csv")
    dens = d[:, 4].reshape(3, 101)
    x = d[:101, 1]
    assert np.max(np.abs(dens - np.exp(-x * x) / math.sqrt(math.pi))) <= 1e-9


def test_state_node_count(tmp_path):
    assert _run("state", CONFIGS / "sho.toml", tmp_path) == 0
    _, d = cli.read_csv(tmp_path / "state.csv")
    re = d[d[:, 0] == 0.0, 2]
    assert np.count_nonzero(np.diff(np.sign(re[np.abs(re) > 1e-12])) != 0) == 3


def test_state_G_is_U_F(tmp_path):
    base = 'preset = "full-quadratic"\n[state]\nn = 2\nvariant = "{}"\ntimes = [0.0, 1.5]\ngrid = [-6.0, 6.0, 121]\n'
    for v in ("F", "G"):
        (tmp_path / v).mkdir()
        assert _run("state", _write(tmp_path, base.format(v), f"{v}.toml"), tmp_path / v) == 0
    _, f = cli.read_csv(tmp_path / "F" / "state.csv")
    _, g = cli.read_csv(tmp_path / "G" / "state.csv")
    sc = S.full_quadratic()
    for t in (0.0, 1.5):
        rows = f[:, 0] == t
        psi_f = ComplexGridFunction(-6, 6, f[rows, 2] + 1j * f[rows, 3], t)
        u = St.apply_unitary_U(sc, psi_f, t, 0.0).values
        assert np.max(np.abs(u - (g[rows, 2] + 1j * g[rows, 3]))) <= 1e-8


def test_uncertainty_csv(tmp_path):
    assert _run("uncertainty", CONFIGS / "caldirola_kanai.toml", tmp_path) == 0
    header, d = cli.read_csv(tmp_path / "uncertainty.csv")
    assert header == list(cli.UNCERTAINTY_HEADER)
    assert d.shape == (2 * 3 * 2, 8)
    assert np.max(d[:, 7]) <= 1e-5


def test_verify_pass_and_corrupt(tmp_path):
    cfg = _write(tmp_path, "[verify]\nsuites = [\"unitary\"]\n")
    assert _run("verify", cfg, tmp_path / "ok") == 0
    assert _run("verify", cfg, tmp_path / "bad", "--corrupt") == 4
    text = (tmp_path / "bad" / "verify.txt").read_text()
    assert "FAIL" in text
    lines = (tmp_path / "ok" / "verify.csv").read_text().splitlines()
    assert lines[0] == ",".join(cli.VERIFY_HEADER)
    assert not any("runtime" in ln for ln in lines)  # wall-clock values stay out of data files


def test_verify_suite_flag(tmp_path, capsys):
    cfg = _write(tmp_path, 'preset = "sho"\n')
    assert _run("verify", cfg, tmp_path, "--suite", "unitary,orthonormality") == 0
    out = capsys.readouterr().out
    assert "criterion 7" in out and "criterion 10" in out
    assert _run("verify", cfg, tmp_path, "--suite", ",") == 2
    assert _run("verify", cfg, tmp_path, "--suite", "bogus") == 2
    assert _run("solve", cfg, tmp_path, "--suite", "unitary") == 2


def test_usage_errors(tmp_path):
    assert cli.main(["frobnicate", "--config", "x"]) == 2
    assert cli.main(["solve"]) == 2


def _digest(out):
    return {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}


@pytest.mark.parametrize("command,config", [("kernel", "full_quadratic.toml"), ("state", "caldirola_kanai.toml"),
                                            ("solve", "sho.toml"), ("uncertainty", "sho.toml")])
def test_deterministic_output(tmp_path, monkeypatch, command, config):
    outs = []
    for i, threads in enumerate(("1", "3")):
        monkeypatch.setenv("QUADPROP_THREADS", threads)
        out = tmp_path / str(i)
        assert _run(command, CONFIGS / config, out) == 0
        outs.append(_digest(out))
    assert outs[0] == outs[1]


def test_console_script(tmp_path):
    env = dict(os.environ, QUADPROP_THREADS="2")
    r = subprocess.run([sys.executable, "-m", "quadprop.cli", "kernel", "--config", str(CONFIGS / "sho_caustic.toml"),
                        "--out", str(tmp_path)], capture_output=True, text=True, env=env)
    assert r.returncode == 3


def test_fmt_shortest_roundtrip():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17, 0.0):
        s = cli.fmt(v)
        assert float(s) == v and s == repr(v)
    assert cli.fmt(np.int64(7)) == "7"

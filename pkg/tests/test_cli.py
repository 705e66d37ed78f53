import json
import math

import numpy as np
import pytest

from spinbath import closed_form as cf
from spinbath.cli import closed_form_evaluator, main, parse_config, read_curve_csv, run_verify
from spinbath.config import ConfigError, build_run_config, parse_config_bytes


def run(*argv):
    return main([str(a) for a in argv])


def parse(*argv):
    return parse_config([str(a) for a in argv])


# --- config -------------------------------------------------------------------------

def test_minimal_flags_fill_defaults(tmp_path):
    _, rc = parse("simulate", "--case", "1", "--n", "200", "--seed", "42")
    assert (rc.case, rc.n, rc.seed) == ("case1", 200, 42)
    assert rc.steps == 2000 and rc.g_max == 1.0 and rc.phase_mode == "real_amplitudes"
    assert rc.threshold is None and not rc.single_branch


def test_p_exceeds_n():
    with pytest.raises(ConfigError, match="p exceeds N"):
        parse("simulate", "--case", "3", "--n", "4", "--p", "10")
    assert run("simulate", "--case", "3", "--n", "4", "--p", "10") == 1


def test_j_exceeds_n():
    with pytest.raises(ConfigError) as exc:
        parse("simulate", "--case", "2", "--n", "2", "--j", "3")
    assert exc.value.field == "j"


def general_file(tmp_path, n=2, **extra):
    data = {
        "schema_version": 1,
        "case": "general",
        "n": n,
        "seed": 7,
        "observable": {
            "system": {"s_uu": 1.0, "s_dd": -1.0, "s_ud": [0.2, 0.1]},
            "particles": [{"e_uu": 0.5, "e_dd": -0.5, "e_ud": [0.3, -0.4]}] * n,
        },
    }
    data.update(extra)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return path


def test_general_config_file(tmp_path):
    _, rc = parse("simulate", "--config", general_file(tmp_path))
    assert rc.case == "general" and len(rc.particle_blocks) == 2
    assert rc.system_block.s_ud == 0.2 + 0.1j


def test_flags_override_file(tmp_path):
    _, rc = parse("simulate", "--config", general_file(tmp_path), "--seed", "9")
    assert rc.seed == 9


def test_general_length_mismatch(tmp_path):
    path = general_file(tmp_path)
    with pytest.raises(ConfigError, match="observable.particles"):
        parse("simulate", "--config", path, "--n", "3")


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config_bytes(b'{"case": "general"}')
    with pytest.raises(ConfigError, match="JSON"):
        parse_config_bytes(b"{nope")
    with pytest.raises(ConfigError, match="bogus"):
        build_run_config({"bogus": 1})
    missing = tmp_path / "missing.json"
    assert run("simulate", "--config", missing) == 1


def test_explicit_env(tmp_path):
    s = 2 ** -0.5
    path = general_file(tmp_path, n=1, env=[{"alpha": s, "beta": [0, s], "g": 0.5}])
    _, rc = parse("verify", "--config", path, "--steps", "16", "--out", tmp_path)
    assert rc.model().env[0].beta == s * 1j
    assert run("verify", "--config", path, "--steps", "16", "--out", tmp_path / "v") == 0


# --- simulate -----------------------------------------------------------------------

def test_simulate_case1(tmp_path):
    assert run("simulate", "--case", "1", "--n", "200", "--seed", "42", "--out", tmp_path) == 0
    rows = read_curve_csv(tmp_path / "curve.csv")
    assert rows.shape == (2000, 4)
    assert abs(rows[0, 3] - 1.0) < 1e-12
    assert np.all(rows[rows[:, 0] > 5.0, 3] < 1e-6)
    summary = (tmp_path / "summary.txt").read_text()
    assert "decoherence_time: 0." in summary
    assert (tmp_path / "curve.csv").read_text().splitlines()[0] == "t,re,im,abs2"


def test_simulate_case2_oscillates(tmp_path):
    assert run("simulate", "--case", "2", "--n", "30", "--j", "4", "--seed", "1", "--t-max", "400",
               "--steps", "8000", "--out", tmp_path) == 0
    rows = read_curve_csv(tmp_path / "curve.csv")
    assert rows[:, 1].max() > 0.1 and rows[:, 1].min() < -0.1
    assert "decoherence_time: none" in (tmp_path / "summary.txt").read_text()


def test_simulate_case3_n_independent(tmp_path):
    for n in (10, 1000):
        assert run("simulate", "--case", "3", "--n", n, "--p", "10", "--seed", "5", "--out", tmp_path / str(n)) == 0
    assert (tmp_path / "10" / "curve.csv").read_bytes() == (tmp_path / "1000" / "curve.csv").read_bytes()


def test_simulate_general(tmp_path):
    assert run("simulate", "--config", general_file(tmp_path), "--out", tmp_path / "g", "--steps", "50") == 0
    assert read_curve_csv(tmp_path / "g" / "curve.csv").shape == (50, 4)


def test_simulate_ensemble(tmp_path):
    assert run("simulate", "--n", "10", "--samples", "50", "--t-max", "1000", "--steps", "200", "--out", tmp_path) == 0
    ens = np.loadtxt(tmp_path / "curve_ensemble.csv", delimiter=",", skiprows=1)
    assert ens.shape == (200, 3) and np.all(ens[:, 2] >= 0)
    assert "ensemble_tail_mean:" in (tmp_path / "summary.txt").read_text()


def test_csv_full_precision(tmp_path):
    run("simulate", "--n", "20", "--steps", "30", "--out", tmp_path)
    rows = read_curve_csv(tmp_path / "curve.csv")
    _, rc = parse("simulate", "--n", "20", "--steps", "30")
    values = cf.r1(rc.model(), rc.grid.times())
    np.testing.assert_array_equal(rows[:, 1], values.real)
    np.testing.assert_array_equal(rows[:, 2], values.imag)


def test_env_var_default_out(tmp_path, monkeypatch):
    monkeypatch.setenv("SPINBATH_OUT", str(tmp_path / "from_env"))
    assert run("simulate", "--n", "5", "--steps", "10") == 0
    assert (tmp_path / "from_env" / "curve.csv").exists()


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("simulate", "--n", "5", "--steps", "10", "--out", blocker / "sub") == 3


def test_usage_error_exit_code():
    assert run("simulate", "--case", "7") == 1
    assert run("frobnicate") == 1


# --- verify -------------------------------------------------------------------------

@pytest.mark.parametrize("case", ["1", "2", "3"])
def test_verify_cases(tmp_path, case):
    assert run("verify", "--case", case, "--n", "8", "--p", "5", "--j", "3", "--seed", "42",
               "--steps", "64", "--phase-mode", "random_phases", "--out", tmp_path) == 0
    assert "passed: true" in (tmp_path / "verify.txt").read_text()


def test_verify_capacity(tmp_path):
    assert run("verify", "--n", "20", "--out", tmp_path) == 1


def test_verify_catches_corruption(tmp_path):
    _, rc = parse("verify", "--case", "1", "--n", "6", "--steps", "32", "--out", str(tmp_path))
    good = closed_form_evaluator(rc)
    assert run_verify(rc) == 0
    assert run_verify(rc, lambda c, t: good(c, t) + 1e-7) == 2
    assert "passed: false" in (tmp_path / "verify.txt").read_text()


def test_verify_single_branch_fails_for_complex_phases(tmp_path):
    assert run("verify", "--case", "3", "--n", "4", "--seed", "3", "--steps", "32",
               "--phase-mode", "random_phases", "--single-branch", "--out", tmp_path) == 2


# --- sweep, envelope, recurrence ----------------------------------------------------------

def test_sweep_p(tmp_path):
    assert run("sweep", "--case", "3", "--n", "10", "--seed", "42", "--param", "p", "--values", "4,8,10",
               "--out", tmp_path) == 0
    table = np.loadtxt(tmp_path / "sweep_p.csv", delimiter=",", skiprows=1)
    assert list(table[:, 0]) == [4, 8, 10]
    assert table[0, 2] > table[1, 2] > table[2, 2]
    for p in (4, 8, 10):
        assert read_curve_csv(tmp_path / f"sweep_p_{p}.csv").shape == (2000, 4)


def test_sweep_n_ensemble(tmp_path):
    assert run("sweep", "--n", "5", "--param", "N", "--values", "5,10", "--samples", "200",
               "--t-max", "1000", "--t-start", "900", "--steps", "100", "--out", tmp_path) == 0
    lines = (tmp_path / "sweep_N.csv").read_text().splitlines()
    assert lines[0] == "value,decoherence_time,fluctuation_rms,ensemble_tail_mean"
    m5, m10 = (float(line.split(",")[-1]) for line in lines[1:])
    assert m5 > m10
    assert abs(m5 - (2 / 3) ** 5) < 0.2 * (2 / 3) ** 5
    assert abs(m10 - (2 / 3) ** 10) < 0.3 * (2 / 3) ** 10


def test_singleton_sweep_matches_simulate(tmp_path):
    common = ["--case", "3", "--n", "12", "--seed", "8", "--steps", "300"]
    assert run("simulate", *common, "--p", "6", "--out", tmp_path / "sim") == 0
    assert run("sweep", *common, "--param", "p", "--values", "6", "--out", tmp_path / "sw") == 0
    assert (tmp_path / "sim" / "curve.csv").read_bytes() == (tmp_path / "sw" / "sweep_p_6.csv").read_bytes()


def test_sweep_bad_param(tmp_path):
    assert run("sweep", "--param", "g", "--values", "1,2", "--out", tmp_path) == 1
    assert run("sweep", "--param", "p", "--values", "x", "--out", tmp_path) == 1


def test_envelope(tmp_path):
    assert run("envelope", "--n", "4", "--seed", "2", "--out", tmp_path) == 0
    text = (tmp_path / "envelope.txt").read_text()
    assert "max_product: 1" in text and "simultaneous: false" in text
    rows = np.loadtxt(tmp_path / "envelope_factors.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 2], (2 * rows[:, 1] - 1) ** 2)


def test_recurrence_equal_couplings(tmp_path):
    g = 0.8
    s = 2 ** -0.5
    env = [{"alpha": math.sqrt(u), "beta": math.sqrt(1 - u), "g": g} for u in (0.2, 0.45, 0.7)]
    path = tmp_path / "eq.json"
    path.write_text(json.dumps({"schema_version": 1, "case": "1", "env": env, "a": s, "b": s}))
    assert run("recurrence", "--config", path, "--t-max", 12, "--steps", 1201, "--out", tmp_path) == 0
    text = (tmp_path / "recurrence.txt").read_text()
    found = float(text.split("recurrence_time: ")[1].split()[0])
    assert abs(found - 2 * math.pi / g) <= 0.01


@pytest.mark.parametrize("command", [
    ["simulate", "--case", "3", "--n", "10", "--steps", "200"],
    ["simulate", "--case", "1", "--n", "20", "--samples", "5", "--steps", "100"],
    ["verify", "--case", "2", "--n", "5", "--steps", "40"],
    ["sweep", "--case", "3", "--n", "10", "--param", "p", "--values", "2,3", "--steps", "100"],
    ["envelope", "--n", "7"],
    ["recurrence", "--n", "3", "--t-max", "50"],
])
def test_byte_identical_reruns(tmp_path, command):
    assert run(*command, "--seed", "13", "--out", tmp_path / "a") == 0
    assert run(*command, "--seed", "13", "--out", tmp_path / "b") == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

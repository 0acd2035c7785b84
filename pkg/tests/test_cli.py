"""CLI round trips: config parsing, file formats, solve output, bench CSV
determinism and exit codes."""
import numpy as np
import pytest

from radarpursuit.cli import (
    BENCH_COLUMNS,
    ConfigError,
    RATIO_COLUMNS,
    _parse_targets,
    main,
    parse_config_text,
    read_bench_csv,
    read_measurement,
    read_scene,
)
from radarpursuit.signal import RadarConfig, Scene, Target, synthesize

SIM_CFG = """\
# frame geometry
f0 = 24e9
B = 200e6
Ts = 5e-6
Ms = 8
Mc = 8
targets = 3.0, -10.0, 1.0, 0.0 ; 5.5, 20.0, 0.0, -1.0
seed = 4
"""

SOLVE_CFG = """\
f0 = 24e9
B = 200e6
Ts = 5e-6
Ms = 8
Mc = 8
Nr = 16
Nv = 16
K = 2
"""


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_config_text(tmp_path):
    p = write(tmp_path / "a.cfg", "a = 1\n# note\n\nb = two # trailing\n")
    assert parse_config_text(p) == {"a": "1", "b": "two"}
    dup = write(tmp_path / "b.cfg", "a = 1\na = 2\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text(dup)
    bad = write(tmp_path / "c.cfg", "a 1\n")
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        parse_config_text(bad)


def test_parse_targets():
    scene = _parse_targets("1.0, 2.0, 3.0, 4.0; 5 6 7 8;")
    assert scene.targets == (Target(1.0, 2.0, 3.0 + 4.0j),
                             Target(5.0, 6.0, 7.0 + 8.0j))
    assert _parse_targets("").num_targets == 0
    with pytest.raises(ConfigError, match="target 0"):
        _parse_targets("1.0, 2.0, 3.0")


def test_simulate_round_trip(tmp_path):
    cfg_path = write(tmp_path / "sim.cfg", SIM_CFG)
    out = str(tmp_path / "meas.txt")
    assert main(["simulate", "--config", cfg_path, "--out", out]) == 0
    cfg, meas = read_measurement(out)
    assert (cfg.Ms, cfg.Mc) == (8, 8)
    assert cfg.Tc == pytest.approx(8 * 5e-6)
    scene = Scene((Target(3.0, -10.0, 1.0), Target(5.5, 20.0, -1.0j)))
    direct = synthesize(cfg, scene, seed=4)
    np.testing.assert_allclose(meas.samples, direct.samples, rtol=1e-15)
    truth = read_scene(out + ".truth")
    assert truth == scene
    # identical invocation writes identical bytes
    out2 = str(tmp_path / "meas2.txt")
    main(["simulate", "--config", cfg_path, "--out", out2])
    with open(out) as f1, open(out2) as f2:
        assert f1.read() == f2.read()


def test_simulate_empty_scene(tmp_path):
    text = SIM_CFG.replace("targets = 3.0, -10.0, 1.0, 0.0 ; "
                           "5.5, 20.0, 0.0, -1.0", "targets =")
    cfg_path = write(tmp_path / "sim.cfg", text)
    out = str(tmp_path / "zeros.txt")
    assert main(["simulate", "--config", cfg_path, "--out", out]) == 0
    _, meas = read_measurement(out)
    assert np.all(meas.samples == 0)
    assert read_scene(out + ".truth").num_targets == 0


def test_simulate_unknown_key(tmp_path, capsys):
    cfg_path = write(tmp_path / "sim.cfg", SIM_CFG + "bandwidth = 1\n")
    out = str(tmp_path / "x.txt")
    assert main(["simulate", "--config", cfg_path, "--out", out]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_solve_with_truth(tmp_path, capsys):
    sim_cfg = write(tmp_path / "sim.cfg", SIM_CFG)
    meas_path = str(tmp_path / "meas.txt")
    main(["simulate", "--config", sim_cfg, "--out", meas_path])
    capsys.readouterr()
    solve_cfg = write(tmp_path / "solve.cfg", SOLVE_CFG)
    rc = main(["solve", "--config", solve_cfg, "--input", meas_path,
               "--truth", meas_path + ".truth", "--algorithm", "comp"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "algorithm = comp" in out
    assert "error" in out
    rows = [l for l in out.splitlines()
            if l.strip() and l.split()[0].isdigit()]
    assert len(rows) == 2
    errors = [float(r.split()[-1]) for r in rows]
    assert all(e < 0.6 for e in errors)  # both targets recovered


def test_solve_without_truth_has_no_error_column(tmp_path, capsys):
    sim_cfg = write(tmp_path / "sim.cfg", SIM_CFG)
    meas_path = str(tmp_path / "meas.txt")
    main(["simulate", "--config", sim_cfg, "--out", meas_path])
    solve_cfg = write(tmp_path / "solve.cfg", SOLVE_CFG)
    capsys.readouterr()
    rc = main(["solve", "--config", solve_cfg, "--input", meas_path,
               "--algorithm", "f_omp"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "error" not in out
    assert "algorithm = f_omp" in out


def test_solve_header_mismatch(tmp_path, capsys):
    sim_cfg = write(tmp_path / "sim.cfg", SIM_CFG)
    meas_path = str(tmp_path / "meas.txt")
    main(["simulate", "--config", sim_cfg, "--out", meas_path])
    wrong = write(tmp_path / "solve.cfg", SOLVE_CFG.replace("Ms = 8",
                                                            "Ms = 16"))
    rc = main(["solve", "--config", wrong, "--input", meas_path,
               "--algorithm", "omp"])
    assert rc == 2
    assert "does not match" in capsys.readouterr().err


def test_solve_missing_input_is_io_error(tmp_path):
    solve_cfg = write(tmp_path / "solve.cfg", SOLVE_CFG)
    rc = main(["solve", "--config", solve_cfg,
               "--input", str(tmp_path / "nope.txt"), "--algorithm", "omp"])
    assert rc == 3


def test_read_measurement_validation(tmp_path):
    trunc = tmp_path / "bad.txt"
    trunc.write_text("# f0 = 1\n# B = 1\n# Ts = 1\n# Tc = 2\n"
                     "# Ms = 2\n# Mc = 2\n0 0\n0 0\n0 0\n")
    with pytest.raises(ConfigError, match="expected 4 samples"):
        read_measurement(str(trunc))
    nohdr = tmp_path / "nohdr.txt"
    nohdr.write_text("0 0\n0 0\n0 0\n0 0\n")
    with pytest.raises(ConfigError, match="missing header"):
        read_measurement(str(nohdr))


def test_bench_custom_deterministic(tmp_path, capsys):
    cfg_path = write(tmp_path / "bench.cfg", """\
f0 = 24e9
B = 200e6
Ts = 5e-6
Ms = 8
Mc = 8
Nr = 8
Nv = 8
K = 2
algorithms = omp, f_comp
""")
    out1 = str(tmp_path / "b1.csv")
    out2 = str(tmp_path / "b2.csv")
    for out in (out1, out2):
        rc = main(["bench", "--preset", "custom", "--config", cfg_path,
                   "--trials", "2", "--seed", "9", "--out", out])
        assert rc == 0
    text = capsys.readouterr().out
    assert "custom: 1 points x 2 algorithms, 2 trials, base seed 9" in text
    h1, rows1 = read_bench_csv(out1)
    h2, rows2 = read_bench_csv(out2)
    assert h1["preset"] == "custom"
    assert h1["trials"] == "2"
    assert len(h1["config_digest"]) == 16
    assert h1["config_digest"] == h2["config_digest"]
    assert len(rows1) == 2  # one point, two algorithms
    assert [r["algorithm"] for r in rows1] == ["omp", "f_comp"]
    for r1, r2 in zip(rows1, rows2):
        for key in BENCH_COLUMNS:
            if key == "mean_time_s":
                continue
            assert r1[key] == r2[key]
        assert set(r1) == set(BENCH_COLUMNS)  # no ratio columns off fig3


def test_bench_fig1_small(tmp_path):
    out = str(tmp_path / "fig1.csv")
    rc = main(["bench", "--preset", "fig1", "--trials", "1", "--seed", "3",
               "--out", out])
    assert rc == 0
    header, rows = read_bench_csv(out)
    assert len(rows) == 12  # 3 grid densities x 4 algorithms
    assert {r["algorithm"] for r in rows} == {"omp", "comp", "f_omp",
                                              "f_comp"}
    assert [r["Nstar"] for r in rows if r["algorithm"] == "omp"] == [
        "16", "32", "64"]
    assert all(r["Ms"] == "16" and r["Mc"] == "16" for r in rows)


def test_bench_fig3_ratio_columns(tmp_path):
    out = str(tmp_path / "fig3.csv")
    rc = main(["bench", "--preset", "fig3", "--trials", "1", "--seed", "3",
               "--out", out])
    assert rc == 0
    header, rows = read_bench_csv(out)
    assert len(rows) == 18  # 3x3 frame shapes x 2 algorithms
    assert set(rows[0]) == set(BENCH_COLUMNS + RATIO_COLUMNS)
    fcomp = [r for r in rows if r["algorithm"] == "f_comp"]
    assert len(fcomp) == 9
    for r in fcomp:
        assert float(r["time_ratio"]) > 0.0
    fomp = [r for r in rows if r["algorithm"] == "f_omp"]
    assert all(r["time_ratio"] == "" for r in fomp)
    shapes = {(r["Ms"], r["Mc"]) for r in rows}
    assert len(shapes) == 9


def test_bench_validation(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["bench", "--preset", "fig1", "--trials", "0",
                 "--out", out]) == 2
    assert main(["bench", "--preset", "fig1", "--seed", "-1",
                 "--out", out]) == 2
    assert main(["bench", "--preset", "custom", "--out", out]) == 2
    cfg_path = write(tmp_path / "c.cfg", "f0 = 1\n")
    assert main(["bench", "--preset", "fig1", "--config", cfg_path,
                 "--out", out]) == 2
    capsys.readouterr()
    with pytest.raises(SystemExit):
        main(["bench", "--preset", "fig9", "--out", out])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip()


def test_solve_rejects_unknown_algorithm(tmp_path, capsys):
    sim_cfg = write(tmp_path / "sim.cfg", SIM_CFG)
    meas_path = str(tmp_path / "meas.txt")
    main(["simulate", "--config", sim_cfg, "--out", meas_path])
    solve_cfg = write(tmp_path / "solve.cfg", SOLVE_CFG)
    rc = main(["solve", "--config", solve_cfg, "--input", meas_path,
               "--algorithm", "bomp"])
    assert rc == 2
    assert "unknown algorithm" in capsys.readouterr().err

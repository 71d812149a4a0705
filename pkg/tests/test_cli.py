import math

import numpy as np
import pytest

from netfilm.cli import main
from netfilm.functionals import DiagnosticsRecord
from netfilm.io import read_diagnostics, write_diagnostics

RUN_CONFIG = """
graph: {{builtin: interval}}
grid: {{cells: 24}}
solver: {{n: 1.0, eps: 1e-6, t_end: 2.0, dt_max: 0.1}}
ic:
  all: {{kind: droplet, center: 0.5, width: 0.3, height: 1.0, base: 0.2}}
output:
  dir: {outdir}
  snapshot_every_steps: 50
"""


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    """One CLI run shared by the output-inspection tests."""
    root = tmp_path_factory.mktemp("cli_run")
    cfg = root / "run.yaml"
    outdir = root / "out"
    cfg.write_text(RUN_CONFIG.format(outdir=outdir))
    code = main(["run", str(cfg), "--dump-operators"])
    assert code == 0
    return cfg, outdir


def test_run_writes_expected_files(finished_run, capsys):
    _, outdir = finished_run
    assert (outdir / "diagnostics.csv").exists()
    assert (outdir / "meta.yaml").exists()
    assert (outdir / "snap_000000.csv").exists()
    assert (outdir / "L.txt").exists()
    assert (outdir / "B0.txt").exists()
    assert not (outdir / "INCOMPLETE").exists()
    snaps = sorted(outdir.glob("snap_*.csv"))
    assert len(snaps) >= 2          # initial + final at least


def test_run_prints_summary(tmp_path, capsys):
    cfg = tmp_path / "r.yaml"
    cfg.write_text(RUN_CONFIG.format(outdir=tmp_path / "o"))
    assert main(["run", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "run finished:" in out
    assert "steady=yes" in out
    drift = float(out.split("mass_drift=")[1].split()[0])
    assert drift <= 1e-10


def test_run_diagnostics_are_readable(finished_run):
    _, outdir = finished_run
    meta, records = read_diagnostics(outdir / "diagnostics.csv")
    assert meta["total_measure"] == pytest.approx(1.0)
    assert meta["n"] == 1.0
    assert len(records) > 10
    assert records[0].t == 0.0
    # energy never increases along the recorded trajectory
    es = [r.energy for r in records]
    assert all(b <= a + 1e-10 * es[0] for a, b in zip(es, es[1:]))


def test_eigen_table(tmp_path, capsys):
    cfg = tmp_path / "e.yaml"
    cfg.write_text(RUN_CONFIG.format(outdir=tmp_path / "o").replace("cells: 24", "cells: 128"))
    assert main(["eigen", str(cfg), "--modes", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "index,computed,analytic,rel_error,label"
    assert len(lines) == 5
    row1 = lines[1].split(",")
    assert abs(float(row1[1])) < 1e-8               # constant mode
    row2 = lines[2].split(",")
    assert float(row2[1]) == pytest.approx(math.pi**2, rel=1e-3)
    assert float(row2[2]) == pytest.approx(math.pi**2, rel=1e-12)
    assert float(row2[3]) < 1e-3
    assert row2[4] == "cos(1 pi s)"


def test_eigen_modes_out_of_range(tmp_path, capsys):
    cfg = tmp_path / "e.yaml"
    cfg.write_text(RUN_CONFIG.format(outdir=tmp_path / "o"))
    assert main(["eigen", str(cfg), "--modes", "0"]) == 2
    assert "config" in capsys.readouterr().err


def fabricate_diagnostics(path, times, energies, mass=9.0):
    recs = [DiagnosticsRecord(t, mass, e, 0.0, 0.0, 1.0, 0.0, 0)
            for t, e in zip(times, energies)]
    write_diagnostics(path, recs, {"config": "x", "total_measure": 3.0,
                                   "n": 1.0, "eps": 0.0, "entropy_base": 1.0})


def test_check_decay_pass_and_fail(tmp_path, capsys):
    good = tmp_path / "good.csv"
    times = np.linspace(0.0, 10.0, 20)
    fabricate_diagnostics(good, times, 1.0 / (1.0 + times))
    assert main(["check-decay", str(good), "--n", "1"]) == 0
    assert "holds" in capsys.readouterr().out

    bad = tmp_path / "bad.csv"
    energies = 1.0 / (1.0 + times)
    energies[10] = 5.0
    fabricate_diagnostics(bad, times, energies)
    assert main(["check-decay", str(bad), "--n", "1"]) == 3
    assert "violated" in capsys.readouterr().out


def test_check_decay_outside_range_is_informational(tmp_path, capsys):
    path = tmp_path / "d.csv"
    times = np.linspace(0.0, 1.0, 5)
    fabricate_diagnostics(path, times, np.exp(-times))
    assert main(["check-decay", str(path), "--n", "3"]) == 0
    assert "not checked" in capsys.readouterr().out


def test_check_decay_real_run(finished_run, capsys):
    _, outdir = finished_run
    assert main(["check-decay", str(outdir / "diagnostics.csv"), "--n", "1"]) == 0
    assert "holds" in capsys.readouterr().out


def test_validate_good_config(tmp_path, capsys):
    cfg = tmp_path / "v.yaml"
    cfg.write_text(RUN_CONFIG.format(outdir=tmp_path / "o"))
    assert main(["validate", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "connected: ok" in out
    assert "config: ok" in out


def test_validate_structural_failure(tmp_path, capsys):
    cfg = tmp_path / "v.yaml"
    cfg.write_text("""
graph:
  vertices: [p, q]
  edges:
    - {tail: p, head: p}
grid: {cells: 8}
ic: {all: {kind: constant, value: 1.0}}
""")
    assert main(["validate", str(cfg)]) == 2
    out = capsys.readouterr().out
    assert "no-self-loops: FAIL" in out


def test_validate_schema_failure_after_graph_ok(tmp_path, capsys):
    cfg = tmp_path / "v.yaml"
    cfg.write_text("graph: {builtin: star3}\ngrid: {cells: 8}\n")  # no ic
    assert main(["validate", str(cfg)]) == 2
    captured = capsys.readouterr()
    assert "connected: ok" in captured.out
    assert "netfilm: error: config:" in captured.err


def test_validate_yaml_garbage(tmp_path, capsys):
    cfg = tmp_path / "v.yaml"
    cfg.write_text("graph: [::\n")
    assert main(["validate", str(cfg)]) == 2
    assert "netfilm: error: config:" in capsys.readouterr().err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "r.yaml"
    cfg.write_text(RUN_CONFIG.format(outdir=tmp_path / "o") + "\nturbo: true\n")
    assert main(["run", str(cfg)]) == 2
    assert "netfilm: error: config:" in capsys.readouterr().err


def test_missing_config_file_exits_4(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 4
    assert "netfilm: error: io:" in capsys.readouterr().err


def test_numerical_failure_leaves_incomplete_marker(tmp_path, capsys):
    cfg = tmp_path / "r.yaml"
    outdir = tmp_path / "o"
    cfg.write_text(f"""
graph: {{builtin: interval}}
grid: {{cells: 24}}
solver: {{n: 1.0, eps: 1e-6, t_end: 1.0, dt_init: 1e-14, dt_min: 1e-14,
          adapt_target: 1e-16}}
ic:
  all: {{kind: droplet, center: 0.5, width: 0.3, height: 1.0, base: 0.2}}
output: {{dir: {outdir}}}
""")
    assert main(["run", str(cfg)]) == 3
    assert (outdir / "INCOMPLETE").exists()
    assert "netfilm: error: numerical:" in capsys.readouterr().err


def test_report_renders_figures(finished_run, capsys):
    _, outdir = finished_run
    assert main(["report", str(outdir)]) == 0
    out = capsys.readouterr().out
    assert (outdir / "profiles.png").exists()
    assert (outdir / "diagnostics.png").exists()
    assert "profiles.png" in out


def test_report_to_separate_directory(finished_run, tmp_path):
    _, outdir = finished_run
    figs = tmp_path / "figs"
    assert main(["report", str(outdir), "--out", str(figs)]) == 0
    assert (figs / "profiles.png").exists()

import subprocess
import sys

import numpy as np
import pytest

from qcorr.bipartite import bell_state, singlet_state
from qcorr.cli import main
from qcorr.qmat import read_qmat, write_qmat


@pytest.fixture
def states(tmp_path):
    write_qmat(tmp_path / "singlet.qmat", singlet_state().matrix, (2, 2))
    write_qmat(tmp_path / "bell.qmat", bell_state().matrix, (2, 2))
    write_qmat(tmp_path / "product.qmat", np.kron(np.diag([0.3, 0.7]), np.diag([0.6, 0.4])), (2, 2))
    write_qmat(tmp_path / "nodims.qmat", bell_state().matrix)
    return tmp_path


def _machine(capsys):
    return capsys.readouterr().out.strip().splitlines()[-1].split(",")


def test_gibbs_writes_state(tmp_path):
    out = tmp_path / "g.qmat"
    assert main(["gibbs", "--sites", "2", "--beta", "0", "--out", str(out)]) == 0
    m, dims = read_qmat(out)
    assert dims == (2, 2)
    assert np.array_equal(m, np.eye(4) / 4)


def test_gibbs_five_sites_round_trip(tmp_path):
    from qcorr.qmat import dumps_qmat

    out = tmp_path / "g5.qmat"
    assert main(["gibbs", "--sites", "5", "--beta", "1", "--delta", "0.5", "--out", str(out)]) == 0
    m, dims = read_qmat(out)
    assert dims == (8, 4)
    assert dumps_qmat(m, dims) == out.read_text()


def test_gibbs_cap_and_io(tmp_path):
    assert main(["gibbs", "--sites", "7", "--out", str(tmp_path / "x.qmat")]) == 2
    assert not (tmp_path / "x.qmat").exists()
    assert main(["gibbs", "--sites", "2", "--out", str(tmp_path / "no" / "x.qmat")]) == 3


def test_measure_ppt_singlet(states, capsys):
    assert main(["measure", str(states / "singlet.qmat"), "--measure", "ppt"]) == 0
    out = capsys.readouterr().out
    assert "-0.5" in out
    assert out.strip().splitlines()[-1].startswith("ppt,false,")


def test_measure_ma_bell(states, capsys):
    assert main(["measure", str(states / "bell.qmat"), "--measure", "ma"]) == 0
    name, value, converged = _machine(capsys)
    assert name == "ma" and float(value) == pytest.approx(0.5) and converged == "true"


def test_measure_eof_product_with_warm_start(states, capsys):
    assert main(["measure", str(states / "product.qmat"), "--measure", "eof", "--seed", "1", "--product-warm-start"]) == 0
    assert float(_machine(capsys)[1]) <= 1e-8


def test_measure_dqc_and_cq(states, capsys):
    assert main(["measure", str(states / "singlet.qmat"), "--measure", "dqc", "--observable", "ZZ", "--seed", "3"]) == 0
    assert float(_machine(capsys)[1]) == pytest.approx(1, abs=1e-9)
    assert main(["measure", str(states / "singlet.qmat"), "--measure", "cq", "--a", "proj:0", "--a2", "proj:0"]) == 0
    assert float(_machine(capsys)[1]) == pytest.approx(-1, abs=1e-10)


def test_measure_errors(states, tmp_path):
    singlet = str(states / "singlet.qmat")
    assert main(["measure", singlet, "--measure", "eof"]) == 2  # seed required
    assert main(["measure", str(states / "nodims.qmat"), "--measure", "eof", "--seed", "1"]) == 4
    assert main(["measure", singlet, "--measure", "dqc", "--observable", "ZZZ", "--seed", "1"]) == 4
    assert main(["measure", singlet, "--measure", "cq", "--a", "proj:5"]) == 4
    assert main(["measure", str(tmp_path / "missing.qmat"), "--measure", "ma"]) == 3
    bad = tmp_path / "bad.qmat"
    bad.write_text("QMAT 1\n2 2\n1 0\n")
    assert main(["measure", str(bad), "--measure", "ma"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["measure", singlet, "--measure", "bogus"])
    assert exc.value.code == 2


def test_evolve_default_run(tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert main(["evolve", "--csv-out", str(out), "--tmax", "0.01", "--steps", "10"]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()]
    assert rows[0] == ["t", "ea", "ma", "trace_drift"]
    assert float(rows[1][1]) == 0.0 and float(rows[2][1]) > 0
    assert "sign(E_a/t) at t=0.001 is +" in capsys.readouterr().out


def test_evolve_errors(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["evolve", "--csv-out", str(out), "--mode", "euler", "--steps", "1", "--tmax", "1"]) == 2
    assert not out.exists()
    assert main(["evolve", "--csv-out", str(out), "--initial", "0101"]) == 4
    assert main(["evolve", "--csv-out", str(out), "--swap", "2", "2"]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[evolve]\nsites = 3\nswap = 0 2\ntmax = 0.02\nsteps = 4\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["evolve", "--config", str(cfg), "--csv-out", str(a)]) == 0
    assert len(a.read_text().splitlines()) == 6
    assert main(["evolve", "--config", str(cfg), "--steps", "2", "--csv-out", str(b)]) == 0
    assert len(b.read_text().splitlines()) == 4
    cfg.write_text("[evolve]\nunknown_key = 1\n")
    assert main(["evolve", "--config", str(cfg), "--csv-out", str(a)]) == 2


def test_sweep_outputs(tmp_path, capsys):
    out = tmp_path / "sw"
    args = ["sweep", "--sites", "3", "--swap", "0", "2", "--betas", "0.1,1", "--deltas", "0.5,1.5",
            "--tmax", "0.01", "--steps", "10", "--out-dir", str(out), "--jobs", "2"]
    assert main(args) == 0
    summary = (out / "sweep_summary.csv").read_text().splitlines()
    assert summary[0] == "beta,delta,first_slope,slope_sign,ea_t_star,max_trace_drift"
    assert len(summary) == 5
    assert len(list(out.glob("series_*.csv"))) == 4


def test_figures_are_written(tmp_path):
    fig = tmp_path / "a.png"
    assert main(["evolve", "--sites", "3", "--swap", "0", "2", "--tmax", "0.01", "--steps", "5",
                 "--csv-out", str(tmp_path / "a.csv"), "--figure", str(fig)]) == 0
    assert fig.read_bytes()[:4] == b"\x89PNG"
    sfig = tmp_path / "s.png"
    assert main(["sweep", "--sites", "3", "--swap", "0", "2", "--betas", "0,1", "--deltas", "0.5",
                 "--tmax", "0.01", "--steps", "2", "--out-dir", str(tmp_path / "sw"), "--figure", str(sfig)]) == 0
    assert sfig.stat().st_size > 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qcorr.cli", "gibbs", "--sites", "8", "--out", str(tmp_path / "x")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "cap" in proc.stderr

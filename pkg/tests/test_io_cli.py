import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qudit_qft import io as qio
from qudit_qft.cli import main
from qudit_qft.grape import ObjectiveSpec, OptimizationRun, PiecewisePulse
from qudit_qft.pareto import FrontPoint, ParetoFront
from qudit_qft.spin import qft_gate

PI = math.pi
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_parse_float():
    assert qio.parse_float("5pi/6") == 5 * PI / 6
    assert qio.parse_float("-pi") == -PI
    assert qio.parse_float("pi/8") == PI / 8
    assert qio.parse_float("0.25") == 0.25
    assert qio.pi_fraction(9 * PI / 8) == "9pi/8"
    assert qio.pi_multiple(3 * PI / 2, 6) == "9pi/6"


@given(st.lists(finite, min_size=1, max_size=40), st.floats(1e-3, 100), st.integers(0, 10**6), st.floats(0, 1))
def test_pulse_file_round_trip_bit_exact(amps, T, seed, err):
    ux = np.array(amps)
    uy = ux[::-1] * 0.3
    run = OptimizationRun(seed, ObjectiveSpec("J1", qft_gate(3), 5 * PI / 6), None, PiecewisePulse(T, ux, uy),
                          err, 7, [err], "rel_tol")
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "pulse.txt"
        qio.write_pulse(path, run, 2)
        text = path.read_text()
        rec = qio.read_pulse(path)
    assert np.array_equal(rec.pulse.ux, ux) and np.array_equal(rec.pulse.uy, uy)
    assert rec.pulse.total_time == T and rec.final_error == err and rec.seed == seed
    assert rec.objective.phase == 5 * PI / 6 and rec.objective.kind == "J1"
    assert qio.pulse_text(rec.as_run(), 2) == text


def test_pulse_file_rejects_bad_length(tmp_path):
    p = tmp_path / "p.txt"
    p.write_text("two_I = 2\nT = 1\nS = 3\nobjective = J1\nux = 1 2\nuy = 1 2\n")
    with pytest.raises(ValueError):
        qio.read_pulse(p)
    p.write_text("two_I = 2\n")
    with pytest.raises(ValueError):
        qio.read_pulse(p)


@given(st.integers(1, 6), st.sampled_from(["J1", "J2"]), st.floats(0, 6.28), st.floats(0.1, 10),
       st.integers(0, 500), st.integers(0, 10**6), st.floats(1e-9, 0.9))
def test_config_round_trip(two_I, kind, phase, T, seeds, base, thr):
    cfg = qio.ExperimentConfig(two_I=two_I, objective=kind, phase=phase, T=T, seeds=seeds, base_seed=base,
                               threshold=thr, T_min=T / 2, T_max=T * 2).validate()
    back = qio.ExperimentConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()


def test_config_validation():
    with pytest.raises(ValueError):
        qio.ExperimentConfig.from_mapping({"nonsense": "1"})
    with pytest.raises(ValueError):
        qio.ExperimentConfig.from_mapping({"S": "499"})
    with pytest.raises(ValueError):
        qio.ExperimentConfig.from_mapping({"threshold": "2"})
    with pytest.raises(ValueError):
        qio.ExperimentConfig.from_mapping({"T_min": "3", "T_max": "2"})
    with pytest.raises(ValueError):
        qio.ExperimentConfig.from_mapping({"gate": "toffoli"})
    a = qio.ExperimentConfig(output="x", workers=4)
    b = qio.ExperimentConfig(output="y", workers=1)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != qio.ExperimentConfig(T=2.5).config_hash()


def test_front_round_trip(tmp_path):
    fr = ParetoFront("fam", PI / 8, [FrontPoint(1.61, 2e-4, 30, "rel_tol"), FrontPoint(1.62, 3e-9, 50, "abs_tol")])
    qio.write_front(tmp_path / "f.csv", fr)
    back = qio.read_front(tmp_path / "f.csv")
    assert back.samples == fr.samples and back.phase == PI / 8 and back.critical_time == 1.62
    assert "# critical_time = 1.6200000000000001" in (tmp_path / "f.csv").read_text()


# ---------------------------------------------------------------- CLI

def test_cli_phases(capsys):
    assert main(["phases", "--n", "3"]) == 0
    out = capsys.readouterr().out
    assert "pi/6" in out and "5pi/6" in out and "9pi/6" in out
    assert main(["phases", "--n", "4"]) == 0
    out = capsys.readouterr().out
    for s in ("pi/8", "5pi/8", "9pi/8", "13pi/8"):
        assert s in out
    assert main(["phases", "--n", "2"]) == 0
    assert main(["phases", "--n", "9"]) == 1
    with pytest.raises(SystemExit) as e:
        main(["phases"])
    assert e.value.code == 1


def test_cli_phases_families(tmp_path):
    out = tmp_path / "fam.jsonl"
    assert main(["phases", "--n", "3", "--families", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 27
    rec = json.loads(lines[0])
    assert len(rec["shifts"]) == 3 and len(rec["h_eff"]) == 3


def test_cli_table1(capsys):
    assert main(["table1"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 10
    assert main(["table1", "--tol", "1e-9"]) == 2
    assert main(["table1", "--r-scan", "1,2,4"]) == 0
    assert "r=4" in capsys.readouterr().out


SMALL = ["--set", "two_I=1", "--set", "S=20", "--set", "knot_stride=5", "--set", "T=1.5", "--set", "objective=J2"]


def test_cli_grape_zero_seeds(tmp_path, capsys):
    assert main(["grape", "--set", "seeds=0", "--out", str(tmp_path / "g")]) == 0
    assert "0 runs" in capsys.readouterr().out
    assert (tmp_path / "g" / "manifest.json").exists()


def test_cli_usage_errors(tmp_path):
    assert main(["grape", "--config", str(tmp_path / "missing.txt")]) == 1
    assert main(["grape", "--set", "S=abc"]) == 1
    assert main(["grape", "--set", "noequals"]) == 1
    assert main(["pft", "--seed-pulse", str(tmp_path / "nope.txt"), "--out", str(tmp_path)]) == 1
    assert main(["classify", str(tmp_path / "nope.txt")]) == 1


def test_cli_grape_deterministic_and_resumable(tmp_path, capsys):
    args = SMALL + ["--set", "seeds=3"]
    assert main(["grape", *args, "--out", str(tmp_path / "a")]) == 0
    assert main(["grape", *args, "--out", str(tmp_path / "b"), "--set", "workers=2"]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    for name in ("batch.csv", "steps.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    # knock out one checkpoint and resume
    (a / "pulses" / "seed_00001.txt").unlink()
    capsys.readouterr()
    assert main(["grape", *args, "--out", str(a)]) == 0
    assert "2 seeds already on disk, 1 to run" in capsys.readouterr().out
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_cli_pft_classify_pairing(tmp_path, capsys):
    assert main(["grape", *SMALL, "--set", "seeds=1", "--out", str(tmp_path / "g")]) == 0
    seed_file = tmp_path / "g" / "pulses" / "seed_00000.txt"
    pft = ["pft", *SMALL, "--set", "T_min=1.45", "--set", "T_max=1.55", "--seed-pulse", str(seed_file)]
    assert main(pft + ["--out", str(tmp_path / "p1"), "--plot", "front.svg"]) == 0
    assert main(pft + ["--out", str(tmp_path / "p2"), "--plot", "front.svg"]) == 0
    f1, f2 = tmp_path / "p1" / "front.csv", tmp_path / "p2" / "front.csv"
    assert f1.read_bytes() == f2.read_bytes()
    assert (tmp_path / "p1" / "front.svg").read_bytes() == (tmp_path / "p2" / "front.svg").read_bytes()
    text = f1.read_text()
    assert "# critical_time" in text and "# threshold" in text
    assert len(qio.read_front(f1).points) == 11
    capsys.readouterr()
    assert main(["classify", str(seed_file)]) == 0
    assert "phase" in capsys.readouterr().out
    assert main(["pairing", str(f1), str(f2), "--n", "3"]) == 1
    # outside the requested range
    assert main(["pft", *SMALL, "--set", "T_min=2", "--set", "T_max=3", "--seed-pulse", str(seed_file),
                 "--out", str(tmp_path / "p3")]) == 1
    assert main(["pft", *SMALL, "--seed-pulse", str(seed_file), "--out", str(tmp_path / "p4")]) == 1

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from frictio import cli
from frictio import io as fio
from frictio.core import ContactState, LoadJump, LoadPath, Segment, Trajectory
from frictio.errors import ConfigError
from frictio.fem import single_triangle_mesh
from frictio.march import paper_jump_scenario


def run(*args) -> int:
    return cli.main([str(a) for a in args])


def write(tmp_path: Path, name: str, obj) -> Path:
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


JUMP_SCENARIO = {"kind": "paper-jump", "K": [2, 1, 2], "f": 2, "R": 1}


# formats -------------------------------------------------------------------------


def test_load_path_round_trip():
    load = LoadPath(
        [Segment(0.0, 0.5, [0, 0], [0.1, 1 / 3]), Segment(0.5, 1.0, [1, 0], [1, 2])],
        [LoadJump(0.5, [0.1, 1 / 3], [1, 0])],
    )
    back = fio.load_path_from_dict(json.loads(json.dumps(fio.load_path_to_dict(load))))
    for s in np.linspace(0, 1, 17):
        np.testing.assert_array_equal(back.value(s), load.value(s))
    assert back.total_variation == load.total_variation


def test_load_path_shorthand_and_errors():
    load = fio.load_path_from_dict({"times": [0, 1, 2], "values": [[0, 0], [1, 0], [1, 1]]})
    assert load.total_variation == 2.0
    with pytest.raises(ConfigError):
        fio.load_path_from_dict({"segments": [{"t0": 0, "t1": 1, "f0": [0, 0]}]})
    with pytest.raises(ConfigError):
        fio.load_path_from_dict({"times": [0, 1], "values": [[0, 0]]})


def test_trajectory_csv_round_trip(K212):
    _, traj = paper_jump_scenario(K212, 1.0, 2.0)
    text = fio.trajectory_csv_text(traj)
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == fio.TRAJECTORY_HEADER
    flags = [(r[0], r[5]) for r in rows[1:]]
    assert flags == [("0", "0"), ("1", "1"), ("1", "0"), ("2", "0")]
    from io import StringIO

    back = fio.read_trajectory_csv(StringIO(text))
    assert back.states == traj.states
    assert back.jumps[0].left == traj.jumps[0].left


def test_csv_17_digits():
    traj = Trajectory([0.0], (ContactState(1 / 3, -2 / 3, 0.1, 1e-300),))
    text = fio.trajectory_csv_text(traj)
    from io import StringIO

    assert fio.read_trajectory_csv(StringIO(text)).states == traj.states


def test_mesh_round_trip():
    mesh = single_triangle_mesh()
    back = fio.mesh_from_dict(json.loads(json.dumps(fio.mesh_to_dict(mesh))))
    np.testing.assert_array_equal(back.nodes, mesh.nodes)
    assert back.gamma_c == mesh.gamma_c
    with pytest.raises(ConfigError):
        fio.mesh_from_dict({"nodes": [[0, 0]]})


# run -----------------------------------------------------------------------------


def test_run_critical(capsys):
    assert run("run", "critical", "--K", "2,1,2") == 0
    assert capsys.readouterr().out.strip() == "f_crit = 2"


def test_run_paper_jump(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert run("run", "paper-jump", "--K", "2,1,2", "--f", "2", "--R", "1", "--m", "2000", "--out", out) == 0
    rows = list(csv.reader(out.read_text().splitlines()))[1:]
    left = [r for r in rows if r[5] == "1"]
    assert len(left) == 1 and abs(float(left[0][0]) - 1.0) <= 1e-12
    i = rows.index(left[0])
    assert rows[i + 1][0] == left[0][0] and rows[i + 1][5] == "0"
    assert "jumps: s=1" in capsys.readouterr().out


def test_run_march_zero_load(tmp_path):
    sc = write(tmp_path, "sc.json", {"kind": "march", "K": [2, 1, 2], "f": 1, "m": 4, "load": {"times": [0, 1], "values": [[0, 0], [0, 0]]}})
    out = tmp_path / "t.csv"
    assert run("run", "--scenario", sc, "--out", out) == 0
    rows = list(csv.reader(out.read_text().splitlines()))[1:]
    assert {tuple(r[1:5]) for r in rows} == {("0", "0", "0", "0")}


def test_run_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    ra, rb = tmp_path / "a.json", tmp_path / "b.json"
    for out, rep in ((a, ra), (b, rb)):
        assert run("run", "paper-jump", "--K", "2,1,2", "--f", "2", "--m", "300", "--seed", "7", "--out", out, "--report", rep) == 0
    assert a.read_bytes() == b.read_bytes()
    assert ra.read_bytes() == rb.read_bytes()
    report = json.loads(ra.read_text())
    assert len(report["jumps"]) == 1 and report["seed"] == 7


def test_run_incremental_and_family(tmp_path, capsys):
    sc = write(tmp_path, "i.json", {"kind": "incremental", "K": [2, 1, 2], "F": [2, 0], "w_t": 0, "f": 1})
    assert run("run", "--scenario", sc) == 0
    assert "regime=stick" in capsys.readouterr().out
    sc = write(tmp_path, "c.json", {"kind": "continuum-family", "K": [2, 1, 2], "f": 2, "F_t": 3, "samples": 101})
    out = tmp_path / "fam.csv"
    assert run("run", "--scenario", sc, "--out", out, "--tol", "1e-10") == 0
    assert len(out.read_text().splitlines()) == 102


def test_run_fem_march(tmp_path):
    sc = {
        "kind": "fem-march",
        "mesh": fio.mesh_to_dict(single_triangle_mesh()),
        "material": {"E": 1.0, "nu": 0.0},
        "f": 1.0,
        "m": 20,
        "load": {"times": [0, 1], "values": [[0, 0], [0.2, -1.0]]},
    }
    out, rep = tmp_path / "n.csv", tmp_path / "r.json"
    assert run("run", "--scenario", write(tmp_path, "f.json", sc), "--out", out, "--report", rep) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == fio.NODAL_HEADER
    assert json.loads(rep.read_text())["mode"] == "virtual-work"


def test_config_errors(tmp_path, capsys):
    assert run("run", "march", "--K", "2,1,2", "--f", "1") == 1  # no load
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "march",\n "K": [2,1,2],,}')
    assert run("run", "--scenario", bad) == 1
    assert "line 2" in capsys.readouterr().err
    assert run("run", "critical", "--K", "1,2,1") == 1  # not positive definite
    assert run("run", "paper-jump", "--K", "2,1,2", "--f", "1") == 1  # subcritical


def test_residual_failure_exit(tmp_path):
    # a tolerance below rounding level cannot be met
    assert run("run", "paper-jump", "--K", "2,1,2", "--f", "2", "--m", "50", "--tol", "1e-17") == 2


def test_nonconvergence_exit(monkeypatch):
    from frictio.errors import NonConvergence

    def boom(*a, **k):
        raise NonConvergence("stalled", 10)

    monkeypatch.setattr(cli, "march", boom)
    assert run("run", "paper-jump", "--K", "2,1,2", "--f", "2") == 3


def test_sweep(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code = run("run", "paper-jump", "--K", "2,1,2", "--sweep", "f=2:3:3", "--m", "1000", "--out", out, "--workers", "2")
    assert code == 0
    files = sorted(p.name for p in tmp_path.glob("t_f=*.csv"))
    assert files == ["t_f=2.5.csv", "t_f=2.csv", "t_f=3.csv"]
    assert capsys.readouterr().out.count("jumps: s=1") == 3


# verify ----------------------------------------------------------------------------


def _closed_form_csv(tmp_path) -> Path:
    out = tmp_path / "exact.csv"
    assert run("run", "paper-jump", "--K", "2,1,2", "--f", "2", "--closed-form", "--out", out) == 0
    return out


def test_verify_round_trip(tmp_path):
    sc = write(tmp_path, "p.json", JUMP_SCENARIO)
    assert run("verify", _closed_form_csv(tmp_path), sc) == 0
    out = tmp_path / "m.csv"
    assert run("run", "--scenario", sc, "--m", "500", "--out", out) == 0
    assert run("verify", out, sc, "--tol", "1e-9") == 0


def test_verify_sign_flip(tmp_path):
    sc = write(tmp_path, "p.json", JUMP_SCENARIO)
    src = _closed_form_csv(tmp_path).read_text().splitlines()
    row = src[1].split(",")
    row[3] = "0.25"  # t_n > 0 on the first row
    src[1] = ",".join(row)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(src) + "\n")
    assert run("verify", bad, sc) == 2


def test_verify_forced_continuation(tmp_path, capsys):
    # the particle held at the origin past s = 1 (no jump): friction cone breaks
    sc = write(tmp_path, "p.json", JUMP_SCENARIO)
    load, _ = paper_jump_scenario(__import__("frictio").StiffnessMatrix2(2, 1, 2), 1.0, 2.0)
    times = [0.0, 0.5, 1.0, 1.5, 2.0]
    states = tuple(ContactState(0.0, 0.0, *(-load.value(s))) for s in times)
    path = tmp_path / "cont.csv"
    fio.write_trajectory_csv(Trajectory(times, states), path)
    assert run("verify", path, sc) == 2
    assert "FAIL(cone)" in capsys.readouterr().out


def test_verify_horizon_mismatch(tmp_path):
    sc = write(tmp_path, "p.json", JUMP_SCENARIO)
    path = tmp_path / "short.csv"
    fio.write_trajectory_csv(Trajectory([0.0, 1.0], (ContactState(0, 0, 0, 0),) * 2), path)
    assert run("verify", path, sc) == 1


def test_console_script_module():
    res = subprocess.run([sys.executable, "-m", "frictio.cli", "run", "critical", "--K", "2,1,2"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "f_crit = 2"

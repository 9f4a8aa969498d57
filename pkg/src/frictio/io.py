"""File formats: load paths and meshes as JSON, trajectories as CSV, reports as JSON."""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import IO, Any

import numpy as np

from .core import PIECEWISE_CONSTANT, ContactState, JumpRecord, LoadJump, LoadPath, Segment, Trajectory
from .errors import ConfigError
from .fem import ContactNode, FemMarchReport, PlaneMesh
from .march import MarchReport

TRAJECTORY_HEADER = ["s", "u_n", "u_t", "t_n", "t_t", "is_jump_left_row"]
NODAL_HEADER = ["s", "node", "u_x", "u_y", "t_n", "t_t", "is_jump_left_row"]


def fmt(x: float) -> str:
    """Shortest text with 17 significant digits (round-trips every double)."""
    return format(float(x), ".17g")


def _vec(x, name: str, dim: int | None = None) -> np.ndarray:
    try:
        v = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a list of numbers, got {x!r}") from exc
    if v.ndim != 1 or (dim is not None and v.size != dim):
        raise ConfigError(f"{name}: expected {dim or 'a'}-component vector, got {x!r}")
    return v


# --------------------------------------------------------------------------
# load paths


def load_path_to_dict(load: LoadPath) -> dict[str, Any]:
    if any(seg.warp is not None for seg in load.segments):
        raise ValueError("reparametrized load paths cannot be serialized")
    return {
        "segments": [
            {"t0": seg.t0, "t1": seg.t1, "f0": seg.f0.tolist(), "f1": seg.f1.tolist()} for seg in load.segments
        ],
        "jumps": [{"t": j.t, "left": j.left.tolist(), "right": j.right.tolist()} for j in load.jumps],
    }


def load_path_from_dict(d: dict[str, Any], where: str = "load") -> LoadPath:
    """Accepts ``{"segments": [...], "jumps": [...]}`` or ``{"times": [...], "values": [...]}``."""
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    try:
        if "times" in d:
            vals = [_vec(v, f"{where}.values[{k}]") for k, v in enumerate(d.get("values", []))]
            return LoadPath.piecewise_affine([float(t) for t in d["times"]], vals)
        if "segments" not in d:
            raise ConfigError(f"{where}: needs 'segments' or 'times'/'values'")
        segs = []
        for k, s in enumerate(d["segments"]):
            try:
                segs.append(Segment(float(s["t0"]), float(s["t1"]), _vec(s["f0"], f"{where}.segments[{k}].f0"), _vec(s["f1"], f"{where}.segments[{k}].f1")))
            except KeyError as exc:
                raise ConfigError(f"{where}.segments[{k}]: missing field {exc}") from exc
        jumps = []
        for k, j in enumerate(d.get("jumps", [])):
            try:
                jumps.append(LoadJump(float(j["t"]), _vec(j["left"], f"{where}.jumps[{k}].left"), _vec(j["right"], f"{where}.jumps[{k}].right")))
            except KeyError as exc:
                raise ConfigError(f"{where}.jumps[{k}]: missing field {exc}") from exc
        return LoadPath(segs, jumps)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def dump_load_path(load: LoadPath, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps(load_path_to_dict(load), indent=1) + "\n")


def read_load_path(path: str | os.PathLike) -> LoadPath:
    return load_path_from_dict(read_json(path), str(path))


def read_json(path: str | os.PathLike) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


# --------------------------------------------------------------------------
# meshes


def mesh_to_dict(mesh: PlaneMesh) -> dict[str, Any]:
    return {
        "nodes": mesh.nodes.tolist(),
        "triangles": mesh.triangles.tolist(),
        "gamma_u": list(mesh.gamma_u),
        "gamma_t_edges": [list(e) for e in mesh.gamma_t_edges],
        "gamma_c": [{"node": c.node, "gap": c.gap, "normal": list(c.normal)} for c in mesh.gamma_c],
    }


def mesh_from_dict(d: dict[str, Any], where: str = "mesh") -> PlaneMesh:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in ("nodes", "triangles", "gamma_u"):
        if key not in d:
            raise ConfigError(f"{where}: missing field '{key}'")
    try:
        gc = []
        for k, c in enumerate(d.get("gamma_c", [])):
            try:
                gc.append(ContactNode(int(c["node"]), float(c.get("gap", 0.0)), tuple(float(x) for x in c["normal"])))
            except KeyError as exc:
                raise ConfigError(f"{where}.gamma_c[{k}]: missing field {exc}") from exc
        return PlaneMesh(d["nodes"], d["triangles"], d["gamma_u"], d.get("gamma_t_edges", []), gc)
    except ConfigError:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# --------------------------------------------------------------------------
# trajectories


def _open(target: str | os.PathLike | IO[str], mode: str):
    if hasattr(target, "write") or hasattr(target, "read"):
        return _NoClose(target)
    return open(target, mode, newline="")


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        return False


def _state_row(s: float, st: ContactState, flag: int) -> list[str]:
    return [fmt(s), fmt(st.u_n), fmt(st.u_t), fmt(st.t_n), fmt(st.t_t), str(flag)]


def write_trajectory_csv(traj: Trajectory, target, left_continuous: bool = False) -> None:
    """One row per breakpoint; a jump adds its left-limit row (flag 1) first.

    With ``left_continuous`` each breakpoint row carries the left limit
    instead (the left-continuous interpolant), and no jump rows are added.
    """
    with _open(target, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for k, (s, st) in enumerate(zip(traj.breakpoints, traj.states)):
            if left_continuous:
                w.writerow(_state_row(s, traj.left_limit(float(s)) if k else st, 0))
                continue
            j = traj.jump_at(float(s))
            if j is not None:
                w.writerow(_state_row(s, j.left, 1))
            w.writerow(_state_row(s, st, 0))


def trajectory_csv_text(traj: Trajectory) -> str:
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    return buf.getvalue()


def read_trajectory_csv(source, interpolation: str = PIECEWISE_CONSTANT) -> Trajectory:
    with _open(source, "r") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TRAJECTORY_HEADER:
        raise ConfigError(f"trajectory file must start with header {','.join(TRAJECTORY_HEADER)}")
    times, states, jumps = [], [], []
    pending = None
    for ln, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TRAJECTORY_HEADER):
            raise ConfigError(f"line {ln}: expected {len(TRAJECTORY_HEADER)} fields, got {len(row)}")
        try:
            s, un, ut, tn, tt = (float(x) for x in row[:5])
            flag = int(row[5])
        except ValueError as exc:
            raise ConfigError(f"line {ln}: {exc}") from exc
        st = ContactState(un, ut, tn, tt)
        if flag == 1:
            if pending is not None:
                raise ConfigError(f"line {ln}: two left-limit rows in a row")
            pending = (s, st)
            continue
        if flag != 0:
            raise ConfigError(f"line {ln}: is_jump_left_row must be 0 or 1")
        if pending is not None:
            if pending[0] != s:
                raise ConfigError(f"line {ln}: left-limit row at s={pending[0]} is not followed by its right row")
            jumps.append(JumpRecord(s, pending[1], st))
            pending = None
        times.append(s)
        states.append(st)
    if pending is not None:
        raise ConfigError("trajectory ends with a dangling left-limit row")
    try:
        return Trajectory(np.array(times), tuple(states), tuple(jumps), interpolation)
    except ValueError as exc:
        raise ConfigError(f"invalid trajectory: {exc}") from exc


def write_nodal_csv(report: FemMarchReport, mesh: PlaneMesh, target) -> None:
    """All nodes at every breakpoint; reactions are zero away from contact nodes."""
    cidx = {c.node: j for j, c in enumerate(mesh.gamma_c)}

    def rows(s, sol, flag):
        for i in range(mesh.n_nodes):
            ux, uy = sol.u[i]
            j = cidx.get(i)
            tn, tt = (sol.local[j].t_n, sol.local[j].t_t) if j is not None else (0.0, 0.0)
            yield [fmt(s), str(i), fmt(ux), fmt(uy), fmt(tn), fmt(tt), str(flag)]

    with _open(target, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODAL_HEADER)
        for k, (s, sol) in enumerate(zip(report.breakpoints, report.solutions)):
            left = report.jump_left.get(k)
            if left is not None:
                w.writerows(rows(s, left, 1))
            w.writerows(rows(s, sol, 0))


# --------------------------------------------------------------------------
# reports


def march_report_to_dict(rep: MarchReport) -> dict[str, Any]:
    return {
        "jumps": [{"time": t, "magnitude": mag} for t, mag in rep.jumps],
        "stability_constant": rep.stability_constant,
        "max_energy_residual": rep.max_energy_residual,
        "energy_residuals": rep.energy_residuals.tolist(),
        "nonunique_steps": list(rep.nonunique_steps),
        "breakpoints": rep.trajectory.breakpoints.tolist(),
        "subdivision": {"m": rep.subdivision.m, "threshold": rep.subdivision.threshold, "times": rep.subdivision.times.tolist()},
        "jump_factor": rep.jump_factor,
    }


def fem_report_to_dict(rep: FemMarchReport) -> dict[str, Any]:
    return {
        "jumps": [{"time": t, "magnitude": mag} for t, mag in rep.jumps],
        "stability_constant": rep.stability_constant,
        "max_residual": rep.max_residual,
        "passed": rep.passed,
        "nonunique_steps": list(rep.nonunique_steps),
        "breakpoints": rep.breakpoints.tolist(),
        "active_nodes": [int(sol.active.sum()) for sol in rep.solutions],
    }


def dump_json(obj: Any, target: str | os.PathLike) -> None:
    # repr of floats round-trips, and sort_keys keeps output byte-stable
    Path(target).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")

"""Command-line front end.

``frictio run KIND`` solves one scenario (or a sweep of them) and writes
its artifacts; ``frictio verify TRAJ SCENARIO`` re-checks a trajectory
file.  Exit codes: 0 pass, 1 configuration error, 2 residual failure,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import io as fio
from .core import LoadPath, StiffnessMatrix2, check_incremental_kkt, check_quasistatic, critical_friction
from .errors import ConfigError, FrictioError, MismatchedHorizon, NonConvergence
from .fem import LOAD_MODES, VIRTUAL_WORK, ElasticMaterial, march_fem
from .incremental import LARGEST, SMALLEST, continuum_family, solve_incremental
from .march import DEFAULT_JUMP_FACTOR, march, paper_jump_load, paper_jump_scenario

log = logging.getLogger("frictio")

KINDS = ("incremental", "march", "fem-march", "paper-jump", "continuum-family", "critical")
EXIT_OK, EXIT_CONFIG, EXIT_RESIDUAL, EXIT_NONCONVERGENCE = 0, 1, 2, 3
DEFAULT_TOL = 1e-9

# flag name -> scenario key, for overrides
OVERRIDES = {
    "m": "m",
    "f": "f",
    "K": "K",
    "R": "R",
    "tol": "tol",
    "seed": "seed",
    "mode": "mode",
    "out": "out",
    "report": "report",
    "jump_factor": "jump_factor",
    "select": "select",
}


@dataclass
class Outcome:
    code: int
    summary: str


def _parse_K(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--K expects a,b,c numbers, got {text!r}") from exc
    if len(vals) != 3:
        raise ConfigError(f"--K expects three numbers k_nn,k_nt,k_tt, got {text!r}")
    return vals


def _stiffness(sc: dict) -> StiffnessMatrix2:
    K = sc.get("K")
    if K is None:
        raise ConfigError("field 'K' is required for this kind")
    try:
        if len(K) == 3 and not isinstance(K[0], list):
            return StiffnessMatrix2(*map(float, K))
        return StiffnessMatrix2.from_matrix(K)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'K': {exc}") from exc


def _num(sc: dict, key: str, default=None, kind=float):
    if key not in sc or sc[key] is None:
        if default is None:
            raise ConfigError(f"field '{key}' is required for kind '{sc.get('kind')}'")
        return default
    try:
        return kind(sc[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{key}': expected {kind.__name__}, got {sc[key]!r}") from exc


def _load(sc: dict, base: Path) -> LoadPath:
    if "load" in sc:
        return fio.load_path_from_dict(sc["load"])
    if "load_file" in sc:
        return fio.read_load_path(base / sc["load_file"])
    raise ConfigError("field 'load' (or 'load_file') is required for this kind")


def _select(sc: dict, default: str) -> str:
    sel = sc.get("select", default)
    if sel not in (SMALLEST, LARGEST):
        raise ConfigError(f"field 'select' must be '{SMALLEST}' or '{LARGEST}'")
    return sel


def _write_traj(traj, sc: dict) -> None:
    if sc.get("out"):
        fio.write_trajectory_csv(traj, sc["out"], left_continuous=bool(sc.get("left_continuous")))


# --------------------------------------------------------------------------
# kinds


def run_scenario(sc: dict, base: Path = Path(".")) -> Outcome:
    kind = sc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"field 'kind' must be one of {', '.join(KINDS)}, got {kind!r}")
    tol = _num(sc, "tol", DEFAULT_TOL)
    if kind == "critical":
        fc = critical_friction(_stiffness(sc))
        return Outcome(EXIT_OK, f"f_crit = {fio.fmt(fc) if np.isfinite(fc) else 'inf'}")
    if kind == "incremental":
        K = _stiffness(sc)
        F = fio._vec(sc.get("F"), "F", 2)
        w_t, f = _num(sc, "w_t", 0.0), _num(sc, "f")
        sol = solve_incremental(K, F, w_t, f, select=_select(sc, SMALLEST))
        rep = check_incremental_kkt(K, F, w_t, f, sol.state, tol=tol)
        if sc.get("out"):
            st = sol.state
            fio.dump_json(
                {"u": [st.u_n, st.u_t], "t": [st.t_n, st.t_t], "regime": sol.regime, "unique": sol.unique, "sigma": sol.sigma, "iterations": sol.iterations},
                sc["out"],
            )
        st = sol.state
        msg = f"u=({fio.fmt(st.u_n)}, {fio.fmt(st.u_t)}) t=({fio.fmt(st.t_n)}, {fio.fmt(st.t_t)}) regime={sol.regime} unique={sol.unique} residual={rep.max_normalized:.3e}"
        return Outcome(EXIT_OK if rep.passed else EXIT_RESIDUAL, msg)
    if kind == "continuum-family":
        K, f = _stiffness(sc), _num(sc, "f")
        fam = continuum_family(K, f, _num(sc, "F_t"))
        n = _num(sc, "samples", 101, int)
        worst, ok = 0.0, True
        rows = []
        for st in fam.sample(n):
            rep = check_incremental_kkt(K, fam.F, 0.0, f, st, tol=tol)
            ok &= rep.passed
            worst = max(worst, rep.max_normalized)
            rows.append(st)
        if sc.get("out"):
            with open(sc["out"], "w") as fh:
                fh.write("t_n,u_n,u_t,t_t\n")
                for st in rows:
                    fh.write(",".join(fio.fmt(x) for x in (st.t_n, st.u_n, st.u_t, st.t_t)) + "\n")
        return Outcome(EXIT_OK if ok else EXIT_RESIDUAL, f"family of {n} states F=({fio.fmt(fam.F[0])}, {fio.fmt(fam.F[1])}) max residual={worst:.3e}")
    jf = _num(sc, "jump_factor", DEFAULT_JUMP_FACTOR)
    m = _num(sc, "m", 1000, int)
    if kind in ("march", "paper-jump"):
        K, f = _stiffness(sc), _num(sc, "f")
        if kind == "paper-jump":
            R = _num(sc, "R", 1.0)
            load, exact = paper_jump_scenario(K, R, f)
            if sc.get("closed_form"):
                _write_traj(exact, sc)
                rep = check_quasistatic(exact, load, K, f, tol=tol)
                return Outcome(EXIT_OK if rep.passed else EXIT_RESIDUAL, f"closed form: jump at s=1 residual={rep.max_normalized:.3e}")
            u0 = [0.0, 0.0]
        else:
            load = _load(sc, base)
            u0 = fio._vec(sc.get("u0", [0.0, 0.0]), "u0", 2)
        res = march(K, load, u0, f, m, jump_factor=jf, select=_select(sc, LARGEST))
        rep = check_quasistatic(res.trajectory, load, K, f, tol=tol)
        _write_traj(res.trajectory, sc)
        if sc.get("report"):
            d = fio.march_report_to_dict(res)
            d["residual"] = {"passed": rep.passed, "max_normalized": rep.max_normalized, "tol": tol}
            d["seed"] = sc.get("seed")
            fio.dump_json(d, sc["report"])
        jumps = ", ".join(f"s={fio.fmt(t)} |du|={mag:.6g}" for t, mag in res.jumps) or "none"
        msg = f"jumps: {jumps}; max residual={rep.max_normalized:.3e}; stability constant={res.stability_constant:.6g}"
        return Outcome(EXIT_OK if rep.passed else EXIT_RESIDUAL, msg)
    # fem-march
    if "mesh" in sc:
        mesh = fio.mesh_from_dict(sc["mesh"])
    elif "mesh_file" in sc:
        mesh = fio.mesh_from_dict(fio.read_json(base / sc["mesh_file"]), str(sc["mesh_file"]))
    else:
        raise ConfigError("field 'mesh' (or 'mesh_file') is required for kind 'fem-march'")
    md = sc.get("material", {"E": 1.0})
    try:
        mat = ElasticMaterial(float(md["E"]), float(md.get("nu", 0.0)), md.get("plane", "strain"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field 'material': {exc}") from exc
    mode = sc.get("mode", VIRTUAL_WORK)
    if mode not in LOAD_MODES:
        raise ConfigError(f"field 'mode' must be one of {', '.join(LOAD_MODES)}")
    load = _load(sc, base)
    body = fio._vec(sc.get("body", [0.0, 0.0]), "body", 2)
    u0 = sc.get("u0")
    res = march_fem(mesh, mat, load, _num(sc, "f"), m, u0=u0, body=body, mode=mode, jump_factor=jf, select=_select(sc, LARGEST))
    if sc.get("out"):
        fio.write_nodal_csv(res, mesh, sc["out"])
    if sc.get("report"):
        d = fio.fem_report_to_dict(res)
        d["mode"] = mode
        d["seed"] = sc.get("seed")
        fio.dump_json(d, sc["report"])
    jumps = ", ".join(f"s={fio.fmt(t)} |du|={mag:.6g}" for t, mag in res.jumps) or "none"
    ok = res.passed and res.max_residual <= max(tol, 1e-8)
    return Outcome(EXIT_OK if ok else EXIT_RESIDUAL, f"mode={mode}; jumps: {jumps}; max residual={res.max_residual:.3e}; stability constant={res.stability_constant:.6g}")


def verify(traj_path: str, scenario: dict, tol: float, base: Path = Path(".")) -> Outcome:
    kind = scenario.get("kind")
    K, f = _stiffness(scenario), _num(scenario, "f")
    if kind == "paper-jump":
        load = paper_jump_load(K, _num(scenario, "R", 1.0), f)
    elif kind == "march":
        load = _load(scenario, base)
    else:
        raise ConfigError(f"verify supports kinds 'march' and 'paper-jump', got {kind!r}")
    traj = fio.read_trajectory_csv(traj_path)
    try:
        rep = check_quasistatic(traj, load, K, f, tol=tol)
    except MismatchedHorizon as exc:
        raise ConfigError(str(exc)) from exc
    return Outcome(EXIT_OK if rep.passed else EXIT_RESIDUAL, rep.summary())


# --------------------------------------------------------------------------
# argument handling


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frictio", description="Quasi-static frictional contact solver")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve a scenario")
    r.add_argument("kind", nargs="?", choices=KINDS, help="scenario kind (overrides the file)")
    r.add_argument("--scenario", help="scenario JSON file")
    r.add_argument("--out", help="trajectory / result output file")
    r.add_argument("--report", help="JSON report output file")
    r.add_argument("--m", type=int, help="subdivision parameter (steps scale with m)")
    r.add_argument("--f", type=float, help="friction coefficient")
    r.add_argument("--K", type=_parse_K, metavar="a,b,c", help="k_nn,k_nt,k_tt")
    r.add_argument("--R", type=float, help="load scale of the jump scenario")
    r.add_argument("--tol", type=float, help="residual tolerance for the final check")
    r.add_argument("--seed", type=int, help="recorded in the report for reproducibility")
    r.add_argument("--mode", choices=LOAD_MODES, help="fem-march: edge load mapping")
    r.add_argument("--jump-factor", dest="jump_factor", type=float, help="jump detection factor J")
    r.add_argument("--select", choices=(SMALLEST, LARGEST), help="fixed point taken when a step is not unique")
    r.add_argument("--closed-form", dest="closed_form", action="store_true", help="paper-jump: emit the exact trajectory")
    r.add_argument("--left-continuous", dest="left_continuous", action="store_true", help="write left limits at breakpoints")
    r.add_argument("--sweep", metavar="param=lo:hi:n", help="run n points of one numeric parameter in parallel")
    r.add_argument("--workers", type=int, default=None, help="sweep worker processes")
    v = sub.add_parser("verify", help="check a trajectory file against its scenario")
    v.add_argument("trajectory", help="trajectory CSV")
    v.add_argument("scenario", help="scenario JSON the trajectory claims to solve")
    v.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual tolerance")
    return p


def _build_scenario(args) -> tuple[dict, Path]:
    sc: dict[str, Any] = {}
    base = Path(".")
    if args.scenario:
        data = fio.read_json(args.scenario)
        if not isinstance(data, dict):
            raise ConfigError(f"{args.scenario}: top level must be an object")
        sc.update(data)
        base = Path(args.scenario).parent
    if args.kind:
        sc["kind"] = args.kind
    for flag, key in OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            sc[key] = val
    for flag in ("closed_form", "left_continuous"):
        if getattr(args, flag):
            sc[flag] = True
    if "kind" not in sc:
        raise ConfigError("no scenario kind given (positional KIND or 'kind' in the scenario file)")
    return sc, base


def _sweep_points(spec: str) -> tuple[str, list[float]]:
    try:
        name, rng = spec.split("=", 1)
        lo, hi, n = rng.split(":")
        n = int(n)
        lo, hi = float(lo), float(hi)
    except ValueError as exc:
        raise ConfigError(f"--sweep expects param=lo:hi:n, got {spec!r}") from exc
    if n < 1:
        raise ConfigError("--sweep needs at least one point")
    return name, np.linspace(lo, hi, n).tolist()


def _suffixed(path: str | None, name: str, value) -> str | None:
    if not path:
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{name}={fio.fmt(value)}{p.suffix}"))


def _run_point(sc: dict, base: str) -> tuple[int, str]:
    out = _guarded(lambda: run_scenario(sc, Path(base)))
    return out.code, out.summary


def _guarded(fn) -> Outcome:
    try:
        return fn()
    except NonConvergence as exc:
        return Outcome(EXIT_NONCONVERGENCE, f"non-convergence: {exc}")
    except ConfigError as exc:
        return Outcome(EXIT_CONFIG, f"configuration error: {exc}")
    except FrictioError as exc:
        return Outcome(EXIT_CONFIG, f"{type(exc).__name__}: {exc}")
    except ValueError as exc:
        return Outcome(EXIT_CONFIG, f"configuration error: {exc}")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("FRICTIO_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    if args.command == "verify":
        def go():
            sc = fio.read_json(args.scenario)
            if not isinstance(sc, dict):
                raise ConfigError(f"{args.scenario}: top level must be an object")
            return verify(args.trajectory, sc, args.tol, Path(args.scenario).parent)

        out = _guarded(go)
        print(out.summary)
        return out.code
    try:
        sc, base = _build_scenario(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.sweep:
        out = _guarded(lambda: run_scenario(sc, base))
        print(out.summary, file=sys.stdout if out.code != EXIT_CONFIG else sys.stderr)
        return out.code
    try:
        name, values = _sweep_points(args.sweep)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    points = []
    for val in values:
        p = dict(sc)
        p[name] = int(round(val)) if name == "m" else val
        p["out"] = _suffixed(sc.get("out"), name, val)
        p["report"] = _suffixed(sc.get("report"), name, val)
        points.append(p)
    log.info("sweeping %s over %d points", name, len(points))
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_run_point, points, [str(base)] * len(points)))
    worst = 0
    for val, (code, summary) in zip(values, results):
        print(f"{name}={fio.fmt(val)}: {summary}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

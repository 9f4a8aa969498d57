"""Quasi-static elastic contact with Coulomb friction: exact 2-DOF steps,
variation-driven time stepping with jump localization, and a P1 plane
finite-element reduction."""

from __future__ import annotations

from .core import (
    PIECEWISE_AFFINE,
    PIECEWISE_CONSTANT,
    ContactState,
    JumpRecord,
    LoadJump,
    LoadPath,
    ResidualReport,
    Segment,
    StiffnessMatrix2,
    Trajectory,
    check_incremental_kkt,
    check_quasistatic,
    critical_friction,
    variation,
)
from . import errors
from .incremental import (
    LARGEST,
    SMALLEST,
    IncrementalSolution,
    TrescaProblem,
    continuum_family,
    lipschitz_probe,
    pressure_map,
    solve_incremental,
    tresca_minimize,
)
from .march import (
    MarchReport,
    Subdivision,
    build_subdivision,
    march,
    no_continuation_witness,
    paper_jump_scenario,
    rate_independence_probe,
    reparametrize,
    trajectory_sup_error,
    interpolant_error,
)
from .fem import (
    ElasticMaterial,
    PlaneMesh,
    assemble,
    consistent_edge_load,
    march_fem,
    solve_incremental_fem,
    triangle_condensed_stiffness,
)

__version__ = "0.1.0"

__all__ = [
    "PIECEWISE_AFFINE",
    "PIECEWISE_CONSTANT",
    "ContactState",
    "JumpRecord",
    "LoadJump",
    "LoadPath",
    "ResidualReport",
    "Segment",
    "StiffnessMatrix2",
    "Trajectory",
    "check_incremental_kkt",
    "check_quasistatic",
    "critical_friction",
    "variation",
    "LARGEST",
    "SMALLEST",
    "IncrementalSolution",
    "TrescaProblem",
    "continuum_family",
    "lipschitz_probe",
    "pressure_map",
    "solve_incremental",
    "tresca_minimize",
    "MarchReport",
    "Subdivision",
    "build_subdivision",
    "march",
    "no_continuation_witness",
    "paper_jump_scenario",
    "rate_independence_probe",
    "trajectory_sup_error",
    "interpolant_error",
    "reparametrize",
    "ElasticMaterial",
    "PlaneMesh",
    "assemble",
    "consistent_edge_load",
    "march_fem",
    "solve_incremental_fem",
    "triangle_condensed_stiffness",
    "errors",
]

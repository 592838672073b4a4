"""Python bindings for the nlflow solver library."""

from ._nlflow import (
    Boundary,
    ConfigError,
    Grid,
    NumericalError,
    PedestrianModel,
    SupplyChainModel,
    Trajectory,
    bounds_report,
    commands,
    existence_time,
    kappa_constants,
    mass,
    run_cli,
    schema,
    solve,
    tangent,
    total_variation,
    wallis,
)

__all__ = [
    "Boundary",
    "ConfigError",
    "Grid",
    "NumericalError",
    "PedestrianModel",
    "SupplyChainModel",
    "Trajectory",
    "bounds_report",
    "commands",
    "existence_time",
    "kappa_constants",
    "mass",
    "run_cli",
    "schema",
    "solve",
    "tangent",
    "total_variation",
    "wallis",
]

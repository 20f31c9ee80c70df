"""Exact finite-alphabet oracle for the rate-constraint tradeoff functions."""

from .backend import BACKEND
from .solver import (
    RdpcSolution,
    SolveOptions,
    UniversalSolution,
    brute_force_rdpc,
    constraint_values,
    mutual_information,
    rate_penalty,
    solve_rdc,
    solve_rdc_grid,
    solve_rdp,
    solve_rdpc,
    universal_rate,
)
from .sources import parse_source_file, parse_source_text

__all__ = [
    "BACKEND",
    "SolveOptions",
    "RdpcSolution",
    "UniversalSolution",
    "mutual_information",
    "constraint_values",
    "solve_rdpc",
    "solve_rdp",
    "solve_rdc",
    "solve_rdc_grid",
    "brute_force_rdpc",
    "universal_rate",
    "rate_penalty",
    "parse_source_file",
    "parse_source_text",
]

"""Mixed-integer programming layer: model container, constraint builder,
simplex/branch-and-bound solver, feasibility checking, MPS export and
solution extraction."""

from .model import MilpModel, Variable, LinearRow, encode_symbol, decode_symbol
from .builder import build_model
from .simplex import LpResult, solve_lp
from .branch_and_bound import Solution, branch_and_bound
from .feasibility import check_feasibility
from .mps import write_mps, read_mps
from .extract import extract_design_and_schedule, solution_dump

__all__ = [
    "MilpModel",
    "Variable",
    "LinearRow",
    "encode_symbol",
    "decode_symbol",
    "build_model",
    "LpResult",
    "solve_lp",
    "Solution",
    "branch_and_bound",
    "check_feasibility",
    "write_mps",
    "read_mps",
    "extract_design_and_schedule",
    "solution_dump",
]

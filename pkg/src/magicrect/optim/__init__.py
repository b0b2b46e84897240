"""Linear and semidefinite programming back ends."""

from .npa import (
    LEVEL_1,
    LEVEL_1AB,
    MomentProblem,
    build_moment_problem,
    conjectured_1ab_value,
    npa_value,
    solve_sdp,
)
from .lp import LinearProgram, LpResult, ns_optimum, ns_value, simplex
from .sdp import LmiProblem, SdpSolution, solve_lmi

__all__ = [
    "LEVEL_1",
    "LEVEL_1AB",
    "LinearProgram",
    "LmiProblem",
    "LpResult",
    "MomentProblem",
    "SdpSolution",
    "build_moment_problem",
    "conjectured_1ab_value",
    "npa_value",
    "ns_optimum",
    "ns_value",
    "simplex",
    "solve_lmi",
    "solve_sdp",
]

"""Ensemble column generation for cutting stock problems."""

from .engine import column_init, early_stop_check, farley_bound, run, run_baseline, run_mc, run_mp
from .integer import oracle_enumerate_patterns, oracle_solve_exact, solve_irmp
from .kernels import BACKEND as KERNEL_BACKEND
from .model import (
    CgConfig,
    CgReport,
    ColumnPool,
    ContractError,
    DualVector,
    InfeasibleInstanceError,
    Instance,
    Item,
    Pattern,
    pattern_feasible,
    reduced_cost,
    singleton_pattern,
)
from .pipeline import solve
from .pricing import PricedColumn, PricingOutcome, price
from .selection import feasibility_check, select_columns
from .simplex import LpSolution, solve_lp, solve_rmp

__version__ = "0.1.0"

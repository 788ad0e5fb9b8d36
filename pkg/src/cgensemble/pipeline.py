"""End-to-end solve: column generation, column selection, integer master."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .engine import CgRunArtifacts, run
from .integer import IpSolution, solve_irmp
from .model import CgConfig, CgReport, ColumnPool, Instance
from .selection import select_columns

GAP_TOL = 1e-6


@dataclass
class SolveResult:
    report: CgReport
    artifacts: CgRunArtifacts
    selected: ColumnPool
    ip: IpSolution


def solve(instance: Instance, config: CgConfig | None = None) -> SolveResult:
    config = config or CgConfig()
    cg = run(instance, config)
    state = cg.state
    pool = cg.pool

    t0 = time.perf_counter()
    s = config.selection_times
    if s == 0 or len(pool) <= s * instance.K:
        selected = pool
    else:
        selected = select_columns(pool, instance, s)
    t1 = time.perf_counter()
    ip = solve_irmp(
        selected,
        instance.demands,
        time_limit=config.csp_time_limit,
        node_limit=config.csp_node_limit,
        seed=config.seed,
    )
    t2 = time.perf_counter()

    z_rmp = float(state.last_lp.objective)
    gap = ip.objective - z_rmp
    lower = z_rmp if state.converged else cg.farley_lb
    certified = math.isfinite(lower) and ip.objective <= math.ceil(lower - GAP_TOL)
    solution = [
        {"pattern": list(p.counts), "count": int(v)} for p, v in zip(selected, ip.values) if v > 0
    ]
    report = CgReport(
        z_rmp=z_rmp,
        z_irmp=int(ip.objective),
        farley_lb=cg.farley_lb,
        abs_gap=gap,
        proven_optimal=gap < 1 - GAP_TOL,
        iterations=state.total_iterations,
        columns_generated=len(pool),
        columns_selected=len(selected),
        early_stopped=cg.early_stopped,
        converged=state.converged,
        pricing_calls=state.pricing_calls,
        irmp_proven=ip.proven,
        certified_optimal=certified,
        timings={
            "exploration": state.timings.get("exploration", 0.0),
            "convergence": state.timings.get("convergence", 0.0),
            "selection": t1 - t0,
            "integer": t2 - t1,
        },
        dual_objective_trace=list(state.objective_trace),
        solution=solution,
    )
    assert math.isfinite(report.z_rmp)
    return SolveResult(report=report, artifacts=cg, selected=selected, ip=ip)

"""Column generation drivers: baseline, multi-column, multi-path and their mix."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import CgConfig, ColumnPool, Instance, singleton_pattern
from .pricing import PricedColumn, price
from .selection import feasibility_check
from .simplex import LpSolution, SolverError, solve_rmp

log = logging.getLogger(__name__)


@dataclass
class CgState:
    pool: ColumnPool
    last_lp: LpSolution | None = None
    objective_trace: list[float] = field(default_factory=list)
    consecutive_small_improvements: int = 0
    consecutive_sub_timeouts: int = 0
    iterations: int = 0
    # totals across every stage of a run
    total_iterations: int = 0
    pricing_calls: int = 0
    farley_trace: list[float] = field(default_factory=list)
    path_traces: list[list[float]] = field(default_factory=list)
    converged: bool = False
    early_stopped: bool = False
    timings: dict[str, float] = field(default_factory=dict)

    def restart(self, pool: ColumnPool) -> None:
        """Begin a new trace on ``pool`` keeping the run totals."""
        self.pool = pool
        self.last_lp = None
        self.objective_trace = []
        self.consecutive_small_improvements = 0
        self.consecutive_sub_timeouts = 0
        self.iterations = 0


@dataclass
class CgRunArtifacts:
    pool: ColumnPool
    state: CgState
    farley_lb: float
    early_stopped: bool


def column_init(instance: Instance) -> ColumnPool:
    return ColumnPool(instance.K, (singleton_pattern(instance, k) for k in range(instance.K)))


def farley_bound(lp: LpSolution, best_column: PricedColumn, demands) -> float:
    """Lower bound ``pi.b / pi.a_min`` on the master LP from any RMP iterate.

    ``best_column`` must be the exact pricing optimum under ``lp.duals``.
    Returns ``-inf`` when ``pi.a_min`` is not positive.
    """
    pi = lp.duals.values
    denom = float(pi @ np.asarray(best_column.pattern.counts, dtype=float))
    if denom <= 1e-9:
        return -math.inf
    return float(pi @ np.asarray(demands, dtype=float)) / denom


def early_stop_check(state: CgState, config: CgConfig) -> bool:
    if state.consecutive_sub_timeouts >= config.sub_throttles:
        return True
    trace = state.objective_trace
    t = config.dual_throttles
    if len(trace) < t + 1:
        return False
    recent = np.diff(np.asarray(trace[-(t + 1) :]))
    return bool(np.all(-recent < config.dual_objective_threshold))


def _generate(
    instance: Instance,
    config: CgConfig,
    state: CgState,
    n: int,
    max_iters: int | None = None,
    master: ColumnPool | None = None,
) -> str:
    """Column generation on ``state.pool`` from a cold LP.

    New columns also go to ``master`` when given. Returns why it stopped:
    ``converged``, ``early_stop``, ``timeout`` or ``depth``.
    """
    pool = state.pool
    demands = instance.demands
    lp = solve_rmp(pool, demands)
    if not lp.optimal:
        raise SolverError("restricted master problem is infeasible; coverage was not repaired")
    state.last_lp = lp
    state.objective_trace.append(lp.objective)
    while True:
        if max_iters is not None and state.iterations >= max_iters:
            return "depth"
        outcome = price(instance, lp.duals, n, config.sub_time_limit)
        state.pricing_calls += 1
        if outcome.timed_out:
            state.consecutive_sub_timeouts += 1
        else:
            state.consecutive_sub_timeouts = 0
            state.farley_trace.append(farley_bound(lp, outcome.best, demands))
        added = 0
        for col in outcome.negative():
            if master is not None:
                master.add(col.pattern)
            added += pool.add(col.pattern)
        if not added:
            return "timeout" if outcome.timed_out else "converged"
        lp = solve_rmp(pool, demands, warm_basis=lp.basis)
        if not lp.optimal:
            raise SolverError("RMP became infeasible after adding columns")
        state.last_lp = lp
        prev = state.objective_trace[-1]
        # the LP value cannot increase when columns are added; clip solver noise
        obj = min(lp.objective, prev)
        state.objective_trace.append(obj)
        state.iterations += 1
        state.total_iterations += 1
        if prev - obj < config.dual_objective_threshold:
            state.consecutive_small_improvements += 1
        else:
            state.consecutive_small_improvements = 0
        if not config.convergence and early_stop_check(state, config):
            return "early_stop"
        if state.consecutive_sub_timeouts >= config.sub_throttles:
            return "timeout"


def run_mc(instance: Instance, config: CgConfig, n: int | None = None) -> tuple[ColumnPool, CgState]:
    """Column generation adding up to ``n`` negative columns per pricing call."""
    n = config.num_column if n is None else n
    pool = column_init(instance)
    state = CgState(pool)
    t0 = time.perf_counter()
    reason = _generate(instance, config, state, n)
    state.timings["convergence"] = time.perf_counter() - t0
    state.timings["exploration"] = 0.0
    state.converged = reason == "converged"
    state.early_stopped = reason in ("early_stop", "timeout")
    return pool, state


def run_baseline(instance: Instance, config: CgConfig) -> tuple[ColumnPool, CgState]:
    return run_mc(instance, config, n=1)


def run_mp(
    instance: Instance,
    config: CgConfig,
    n: int | None = None,
    paths: int | None = None,
) -> tuple[ColumnPool, CgState]:
    """Multi-path column generation.

    Each exploration path restarts from a random sample of the master
    pool (repaired to cover every item) and runs at most ``depth``
    iterations on that working set; every column it finds also enters the
    master pool. A final convergence stage runs from the full master pool.
    """
    n = 1 if n is None else n
    e = config.paths_for(instance) if paths is None else paths
    d = config.depth_for(instance)
    master = column_init(instance)
    state = CgState(master)
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    for _ in range(e):
        size = max(1, math.ceil(config.sample_fraction * len(master)))
        picks = np.sort(rng.choice(len(master), size=size, replace=False))
        working = ColumnPool(instance.K, (master[int(j)] for j in picks))
        feasibility_check(working, instance)
        state.restart(working)
        _generate(instance, config, state, n, max_iters=d, master=master)
        state.path_traces.append(list(state.objective_trace))
    t1 = time.perf_counter()
    state.restart(master)
    reason = _generate(instance, config, state, n)
    state.timings["exploration"] = t1 - t0
    state.timings["convergence"] = time.perf_counter() - t1
    state.converged = reason == "converged"
    state.early_stopped = reason in ("early_stop", "timeout")
    return master, state


def run(instance: Instance, config: CgConfig) -> CgRunArtifacts:
    """Dispatch on ``(num_column, num_path)``: MC when no paths, MP(+MC) otherwise."""
    e = config.paths_for(instance)
    if e >= 1:
        pool, state = run_mp(instance, config, n=config.num_column, paths=e)
    else:
        pool, state = run_mc(instance, config, n=config.num_column)
    lb = max(state.farley_trace, default=-math.inf)
    log.debug(
        "cg done: z_rmp=%.6f iters=%d pool=%d farley=%.6f",
        state.objective_trace[-1],
        state.total_iterations,
        len(pool),
        lb,
    )
    return CgRunArtifacts(pool=pool, state=state, farley_lb=lb, early_stopped=state.early_stopped)

"""Column selection: shrink a column pool by harvesting LP bases."""

from __future__ import annotations

from .model import ColumnPool, Instance, singleton_pattern
from .simplex import TOL, SolverError, solve_rmp


def feasibility_check(pool: ColumnPool, instance: Instance) -> ColumnPool:
    """Add the maximal singleton of every item no pooled pattern covers.

    Mutates and returns ``pool``.
    """
    covered = pool.covered()
    for k in range(instance.K):
        if not covered[k]:
            pool.add(singleton_pattern(instance, k))
    return pool


def select_columns(pool: ColumnPool, instance: Instance, s: int) -> ColumnPool:
    """Run ``s`` passes of: repair coverage, solve the LP, move its support out.

    The support of the first pass is an optimal basis for the whole pool,
    so the LP value over the returned subset equals the LP value over
    ``pool``.
    """
    if s < 1:
        raise ValueError("selection needs s >= 1")
    working = pool.copy()
    selected = ColumnPool(instance.K)
    for _ in range(s):
        feasibility_check(working, instance)
        lp = solve_rmp(working, instance.demands)
        if not lp.optimal:
            raise SolverError("repaired pool is unexpectedly infeasible")
        support = set(lp.support(TOL))
        for j in sorted(support):
            selected.add(working[j])
        working = ColumnPool(instance.K, (p for j, p in enumerate(working) if j not in support))
    return selected

"""Pricing subproblem: find feasible patterns of minimum reduced cost.

The subproblem is the integer knapsack ``max pi.a`` subject to the
pattern feasibility constraint (linear or chance). Integer item sizes go
through a k-best dynamic program over capacity. Everything else is solved
by depth-first branch and bound over item counts, collecting up to ``n``
distinct columns. Items are explored in order of decreasing ``pi_k /
size_k``. The fractional (Dantzig) bound runs on the linear part of the
constraint with room reduced by the safety term of the current node; the
safety term only grows as items are added so this stays admissible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import FEAS_RTOL, ContractError, DualVector, Instance, Pattern, reduced_cost

NEG_TOL = 1e-9


@dataclass(frozen=True)
class PricedColumn:
    pattern: Pattern
    cost: float


@dataclass
class PricingOutcome:
    columns: list[PricedColumn]
    timed_out: bool = False
    nodes: int = 0

    @property
    def best(self) -> PricedColumn:
        return self.columns[0]

    def negative(self, tol: float = NEG_TOL) -> list[PricedColumn]:
        return [c for c in self.columns if c.cost < -tol]


DP_CELL_BUDGET = 5_000_000


def _use_dp(instance: Instance, capacity: float, n: int) -> bool:
    """Integer sizes and a small enough table: exact k-best dynamic program."""
    if instance.gaussian or not np.all(instance.sizes == np.round(instance.sizes)):
        return False
    return (math.floor(capacity) + 1) * instance.K * (n + 1) <= DP_CELL_BUDGET


def price(
    instance: Instance,
    duals: DualVector,
    n: int = 1,
    time_limit: float = math.inf,
    kernel=None,
) -> PricingOutcome:
    """Return up to ``n`` distinct columns, most negative reduced cost first.

    ``columns[0]`` is always present and is the exact minimizer unless
    the search timed out; later entries all have negative reduced cost.
    Equal costs (within 1e-9) are ordered lexicographically larger
    count vector first.
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    if len(duals) != instance.K:
        raise ContractError("dual vector length does not match K")
    impl = kernel if kernel is not None else kernels
    pi = duals.values
    capacity = instance.capacity * (1 + FEAS_RTOL)
    limit = min(time_limit, 1e9)

    leaves: list[tuple[int, ...]] = []
    timed_out = False
    nodes = 0
    if _use_dp(instance, capacity, n) and np.any(pi > 0):
        found = impl.dp_topn(
            pi.tolist(), instance.sizes.astype(int).tolist(), int(math.floor(capacity)), int(n)
        )
        leaves = [counts for _, counts in found]
    if not leaves:
        ratio = pi / instance.sizes
        order = sorted(range(instance.K), key=lambda k: (-ratio[k], k))
        found, timed_out, nodes = impl.search(
            [float(pi[k]) for k in order],
            [float(instance.sizes[k]) for k in order],
            [float(instance.variances[k]) for k in order],
            [int(instance.multiplicities[k]) for k in order],
            capacity,
            float(instance.safety),
            int(n),
            float(limit),
        )
        for _, sorted_counts in found:
            counts = [0] * instance.K
            for pos, k in enumerate(order):
                counts[k] = int(sorted_counts[pos])
            leaves.append(tuple(counts))
        if not leaves:
            # timed out before the first leaf: best maximal singleton
            k = int(np.argmax(pi * instance.multiplicities))
            counts = [0] * instance.K
            counts[k] = int(instance.multiplicities[k])
            leaves = [tuple(counts)]

    cols = []
    for counts in leaves:
        p = Pattern(counts)
        cols.append(PricedColumn(p, reduced_cost(p, duals)))
    cols.sort(key=lambda c: (round(c.cost, 9), tuple(-x for x in c.pattern.counts)))
    out = cols[:1] + [c for c in cols[1:] if c.cost < -NEG_TOL]
    return PricingOutcome(out, timed_out=timed_out, nodes=nodes)

"""Revised simplex for ``min c.x  s.t.  A x >= b, x >= 0``.

The restricted master problem is the covering special case (``c = 1``,
``A >= 0``, ``b > 0``) but the integer branch-and-bound also feeds rows
with negative entries and right-hand sides, so the solver is written for
the general ``>=`` form.

Internally every row gets a surplus variable (column ``-e_i``). Rows with
a positive right-hand side additionally get an artificial column ``+e_i``
used only by phase 1. The basis inverse is kept explicitly, updated by
rank-one eta steps and refactorized every ``REFACTOR_EVERY`` pivots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .model import ColumnPool, ContractError, DualVector

TOL = 1e-7
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
BLAND_AFTER = 50


class SolverError(RuntimeError):
    """The LP solver failed (iteration cap, singular basis, unboundedness)."""


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass
class LpSolution:
    status: Status
    primal: np.ndarray
    objective: float
    duals: DualVector | None
    # Basis as labels: j >= 0 is structural column j, -1-i is the surplus of row i.
    basis: tuple[int, ...] = ()
    pivots: int = 0
    surplus: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def support(self, tol: float = TOL) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.primal > tol)]


class _Tableau:
    """Working state of one solve: column matrix, basis, inverse."""

    def __init__(self, A: np.ndarray, b: np.ndarray, c: np.ndarray):
        m, n = A.shape
        self.m, self.n = m, n
        self.b = b
        self.art_rows = np.flatnonzero(b > 0)
        na = len(self.art_rows)
        art = np.zeros((m, na))
        art[self.art_rows, np.arange(na)] = 1.0
        self.M = np.hstack([A, -np.eye(m), art])
        self.ntot = n + m + na
        self.cost2 = np.concatenate([c, np.zeros(m + na)])
        self.cost1 = np.concatenate([np.zeros(n + m), np.ones(na)])
        self.is_art = np.zeros(self.ntot, dtype=bool)
        self.is_art[n + m :] = True
        self.basis = np.empty(m, dtype=np.int64)
        self.in_basis = np.zeros(self.ntot, dtype=bool)
        self.Binv = np.eye(m)
        self.xB = np.zeros(m)
        self.pivots = 0
        self.since_refactor = 0

    def set_basis(self, basis: np.ndarray) -> bool:
        self.basis = np.asarray(basis, dtype=np.int64).copy()
        self.in_basis[:] = False
        self.in_basis[self.basis] = True
        return self.refactor()

    def refactor(self) -> bool:
        B = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(self.Binv)) or np.linalg.cond(B) > 1e12:
            return False
        self.xB = self.Binv @ self.b
        self.since_refactor = 0
        return True

    def pivot(self, q: int, r: int, u: np.ndarray) -> None:
        """Bring column q into the basis at row r; u = Binv @ M[:, q]."""
        piv = u[r]
        theta = self.xB[r] / piv
        self.xB -= theta * u
        self.xB[r] = theta
        row = self.Binv[r] / piv
        self.Binv -= np.outer(u, row)
        self.Binv[r] = row
        self.in_basis[self.basis[r]] = False
        self.basis[r] = q
        self.in_basis[q] = True
        self.pivots += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            if not self.refactor():
                raise SolverError("basis became singular during refactorization")
        np.maximum(self.xB, 0.0, out=self.xB, where=self.xB > -TOL)

    def reduced_costs(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = cost[self.basis] @ self.Binv
        return cost - y @ self.M, y

    def primal_loop(self, cost: np.ndarray, allow: np.ndarray, max_pivots: int) -> None:
        degenerate = 0
        while True:
            if self.pivots > max_pivots:
                raise SolverError(f"simplex exceeded {max_pivots} pivots (cycling?)")
            d, _ = self.reduced_costs(cost)
            cand = allow & ~self.in_basis & (d < -TOL)
            if not cand.any():
                return
            bland = degenerate >= BLAND_AFTER
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                dd = np.where(cand, d, np.inf)
                q = int(np.argmin(dd))
            u = self.Binv @ self.M[:, q]
            pos = u > PIVOT_TOL
            if not pos.any():
                raise SolverError("LP is unbounded")
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / u[pos]
            tmin = ratios.min()
            ties = np.flatnonzero(ratios <= tmin + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(u[ties])])
            degenerate = degenerate + 1 if tmin <= TOL else 0
            self.pivot(q, r, u)

    def dual_loop(self, cost: np.ndarray, allow: np.ndarray, max_pivots: int) -> bool:
        """Dual simplex from a dual-feasible basis; False if it cannot proceed."""
        while True:
            if self.pivots > max_pivots:
                raise SolverError(f"dual simplex exceeded {max_pivots} pivots")
            r = int(np.argmin(self.xB))
            if self.xB[r] >= -TOL:
                return True
            d, _ = self.reduced_costs(cost)
            alpha = self.Binv[r] @ self.M
            cand = allow & ~self.in_basis & (alpha < -PIVOT_TOL)
            if not cand.any():
                # row r proves primal infeasibility
                return False
            ratio = np.where(cand, np.maximum(d, 0.0) / np.where(cand, -alpha, 1.0), np.inf)
            # among near-minimal ratios take the largest pivot for stability
            ties = np.flatnonzero(ratio <= ratio.min() + 1e-9)
            q = int(ties[np.argmax(-alpha[ties])])
            u = self.Binv @ self.M[:, q]
            self.pivot(q, r, u)


def solve_lp(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray | None = None,
    warm_basis: Sequence[int] | None = None,
    max_pivots: int | None = None,
) -> LpSolution:
    """Solve ``min c.x s.t. A x >= b, x >= 0``.

    ``warm_basis`` holds labels as in :attr:`LpSolution.basis`. A warm
    basis that is primal feasible skips phase 1; one that is only dual
    feasible is repaired with dual simplex pivots. Anything else falls back
    to a cold start.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if b.shape != (m,):
        raise ContractError("right-hand side length does not match row count")
    c = np.ones(n) if c is None else np.asarray(c, dtype=float)
    if max_pivots is None:
        max_pivots = 50 * (m + n) + 1000
    tab = _Tableau(A, b, c)
    structural = np.ones(tab.ntot, dtype=bool)
    structural[tab.is_art] = False

    started = False
    if warm_basis is not None and len(warm_basis) == m:
        try:
            started = _warm_start(tab, warm_basis, structural, max_pivots)
        except SolverError:
            started = False
        if started is None:
            return _infeasible(n, tab.pivots)
        if not started:
            tab = _Tableau(A, b, c)
    if not started:
        _phase1(tab, max_pivots)
        if tab.xB @ tab.cost1[tab.basis] > TOL * (1.0 + np.abs(b).max(initial=0.0)):
            return _infeasible(n, tab.pivots)
        _drive_out_artificials(tab)
    tab.primal_loop(tab.cost2, structural, max_pivots)

    x = np.zeros(tab.ntot)
    x[tab.basis] = tab.xB
    primal = x[:n].copy()
    primal[primal < 0] = 0.0
    _, y = tab.reduced_costs(tab.cost2)
    labels = tuple(int(j) if j < n else -1 - int(j - n) for j in tab.basis if j < n + m)
    # a redundant row may keep a (zero) artificial in the basis; that basis
    # cannot be replayed, so report labels only when complete
    if len(labels) != m:
        labels = ()
    return LpSolution(
        status=Status.OPTIMAL,
        primal=primal,
        objective=float(c @ primal),
        duals=DualVector(y, tol=1e-6),
        basis=labels,
        pivots=tab.pivots,
        surplus=x[n : n + m].copy(),
    )


def _warm_start(tab: _Tableau, warm_basis, structural, max_pivots) -> bool | None:
    """Install a warm basis; True if usable, None if it proves infeasibility."""
    n, m = tab.n, tab.m
    idx = np.array([j if j >= 0 else n + (-1 - j) for j in warm_basis], dtype=np.int64)
    if not (np.all(idx < n + m) and len(set(idx.tolist())) == m and tab.set_basis(idx)):
        return False
    if np.all(tab.xB >= -TOL):
        return True
    d, _ = tab.reduced_costs(tab.cost2)
    if not np.all(d[structural] >= -TOL):
        return False
    return True if tab.dual_loop(tab.cost2, structural, max_pivots) else None


def _infeasible(n: int, pivots: int) -> LpSolution:
    return LpSolution(
        status=Status.INFEASIBLE,
        primal=np.zeros(n),
        objective=float("inf"),
        duals=None,
        pivots=pivots,
    )


def _phase1(tab: _Tableau, max_pivots: int) -> None:
    basis = np.empty(tab.m, dtype=np.int64)
    art_of_row = {int(r): tab.n + tab.m + i for i, r in enumerate(tab.art_rows)}
    for i in range(tab.m):
        basis[i] = art_of_row.get(i, tab.n + i)
    if not tab.set_basis(basis):
        raise SolverError("initial basis is singular")
    allow = np.ones(tab.ntot, dtype=bool)
    tab.primal_loop(tab.cost1, allow, max_pivots)


def _drive_out_artificials(tab: _Tableau) -> None:
    nonart = ~tab.is_art
    for r in range(tab.m):
        if not tab.is_art[tab.basis[r]]:
            continue
        row = tab.Binv[r] @ tab.M
        cand = nonart & ~tab.in_basis & (np.abs(row) > 1e-9)
        if cand.any():
            q = int(np.flatnonzero(cand)[np.argmax(np.abs(row[cand]))])
            u = tab.Binv @ tab.M[:, q]
            tab.pivot(q, r, u)


def solve_rmp(
    pool: ColumnPool,
    demands: Sequence[int] | np.ndarray,
    warm_basis: Sequence[int] | None = None,
) -> LpSolution:
    """LP relaxation of the master problem restricted to ``pool``."""
    if len(pool) == 0:
        raise ContractError("cannot solve an RMP over an empty pool")
    b = np.asarray(demands, dtype=float)
    if b.shape != (pool.K,):
        raise ContractError("demand vector length does not match K")
    if not pool.covered().all():
        return _infeasible(len(pool), 0)
    return solve_lp(pool.matrix(), b, warm_basis=warm_basis)

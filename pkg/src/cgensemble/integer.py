"""Integer solves over a column pool, plus brute-force oracles for tiny instances."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import ColumnPool, ContractError, Instance, Pattern, _fits
from .simplex import SolverError, solve_lp, solve_rmp

INT_TOL = 1e-6
RESTART_EVERY = 10_000
ENUM_BUDGET = 10**6

# swap local search
SWAP_MOVES = 60_000
SWAP_RESTARTS = 6
SWAP_TABU = 4
FOCUS_RC = 0.02


class OracleBudgetError(RuntimeError):
    def __init__(self, estimate: int, budget: int = ENUM_BUDGET):
        super().__init__(
            f"pattern enumeration needs up to {estimate} grid points (budget {budget})"
        )
        self.estimate = estimate
        self.budget = budget


@dataclass
class IpSolution:
    values: list[int]
    objective: int
    proven: bool
    lower_bound: float
    nodes: int = 0
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray  # math.inf for "no upper bound"
    bound: float
    basis: tuple | None


def _cover_ok(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> bool:
    return bool(np.all(A @ x >= b))


def _trim(A: np.ndarray, b: np.ndarray, x: np.ndarray, order) -> np.ndarray:
    """Greedily decrement columns while the covering stays feasible."""
    slack = A @ x - b
    for j in order:
        col = A[:, j]
        while x[j] > 0 and np.all(slack >= col):
            x[j] -= 1
            slack -= col
    return x


def _round_heuristics(A: np.ndarray, b: np.ndarray, xf: np.ndarray) -> np.ndarray:
    """Best of round-up and round-down-plus-greedy-repair, both trimmed."""
    frac = xf - np.floor(xf + INT_TOL)
    order = np.argsort(frac, kind="stable")
    up = np.ceil(xf - INT_TOL).astype(np.int64)
    up = _trim(A, b, up, order)

    down = np.floor(xf + INT_TOL).astype(np.int64)
    resid = b - A @ down
    while np.any(resid > 0):
        gain = np.minimum(A, np.maximum(resid, 0)[:, None]).sum(axis=0)
        j = int(np.argmax(gain))
        down[j] += 1
        resid -= A[:, j]
    down = _trim(A, b, down, order[::-1])
    return up if up.sum() <= down.sum() else down


def _fit_total(A: np.ndarray, b: np.ndarray, v: np.ndarray, total: int) -> np.ndarray:
    """Adjust ``v`` to sum to ``total``: add the column covering the most
    residual demand, or drop the unit whose loss uncovers the least."""
    v = v.copy()
    while v.sum() < total:
        resid = np.maximum(b - A @ v, 0)
        v[int(np.argmax(np.minimum(A, resid[:, None]).sum(axis=0)))] += 1
    while v.sum() > total:
        cover = A @ v
        used = np.flatnonzero(v > 0)
        short = [np.maximum(b - cover + A[:, j], 0).sum() for j in used]
        v[used[int(np.argmin(short))]] -= 1
    return v


def _swap_heuristic(A, b, x, rc, z, best, seed, deadline) -> np.ndarray:
    """Search for covers of ``ceil(z)`` rolls, then walk down from ``best``.

    Any cover using ``T`` rolls satisfies ``sum(rc * v) <= T - z`` for the
    root duals, so columns with larger reduced cost are left out. The
    first attempt goes straight for ``ceil(z)`` on (near) zero reduced
    cost columns from a few randomized roundings of the LP solution.
    """
    rng = np.random.default_rng(seed)
    target = math.ceil(z - INT_TOL)
    P = A.shape[1]

    def attempt(cols, start, total, moves):
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            return None
        sub = np.ascontiguousarray(A[:, cols])
        v0 = _fit_total(sub, b, start, total)
        v, _, _ = kernels.cover_swap(sub, b, v0, moves, SWAP_TABU, remaining)
        if v is None:
            return None
        full = np.zeros(P, dtype=np.int64)
        full[cols] = v
        return _trim(A, b, full, np.argsort(-rc, kind="stable"))

    if best.sum() > target:
        cols = np.flatnonzero((rc <= min(FOCUS_RC, target - z) + INT_TOL) | (x > INT_TOL))
        for rep in range(SWAP_RESTARTS):
            jitter = INT_TOL if rep == 0 else rng.random(len(cols))
            start = np.floor(x[cols] + jitter).astype(np.int64)
            found = attempt(cols, start, target, SWAP_MOVES // SWAP_RESTARTS)
            if found is not None:
                return found
    while best.sum() > target:
        total = int(best.sum()) - 1
        cols = np.flatnonzero(rc <= total - z + INT_TOL)
        found = attempt(cols, best[cols], total, SWAP_MOVES)
        if found is None or found.sum() >= best.sum():
            break
        best = found
    return best


def solve_irmp(
    pool: ColumnPool,
    demands,
    time_limit: float = 60.0,
    node_limit: int = 10**6,
    seed: int = 0,
) -> IpSolution:
    """Integer master problem over ``pool`` by LP-based branch and bound.

    Depth-first on the most fractional variable (up branch first), with a
    jump to the best-bound open node every ``RESTART_EVERY`` nodes. Nodes
    are pruned once ``ceil(bound - 1e-6)`` reaches the incumbent.
    ``proven`` is False when the time or node limit stopped the search.

    Before branching, the incumbent from rounding is improved by a residual
    rounding dive and a swap local search (see ``_swap_heuristic``).
    """
    t0 = time.perf_counter()
    A = np.asarray(pool.matrix(), dtype=np.int64)
    b = np.asarray(demands, dtype=np.int64)
    K, P = A.shape
    if P == 0 or not pool.covered().all():
        raise ContractError("pool must cover every item")
    Af = A.astype(float)

    def node_lp(lo, hi, warm):
        free = np.flatnonzero(hi > lo)
        ub_cols = [j for j in free if hi[j] < math.inf]
        resid = b - A @ lo
        rows = Af[:, free]
        rhs = resid.astype(float)
        if ub_cols:
            pos = {j: i for i, j in enumerate(free)}
            extra = np.zeros((len(ub_cols), len(free)))
            for r, j in enumerate(ub_cols):
                extra[r, pos[j]] = -1.0
            rows = np.vstack([rows, extra])
            rhs = np.concatenate([rhs, [-(hi[j] - lo[j]) for j in ub_cols]])
        # global labels: ("x", j), ("s", k) for demand rows, ("u", j) for bound rows
        row_labels = [("s", k) for k in range(K)] + [("u", j) for j in ub_cols]
        local = None
        if warm is not None:
            index = {("x", int(j)): i for i, j in enumerate(free)}
            for i, lab in enumerate(row_labels):
                index[lab] = -1 - i
            basis_labels, parent_rows = warm
            local = [index[lab] for lab in basis_labels if lab in index]
            # surplus of a row the parent did not have starts basic
            local += [index[lab] for lab in row_labels if lab not in parent_rows]
            if len(local) != len(row_labels):
                local = None
        if len(free) == 0:
            ok = np.all(resid <= 0)
            return (float(lo.sum()) if ok else math.inf), lo.astype(float), None
        sol = solve_lp(rows, rhs, warm_basis=local)
        if not sol.optimal:
            return math.inf, None, None
        x = lo.astype(float)
        x[free] += sol.primal
        basis = None
        if sol.basis:
            labels = tuple(
                ("x", int(free[lab])) if lab >= 0 else row_labels[-1 - lab] for lab in sol.basis
            )
            basis = (labels, frozenset(row_labels))
        return float(lo.sum()) + sol.objective, x, basis

    def dive(lo, hi, basis, x, cutoff):
        """Residual rounding: fix integer parts, round one variable up, re-solve."""
        lo = lo.copy()
        while True:
            fl = np.floor(x + INT_TOL)
            frac = np.where(x - fl > INT_TOL, x - fl, -1.0)
            lo = np.maximum(lo, fl.astype(np.int64))
            if frac.max() < 0:
                return lo
            j = int(np.argmax(frac))
            if fl[j] + 1 > hi[j]:
                return None
            lo[j] = fl[j] + 1
            bound, x, basis = node_lp(lo, hi, basis)
            if x is None or math.ceil(bound - INT_TOL) >= cutoff:
                return None

    lo0 = np.zeros(P, dtype=np.int64)
    hi0 = np.full(P, math.inf)
    root = solve_lp(Af, b.astype(float))
    if not root.optimal:
        raise SolverError("LP relaxation of a covering pool is infeasible")
    root_bound, xroot = root.objective, root.primal
    root_basis = None
    if root.basis:
        row_labels = tuple(("s", k) for k in range(K))
        labels = tuple(("x", lab) if lab >= 0 else row_labels[-1 - lab] for lab in root.basis)
        root_basis = (labels, frozenset(row_labels))
    target = math.ceil(root_bound - INT_TOL)
    best = _round_heuristics(A, b, xroot)
    best_obj = int(best.sum())
    dived = dive(lo0, hi0, root_basis, xroot, best_obj)
    if dived is not None:
        dived = _trim(A, b, dived, np.argsort(-xroot, kind="stable"))
        if _cover_ok(A, b, dived) and dived.sum() < best_obj:
            best, best_obj = dived, int(dived.sum())
    if best_obj > target:
        rc = np.maximum(1.0 - root.duals.values @ Af, 0.0)
        found = _swap_heuristic(A, b, xroot, rc, root_bound, best, seed, t0 + time_limit)
        if _cover_ok(A, b, found) and found.sum() < best_obj:
            best, best_obj = found, int(found.sum())

    stack = [_Node(lo0, hi0, root_bound, root_basis)]
    nodes = 0
    proven = best_obj <= target
    stopped = False
    x_cache = {id(stack[0]): xroot}
    while stack and not proven:
        if nodes >= node_limit or time.perf_counter() - t0 > time_limit:
            stopped = True
            break
        if nodes and nodes % RESTART_EVERY == 0:
            i = min(range(len(stack)), key=lambda i: (stack[i].bound, -i))
            stack.append(stack.pop(i))
        node = stack.pop()
        if math.ceil(node.bound - INT_TOL) >= best_obj:
            x_cache.pop(id(node), None)
            continue
        x = x_cache.pop(id(node), None)
        nodes += 1
        if x is None:
            bound, x, basis = node_lp(node.lo, node.hi, node.basis)
            if x is None or math.ceil(bound - INT_TOL) >= best_obj:
                continue
            node.bound, node.basis = bound, basis
        frac = x - np.floor(x)
        dist = np.minimum(frac, 1.0 - frac)
        if dist.max() <= INT_TOL:
            cand = np.round(x).astype(np.int64)
            if _cover_ok(A, b, cand) and cand.sum() < best_obj:
                best, best_obj = cand, int(cand.sum())
                if best_obj <= target:
                    proven = True
            continue
        heur = _round_heuristics(A, b, x)
        if heur.sum() < best_obj:
            best, best_obj = heur, int(heur.sum())
            if best_obj <= target:
                proven = True
                continue
        j = int(np.argmax(dist))
        down_hi = node.hi.copy()
        down_hi[j] = math.floor(x[j])
        up_lo = node.lo.copy()
        up_lo[j] = math.ceil(x[j])
        stack.append(_Node(node.lo, down_hi, node.bound, node.basis))
        stack.append(_Node(up_lo, node.hi, node.bound, node.basis))

    if not stopped and not stack:
        proven = True
    if proven:
        lower = float(root_bound) if best_obj <= target else float(best_obj)
    else:
        open_bounds = [n.bound for n in stack]
        lower = max(root_bound, min(open_bounds, default=root_bound))
    return IpSolution(
        values=[int(v) for v in best],
        objective=best_obj,
        proven=proven,
        lower_bound=lower,
        nodes=nodes,
        timings={"total": time.perf_counter() - t0},
    )


def enumeration_estimate(instance: Instance) -> int:
    return int(np.prod([int(m) + 1 for m in instance.multiplicities], dtype=object))


def oracle_enumerate_patterns(instance: Instance, budget: int = ENUM_BUDGET) -> ColumnPool:
    """Every feasible nonzero count vector, in lexicographic order."""
    estimate = enumeration_estimate(instance)
    if estimate > budget:
        raise OracleBudgetError(estimate, budget)
    K = instance.K
    sizes, variances = instance.sizes.tolist(), instance.variances.tolist()
    out = ColumnPool(K)
    counts = [0] * K

    def rec(k, lin, var):
        if k == K:
            if any(counts):
                out.add(Pattern(tuple(counts)))
            return
        c = 0
        while c <= instance.multiplicities[k]:
            lin_c, var_c = lin + c * sizes[k], var + c * variances[k]
            if not _fits(instance, lin_c, var_c):
                break
            counts[k] = c
            rec(k + 1, lin_c, var_c)
            c += 1
        counts[k] = 0

    rec(0, 0.0, 0.0)
    return out


def oracle_solve_exact(
    instance: Instance, time_limit: float = 600.0, budget: int = ENUM_BUDGET
) -> IpSolution:
    """Optimal integer value over the fully enumerated pattern set."""
    pool = oracle_enumerate_patterns(instance, budget)
    return solve_irmp(pool, instance.demands, time_limit=time_limit)


def oracle_lp_optimum(instance: Instance, budget: int = ENUM_BUDGET) -> float:
    """Master LP value over the fully enumerated pattern set."""
    pool = oracle_enumerate_patterns(instance, budget)
    return solve_rmp(pool, instance.demands).objective

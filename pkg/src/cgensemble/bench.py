"""Instance generators and the experiment harness.

Strategies are named like the experiment tables: ``baseline``, ``MC3``,
``MP10``, ``MP4MC3`` (or ``MC3MP4``), ``MCMP`` (3 columns and the family's
default path count), each optionally suffixed with ``+ES`` for early
stopping.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .integer import OracleBudgetError, oracle_solve_exact
from .model import CgConfig, ContractError, Instance, Item
from .pipeline import solve

log = logging.getLogger(__name__)

LINEAR_CAPACITY = 127.58
CHANCE_CAPACITY = 31.58
LINEAR_SIZE_RANGE = (1, 70)
LINEAR_DEMAND_RANGE = (50, 200)


class ServiceStat(NamedTuple):
    mean: float
    std: float
    number: int


# fmt: off
_MEANS = [0.73, 0.84, 0.97, 1.01, 1.06, 1.06, 1.06, 1.07, 1.12, 1.17,
          1.51, 1.52, 1.56, 1.57, 1.94, 1.96, 2.41, 2.42, 2.46, 2.47,
          2.48, 2.48, 2.49, 2.52, 2.59, 3.33, 3.81, 4.12, 6.18, 6.97]
_STDS = [1.73, 0.47, 0.43, 2.69, 0.85, 0.19, 0.9, 0.82, 0.97, 0.62,
         0.31, 0.62, 0.84, 0.57, 0.7, 0.55, 0.9, 1.15, 1.95, 0.99,
         0.66, 0.75, 0.25, 1.23, 1.21, 0.47, 0.87, 1.28, 0.46, 0.62]
_NUMBERS = [270, 55, 1618, 904, 576, 1085, 1035, 118, 1450, 313,
            44, 544, 697, 427, 363, 360, 701, 1425, 305, 228,
            1552, 378, 606, 180, 293, 1424, 501, 1019, 1580, 405]
# fmt: on

SERVICE_POOL: tuple[ServiceStat, ...] = tuple(
    ServiceStat(m, s, n) for m, s, n in zip(_MEANS, _STDS, _NUMBERS)
)


def gen_linear(K: int, seed: int) -> Instance:
    if K < 1:
        raise ContractError("K must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = LINEAR_SIZE_RANGE
    sizes = rng.integers(lo, hi + 1, size=K)
    lo, hi = LINEAR_DEMAND_RANGE
    demands = rng.integers(lo, hi + 1, size=K)
    items = [Item(demand=int(d), size=float(s)) for s, d in zip(sizes, demands)]
    return Instance(items, LINEAR_CAPACITY)


def gen_chance(K: int, seed: int, alpha: float = 0.99) -> Instance:
    if not 1 <= K <= len(SERVICE_POOL):
        raise ContractError(f"K must lie in [1, {len(SERVICE_POOL)}] (size of the service pool)")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(SERVICE_POOL), size=K, replace=False)
    items = [
        Item(demand=SERVICE_POOL[i].number, mean=SERVICE_POOL[i].mean, std=SERVICE_POOL[i].std)
        for i in picks
    ]
    return Instance(items, CHANCE_CAPACITY, alpha=alpha)


GENERATORS = {"linear": gen_linear, "chance": gen_chance}


def case_seed(master_seed: int, K: int, case: int) -> int:
    return int(np.random.SeedSequence([master_seed, K, case]).generate_state(1, np.uint64)[0])


_STRATEGY_RE = re.compile(
    r"^(?:(?P<base>baseline)|(?P<mcmp>MCMP)|MC(?P<n1>\d+)MP(?P<e1>\d+)|MP(?P<e2>\d+)MC(?P<n2>\d+)"
    r"|MC(?P<n3>\d+)|MP(?P<e3>\d+))(?P<es>\+ES)?$",
    re.IGNORECASE,
)


def parse_strategy(name: str, family: str = "linear") -> dict:
    """Config overrides implied by a strategy name."""
    m = _STRATEGY_RE.match(name.strip())
    if not m:
        raise ContractError(f"unknown strategy {name!r}")
    g = m.groupdict()
    if g["base"]:
        n, e = 1, 0
    elif g["mcmp"]:
        n, e = 3, (4 if family == "chance" else 10)
    else:
        n = int(g["n1"] or g["n2"] or g["n3"] or 1)
        e = int(g["e1"] or g["e2"] or g["e3"] or 0)
    if n < 1:
        raise ContractError(f"strategy {name!r} needs at least one column")
    out = {"num_column": n, "num_path": e}
    if g["es"]:
        out["convergence"] = False
    return out


@dataclass
class ExperimentRow:
    instance_id: str
    family: str
    K: int
    case: int
    strategy: str
    seed: int
    z_rmp: float
    z_irmp: int
    z_ip: int | None
    farley_lb: float
    abs_gap: float
    proven_optimal: bool
    certified_optimal: bool
    optimal: bool
    early_stopped: bool
    converged: bool
    irmp_proven: bool
    iterations: int
    pricing_calls: int
    columns_generated: int
    columns_selected: int
    t_exploration: float
    t_convergence: float
    t_selection: float
    t_integer: float


TIMING_COLUMNS = ("t_exploration", "t_convergence", "t_selection", "t_integer")
CSV_COLUMNS = tuple(f.name for f in fields(ExperimentRow))


@dataclass
class Cell:
    family: str
    K: int
    case: int
    strategy: str
    seed: int
    overrides: dict
    oracle: bool


def _run_cell(cell: Cell) -> ExperimentRow:
    instance = GENERATORS[cell.family](cell.K, cell.seed)
    cfg = dict(cell.overrides)
    cfg.update(parse_strategy(cell.strategy, cell.family))
    cfg["seed"] = cell.seed
    config = CgConfig(**cfg)
    rep = solve(instance, config).report
    z_ip = None
    if cell.oracle:
        try:
            ip = oracle_solve_exact(instance, time_limit=config.csp_time_limit)
            z_ip = ip.objective if ip.proven else None
        except OracleBudgetError:
            z_ip = None
    lower = rep.z_rmp if rep.converged else rep.farley_lb
    if rep.z_irmp < rep.z_rmp - 1e-6:
        raise AssertionError(f"{cell}: integer value below the LP value")
    if z_ip is not None and not (lower - 1e-6 <= z_ip <= rep.z_irmp):
        raise AssertionError(f"{cell}: bound chain violated ({lower}, {z_ip}, {rep.z_irmp})")
    t = rep.timings
    return ExperimentRow(
        instance_id=f"{cell.family}-K{cell.K}-{cell.case:03d}",
        family=cell.family,
        K=cell.K,
        case=cell.case,
        strategy=cell.strategy,
        seed=cell.seed,
        z_rmp=rep.z_rmp,
        z_irmp=rep.z_irmp,
        z_ip=z_ip,
        farley_lb=rep.farley_lb,
        abs_gap=rep.abs_gap,
        proven_optimal=rep.proven_optimal,
        certified_optimal=rep.certified_optimal,
        optimal=(rep.z_irmp == z_ip) if z_ip is not None else rep.certified_optimal,
        early_stopped=rep.early_stopped,
        converged=rep.converged,
        irmp_proven=rep.irmp_proven,
        iterations=rep.iterations,
        pricing_calls=rep.pricing_calls,
        columns_generated=rep.columns_generated,
        columns_selected=rep.columns_selected,
        t_exploration=t["exploration"],
        t_convergence=t["convergence"],
        t_selection=t["selection"],
        t_integer=t["integer"],
    )


def run_experiment(
    family: str,
    ks: Sequence[int],
    cases: int,
    strategies: Sequence[str],
    overrides: dict | None = None,
    seed: int = 0,
    workers: int = 1,
    oracle: bool = False,
) -> tuple[list[ExperimentRow], dict]:
    """Run every (K, case, strategy) cell and summarize against ``baseline``."""
    if family not in GENERATORS:
        raise ContractError(f"unknown family {family!r}")
    for s in strategies:
        parse_strategy(s, family)
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(CgConfig.field_names())
    if unknown:
        raise ContractError(f"unknown config fields: {sorted(unknown)}")
    cells = [
        Cell(family, K, i, s, case_seed(seed, K, i), overrides, oracle)
        for K in ks
        for i in range(cases)
        for s in strategies
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run_cell, cells))
    else:
        rows = []
        for c in cells:
            rows.append(_run_cell(c))
            log.info("%s %s: z_irmp=%d gap=%.3f", rows[-1].instance_id, c.strategy,
                     rows[-1].z_irmp, rows[-1].abs_gap)
    order = {s: i for i, s in enumerate(strategies)}
    rows.sort(key=lambda r: (r.K, r.instance_id, order[r.strategy]))
    return rows, summarize(rows, strategies)


def summarize(rows: Iterable[ExperimentRow], strategies: Sequence[str]) -> dict:
    rows = list(rows)
    out: dict = {"per_k": {}}
    for K in sorted({r.K for r in rows}):
        at_k = [r for r in rows if r.K == K]
        base = {r.instance_id: r for r in at_k if r.strategy == "baseline"}
        hard = {i for i, r in base.items() if r.abs_gap >= 1 - 1e-6}
        per_s = {}
        for s in strategies:
            rs = [r for r in at_k if r.strategy == s]
            if not rs:
                continue
            stats = {
                "cases": len(rs),
                "optimal_count": sum(r.optimal for r in rs),
                "optimal_ratio": f"{sum(r.optimal for r in rs)}/{len(rs)}",
                "frac_gap_ge_1": _mean([r.abs_gap >= 1 - 1e-6 for r in rs]),
                "mean_abs_gap": _mean([r.abs_gap for r in rs]),
                "mean_columns_generated": _mean([r.columns_generated for r in rs]),
                "mean_columns_selected": _mean([r.columns_selected for r in rs]),
                "mean_iterations": _mean([r.iterations for r in rs]),
                "mean_pricing_calls": _mean([r.pricing_calls for r in rs]),
                "early_stopped": sum(r.early_stopped for r in rs),
            }
            if base:
                win = tie = lose = 0
                for r in rs:
                    b = base[r.instance_id].z_irmp
                    win += r.z_irmp < b
                    tie += r.z_irmp == b
                    lose += r.z_irmp > b
                stats.update(win=win, tie=tie, lose=lose)
                gaps = [r.abs_gap for r in rs if r.instance_id in hard]
                stats["mean_abs_gap_where_baseline_gap_ge_1"] = _mean(gaps) if gaps else None
                stats["baseline_hard_cases"] = len(gaps)
            per_s[s] = stats
        out["per_k"][str(K)] = per_s
    return out


def _mean(xs) -> float:
    xs = list(xs)
    return float(np.mean(xs)) if xs else math.nan


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def rows_to_csv(rows: Iterable[ExperimentRow], include_timings: bool = True) -> str:
    cols = [c for c in CSV_COLUMNS if include_timings or c not in TIMING_COLUMNS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def write_report(rows: list[ExperimentRow], summary: dict, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    csv_path.write_text(rows_to_csv(rows))
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def format_summary(summary: dict) -> str:
    lines = []
    head = f"{'K':>4} {'strategy':<14} {'win':>4} {'tie':>4} {'lose':>4} {'opt':>7} {'gap>=1':>7} {'cols':>8} {'iters':>7}"
    lines.append(head)
    for K, per_s in summary["per_k"].items():
        for s, st in per_s.items():
            lines.append(
                f"{K:>4} {s:<14} {st.get('win', '-'):>4} {st.get('tie', '-'):>4} "
                f"{st.get('lose', '-'):>4} {st['optimal_ratio']:>7} {st['frac_gap_ge_1']:>7.2f} "
                f"{st['mean_columns_generated']:>8.1f} {st['mean_iterations']:>7.1f}"
            )
    return "\n".join(lines)

"""Command-line entry point: ``solve``, ``gen``, ``bench`` and ``oracle``.

Configuration precedence for ``solve`` is built-in defaults, then the
``--config`` JSON file, then the ``--strategy`` preset, then individual
flags given on the command line.

Exit codes: 0 success, 1 malformed input or internal error, 2 infeasible
instance, 3 oracle refused an instance over its enumeration budget.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import (
    GENERATORS,
    case_seed,
    format_summary,
    parse_strategy,
    rows_to_csv,
    run_experiment,
    write_report,
)
from .integer import ENUM_BUDGET, OracleBudgetError, oracle_enumerate_patterns, solve_irmp
from .model import CgConfig, ContractError, InfeasibleInstanceError, Instance
from .pipeline import solve
from .simplex import solve_rmp

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3

log = logging.getLogger("cgensemble")

# CgConfig fields exposed as --dashed-flags, with their types
CONFIG_FLAGS = {
    "num_column": int,
    "num_path": int,
    "depth": int,
    "selection_times": int,
    "dual_objective_threshold": float,
    "dual_throttles": int,
    "sub_time_limit": float,
    "sub_throttles": int,
    "csp_time_limit": float,
    "csp_node_limit": int,
    "sample_fraction": float,
    "seed": int,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for name, typ in CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), type=typ, default=None, dest=name)
    p.add_argument(
        "--convergence",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="run to convergence (--no-convergence enables early stopping)",
    )


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ContractError(f"{path}: {exc.strerror}") from None
    if not isinstance(data, dict):
        raise ContractError(f"{path}: expected a JSON object")
    return data


def _strategy_overrides(name: str, kind: str) -> dict:
    key = name.strip().lower()
    if key == "mc":
        return {"num_path": 0}
    if key == "mp":
        return {"num_column": 1}
    return parse_strategy(name, kind)


def build_config(args: argparse.Namespace, kind: str) -> CgConfig:
    fields = set(CgConfig.field_names())
    values: dict = {}
    if getattr(args, "config", None):
        raw = _read_json(args.config)
        unknown = set(raw) - fields
        if unknown:
            raise ContractError(f"unknown config fields: {sorted(unknown)}")
        values.update(raw)
    if getattr(args, "strategy", None):
        values.update(_strategy_overrides(args.strategy, kind))
    for name in list(CONFIG_FLAGS) + ["convergence"]:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        return CgConfig(**values)
    except TypeError as exc:
        raise ContractError(str(exc)) from None


def _load_instance(path: str) -> Instance:
    try:
        return Instance.load(path)
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ContractError(f"{path}: {exc.strerror}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ContractError, InfeasibleInstanceError)):
            raise
        raise ContractError(f"{path}: {exc}") from None


def cmd_solve(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    config = build_config(args, instance.kind)
    result = solve(instance, config)
    text = json.dumps(result.report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    rep = result.report
    log.info(
        "z_rmp=%.6f z_irmp=%d gap=%.4f proven_optimal=%s", rep.z_rmp, rep.z_irmp, rep.abs_gap,
        rep.proven_optimal,
    )
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    gen = GENERATORS[args.family]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = case_seed(args.seed, args.k, i)
        inst = gen(args.k, seed) if args.family == "linear" else gen(args.k, seed, args.alpha)
        (out / f"case_{i}.json").write_text(inst.dumps())
    log.info("wrote %d %s instances (K=%d) to %s", args.count, args.family, args.k, out)
    return EXIT_OK


BENCH_KEYS = {"family", "k", "cases", "strategies", "seed", "workers", "oracle", "config"}


def cmd_bench(args: argparse.Namespace) -> int:
    plan: dict = {
        "family": "linear",
        "k": [10],
        "cases": 3,
        "strategies": ["baseline", "MC3"],
        "seed": 0,
        "workers": 1,
        "oracle": False,
    }
    overrides: dict = {}
    if args.config:
        raw = _read_json(args.config)
        fields = set(CgConfig.field_names())
        for key, value in raw.items():
            if key == "config":
                overrides.update(value)
            elif key in fields:
                overrides[key] = value
            elif key in BENCH_KEYS:
                plan[key] = value
            else:
                raise ContractError(f"unknown bench config key {key!r}")
    for key in ("family", "k", "cases", "strategies", "workers"):
        v = getattr(args, key)
        if v is not None:
            plan[key] = v
    if args.bench_seed is not None:
        plan["seed"] = args.bench_seed
    if args.oracle:
        plan["oracle"] = True
    ks = plan["k"] if isinstance(plan["k"], list) else [plan["k"]]
    rows, summary = run_experiment(
        plan["family"],
        [int(k) for k in ks],
        int(plan["cases"]),
        list(plan["strategies"]),
        overrides,
        seed=int(plan["seed"]),
        workers=int(plan["workers"]),
        oracle=bool(plan["oracle"]),
    )
    summary = {"family": plan["family"], "seed": int(plan["seed"]), "overrides": overrides, **summary}
    csv_path, json_path = write_report(rows, summary, args.out)
    if args.format == "csv":
        sys.stdout.write(rows_to_csv(rows))
    elif args.format == "json":
        sys.stdout.write(json_path.read_text())
    else:
        print(format_summary(summary))
    log.info("wrote %s and %s", csv_path, json_path)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    try:
        pool = oracle_enumerate_patterns(instance, budget=args.budget)
    except OracleBudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    ip = solve_irmp(pool, instance.demands, time_limit=args.time_limit)
    z_mp = solve_rmp(pool, instance.demands).objective
    print(f"z_ip {ip.objective}")
    print(f"z_mp {z_mp:.9g}")
    print(f"patterns {len(pool)}")
    print(f"proven {str(ip.proven).lower()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgensemble", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="column generation, selection and integer solve")
    p.add_argument("--instance", required=True)
    p.add_argument("--config", help="JSON file with CgConfig fields")
    p.add_argument("--output", "-o", help="report path (default: stdout)")
    p.add_argument("--strategy", help="baseline, mc, mp, mcmp or a name like MC3, MP4MC3, MCMP+ES")
    _add_config_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="write generated instances as case_<i>.json")
    p.add_argument("--family", choices=sorted(GENERATORS), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.99, help="chance family only")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run an experiment grid and write report.csv/summary.json")
    p.add_argument("--config", help="JSON: family, k, cases, strategies, seed, workers, oracle and CgConfig fields")
    p.add_argument("--family", choices=sorted(GENERATORS), default=None)
    p.add_argument("--k", type=int, nargs="+", default=None)
    p.add_argument("--cases", type=int, default=None)
    p.add_argument("--strategies", nargs="+", default=None)
    p.add_argument("--seed", type=int, default=None, dest="bench_seed")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--oracle", action="store_true", help="compare against full enumeration when in budget")
    p.add_argument("--out", default="bench_out")
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="exact optimum by full pattern enumeration (tiny instances)")
    p.add_argument("--instance", required=True)
    p.add_argument("--budget", type=int, default=ENUM_BUDGET)
    p.add_argument("--time-limit", type=float, default=600.0)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InfeasibleInstanceError as exc:
        print(f"infeasible instance: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())

"""Compare the compiled and pure-Python kernels on realistic inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Inputs come from column generation on generated instances: the duals of
the final restricted master feed the knapsack kernels and the final pool
feeds the swap search. Both backends must return identical results; the
script fails loudly if they do not.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from cgensemble import CgConfig, run, solve_lp
from cgensemble.bench import gen_chance, gen_linear
from cgensemble.kernels import backends


def timed(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def search_args(instance, duals, n):
    pi = duals.values
    order = sorted(range(instance.K), key=lambda k: (-pi[k] / instance.sizes[k], k))
    return (
        [float(pi[k]) for k in order],
        [float(instance.sizes[k]) for k in order],
        [float(instance.variances[k]) for k in order],
        [int(instance.multiplicities[k]) for k in order],
        instance.capacity * (1 + 1e-9),
        float(instance.safety),
        n,
        1e9,
    )


def swap_args(pool, demands):
    A = np.ascontiguousarray(pool.matrix(), dtype=np.int64)
    b = np.ascontiguousarray(demands, dtype=np.int64)
    x = solve_lp(A.astype(float), b.astype(float)).primal
    v = np.floor(x + 1e-6).astype(np.int64)
    total = math.ceil(x.sum() - 1e-6)
    while v.sum() < total:
        res = np.maximum(b - A @ v, 0)
        v[int(np.argmax(np.minimum(A, res[:, None]).sum(0)))] += 1
    return A, b, v, 400, 4, 1e9


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    impls = backends()
    if "cython" not in impls:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    cases = []
    for K in (20, 50):
        inst = gen_linear(K, 7)
        art = run(inst, CgConfig(num_column=1, num_path=0))
        duals = art.state.last_lp.duals
        sizes = inst.sizes.astype(int).tolist()
        cap = int(math.floor(inst.capacity))
        cases.append((f"dp_topn  linear K={K} n=3", "dp_topn", (duals.values.tolist(), sizes, cap, 3)))
        if K <= 20:
            # branch and bound on integer sizes is what the DP replaces; keep it small
            cases.append((f"search   linear K={K} n=3", "search", search_args(inst, duals, 3)))
        cases.append((f"cover_swap linear K={K}", "cover_swap", swap_args(art.pool, inst.demands)))
    for K in (8, 12):
        inst = gen_chance(K, 7)
        art = run(inst, CgConfig(num_column=1, num_path=0))
        cases.append((f"search   chance K={K} n=3", "search", search_args(inst, art.state.last_lp.duals, 3)))

    print(f"{'kernel':<28} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}", flush=True)
    for label, name, fargs in cases:
        t_py, out_py = timed(lambda: getattr(impls["python"], name)(*fargs), args.repeat)
        t_cy, out_cy = timed(lambda: getattr(impls["cython"], name)(*fargs), args.repeat)
        if name == "search":
            same = out_py[0] == out_cy[0]
        elif name == "cover_swap":
            same = out_py[1] == out_cy[1] and (
                (out_py[0] is None) == (out_cy[0] is None)
                and (out_py[0] is None or np.array_equal(out_py[0], out_cy[0]))
            )
        else:
            same = out_py == out_cy
        if not same:
            raise SystemExit(f"{label}: backends disagree")
        print(f"{label:<28} {t_py:>11.4f} {t_cy:>11.4f} {t_py / max(t_cy, 1e-9):>7.1f}x", flush=True)


if __name__ == "__main__":
    main()

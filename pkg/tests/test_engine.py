import math

import numpy as np
import pytest

from cgensemble import (
    CgConfig,
    ColumnPool,
    Pattern,
    column_init,
    early_stop_check,
    farley_bound,
    price,
    run,
    run_baseline,
    run_mc,
    run_mp,
    solve_rmp,
)
from cgensemble.bench import gen_linear
from cgensemble.engine import CgState

import oracles
from test_model import gaussian_one, linear
from tiny import tiny_set

THREE = dict(sizes=[3, 4, 5], capacity=10, demands=[2, 2, 2])


def three():
    return linear(THREE["sizes"], THREE["capacity"], THREE["demands"])


def full_lp(inst):
    pats = oracles.grid_patterns(inst.sizes, inst.variances, inst.capacity, inst.safety)
    return oracles.lp_optimum(pats, inst.demands)


def test_column_init_examples():
    assert [p.counts for p in column_init(linear([3, 4, 5], 10))] == [(3, 0, 0), (0, 2, 0), (0, 0, 2)]
    assert [p.counts for p in column_init(linear([5], 10))] == [(2,)]
    assert [p.counts for p in column_init(gaussian_one())] == [(25,)]


def test_baseline_single_item():
    pool, state = run_baseline(linear([5], 10, [4]), CgConfig())
    assert [p.counts for p in pool] == [(2,)]
    assert state.pricing_calls == 1
    assert state.last_lp.objective == pytest.approx(2.0)
    assert state.converged


def test_baseline_reaches_master_lp():
    inst = three()
    pool, state = run_baseline(inst, CgConfig())
    assert state.last_lp.objective == pytest.approx(full_lp(inst), abs=1e-6)
    assert price(inst, state.last_lp.duals).best.cost >= -1e-9


def test_mc_with_one_column_is_baseline():
    inst = linear([3, 4, 5, 6.5], 17, [5, 3, 7, 2])
    a, sa = run_baseline(inst, CgConfig())
    b, sb = run_mc(inst, CgConfig(), n=1)
    assert [p.counts for p in a] == [p.counts for p in b]
    assert sa.objective_trace == sb.objective_trace


def test_mc_needs_no_more_iterations():
    inst = three()
    _, base = run_baseline(inst, CgConfig())
    _, mc = run_mc(inst, CgConfig(), n=3)
    assert mc.total_iterations <= base.total_iterations
    assert mc.last_lp.objective == pytest.approx(base.last_lp.objective, abs=1e-6)


def test_mp_without_paths_is_baseline():
    inst = linear([3, 4, 5, 6.5], 17, [5, 3, 7, 2])
    a = run(inst, CgConfig(num_column=1, num_path=0))
    b, _ = run_baseline(inst, CgConfig())
    assert [p.counts for p in a.pool] == [p.counts for p in b]


def test_one_short_path_adds_one_pricing_call():
    inst = gen_linear(8, 1)
    cfg = CgConfig(num_column=1, num_path=1, depth=1, seed=3)
    _, mp = run_mp(inst, cfg, n=1, paths=1)
    assert len(mp.path_traces) == 1
    # one query on the path, then iterations + 1 in the convergence stage
    assert mp.pricing_calls == 1 + mp.iterations + 1
    _, base = run_baseline(inst, cfg)
    assert mp.last_lp.objective == pytest.approx(base.last_lp.objective, abs=1e-6)


def test_mp_matches_baseline_value():
    inst = three()
    cfg = CgConfig(num_column=1, num_path=3, depth=2, seed=7)
    mp_pool, mp = run_mp(inst, cfg, n=1, paths=3)
    base_pool, base = run_baseline(inst, cfg)
    assert mp.last_lp.objective == pytest.approx(base.last_lp.objective, abs=1e-6)
    assert len(mp_pool) >= len(base_pool)


def test_mcmp_dispatch_uses_multi_column_paths():
    inst = gen_linear(12, 4)
    art = run(inst, CgConfig(num_column=3, num_path=4, seed=1))
    assert len(art.state.path_traces) == 4
    assert art.state.converged
    _, base = run_baseline(inst, CgConfig())
    assert art.state.last_lp.objective == pytest.approx(base.last_lp.objective, abs=1e-6)


def _state_with(trace):
    s = CgState(ColumnPool(1))
    s.objective_trace = list(trace)
    return s


def _trace(improvements, start=10.0):
    return list(start - np.concatenate([[0.0], np.cumsum(improvements)]))


def test_early_stop_rule():
    cfg = CgConfig(dual_objective_threshold=0.05, dual_throttles=4)
    assert early_stop_check(_state_with(_trace([0.06, 0.04, 0.04, 0.04, 0.04])), cfg)
    assert not early_stop_check(_state_with(_trace([0.04, 0.04, 0.06, 0.04])), cfg)
    assert early_stop_check(_state_with(_trace([0.3, 0.01])), cfg.replace(dual_throttles=1))
    s = _state_with([5.0])
    s.consecutive_sub_timeouts = cfg.sub_throttles
    assert early_stop_check(s, cfg)


def test_early_stop_in_a_run():
    inst = gen_linear(30, 2)
    cfg = CgConfig(num_column=1, num_path=0, convergence=False)
    art = run(inst, cfg)
    trace = art.state.objective_trace
    steps = -np.diff(trace)
    if art.early_stopped:
        assert np.all(steps[-4:] < 0.05)
        # no earlier window of four small steps
        for i in range(len(steps) - 4):
            assert not np.all(steps[i : i + 4] < 0.05)
    _, full = run_baseline(inst, CgConfig())
    assert art.farley_lb <= full.last_lp.objective + 1e-6


def test_farley_examples():
    inst = linear([5], 10, [4])
    pool = ColumnPool(1, [Pattern((2,))])
    lp = solve_rmp(pool, inst.demands)
    best = price(inst, lp.duals).best
    assert farley_bound(lp, best, inst.demands) == pytest.approx(2.0)
    zero = solve_rmp(ColumnPool(1, [Pattern((2,))]), [4])
    zero.duals.values[:] = 0
    assert farley_bound(zero, best, [4]) == -math.inf


def test_farley_at_every_iteration_is_a_lower_bound():
    inst = three()
    z_mp = full_lp(inst)
    _, state = run_baseline(inst, CgConfig())
    assert state.farley_trace
    assert all(lb <= z_mp + 1e-6 for lb in state.farley_trace)
    assert state.farley_trace[-1] == pytest.approx(state.last_lp.objective, abs=1e-6)


@pytest.mark.parametrize("cfg", [
    CgConfig(num_column=1, num_path=0),
    CgConfig(num_column=3, num_path=0),
    CgConfig(num_column=1, num_path=4, seed=5),
    CgConfig(num_column=3, num_path=4, seed=5),
])
def test_all_strategies_converge_to_master_lp(cfg):
    for inst in tiny_set(20, seed=13):
        art = run(inst, cfg)
        assert art.state.converged
        assert art.state.last_lp.objective == pytest.approx(full_lp(inst), abs=1e-6)
        assert all(lb <= full_lp(inst) + 1e-6 for lb in art.state.farley_trace)

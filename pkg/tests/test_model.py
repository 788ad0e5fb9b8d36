import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cgensemble import (
    CgConfig,
    ColumnPool,
    ContractError,
    DualVector,
    InfeasibleInstanceError,
    Instance,
    Item,
    Pattern,
    pattern_feasible,
    reduced_cost,
    singleton_pattern,
)
from cgensemble.bench import SERVICE_POOL

import oracles


def linear(sizes, capacity, demands=None):
    demands = demands or [1] * len(sizes)
    return Instance([Item(demand=d, size=s) for s, d in zip(sizes, demands)], capacity)


def gaussian_one(safety=2.33, capacity=31.58):
    return Instance([Item(demand=1, mean=1.0, std=0.5)], capacity, safety=safety)


def test_exact_capacity_is_feasible():
    inst = linear([3, 4, 5], 10)
    assert pattern_feasible(inst, (2, 1, 0))
    assert not pattern_feasible(inst, (0, 0, 3))


def test_gaussian_feasibility_boundary():
    inst = gaussian_one()
    # 25 + 2.33*0.5*5 = 30.825 fits, 26 + 2.33*0.5*sqrt(26) ~ 31.94 does not
    assert pattern_feasible(inst, (25,))
    assert not pattern_feasible(inst, (26,))
    assert oracles.feasible([25], [1.0], [0.25], 31.58, 2.33)
    assert not oracles.feasible([26], [1.0], [0.25], 31.58, 2.33)


def test_fractional_capacity_with_integer_sizes():
    inst = linear([70, 57], 127.58)
    assert pattern_feasible(inst, (1, 1))
    assert not pattern_feasible(inst, (0, 3))


def test_feasibility_length_mismatch():
    with pytest.raises(ContractError):
        pattern_feasible(linear([3, 4, 5], 10), (1, 1))


def test_reduced_cost_examples():
    pi = DualVector([0.4, 0.5, 0.6])
    assert reduced_cost(Pattern((2, 1, 0)), pi) == pytest.approx(-0.3, abs=1e-12)
    assert reduced_cost(Pattern((0, 0, 2)), pi) == pytest.approx(-0.2, abs=1e-12)
    assert reduced_cost(Pattern((1, 2, 3)), DualVector([0, 0, 0])) == 1.0
    with pytest.raises(ContractError):
        reduced_cost(Pattern((1, 2)), pi)


def test_singleton_examples():
    assert singleton_pattern(linear([3, 4, 5], 10), 0).counts == (3, 0, 0)
    assert singleton_pattern(linear([70], 127.58), 0).counts == (1,)
    assert singleton_pattern(gaussian_one(), 0).counts == (25,)


def test_pattern_count_for_three_items():
    inst = linear([3, 4, 5], 10)
    brute = [
        (a, b, c)
        for a in range(4)
        for b in range(3)
        for c in range(3)
        if (a, b, c) != (0, 0, 0) and 3 * a + 4 * b + 5 * c <= 10
    ]
    assert len(brute) == 11
    assert sorted(brute) == sorted(oracles.grid_patterns([3, 4, 5], [0, 0, 0], 10))
    assert all(pattern_feasible(inst, p) for p in brute)


def test_item_that_never_fits_is_rejected():
    with pytest.raises(InfeasibleInstanceError) as err:
        linear([3, 11], 10)
    assert err.value.item == 1
    with pytest.raises(InfeasibleInstanceError):
        Instance([Item(demand=1, mean=30.0, std=2.0)], 31.58, alpha=0.99)


def test_invalid_items_and_mixing():
    with pytest.raises(ContractError):
        Item(demand=0, size=3)
    with pytest.raises(ContractError):
        Item(demand=1, size=-1)
    with pytest.raises(ContractError):
        Item(demand=1, mean=2.0, std=-0.1)
    with pytest.raises(ContractError):
        Instance([Item(demand=1, size=3), Item(demand=1, mean=2.0, std=0.1)], 10)
    with pytest.raises(ContractError):
        Instance([Item(demand=1, mean=2.0, std=0.1)], 10, alpha=0.4)


def test_default_safety_is_normal_quantile():
    inst = Instance([Item(demand=1, mean=1.0, std=0.5)], 31.58)
    assert inst.alpha == 0.99
    assert inst.safety == pytest.approx(oracles.safety_of(0.99), abs=1e-12)


def test_json_round_trip(tmp_path):
    for inst in (linear([3, 4, 5], 10, [2, 3, 4]), Instance(
        [Item(demand=3, mean=0.73, std=1.73), Item(demand=2, mean=2.0, std=0.1)], 31.58, alpha=0.95
    )):
        path = tmp_path / "inst.json"
        path.write_text(inst.dumps())
        back = Instance.load(path)
        assert back.to_dict() == inst.to_dict()
        assert np.array_equal(back.multiplicities, inst.multiplicities)
    assert json.loads(linear([3], 10).dumps())["kind"] == "linear"


def test_from_dict_rejects_malformed():
    with pytest.raises(ContractError):
        Instance.from_dict({"kind": "linear", "items": [{"mean": 1, "std": 1, "demand": 1}], "capacity": 5})
    with pytest.raises(ContractError):
        Instance.from_dict({"kind": "other", "items": [], "capacity": 5})
    with pytest.raises(ContractError):
        Instance.from_dict({"items": []})


def test_pool_deduplicates_in_order():
    pool = ColumnPool(3)
    assert pool.add(Pattern((1, 0, 0)))
    assert pool.add(Pattern((0, 2, 0)))
    assert not pool.add(Pattern((1, 0, 0)))
    assert [p.counts for p in pool] == [(1, 0, 0), (0, 2, 0)]
    assert Pattern((0, 2, 0)) in pool
    assert pool.matrix().shape == (3, 2)
    assert pool.covered().tolist() == [True, True, False]
    with pytest.raises(ContractError):
        pool.add(Pattern((1, 1)))
    with pytest.raises(ContractError):
        Pattern((0, 0))


def test_dual_vector_clamps_small_negatives():
    assert DualVector([-1e-9, 0.5]).values.tolist() == [0.0, 0.5]
    with pytest.raises(ContractError):
        DualVector([-0.1, 0.5])


def test_config_validation():
    with pytest.raises(ContractError):
        CgConfig(num_column=0)
    with pytest.raises(ContractError):
        CgConfig(sample_fraction=0.0)
    with pytest.raises(ContractError):
        CgConfig(seed=-1)
    with pytest.raises(ContractError):
        CgConfig().replace(bogus=1)
    cfg = CgConfig()
    assert cfg.paths_for(linear([3], 10)) == 10
    assert cfg.paths_for(gaussian_one()) == 4
    assert cfg.depth_for(linear([3, 4], 10)) == 2


def test_service_pool_first_row():
    assert len(SERVICE_POOL) == 30
    first = SERVICE_POOL[0]
    assert (first.mean, first.std, first.number) == (0.73, 1.73, 270)


sizes = st.lists(st.integers(2, 9), min_size=1, max_size=4)


@given(sizes, st.integers(9, 15), st.data())
def test_feasibility_is_monotone(szs, V, data):
    V = max(V, max(szs))
    inst = linear(szs, V)
    q = data.draw(st.tuples(*(st.integers(0, V // s) for s in szs)))
    if not any(q) or not pattern_feasible(inst, q):
        return
    p = tuple(data.draw(st.integers(0, c)) for c in q)
    if any(p):
        assert pattern_feasible(inst, p)


@given(
    st.lists(st.floats(0.5, 9.0), min_size=1, max_size=4),
    st.lists(st.floats(0.0, 2.0), min_size=4, max_size=4),
    st.sampled_from([0.8, 0.9, 0.95, 0.99]),
)
def test_singleton_is_maximal(means, stds, alpha):
    try:
        inst = Instance(
            [Item(demand=1, mean=m, std=s) for m, s in zip(means, stds)], 15.0, alpha=alpha
        )
    except InfeasibleInstanceError:
        return
    for k in range(inst.K):
        p = singleton_pattern(inst, k)
        m = p.counts[k]
        assert m >= 1 and pattern_feasible(inst, p.counts)
        bigger = list(p.counts)
        bigger[k] += 1
        assert not pattern_feasible(inst, bigger)
        s = inst.safety
        assert m * means[k] + s * stds[k] * math.sqrt(m) <= 15.0 * (1 + 1e-9)


@given(
    st.lists(st.integers(0, 5), min_size=3, max_size=3).filter(any),
    st.lists(st.floats(0, 1), min_size=3, max_size=3),
    st.floats(0.1, 5.0),
)
def test_reduced_cost_is_affine(counts, pi, lam):
    p = Pattern(tuple(counts))
    lhs = reduced_cost(p, np.array(pi) * lam)
    rhs = 1 - lam * (1 - reduced_cost(p, pi))
    assert lhs == pytest.approx(rhs, abs=1e-9)

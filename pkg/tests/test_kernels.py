import numpy as np
import pytest

from cgensemble import CgConfig, kernels, run, solve_lp
from cgensemble.bench import gen_linear

import oracles

BACKENDS = kernels.backends()
both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")


def test_backend_selected():
    assert kernels.BACKEND in BACKENDS
    assert "python" in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_dp_and_search_agree(name):
    impl = BACKENDS[name]
    rng = np.random.default_rng(4)
    for _ in range(40):
        K = int(rng.integers(1, 6))
        sizes = rng.integers(2, 12, size=K)
        cap = int(rng.integers(sizes.max(), 30))
        pi = rng.uniform(0, 1, size=K) / sizes * 1.3
        order = sorted(range(K), key=lambda k: (-pi[k] / sizes[k], k))
        dp = impl.dp_topn(pi.tolist(), sizes.tolist(), cap, 3)
        found, timed_out, _ = impl.search(
            [pi[k] for k in order], [float(sizes[k]) for k in order], [0.0] * K,
            [cap // int(sizes[k]) for k in order], float(cap), 0.0, 3, 1e9,
        )
        assert not timed_out
        assert dp[0][0] == pytest.approx(found[0][0], abs=1e-9)
        want = 1 - oracles.brute_price(pi, sizes, [0] * K, cap)
        assert dp[0][0] == pytest.approx(want, abs=1e-9)
        values = [v for v, _ in dp]
        assert values == sorted(values, reverse=True)
        assert len({c for _, c in dp}) == len(dp)


@both
def test_dp_backends_identical():
    rng = np.random.default_rng(8)
    for _ in range(30):
        K = int(rng.integers(1, 8))
        sizes = rng.integers(1, 40, size=K).tolist()
        pi = rng.uniform(0, 0.1, size=K).tolist()
        outs = [BACKENDS[n].dp_topn(pi, sizes, 127, 4) for n in ("python", "cython")]
        assert outs[0] == outs[1]


def _swap_case(seed):
    inst = gen_linear(20, seed)
    art = run(inst, CgConfig(num_column=3, num_path=0))
    A = np.ascontiguousarray(art.pool.matrix(), dtype=np.int64)
    b = np.ascontiguousarray(inst.demands, dtype=np.int64)
    x = solve_lp(A.astype(float), b.astype(float)).primal
    v = np.floor(x + 1e-6).astype(np.int64)
    total = int(np.ceil(x.sum() - 1e-6)) + 1
    while v.sum() < total:
        res = np.maximum(b - A @ v, 0)
        v[int(np.argmax(np.minimum(A, res[:, None]).sum(0)))] += 1
    return A, b, v


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_cover_swap_returns_a_cover_of_the_same_size(name):
    for seed in range(3):
        A, b, v0 = _swap_case(seed)
        v, moves, timed_out = BACKENDS[name].cover_swap(A, b, v0, 2000, 4, 1e9)
        assert not timed_out
        if v is not None:
            v = np.asarray(v)
            assert v.sum() == v0.sum()
            assert np.all(A @ v >= b) and np.all(v >= 0)


@both
def test_cover_swap_backends_follow_the_same_path():
    for seed in range(3):
        A, b, v0 = _swap_case(seed)
        outs = [BACKENDS[n].cover_swap(A, b, v0, 500, 4, 1e9) for n in ("python", "cython")]
        (v1, m1, _), (v2, m2, _) = outs
        assert m1 == m2
        assert (v1 is None) == (v2 is None)
        if v1 is not None:
            assert np.array_equal(np.asarray(v1), np.asarray(v2))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_cover_swap_with_an_easy_target(name):
    A = np.ascontiguousarray([[2, 0, 1], [0, 2, 1]], dtype=np.int64)
    b = np.ascontiguousarray([2, 2], dtype=np.int64)
    v, moves, _ = BACKENDS[name].cover_swap(A, b, np.array([2, 0, 0], dtype=np.int64), 50, 2, 1e9)
    assert v is not None
    assert np.all(A @ np.asarray(v) >= b) and int(np.sum(v)) == 2

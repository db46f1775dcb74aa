import numpy as np
import pytest

from oracles import vertex_enumeration
from pulse_recover.lp import solve_lp


def _random_bounded_lp(rng, n, m_ub, m_eq):
    # nonnegative rows with a positive budget row keep the polytope bounded
    A_ub = rng.uniform(-1, 1, (m_ub, n))
    A_ub = np.vstack([A_ub, np.ones((1, n))])
    x0 = rng.uniform(0, 1, n)
    b_ub = A_ub @ x0 + rng.uniform(0.1, 1.0, m_ub + 1)
    A_eq = rng.uniform(-1, 1, (m_eq, n)) if m_eq else None
    b_eq = A_eq @ x0 if m_eq else None
    c = rng.normal(size=n)
    return c, A_ub, b_ub, A_eq, b_eq


@pytest.mark.parametrize("seed", range(25))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    m_eq = int(rng.integers(0, min(3, n)))
    m_ub = int(rng.integers(1, 4))
    c, A_ub, b_ub, A_eq, b_eq = _random_bounded_lp(rng, n, m_ub, m_eq)
    ref, _ = vertex_enumeration(c, A_ub, b_ub, A_eq, b_eq)
    res = solve_lp(c, A_ub, b_ub, A_eq, b_eq)
    assert res.status == "optimal"
    assert res.fun == pytest.approx(ref, abs=1e-8)
    assert np.all(res.x >= -1e-9)
    assert np.all(A_ub @ res.x <= b_ub + 1e-8)


def test_equality_only_transport():
    # 2x2 transport problem; optimum is the cheap diagonal
    c = np.array([1.0, 3.0, 3.0, 1.0])
    A_eq = np.array([[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0]], dtype=float)
    b_eq = np.array([1.0, 1.0, 1.0])
    res = solve_lp(c, A_eq=A_eq, b_eq=b_eq)
    assert res.status == "optimal"
    assert res.fun == pytest.approx(2.0, abs=1e-8)
    assert np.allclose(res.x, [1, 0, 0, 1], atol=1e-7)


def test_infeasible_is_reported():
    res = solve_lp([1.0, 1.0], A_eq=[[1.0, 1.0]], b_eq=[-1.0])
    assert res.status != "optimal"


def test_iteration_limit():
    rng = np.random.default_rng(1)
    c, A_ub, b_ub, _, _ = _random_bounded_lp(rng, 6, 3, 0)
    res = solve_lp(c, A_ub, b_ub, max_iters=2)
    assert res.status == "iteration_limit"


def test_deterministic():
    rng = np.random.default_rng(9)
    args = _random_bounded_lp(rng, 8, 3, 2)
    a, b = solve_lp(*args), solve_lp(*args)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations

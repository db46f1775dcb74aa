from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulse_recover.certificate import (
    NearSingularError,
    build_system_1d,
    build_system_2d,
    e2_nu,
    e_nu,
    eval_q,
    eval_q2,
    ring_count,
    schur_solve_1d,
    schur_solve_2d,
    solve_certificate_1d,
    solve_certificate_2d,
    theoretical_bounds,
    theoretical_bounds_2d,
    verify_certificate,
    verify_certificate_2d,
)
from pulse_recover.kernels import AdmissibilityReport, admissibility_report, cauchy, gaussian, tensor

G, C = gaussian(), cauchy()


def _table_report(name):
    if name == "gaussian":
        return AdmissibilityReport("gaussian", 1.22, 1.59, 2.04, 2.6, k0=1.0, k2_0=-1.0,
                                   epsilon=0.5, beta=0.662, passed=True)
    return AdmissibilityReport("cauchy", 1.0, 1.0, 2.0, 5.22, k0=1.0, k2_0=-2.0,
                               epsilon=0.3, beta=1.127, passed=True)


def _separated(rng, m, nu, spread=1.0):
    return np.cumsum(np.concatenate([[0.0], nu + spread * nu * rng.uniform(0, 1, m - 1)]))


# ---------------------------------------------------------------- 1D system

def test_build_system_examples():
    assert np.array_equal(build_system_1d(G, [0.0]), [[1, 0], [0, -1]])
    assert np.array_equal(build_system_1d(C, [0.0]), [[1, 0], [0, -2]])
    M = build_system_1d(G, [0.0, 10.0])
    off = M[np.ix_([0, 2], [1, 3])], M[np.ix_([1, 3], [0, 2])]
    assert all(np.max(np.abs(o)) <= np.exp(-50) * 100 for o in off)
    with pytest.raises(ValueError):
        build_system_1d(G, [0.0, 0.0])


def test_solve_examples():
    cert = solve_certificate_1d(G, [0.0], [1])
    assert np.allclose(cert.a, [1]) and np.allclose(cert.b, [0])
    cert = solve_certificate_1d(G, [-5.0, 5.0], [1, 1])
    assert np.allclose(cert.a, [1, 1], atol=1e-9) and np.allclose(cert.b, [0, 0], atol=1e-9)
    with pytest.raises(NearSingularError):
        solve_certificate_1d(G, [0.0, 1e-9], [1, -1])
    with pytest.raises(ValueError):
        solve_certificate_1d(G, [0.0, 1.0], [1, 0.5])


def test_eval_q_single_spike():
    cert = solve_certificate_1d(G, [0.0], [1])
    assert eval_q(cert, 0.0) == pytest.approx(1.0)
    assert eval_q(cert, 0.0, 1) == pytest.approx(0.0)
    assert eval_q(cert, 0.0, 2) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        eval_q(cert, 0.0, 3)


def test_verify_examples():
    v = verify_certificate(solve_certificate_1d(G, [0.0], [1]))
    assert v.valid and v.max_abs_q_off_support < 1
    v = verify_certificate(solve_certificate_1d(G, [0.0, 2.0], [1, 1]))
    assert v.valid and v.near_region_margin > 0
    v = verify_certificate(solve_certificate_1d(G, [0.0, 0.3], [1, -1]))
    assert not v.valid


@pytest.mark.parametrize("kernel", [G, C], ids=["gaussian", "cauchy"])
@pytest.mark.parametrize("seed", range(5))
def test_direct_solve_matches_schur(kernel, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    t = _separated(rng, m, 1.5)
    v = rng.choice([-1.0, 1.0], m)
    cert = solve_certificate_1d(kernel, t, v)
    a, b = schur_solve_1d(kernel, t, v)
    assert np.max(np.abs(cert.a - a)) < 1e-9 and np.max(np.abs(cert.b - b)) < 1e-9


def _all_patterns_valid(kernel, nu, max_m, rng):
    for m in range(1, max_m + 1):
        t = nu * np.arange(m)
        for signs in product([-1.0, 1.0], repeat=m):
            v = verify_certificate(solve_certificate_1d(kernel, t, signs))
            assert v.valid, (kernel.kind, nu, signs)
    for _ in range(5):
        m = int(rng.integers(2, 7))
        t = _separated(rng, m, nu)
        v = verify_certificate(solve_certificate_1d(kernel, t, rng.choice([-1.0, 1.0], m)))
        assert v.valid


@pytest.mark.slow
def test_sign_patterns_gaussian():
    _all_patterns_valid(G, 1.5, 6, np.random.default_rng(0))


@pytest.mark.slow
def test_sign_patterns_cauchy():
    _all_patterns_valid(C, 1.0, 6, np.random.default_rng(1))


@pytest.mark.parametrize("name", ["gaussian", "cauchy"])
@pytest.mark.parametrize("nu", [4.0, 5.0, 8.0])
def test_coefficient_bounds_hold(name, nu):
    kernel = gaussian() if name == "gaussian" else cauchy()
    report = admissibility_report(kernel)
    bounds = theoretical_bounds(report, nu)
    if not bounds.applicable:
        pytest.skip(f"thresholds not met: {bounds.offending}")
    rng = np.random.default_rng(int(nu))
    for trial in range(10):
        m = int(rng.integers(2, 10))
        t = _separated(rng, m, nu, spread=0.5 * trial / 10)
        v = rng.choice([-1.0, 1.0], m)
        cert = solve_certificate_1d(kernel, t, v)
        assert np.max(np.abs(cert.a)) <= bounds.a_inf_bound
        assert np.max(np.abs(cert.b)) <= bounds.b_inf_bound
        assert np.min(v * cert.a) >= bounds.a_lower


def test_theoretical_bounds_examples():
    b = theoretical_bounds(_table_report("gaussian"), 10.0)
    assert b.a_inf_bound == pytest.approx(300 / (300 - 2 * np.pi ** 2 * 1.22), rel=1e-12)
    assert b.a_inf_bound == pytest.approx(1.0873, abs=1e-4)
    far = theoretical_bounds(_table_report("gaussian"), 1e6)
    assert far.a_inf_bound == pytest.approx(1.0, abs=1e-9) and far.b_inf_bound < 1e-9
    c = theoretical_bounds(_table_report("cauchy"), 1.0)
    assert not c.applicable and "S invertible" in c.offending
    assert c.nu_thresholds[2] ** 2 == pytest.approx(2 * np.pi ** 2 / 3)


# ---------------------------------------------------------------- sums

@pytest.mark.parametrize("nu", [0.5, 1.0, 2.0, 5.0])
def test_tail_sum_majorants(nu):
    n = np.arange(1, 10 ** 6 + 1, dtype=float)
    assert np.sum(1 / (1 + (n * nu) ** 2)) < e_nu(nu)
    assert np.sum(9 * n / (1 + (n * nu) ** 2) ** 1.5) < e2_nu(nu)


def test_e_examples():
    n = np.arange(1, 10 ** 6 + 1, dtype=float)
    assert e_nu(1.0) == pytest.approx(np.pi ** 2 / 6)
    assert np.sum(1 / (1 + n ** 2)) == pytest.approx(1.0767, abs=1e-4)
    assert e_nu(np.pi) == pytest.approx(1 / 6)
    assert e2_nu(2.0) == pytest.approx(3 * np.pi ** 2 / 16)
    assert np.sum(9 * n / (1 + 4 * n ** 2) ** 1.5) < e2_nu(2.0)
    with pytest.raises(ValueError):
        e_nu(0.0)


# ---------------------------------------------------------------- rings

def test_ring_count_examples():
    assert ring_count(np.zeros((0, 2)), (0, 0), 1.0, 1) == 0
    pts = 1.5 * np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])
    assert ring_count(pts, (0, 0), 1.0, 1) == 4


def _random_separated_2d(rng, nu, count, box=12.0):
    pts = np.empty((count, 2))
    k = 0
    for p in rng.uniform(-box, box, (4000, 2)):
        if k == 0 or np.min(np.max(np.abs(pts[:k] - p), axis=1)) >= nu:
            pts[k] = p
            k += 1
            if k == count:
                break
    return pts[:k]


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), nu=st.floats(0.3, 3.0))
def test_ring_count_packing_bound(seed, nu):
    # disjoint nu/2 boxes inside the widened annulus: at most 16n + 8 points
    rng = np.random.default_rng(seed)
    pts = _random_separated_2d(rng, nu, 200)
    center = pts[int(rng.integers(len(pts)))]
    for n in range(1, 6):
        assert ring_count(pts, center, nu, n) <= 16 * n + 8


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ring_count_lattice_attains_packing_bound(n):
    # the integer lattice is 1-separated and fills both ring boundaries,
    # so the 9n count used for the ring-sum majorant is exceeded
    g = np.arange(-n - 1, n + 2, dtype=float)
    pts = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    count = ring_count(pts, (0.0, 0.0), 1.0, n)
    assert count == 16 * n + 8
    assert count > 9 * n


# ---------------------------------------------------------------- 2D

G2 = tensor("gaussian")


def test_build_system_2d_examples():
    M = build_system_2d(G2, [[0.0, 0.0]])
    assert np.allclose(M, np.diag([1, -1, -1]))
    M = build_system_2d(G2, [[0.0, 0.0], [20.0, 0.0]])
    assert np.allclose(M, M.T)
    cross = M[np.ix_([0, 2, 4], [1, 3, 5])]
    assert np.max(np.abs(cross)) <= np.exp(-200) * 1e3


def test_solve_2d_examples():
    cert = solve_certificate_2d(G2, [[0.0, 0.0]], [1])
    assert np.allclose(cert.a, [1]) and np.allclose(cert.b, [0]) and np.allclose(cert.c, [0])
    cert = solve_certificate_2d(G2, [[0.0, 0.0], [30.0, 0.0]], [1, 1])
    assert np.allclose(cert.a, [1, 1], atol=1e-9)
    assert np.allclose(cert.b, 0, atol=1e-9) and np.allclose(cert.c, 0, atol=1e-9)
    h = [[eval_q2(cert, 0, 0, 2, 0), eval_q2(cert, 0, 0, 1, 1)],
         [eval_q2(cert, 0, 0, 1, 1), eval_q2(cert, 0, 0, 0, 2)]]
    assert np.allclose(h, -np.eye(2), atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_direct_2d_matches_schur(seed):
    rng = np.random.default_rng(seed)
    pts = _random_separated_2d(rng, 1.5, int(rng.integers(2, 7)), box=4.0)
    v = rng.choice([-1.0, 1.0], len(pts))
    cert = solve_certificate_2d(G2, pts, v)
    a, b, c = schur_solve_2d(G2, pts, v)
    for x, y in ((cert.a, a), (cert.b, b), (cert.c, c)):
        assert np.max(np.abs(x - y)) < 1e-9


def test_verify_2d_examples():
    v = verify_certificate_2d(solve_certificate_2d(G2, [[0.0, 0.0]], [1]))
    assert v.valid and v.hessian_negative_definite
    v = verify_certificate_2d(solve_certificate_2d(G2, [[0.0, 0.0], [3.0, 0.0]], [1, -1]))
    assert v.valid and v.hessian_negative_definite
    v = verify_certificate_2d(solve_certificate_2d(G2, [[0.0, 0.0], [0.2, 0.0]], [1, -1]))
    assert not v.valid


def test_coefficient_bounds_2d_hold():
    report = admissibility_report(G2)
    nu = 12.0
    bounds = theoretical_bounds_2d(report, nu)
    assert bounds.applicable, bounds.offending
    rng = np.random.default_rng(5)
    k0 = report.k0
    for _ in range(5):
        pts = _random_separated_2d(rng, nu, 6, box=30.0)
        v = rng.choice([-1.0, 1.0], len(pts))
        cert = solve_certificate_2d(G2, pts, v)
        assert np.max(np.abs(cert.a)) <= bounds.a_inf_bound
        assert np.max(np.abs(cert.b)) <= bounds.b_inf_bound
        assert np.max(np.abs(cert.c)) <= bounds.c_inf_bound
        assert np.min(v * cert.a) >= bounds.a_lower
        assert bounds.a_lower <= 1 / k0


def test_bounds_2d_need_mixed_constants():
    with pytest.raises(ValueError):
        theoretical_bounds_2d(_table_report("gaussian"), 10.0)

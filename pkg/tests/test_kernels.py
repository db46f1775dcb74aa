import numpy as np
import pytest

from pulse_recover.kernels import (
    HEADROOM,
    admissibility_report,
    cauchy,
    custom,
    estimate_global_constants,
    eval2,
    eval_kernel,
    gaussian,
    get_kernel,
    tensor,
    verify_local_property,
)

TABLE = {
    "gaussian": (1.22, 1.59, 2.04, 2.6, -1.0),
    "cauchy": (1.0, 1.0, 2.0, 5.22, -2.0),
}


@pytest.mark.parametrize("kernel, t, order, expected", [
    (gaussian(), 0.0, 0, 1.0),
    (gaussian(), 0.0, 2, -1.0),
    (cauchy(), 0.0, 2, -2.0),
    (cauchy(), 1.0, 0, 0.5),
])
def test_eval_examples(kernel, t, order, expected):
    assert eval_kernel(kernel, t, order) == pytest.approx(expected, abs=1e-15)


def test_eval_rejects_bad_input():
    with pytest.raises(ValueError):
        eval_kernel(gaussian(), 0.0, 4)
    with pytest.raises(ValueError):
        eval_kernel(tensor("gaussian"), 0.0, 0)
    with pytest.raises(ValueError):
        eval2(tensor("gaussian"), 0.0, 0.0, 2, 2)
    with pytest.raises(ValueError):
        get_kernel("sinc")


def test_eval2_examples():
    g2 = tensor("gaussian")
    assert eval2(g2, 0, 0, 0, 0) == 1.0
    assert eval2(g2, 0, 0, 1, 1) == 0.0
    assert abs(eval2(g2, 1, 1, 2, 0)) < 1e-15


@pytest.mark.parametrize("name", ["gaussian", "cauchy"])
@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivatives_match_finite_differences(name, order):
    k = get_kernel(name)
    t = np.linspace(-4, 4, 161) + 0.0137
    h = 1e-5
    fd = (eval_kernel(k, t + h, order - 1) - eval_kernel(k, t - h, order - 1)) / (2 * h)
    exact = eval_kernel(k, t, order)
    scale = np.maximum(np.abs(exact), 1e-3)
    assert np.max(np.abs(fd - exact) / scale) < 1e-6


@pytest.mark.parametrize("name", ["gaussian", "cauchy"])
def test_mixed_partials_by_finite_differences(name):
    k2 = tensor(name)
    rng = np.random.default_rng(3)
    t, u = rng.uniform(-3, 3, (2, 50))
    h = 1e-5
    for ot in range(3):
        for ou in range(3 - ot):
            fd = (eval2(k2, t + h, u, ot, ou) - eval2(k2, t - h, u, ot, ou)) / (2 * h)
            exact = eval2(k2, t, u, ot + 1, ou)
            assert np.allclose(fd, exact, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("name", ["gaussian", "cauchy"])
def test_symmetries(name):
    k, k2 = get_kernel(name), tensor(name)
    t, u = np.random.default_rng(0).uniform(-10, 10, (2, 10_000))
    for order in range(4):
        sign = (-1) ** order
        assert np.max(np.abs(eval_kernel(k, -t, order) - sign * eval_kernel(k, t, order))) < 1e-12
    base = eval2(k2, t, u)
    for tt, uu in ((-t, u), (t, -u), (-t, -u), (u, t)):
        assert np.max(np.abs(eval2(k2, tt, uu) - base)) < 1e-12


@pytest.mark.parametrize("name", ["gaussian", "cauchy"])
def test_table_constants(name):
    rep = estimate_global_constants(get_kernel(name), 20, 1e-3)
    *cs, k2 = TABLE[name]
    for got, want in zip(rep.c, cs):
        assert got == pytest.approx(want, rel=0.02)
    assert rep.k2_0 == k2
    assert rep.k0 == 1.0


def test_constant_examples_from_operations():
    g = estimate_global_constants(gaussian(), 20, 1e-3)
    c = estimate_global_constants(cauchy(), 20, 1e-3)
    assert abs(g.c0 - 1.22) <= 0.01 + 0.01 * 1.22
    assert abs(g.c1 - 1.59) <= 0.01 + 0.01 * 1.59
    # headroom pushes the 2.0 maximum to 2.02, exactly at the edge
    assert abs(c.c2 - 2.0) <= 0.02 + 1e-12
    assert abs(c.c3 - 5.22) <= 0.02 + 0.01 * 5.22


@pytest.mark.parametrize("name", ["gaussian", "cauchy"])
def test_constants_monotone_under_refinement(name):
    coarse = estimate_global_constants(get_kernel(name), 20, 1e-2)
    fine = estimate_global_constants(get_kernel(name), 20, 1e-3)
    for a, b in zip(coarse.raw_c, fine.raw_c):
        assert b >= a - 1e-12
    assert all(r * HEADROOM == pytest.approx(c) for r, c in zip(fine.raw_c, fine.c))


def _beta_oracle(fn, eps):
    t = np.linspace(-eps, eps, 200_001)
    return float(np.min(fn(t)))


def test_local_property_gaussian():
    beta, ok = verify_local_property(gaussian(), 0.5)
    oracle = _beta_oracle(lambda t: (1 - t ** 2) * np.exp(-t ** 2 / 2), 0.5)
    assert ok and beta == pytest.approx(oracle, abs=1e-9)
    assert beta == pytest.approx(0.662, abs=1e-3)


def test_local_property_cauchy():
    beta, ok = verify_local_property(cauchy(), 0.3)
    oracle = _beta_oracle(lambda t: (2 - 6 * t ** 2) / (1 + t ** 2) ** 3, 0.3)
    assert ok and beta == pytest.approx(oracle, abs=1e-9)
    assert beta == pytest.approx(1.127, abs=1e-3)


def test_local_property_fails_outside_concavity():
    beta, ok = verify_local_property(gaussian(), 2.0)
    assert not ok and beta <= 0


def test_admissibility_report_and_2d():
    rep = admissibility_report(gaussian())
    assert rep.passed and rep.epsilon == 0.5
    rep2 = admissibility_report(tensor("gaussian"))
    assert rep2.c_mixed is not None and rep2.c_mixed[(0, 0)] >= 1.0


def test_custom_kernel_needs_epsilon():
    k = custom(lambda t, order: eval_kernel(gaussian(), t, order), name="g")
    assert eval_kernel(k, 0.3, 1) == eval_kernel(gaussian(), 0.3, 1)
    with pytest.raises(ValueError):
        admissibility_report(k)
    assert admissibility_report(k, epsilon=0.5).passed

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperband.niab import TheoryInstance
from hyperband.theory import (
    discrete_predictions,
    empirical_complexity,
    gamma,
    gamma_inv,
    h_complexity,
    h_domain,
    lower_budget,
    p_n,
    scaling_predictions,
    uniform_budget,
    z_sh_finite,
    z_sh_infinite,
)

NU = [0.1, 0.3, 0.5, 0.7]


@pytest.mark.parametrize("alpha, y, R, j", [(2, 0.1, None, 100), (1, 1, None, 1),
                                            (2, 0, 81, 81), (1, 0.1, None, 10),
                                            (0.5, 0.5, None, 2), (1, 0.01, 50, 50),
                                            (3, 2.0, None, 1)])
def test_gamma_inv_values(alpha, y, R, j):
    assert gamma_inv(alpha, y, R) == j


def test_gamma_inv_errors():
    with pytest.raises(ValueError):
        gamma_inv(1, 0)
    with pytest.raises(ValueError):
        gamma_inv(0, 0.5)


@settings(max_examples=300, deadline=None)
@given(alpha=st.floats(0.2, 5), y=st.floats(1e-3, 1.5))
def test_gamma_inv_minimal(alpha, y):
    j = gamma_inv(alpha, y)
    assert gamma(alpha, j) <= y
    if j >= 2:
        assert gamma(alpha, j - 1) > y


def test_z_sh_hand_example():
    # terms i * (1 + gamma^-1) for i = 2, 3, 4 are 22, 18, 20
    z, z_sum = z_sh_infinite(NU, 0.4, 1)
    assert z == 2 * 2 * 22 == 88
    assert z_sum == 2 * 2 * (4 + 10 + 5 + 4)


def test_z_sh_equal_limits():
    z, _ = z_sh_infinite([0.3] * 4, 0.4, 1)
    assert z == 2 * 2 * 4 * (1 + 10)


def test_z_sh_finite_hand_example():
    z = z_sh_finite(NU, 0.4, 1, 10, 3)
    assert z == pytest.approx(3 * math.log(10, 3) * (4 + max(10, 10 + 5 + 4)))


def test_z_sh_finite_large_eps():
    # every gap term is gamma^-1(eps/4) = 1, so max(R, n-1) = R
    assert z_sh_finite(NU, 100, 1, 10, 3) == pytest.approx(3 * math.log(10, 3) * (4 + 10))


def test_needs_two_arms():
    with pytest.raises(ValueError):
        z_sh_infinite([0.1], 0.1, 1)


def test_uniform_budget_example():
    inst = TheoryInstance(alpha=1, beta=1)
    assert uniform_budget(inst, 100, 0.1) == 8700
    assert uniform_budget(inst, 100, 0.1, R=50) == 5000


def test_uniform_budget_diverges_as_delta_grows():
    inst = TheoryInstance(alpha=1, beta=1)
    budgets = [uniform_budget(inst, 100, d) for d in (0.1, 0.5, 0.9, 0.99)]
    assert budgets == sorted(budgets) and budgets[-1] > 100 * budgets[0]


def test_lower_budget():
    inst = TheoryInstance(alpha=1, beta=1)
    lg = math.log(0.5 / 0.2)
    gap = lg / (50 + lg)
    assert lower_budget(inst, 50, 0.2) == 50 * math.ceil(1 / (2 * gap))
    with pytest.raises(ValueError):
        lower_budget(inst, 50, 0.6)


def breakpoint_integral(lo):
    """int_lo^1 ceil(4/t) dt by summing the constant pieces between t = 4/m."""
    total, t = 0.0, 1.0
    m = 5  # ceil(4/t) == m on (4/m, 4/(m-1)]
    while t > lo:
        nxt = max(lo, 4 / m)
        total += (t - nxt) * m
        t, m = nxt, m + 1
    return total


def test_h_complexity_breakpoint_oracle():
    inst = TheoryInstance(alpha=1, beta=1)
    n, delta = 100, 0.1
    eps = h_domain(inst, n, delta)
    assert eps == pytest.approx(4 * math.log(20) / 100)
    integral = breakpoint_integral(eps / 4)
    head = (4 / 3 * math.log(20) + 2 * n * eps / 4) * math.ceil(16 / eps)
    assert h_complexity(inst, n, delta) == pytest.approx(2 * n * integral + head, rel=1e-4)


def test_h_complexity_discrete_exact():
    mus = (0.0, 0.1, 0.4, 0.8)
    inst = TheoryInstance(family="discrete", mus=mus, alpha=1)
    n, delta, eps = 200, 0.1, 0.2
    integral = sum(gamma_inv(1, m / 4) for m in mus if m > eps / 4) / 4
    head = (4 / 3 * math.log(2 / delta) + 2 * n * inst.cdf(eps / 4)) * gamma_inv(1, eps / 16)
    assert h_complexity(inst, n, delta, eps) == pytest.approx(2 * n * integral + head)


@pytest.mark.parametrize("alpha, beta", [(1, 1), (2, 1), (1, 3), (3, 0.5), (0.5, 2)])
def test_h_complexity_monte_carlo(alpha, beta):
    inst = TheoryInstance(alpha=alpha, beta=beta)
    n, delta = 100, 0.1
    eps = h_domain(inst, n, delta)
    rng = np.random.default_rng(17)
    t = rng.random(1_000_000) ** (1 / beta)
    vals = np.where(t > eps / 4, np.ceil(np.maximum(t / 4, 1e-300) ** -alpha), 0.0)
    vals = np.maximum(vals, np.where(t > eps / 4, 1.0, 0.0))
    head = (4 / 3 * math.log(2 / delta) + 2 * n * inst.cdf(eps / 4)) * gamma_inv(alpha, eps / 16)
    mc, se = 2 * n * vals.mean() + head, 2 * n * vals.std() / math.sqrt(vals.size)
    assert abs(h_complexity(inst, n, delta) - mc) <= 3 * se


def test_h_complexity_affine_in_n():
    inst = TheoryInstance(alpha=2, beta=1.5)
    eps, delta = 0.3, 0.1
    h = [h_complexity(inst, n, delta, eps) for n in (1000, 2000, 3000)]
    assert h[2] - h[1] == pytest.approx(h[1] - h[0], rel=1e-9)


def test_h_domain_enforced():
    inst = TheoryInstance(alpha=1, beta=1)
    lo = h_domain(inst, 100, 0.1)
    with pytest.raises(ValueError):
        h_complexity(inst, 100, 0.1, lo / 2)
    assert h_complexity(inst, 100, 0.1, 2 * lo) < h_complexity(inst, 100, 0.1, lo)
    assert p_n(100, 0.1) == pytest.approx(math.log(20) / 100)


def test_empirical_complexity():
    assert empirical_complexity(NU, 0.4, 1) == 10 + 5 + 4


@pytest.mark.parametrize("alpha, beta, u, s", [(2, 2, -4, -2), (1, 3, -4, -3), (3, 1, -4, -3)])
def test_scaling_exponents(alpha, beta, u, s):
    pred = scaling_predictions(alpha, beta, 0.1, 0.05)
    assert (pred["uniform_exponent"], pred["sha_exponent"]) == (u, s)
    assert pred["uniform"] == pytest.approx(0.1 ** u * math.log(20))


def test_scaling_alpha_equals_beta_is_continuous():
    at = scaling_predictions(2, 2, 0.1, 0.1)["sha_detailed"]
    near = scaling_predictions(2, 2 + 1e-7, 0.1, 0.1)["sha_detailed"]
    assert at == pytest.approx(near, rel=1e-4)


def test_discrete_predictions_single_best():
    mus = [0.1 * j for j in range(10)]
    pred = discrete_predictions(mus, 1, 0.1, 0.1)
    exact = sum(1 / (0.1 * j) for j in range(1, 10))
    L = math.log(10)
    assert pred["sha"] == pytest.approx(math.log(L / 0.1) * L * exact)
    assert pred["uniform"] == pytest.approx(L * 10 * 10)
    capped = discrete_predictions(mus, 1, 0.1, 0.1, R=5)
    assert capped["uniform"] == pytest.approx(L * 10 * 5)

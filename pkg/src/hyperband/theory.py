"""
Closed-form budgets and complexity measures for SuccessiveHalving and
uniform allocation under the power-law model

    gamma(j) = j**(-1/alpha),        F(x) = (x - nu_star)**beta,

or a discrete ``F`` uniform over sorted means ``mus``.

Every function is pure. Instances are duck-typed: anything with ``alpha``,
``beta``, ``nu_star``, ``family``, ``mus``, ``cdf`` and ``ppf`` works
(:class:`hyperband.niab.TheoryInstance` is the usual one). All asymptotic
relations are instantiated with constant 1.
"""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np
from scipy import integrate


def gamma(alpha: float, j: float) -> float:
    return j ** (-1.0 / alpha)


def gamma_inv(alpha: float, y: float, R: int | None = None) -> int:
    """Smallest integer ``j >= 1`` with ``j**(-1/alpha) <= y``, capped at ``R``.

    ``y <= 0`` maps to ``R`` (the envelope is zero at the horizon) and is an
    error when no horizon is given.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if y <= 0:
        if R is None:
            raise ValueError("gamma_inv(0) is undefined without a finite horizon R")
        return int(R)
    if y >= 1:
        j = 1
    else:
        x = y ** (-alpha)
        if x > 2**52:
            j = math.ceil(x)
        else:
            j = max(1, math.ceil(x))
            # float rounding can land one off the exact minimal index
            while j > 1 and gamma(alpha, j - 1) <= y:
                j -= 1
            while gamma(alpha, j) > y:
                j += 1
    return j if R is None else min(j, int(R))


def _sorted_limits(limits: Sequence[float]) -> np.ndarray:
    nu = np.sort(np.asarray(limits, dtype=float))
    if nu.size < 2:
        raise ValueError("need at least two arms")
    return nu


def _gap_terms(nu: np.ndarray, eps: float, alpha: float, R: int | None) -> list[int]:
    if eps <= 0:
        raise ValueError("eps must be positive")
    return [gamma_inv(alpha, max(eps / 4, (v - nu[0]) / 2), R) for v in nu[1:]]


def z_sh_infinite(limits: Sequence[float], eps: float, alpha: float) -> tuple[int, int]:
    """Sufficient budget for infinite-horizon SuccessiveHalving.

    Returns ``(z, z_sum)`` where
    ``z = 2 ceil(log2 n) max_{i>=2} i (1 + gamma^-1(max(eps/4, (nu_i - nu_1)/2)))``
    and ``z_sum = 2 ceil(log2 n) (n + sum_{i>=2} gamma^-1(...))`` is the looser
    sum form.
    """
    nu = _sorted_limits(limits)
    n = nu.size
    L = math.ceil(math.log2(n))
    g = _gap_terms(nu, eps, alpha, None)
    z = 2 * L * max(i * (1 + gi) for i, gi in zip(range(2, n + 1), g))
    return z, 2 * L * (n + sum(g))


def z_sh_finite(limits: Sequence[float], eps: float, alpha: float, R: int, eta: float) -> float:
    """``eta log_eta(R) [n + max(R, sum_{i>=2} min(R, gamma^-1(max(eps/4, gap_i/2))))]``."""
    if R < 1 or eta < 2:
        raise ValueError("need R >= 1 and eta >= 2")
    nu = _sorted_limits(limits)
    g = _gap_terms(nu, eps, alpha, R)
    return eta * (math.log(R) / math.log(eta)) * (nu.size + max(R, sum(g)))


def empirical_complexity(limits: Sequence[float], eps: float, alpha: float,
                         R: int | None = None) -> int:
    """``sum_{i>=2} gamma^-1(max(eps/4, (nu_i - nu_1)/2))`` for one population."""
    return sum(_gap_terms(_sorted_limits(limits), eps, alpha, R))


def p_n(n: int, delta: float) -> float:
    return math.log(2 / delta) / n


def h_domain(instance: Any, n: int, delta: float) -> float:
    """Smallest admissible ``eps``: ``4 (F^-1(p_n) - nu_star)``."""
    return 4 * (instance.ppf(min(1.0, p_n(n, delta))) - instance.nu_star)


# integrand values above this are integrated as a smooth function
_STEP_CAP = 1_000_000


def _ceil_power_integral(c: float, a: float, u_lo: float) -> float:
    """``int_{u_lo}^1 max(1, ceil(c u^-a)) du`` for ``c > 0``, ``a > 0``, ``0 < u_lo < 1``.

    Layer-cake over integer levels where the step function is small; above
    ``_STEP_CAP`` the ceiling is replaced by ``c u^-a + 1/2`` (relative error
    below ``1/(2 _STEP_CAP)``) and integrated with adaptive quadrature.
    """
    h = lambda u: c * u ** (-a)  # noqa: E731
    h_inv = lambda m: (m / c) ** (-1.0 / a)  # noqa: E731
    tail = 0.0
    u_split = u_lo
    if h(u_lo) > _STEP_CAP:
        u_split = h_inv(_STEP_CAP)
        val, err = integrate.quad(lambda u: h(u) + 0.5, u_lo, u_split, epsrel=1e-9,
                                  limit=200, points=None)
        if not math.isfinite(val) or err > 1e-7 * max(1.0, abs(val)):
            raise ArithmeticError(f"quadrature did not converge (estimate {val}, error {err})")
        tail = val
    base = max(1, math.ceil(h(1.0)))
    top = max(base, math.ceil(h(u_split)))
    # int ceil(h) = (1 - u_split) * base + sum_{m >= base} |{u in [u_split, 1]: h(u) > m}|
    m = np.arange(base, top, dtype=float)
    widths = np.clip(np.minimum(1.0, (m / c) ** (-1.0 / a)) - u_split, 0.0, None)
    return tail + (1.0 - u_split) * base + float(widths.sum())


def h_complexity(instance: Any, n: int, delta: float, eps: float | None = None) -> float:
    """Distribution-dependent complexity of eliminating sub-optimal arms.

    ``H = 2n int_{nu*+eps/4}^inf gamma^-1((t - nu*)/4) dF(t)
    + (4/3 log(2/delta) + 2n F(nu* + eps/4)) gamma^-1(eps/16)``.

    ``eps`` defaults to the smallest admissible value ``4 (F^-1(p_n) - nu*)``
    with ``p_n = log(2/delta)/n``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    lo = h_domain(instance, n, delta)
    if eps is None:
        eps = lo
    elif eps < lo * (1 - 1e-12):
        raise ValueError(f"eps={eps} is below the admissible minimum {lo}")
    if eps <= 0:
        raise ValueError("eps must be positive (p_n reaches the atom at nu_star)")
    alpha, nu_star = instance.alpha, instance.nu_star
    edge = nu_star + eps / 4
    if instance.family == "discrete":
        mus = np.asarray(instance.mus)
        upper = mus[mus > edge]
        integral = sum(gamma_inv(alpha, (m - nu_star) / 4) for m in upper) / len(mus)
    else:
        beta = instance.beta
        u_lo = min(1.0, (eps / 4) ** beta)
        if u_lo >= 1.0:
            integral = 0.0
        else:
            # substitute u = F(t): gamma^-1((t - nu*)/4) = ceil(4^alpha u^(-alpha/beta))
            integral = _ceil_power_integral(4.0**alpha, alpha / beta, u_lo)
    head = (4 / 3) * math.log(2 / delta) + 2 * n * instance.cdf(edge)
    return 2 * n * integral + head * gamma_inv(alpha, eps / 16)


def uniform_budget(instance: Any, n: int, delta: float, R: int | None = None) -> int:
    """``n gamma^-1((F^-1(log(1/delta)/n) - nu*)/2)``."""
    p = math.log(1 / delta) / n
    gap = _quantile_gap(instance, p)
    return n * gamma_inv(instance.alpha, gap / 2, R)


def lower_budget(instance: Any, n: int, delta: float, R: int | None = None) -> int:
    """``n gamma^-1(2 (F^-1(log(c/delta)/(n + log(c/delta))) - nu*))`` with ``c = 1 - 2^-beta``."""
    c = 1.0 - 2.0 ** (-instance.beta)
    if c <= delta:
        raise ValueError(f"delta={delta} must be below c = {c:.4g}")
    lg = math.log(c / delta)
    gap = _quantile_gap(instance, lg / (n + lg))
    return n * gamma_inv(instance.alpha, 2 * gap, R)


def _quantile_gap(instance: Any, p: float) -> float:
    if not 0 < p <= 1:
        raise ValueError(f"quantile level {p:.4g} outside (0, 1]")
    gap = instance.ppf(p) - instance.nu_star
    if gap <= 0:
        raise ValueError(f"F^-1({p:.4g}) coincides with nu_star; the budget is unbounded")
    return gap


def scaling_predictions(alpha: float, beta: float, Delta: float, delta: float) -> dict:
    """Budgets needed to reach simple regret ``Delta`` with ``n = Delta^-beta log(1/delta)``.

    ``sha_detailed`` is the bracketed two-term form; at ``alpha == beta`` its
    ratio term takes the limit ``beta log(1/Delta) Delta^-beta``.
    """
    if not 0 < Delta < 1:
        raise ValueError("Delta must be in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    L = math.log(1 / delta)
    if math.isclose(alpha, beta):
        ratio = beta * math.log(1 / Delta) * Delta ** (-beta)
    else:
        ratio = (Delta ** (-beta) - Delta ** (-alpha)) / (1 - alpha / beta)
    return {
        "uniform": Delta ** (-(alpha + beta)) * L,
        "sha": math.log(L / Delta) * math.log(1 / Delta) * Delta ** (-max(alpha, beta)) * L,
        "sha_detailed": math.log2(Delta ** (-beta) * L) * (Delta ** (-alpha) * L + ratio * L),
        "uniform_exponent": -(alpha + beta),
        "sha_exponent": -max(alpha, beta),
    }


def discrete_predictions(mus: Sequence[float], alpha: float, delta: float, q: float,
                         R: int | None = None) -> dict:
    """Uniform and SuccessiveHalving budgets for returning an arm in the best ``q`` fraction.

    With ``R`` every ``Delta_j^-alpha`` is capped at ``R``.
    """
    mus = np.sort(np.asarray(mus, dtype=float))
    K = mus.size
    if K < 2:
        raise ValueError("need K >= 2")
    if not 1 / K - 1e-12 <= q <= 1:
        raise ValueError(f"q must be in [1/K, 1], got {q}")
    gaps = mus - mus[0]
    cost = gaps[1:] ** (-alpha)
    if R is not None:
        cost = np.minimum(cost, R)
    L = math.log(1 / delta)
    if math.isclose(q * K, 1.0):
        uni = K * cost.max()
        sha = cost.sum()
    else:
        k = math.ceil(q * K - 1e-12)
        ck = cost[k - 2]  # gaps[1:] starts at j = 2
        uni = ck / q
        sha = ck + cost[k - 2:].sum() / (q * K)
    return {"uniform": L * float(uni), "sha": math.log(L / q) * L * float(sha)}

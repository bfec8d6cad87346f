"""Closed-form and quadrature-level quantities for the Gaussian location model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ContractViolation, NumericFailure
from .glm import ThetaBox, enlarged_volume
from .predictors import log_q2, shtarkov_log_normalizer, v_schedule


def i_n(d: int, n: float, leb_theta: float) -> float:
    """``(d/2) ln(n / (2 pi e)) + ln Leb(Theta)``: the asymptotic capacity."""
    if not n >= 1:
        raise ContractViolation("n must be at least 1")
    if not leb_theta > 0:
        raise ContractViolation("Leb(Theta) must be positive")
    return 0.5 * d * math.log(n / (2.0 * math.pi * math.e)) + math.log(leb_theta)


def gamma_n_interval(a: float, n: float) -> float:
    """Individual-sequence regret of the unit-variance GLM on ``[0, a]``."""
    if not a > 0:
        raise ContractViolation("a must be positive")
    if not n >= 1:
        raise ContractViolation("n must be at least 1")
    return math.log1p(a * math.sqrt(n / (2.0 * math.pi)))


def hilbert_brick_upper(n: float, tail_tol: float = 1e-12) -> float:
    """Upper bound on the capacity of the brick ``prod_j [0, 2^-j]``.

    Sums ``gamma_n_interval(2^-j, n)`` until a term drops below ``tail_tol``
    and then adds ``x_J = a0 2^-J``, which dominates the remaining terms
    because ``ln(1 + x) <= x`` and the ``x_j`` halve at each step.
    """
    if not n >= 1:
        raise ContractViolation("n must be at least 1")
    if not tail_tol > 0:
        raise ContractViolation("tail_tol must be positive")
    a0 = math.sqrt(n / (2.0 * math.pi))
    total, j = 0.0, 0
    while True:
        x = a0 * 2.0**-j
        term = math.log1p(x)
        total += term
        if term < tail_tol:
            return total + x
        j += 1


def jeffreys_shtarkov_kl(n: float, b: float = 1.0, quad_tol: float = 1e-10) -> float:
    """``D(P_J || P_S)`` for the uniform-prior mixture vs plain Shtarkov on ``[-b, b]``.

    Both densities carry the same ``exp(-||y_perp||^2 / 2)`` factor, so the log
    ratio depends on the sample mean only::

        ln(p_J/p_S)(y) = ln(1 + sqrt(2 pi) / (2 b sqrt n)) + ln q2(y) + (n/2) (|y| - b)_+^2

    and under ``P_J`` the sample mean has density ``q2(y) / (2b)``.  The
    integral is taken over ``y >= 0`` and doubled.
    """
    if not n >= 2:
        raise ContractViolation("n must be at least 2")
    if not b > 0:
        raise ContractViolation("b must be positive")
    s = math.sqrt(n)
    const = math.log1p(math.sqrt(2.0 * math.pi) / (2.0 * b * s))

    def integrand(y):
        lq = log_q2(y, b, n)
        over = max(y - b, 0.0)
        return math.exp(lq) / (2.0 * b) * (const + lq + 0.5 * n * over * over)

    knots = [0.0, max(0.0, b - 12.0 / s), b, b + 15.0 / s]
    total, err = 0.0, 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi > lo:
            val, e = integrate.quad(integrand, lo, hi, epsabs=0.1 * quad_tol, epsrel=1e-12, limit=200)
            total += val
            err += e
    if err > quad_tol:
        raise NumericFailure(f"KL quadrature error estimate {err:.3g} exceeds {quad_tol:.3g}", err)
    return 2.0 * total


def cube_root_schedule(eps: float) -> tuple[float, float, float]:
    """``(tau, lambda, alpha) = (eps^(1/3), eps^(1/3), 1)``."""
    if not 0 < eps < 1:
        raise ContractViolation("the cube-root schedule needs 0 < eps < 1")
    t = eps ** (1.0 / 3.0)
    return t, t, 1.0


def entropy_robustness_bound(b: float, eps: float, tau: float | None = None,
                             lam: float | None = None, alpha: float | None = None) -> float:
    """Upper bound on ``h(M + Z)`` over ``M in [-b, b]``, ``E Z = 0``, ``Var Z <= eps``.

    Omitted tuning parameters default to :func:`cube_root_schedule`.
    The probability ``P[|Z| > tau]`` is replaced by its Chebyshev bound.
    """
    if tau is None or lam is None or alpha is None:
        t, l, a = cube_root_schedule(eps)
        tau = t if tau is None else tau
        lam = l if lam is None else lam
        alpha = a if alpha is None else alpha
    if not (b > 0 and eps > 0 and tau > 0 and alpha > 0 and 0 < lam < 1):
        raise ContractViolation("need b, eps, tau, alpha > 0 and 0 < lambda < 1")
    p_bar = min(1.0, eps / (tau * tau))
    return (
        math.log(2.0 * (b + tau) / (1.0 - lam))
        + p_bar * (math.log(2.0 / (lam * alpha)) + alpha * b)
        + alpha * eps / tau
    )


def uniform_gaussian_entropy(b: float, var: float, quad_tol: float = 1e-11) -> float:
    """Differential entropy of ``U[-b, b] + N(0, var)`` with independent summands.

    The density is ``q2(x) / (2b)`` with ``q2`` evaluated at ``n = 1/var``.
    """
    if not (b > 0 and var > 0):
        raise ContractViolation("need b > 0 and var > 0")
    n = 1.0 / var
    sigma = math.sqrt(var)
    log2b = math.log(2.0 * b)

    def integrand(x):
        lf = log_q2(x, b, n) - log2b
        return -math.exp(lf) * lf

    knots = [0.0, max(0.0, b - 12.0 * sigma), b, b + 15.0 * sigma]
    total, err = 0.0, 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi > lo:
            val, e = integrate.quad(integrand, lo, hi, epsabs=0.1 * quad_tol, epsrel=1e-12, limit=200)
            total += val
            err += e
    if err > quad_tol:
        raise NumericFailure(f"entropy quadrature error estimate {err:.3g} exceeds {quad_tol:.3g}", err)
    return 2.0 * total


@dataclass(frozen=True)
class AsymptoticReport:
    """Values of a sequence against its asymptote on a grid of horizons."""

    n_grid: tuple
    values: tuple
    reference: tuple

    def __post_init__(self):
        if not (len(self.n_grid) == len(self.values) == len(self.reference)):
            raise ContractViolation("report arrays must have equal length")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ContractViolation("n_grid must be strictly increasing")

    @property
    def gaps(self) -> np.ndarray:
        return np.asarray(self.values) - np.asarray(self.reference)


def normalizer_asymptote(box: ThetaBox, tau: float, n_grid, *, v_mode: str = "fixed",
                         v: float = 1.0, beta: float = 0.0) -> AsymptoticReport:
    """``ln Z_{v,tau}`` against ``(d/2) ln(n / (2 pi v)) + ln Leb(Theta_tau)``."""
    values, ref = [], []
    leb = enlarged_volume(box, tau)
    for n in n_grid:
        vn = v_schedule(n, beta) if v_mode == "schedule" else v
        values.append(shtarkov_log_normalizer(box, vn, tau, n))
        ref.append(0.5 * box.dim * math.log(n / (2.0 * math.pi * vn)) + math.log(leb))
    return AsymptoticReport(tuple(n_grid), tuple(values), tuple(ref))


def individual_regret_asymptote(a: float, n_grid) -> AsymptoticReport:
    """``Gamma_n([0, a])`` against ``I_n + 1/2`` in one dimension."""
    values = tuple(gamma_n_interval(a, n) for n in n_grid)
    ref = tuple(i_n(1, n, a) + 0.5 for n in n_grid)
    return AsymptoticReport(tuple(n_grid), values, ref)

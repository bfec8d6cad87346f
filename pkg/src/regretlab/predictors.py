"""Joint log-densities on R^{nd} for the Gaussian location model.

Every evaluator takes a :class:`~regretlab.glm.GlmSummary` (single batch or
stacked) and returns log-densities in nats.  Sequential conditionals are never
formed: cumulative log-loss telescopes to the joint density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr

from .errors import ContractViolation, NumericFailure
from .glm import GlmSummary, ThetaBox, elementary_symmetric, project_enlarged

LOG_2PI = math.log(2.0 * math.pi)

DEFAULT_LAMBDA = 1e-2
DEFAULT_TAU = 5e-2
DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 1.0


def v_schedule(n: int, beta: float = DEFAULT_BETA) -> float:
    """Variance inflation ``1 - 1/n + beta/n^2``."""
    if beta < 0:
        raise ContractViolation("beta must be non-negative")
    v = 1.0 - 1.0 / n + beta / (n * n)
    if not v > 0:
        raise ContractViolation(f"v_schedule(n={n}, beta={beta}) = {v} is not positive")
    return v


def _orthant_radial_integral(k: int, alpha: float, tau: float, rel_tol: float):
    """``int_{R_+^k} exp(-alpha (|u| - tau)_+^2) du`` and its error estimate.

    The integrand is radial, so the k-dimensional integral reduces to a
    one-dimensional one in ``r = |u|`` weighted by the orthant's share of the
    sphere.  The Gaussian tail beyond ``tau + R`` is dropped, with ``R`` large
    enough that the dropped mass is below 1e-12 of the total.
    """
    shell = math.exp(math.log(2.0) + 0.5 * k * math.log(math.pi) - math.lgamma(0.5 * k)) / 2.0**k
    # exp(-alpha R^2) <= e^-60, times at most a polynomial factor in R
    reach = math.sqrt(60.0 / alpha) * (1.0 + 0.1 * k)
    inner = tau**k / k if tau > 0 else 0.0
    outer, err = integrate.quad(
        lambda r: math.exp(-alpha * (r - tau) ** 2) * r ** (k - 1),
        tau,
        tau + reach,
        epsabs=0.0,
        epsrel=0.1 * rel_tol,
        limit=200,
    )
    return shell * (inner + outer), shell * err


def shtarkov_log_normalizer(
    box: ThetaBox,
    v: float,
    tau: float,
    n: float,
    *,
    method: str = "auto",
    rel_tol: float = 1e-8,
) -> float:
    """``ln Z_{v,tau}`` for the enlarged-box Shtarkov density.

    ``method="closed"`` uses the exact forms available for d = 1 (any tau) and
    for tau = 0 (per-coordinate factorisation).  ``method="quadrature"``
    splits R^d into the 3^d face/edge/corner cells of the box; on a cell with
    ``k`` outside coordinates the integrand is radial in those coordinates and
    is integrated adaptively.  ``"auto"`` prefers the closed form.
    """
    if not v > 0:
        raise ContractViolation("v must be positive")
    if tau < 0:
        raise ContractViolation("tau must be non-negative")
    if not n >= 1:
        raise ContractViolation("n must be at least 1")
    if method not in ("auto", "closed", "quadrature"):
        raise ContractViolation(f"unknown method {method!r}")
    d = box.dim
    lengths = box.lengths
    scale = math.sqrt(n / (2.0 * math.pi * v))
    closed_ok = d == 1 or tau == 0
    if method == "closed" and not closed_ok:
        raise ContractViolation("no closed form for d >= 2 with tau > 0")
    if method != "quadrature" and closed_ok:
        if d == 1:
            return math.log1p((lengths[0] + 2.0 * tau) * scale)
        return float(np.sum(np.log1p(lengths * scale)))

    alpha = n / (2.0 * v)
    esym = elementary_symmetric(lengths)
    total, err = esym[d], 0.0
    for k in range(1, d + 1):
        g, g_err = _orthant_radial_integral(k, alpha, tau, rel_tol)
        # 2^k sign patterns times the C(d,k)-weighted face products e_{d-k}
        total += 2.0**k * esym[d - k] * g
        err += 2.0**k * esym[d - k] * g_err
    if not err <= rel_tol * total:
        raise NumericFailure(f"normalizer quadrature reached relative error {err / total:.3g}", err / total)
    return 0.5 * d * math.log(n / (2.0 * math.pi * v)) + math.log(total)


@dataclass(frozen=True, eq=False)
class ShtarkovParams:
    """Shtarkov density over the tau-enlarged box with variance ``v``."""

    box: ThetaBox
    v: float
    tau: float
    n: int
    log_z: float

    @classmethod
    def build(cls, box: ThetaBox, v: float, tau: float, n: int) -> "ShtarkovParams":
        if not 0 < v <= 1:
            raise ContractViolation(f"v must lie in (0, 1], got {v}")
        return cls(box, float(v), float(tau), int(n), shtarkov_log_normalizer(box, v, tau, n))

    @classmethod
    def scheduled(cls, box: ThetaBox, tau: float, n: int, beta: float = DEFAULT_BETA) -> "ShtarkovParams":
        return cls.build(box, v_schedule(n, beta), tau, n)


@dataclass(frozen=True, eq=False)
class RobustParams:
    """Mixture weights and escape rate for the robustified estimator."""

    shtarkov: ShtarkovParams
    lam: float = DEFAULT_LAMBDA
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ContractViolation("lambda must lie in (0, 1)")
        if not self.alpha > 0:
            raise ContractViolation("alpha must be positive")


def _check_n(summary: GlmSummary, n: int):
    if summary.n != n:
        raise ContractViolation(f"summary has n={summary.n} but the density was built for n={n}")


def _sq_norm(x):
    return np.sum(x * x, axis=-1)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def log_density_oracle(summary: GlmSummary, theta) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[-1] != summary.dim:
        raise ContractViolation("theta dimension does not match the summary")
    n, d = summary.n, summary.dim
    return _out(-0.5 * n * d * LOG_2PI - 0.5 * (summary.ssq_perp + n * _sq_norm(summary.mean - theta)))


def log_density_shtarkov(summary: GlmSummary, p: ShtarkovParams) -> float:
    _check_n(summary, p.n)
    n, d, v = summary.n, summary.dim, p.v
    resid = summary.mean - project_enlarged(p.box, p.tau, summary.mean)
    return _out(
        -p.log_z - 0.5 * n * d * math.log(2.0 * math.pi * v) - (summary.ssq_perp + n * _sq_norm(resid)) / (2.0 * v)
    )


def log_density_escape(summary: GlmSummary, alpha: float, n: int | None = None, d: int | None = None) -> float:
    """Gaussian in the perpendicular part, Laplace (1-norm) in the mean."""
    if not alpha > 0:
        raise ContractViolation("alpha must be positive")
    n = summary.n if n is None else n
    d = summary.dim if d is None else d
    _check_n(summary, n)
    l1 = np.sum(np.abs(summary.mean), axis=-1)
    return _out(
        -0.5 * (n - 1) * d * LOG_2PI - 0.5 * summary.ssq_perp + d * math.log(alpha / (2.0 * math.sqrt(n))) - alpha * l1
    )


def log_density_robust(summary: GlmSummary, p: RobustParams) -> float:
    ls = log_density_shtarkov(summary, p.shtarkov)
    le = log_density_escape(summary, p.alpha)
    return _out(np.logaddexp(math.log1p(-p.lam) + ls, math.log(p.lam) + le))


def _log1mexp(x):
    """``log(1 - exp(x))`` for x <= 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > -math.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def log_q2(y, b: float, n: float):
    """``ln P[|y + G| < b]`` with ``G ~ N(0, 1/n)``, accurate deep in the tails."""
    y = np.abs(np.asarray(y, dtype=float))
    s = math.sqrt(n)
    upper = log_ndtr(s * (b - y))
    lower = log_ndtr(-s * (b + y))
    return _out(upper + _log1mexp(lower - upper))


def log_density_jeffreys(summary: GlmSummary, b: float, n: int | None = None) -> float:
    """Uniform-prior Bayes mixture over ``[-b, b]`` (d = 1 only)."""
    if summary.dim != 1:
        raise ContractViolation("the uniform-prior mixture is implemented for d = 1 only")
    if not b > 0:
        raise ContractViolation("b must be positive")
    n = summary.n if n is None else n
    _check_n(summary, n)
    ybar = summary.mean[..., 0]
    return _out(
        -math.log(2.0 * b * math.sqrt(n)) - 0.5 * (n - 1) * LOG_2PI - 0.5 * summary.ssq_perp + log_q2(ybar, b, n)
    )


# Evaluator objects: what the regret harness and the CLI pass around.


@dataclass(frozen=True, eq=False)
class OraclePredictor:
    theta: np.ndarray
    name: str = "oracle"

    def log_density(self, summary: GlmSummary):
        return log_density_oracle(summary, self.theta)


@dataclass(frozen=True, eq=False)
class ShtarkovPredictor:
    params: ShtarkovParams
    name: str = "shtarkov"

    @property
    def n(self):
        return self.params.n

    def log_density(self, summary: GlmSummary):
        return log_density_shtarkov(summary, self.params)


@dataclass(frozen=True, eq=False)
class EscapePredictor:
    alpha: float
    n: int
    name: str = "escape"

    def log_density(self, summary: GlmSummary):
        return log_density_escape(summary, self.alpha, self.n)


@dataclass(frozen=True, eq=False)
class RobustPredictor:
    params: RobustParams
    name: str = "robust"

    @property
    def n(self):
        return self.params.shtarkov.n

    def log_density(self, summary: GlmSummary):
        return log_density_robust(summary, self.params)


@dataclass(frozen=True, eq=False)
class JeffreysPredictor:
    b: float
    n: int
    name: str = "jeffreys"

    def log_density(self, summary: GlmSummary):
        return log_density_jeffreys(summary, self.b, self.n)


PREDICTOR_KINDS = ("oracle", "shtarkov", "robust", "jeffreys", "escape")


@dataclass(frozen=True)
class PredictorSpec:
    """Horizon-free description of a predictor; ``build`` fixes ``n``.

    ``v_mode="schedule"`` uses ``v_schedule(n, beta)``; ``"fixed"`` uses ``v``.
    For the oracle, ``theta=None`` means the in-box point closest to the
    generator mean.
    """

    kind: str
    lam: float = DEFAULT_LAMBDA
    tau: float = 0.0
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    v_mode: str = "fixed"
    v: float = 1.0
    theta: tuple | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in PREDICTOR_KINDS:
            raise ContractViolation(f"unknown predictor kind {self.kind!r}")
        if self.v_mode not in ("fixed", "schedule"):
            raise ContractViolation(f"v_mode must be 'fixed' or 'schedule', got {self.v_mode!r}")
        if not 0 < self.lam < 1:
            raise ContractViolation("lambda must lie in (0, 1)")
        if self.tau < 0:
            raise ContractViolation("tau must be non-negative")
        if not self.alpha > 0:
            raise ContractViolation("alpha must be positive")
        if self.beta < 0:
            raise ContractViolation("beta must be non-negative")

    @classmethod
    def robust(cls, lam=DEFAULT_LAMBDA, tau=DEFAULT_TAU, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA, **kw):
        return cls("robust", lam=lam, tau=tau, alpha=alpha, beta=beta, v_mode="schedule", **kw)

    def display_name(self) -> str:
        if self.label:
            return self.label
        v = f"v=schedule(beta={self.beta:g})" if self.v_mode == "schedule" else f"v={self.v:g}"
        if self.kind == "shtarkov":
            return f"shtarkov({v};tau={self.tau:g})"
        if self.kind == "robust":
            return f"robust({v};tau={self.tau:g};lambda={self.lam:g};alpha={self.alpha:g})"
        if self.kind == "escape":
            return f"escape(alpha={self.alpha:g})"
        if self.kind == "oracle":
            if self.theta is None:
                return "oracle(theta=best)"
            return "oracle(theta=" + ",".join(f"{t:g}" for t in self.theta) + ")"
        return "jeffreys"

    def _v(self, n):
        return v_schedule(n, self.beta) if self.v_mode == "schedule" else self.v

    def build(self, box: ThetaBox, n: int, generator=None):
        name = self.display_name()
        if self.kind == "oracle":
            if self.theta is not None:
                theta = np.asarray(self.theta, dtype=float)
            elif generator is not None:
                theta = project_enlarged(box, 0.0, generator.mean)
            else:
                raise ContractViolation("oracle predictor needs theta or a generator")
            return OraclePredictor(theta, name)
        if self.kind == "shtarkov":
            return ShtarkovPredictor(ShtarkovParams.build(box, self._v(n), self.tau, n), name)
        if self.kind == "robust":
            sp = ShtarkovParams.build(box, self._v(n), self.tau, n)
            return RobustPredictor(RobustParams(sp, self.lam, self.alpha), name)
        if self.kind == "escape":
            return EscapePredictor(self.alpha, n, name)
        if not box.is_centered_interval():
            raise ContractViolation("jeffreys predictor needs a 1-D box of the form [-b, b]")
        return JeffreysPredictor(float(box.hi[0]), n, name)

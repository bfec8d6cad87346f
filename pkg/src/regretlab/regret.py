"""Monte-Carlo estimates of expected cumulative regret.

Two comparators are supported.  ``pac`` fixes the comparator at the in-box
point nearest the generator mean, which maximises the expected oracle
log-likelihood.  ``realized`` lets the comparator see the sample and use the
in-box maximum-likelihood point ``c0(ybar)``.

Replicate values are laid out in replicate order and reduced with numpy's
pairwise summation, so an estimate is a function of ``(seed, reps, n)`` alone.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import ContractViolation
from .glm import GeneratorSpec, ThetaBox, draw_means, draw_summaries, project_enlarged
from .predictors import PredictorSpec, log_density_oracle, log_q2
from .theory import gamma_n_interval, i_n

VARIANTS = ("pac", "realized")


@dataclass(frozen=True)
class RegretEstimate:
    mean: float
    stderr: float
    reps: int
    n: int
    variant: str
    n_infinite: int = 0

    @classmethod
    def from_values(cls, values: np.ndarray, n: int, variant: str) -> "RegretEstimate":
        values = np.asarray(values, dtype=float)
        reps = values.size
        if reps == 0:
            raise ContractViolation("need at least one replicate")
        inf = int(np.count_nonzero(np.isposinf(values)))
        if inf:
            return cls(math.inf, math.inf, reps, n, variant, inf)
        mean = float(np.sum(values) / reps)
        if reps > 1:
            dev = values - mean
            sd = math.sqrt(float(np.sum(dev * dev)) / (reps - 1))
        else:
            sd = 0.0
        return cls(mean, sd / math.sqrt(reps), reps, n, variant)

    @property
    def is_infinite(self) -> bool:
        return self.n_infinite > 0


def _log_ratio(num, den):
    """``num - den`` in log space with 0/0 -> 0, c/0 -> +inf, 0/c -> -inf."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    both = np.isneginf(num) & np.isneginf(den)
    with np.errstate(invalid="ignore"):
        out = num - den
    return np.where(both, 0.0, out)


def _resolve(predictor, box, n, gen):
    if isinstance(predictor, PredictorSpec):
        return predictor.build(box, n, gen)
    built_n = getattr(predictor, "n", None)
    if built_n is not None and built_n != n:
        raise ContractViolation(f"predictor was built for n={built_n}, asked for n={n}")
    return predictor


def _regret_block(task):
    gen, predictor, box, n, seed, block, variant, theta_star = task
    rng = streams.block_rng(seed, block)
    summ = draw_summaries(gen, n, rng, streams.BLOCK_SIZE)
    if variant == "pac":
        oracle = log_density_oracle(summ, theta_star)
    else:
        oracle = log_density_oracle(summ, project_enlarged(box, 0.0, summ.mean))
    return _log_ratio(oracle, predictor.log_density(summ))


def _mean_block(task):
    fn, gen, n, seed, block = task
    rng = streams.block_rng(seed, block)
    return fn(draw_means(gen, n, rng, streams.BLOCK_SIZE))


def _run_blocks(worker, tasks, reps, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(worker, tasks))
    else:
        parts = [worker(t) for t in tasks]
    # trailing block is drawn at full size and cut, so values never depend on reps
    return np.concatenate(parts)[:reps]


def replicate_regrets(gen: GeneratorSpec, predictor, n: int, reps: int, seed: int, *,
                      box: ThetaBox, variant: str = "pac", workers: int = 1) -> np.ndarray:
    """Per-replicate regret ``log p_theta*(Y^n) - log q(Y^n)``, in replicate order."""
    if variant not in VARIANTS:
        raise ContractViolation(f"variant must be one of {VARIANTS}")
    if reps < 1:
        raise ContractViolation("reps must be at least 1")
    if gen.dim != box.dim:
        raise ContractViolation("generator and box dimensions differ")
    predictor = _resolve(predictor, box, n, gen)
    theta_star = project_enlarged(box, 0.0, gen.mean)
    tasks = [(gen, predictor, box, n, seed, k, variant, theta_star) for k in range(streams.n_blocks(reps))]
    return _run_blocks(_regret_block, tasks, reps, workers)


def pac_regret(gen: GeneratorSpec, predictor, n: int, reps: int, seed: int, *,
               box: ThetaBox, workers: int = 1) -> RegretEstimate:
    """Estimate ``E[log p_{c0(mu)}(Y^n) - log q(Y^n)]`` for ``Y_t`` iid from ``gen``."""
    values = replicate_regrets(gen, predictor, n, reps, seed, box=box, variant="pac", workers=workers)
    return RegretEstimate.from_values(values, n, "pac")


def realized_regret(gen: GeneratorSpec, predictor, n: int, reps: int, seed: int, *,
                    box: ThetaBox, workers: int = 1) -> RegretEstimate:
    """Estimate ``E[sup_theta log p_theta(Y^n) - log q(Y^n)]`` over the box."""
    values = replicate_regrets(gen, predictor, n, reps, seed, box=box, variant="realized", workers=workers)
    return RegretEstimate.from_values(values, n, "realized")


def _check_centered(gen: GeneratorSpec, b: float):
    if gen.dim != 1:
        raise ContractViolation("analytic terms are for d = 1")
    if not b > 0:
        raise ContractViolation("b must be positive")
    mu = float(gen.mean[0])
    if not -b <= mu <= b:
        raise ContractViolation(f"generator mean {mu} lies outside [-{b}, {b}]")


@dataclass(frozen=True)
class ShtarkovRegretTerms:
    """Additive pieces of the plain Shtarkov regret on ``[-b, b]``."""

    gamma_n: float
    var_half: float
    boundary_term: RegretEstimate

    @property
    def total(self) -> float:
        return self.gamma_n - self.var_half + self.boundary_term.mean


class _BoundaryPenalty:
    def __init__(self, b, n):
        self.b, self.n = b, n

    def __call__(self, means):
        y = means[:, 0]
        r = np.clip(y, -self.b, self.b) - y
        return 0.5 * self.n * r * r


class _JeffreysExcess:
    def __init__(self, b, n, offset):
        self.b, self.n, self.offset = b, n, offset

    def __call__(self, means):
        return self.offset - log_q2(means[:, 0], self.b, self.n)


def _mean_estimate(fn, gen, n, reps, seed, workers, variant="pac"):
    tasks = [(fn, gen, n, seed, k) for k in range(streams.n_blocks(reps))]
    values = _run_blocks(_mean_block, tasks, reps, workers)
    return RegretEstimate.from_values(values, n, variant)


def analytic_shtarkov_regret_terms(gen: GeneratorSpec, b: float, n: int, reps: int, seed: int,
                                   workers: int = 1) -> ShtarkovRegretTerms:
    """Split the plain (v=1, tau=0) Shtarkov regret into ``Gamma_n``, ``Var/2`` and
    the boundary penalty ``(n/2) E[(c(Ybar) - Ybar)^2]``; only the last is sampled."""
    _check_centered(gen, b)
    boundary = _mean_estimate(_BoundaryPenalty(b, n), gen, n, reps, seed, workers)
    return ShtarkovRegretTerms(gamma_n_interval(2.0 * b, n), 0.5 * gen.total_variance, boundary)


def analytic_jeffreys_regret(gen: GeneratorSpec, b: float, n: int, reps: int, seed: int,
                             workers: int = 1) -> RegretEstimate:
    """``I_n - E[ln q2(Ybar)]`` for the uniform-prior mixture on ``[-b, b]``; needs Var[Y] = 1."""
    _check_centered(gen, b)
    if abs(gen.total_variance - 1.0) > 1e-12:
        raise ContractViolation(f"needs Var[Y] = 1, generator has {gen.total_variance}")
    return _mean_estimate(_JeffreysExcess(b, n, i_n(1, n, 2.0 * b)), gen, n, reps, seed, workers)


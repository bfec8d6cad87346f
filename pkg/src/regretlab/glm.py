"""Gaussian location model geometry and data generators.

The parameter set is an axis-aligned box.  Everything the estimators need
(distance to the box, projection onto its tau-enlargement, the enlarged
volume) has a closed form for boxes, so nothing here iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ContractViolation, InvalidGenerator


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ThetaBox:
    """Compact box ``prod_i [lo_i, hi_i]`` in R^d."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen(np.atleast_1d(self.lo))
        hi = _frozen(np.atleast_1d(self.hi))
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise ContractViolation(f"box bounds must be equal-length vectors, got {lo.shape} and {hi.shape}")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ContractViolation("box bounds must be finite")
        if not np.all(lo < hi):
            raise ContractViolation("box needs lo[i] < hi[i] in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "ThetaBox":
        return cls([lo], [hi])

    @classmethod
    def cube(cls, d: int, lo: float = 0.0, hi: float = 1.0) -> "ThetaBox":
        return cls([lo] * d, [hi] * d)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def is_centered_interval(self) -> bool:
        return self.dim == 1 and self.lo[0] == -self.hi[0]

    def __eq__(self, other):
        if not isinstance(other, ThetaBox):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((tuple(self.lo), tuple(self.hi)))

    def __repr__(self):
        return f"ThetaBox(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def _as_points(box: ThetaBox, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if box.dim == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    if y.shape[-1] != box.dim:
        raise ContractViolation(f"point dimension {y.shape[-1]} does not match box dimension {box.dim}")
    return y


def _scalarize(x):
    return float(x) if np.ndim(x) == 0 else x


def distance_to_box(box: ThetaBox, y):
    """Euclidean distance from ``y`` (shape ``(..., d)``) to the box."""
    y = _as_points(box, y)
    gap = np.maximum(np.maximum(box.lo - y, y - box.hi), 0.0)
    return _scalarize(np.sqrt(np.sum(gap * gap, axis=-1)))


def project_enlarged(box: ThetaBox, tau: float, y) -> np.ndarray:
    """Nearest point to ``y`` in ``{x : d(x, box) <= tau}``.

    Points already inside the enlargement are returned unchanged; others are
    pulled toward their box projection until they sit at distance ``tau``.
    """
    if tau < 0:
        raise ContractViolation("tau must be non-negative")
    y = _as_points(box, y)
    p = np.clip(y, box.lo, box.hi)
    diff = y - p
    dist = np.sqrt(np.sum(diff * diff, axis=-1, keepdims=True))
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(dist > tau, tau / dist, 1.0)
    return p + diff * scale


def elementary_symmetric(values) -> np.ndarray:
    """Coefficients ``e_0..e_d`` of ``prod_i (1 + values_i x)``."""
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e


def unit_ball_volume(k: int) -> float:
    return math.exp(0.5 * k * math.log(math.pi) - gammaln(0.5 * k + 1.0))


def enlarged_volume(box: ThetaBox, tau: float) -> float:
    """Lebesgue measure of the tau-enlargement (Steiner formula for a box)."""
    if tau < 0:
        raise ContractViolation("tau must be non-negative")
    e = elementary_symmetric(box.lengths)
    d = box.dim
    return float(sum(e[d - k] * unit_ball_volume(k) * tau**k for k in range(d + 1)))


@dataclass(frozen=True, eq=False)
class GlmSummary:
    """Sufficient statistics of one batch, or of many batches stacked.

    ``mean`` has shape ``(d,)`` for a single batch or ``(reps, d)`` for a
    stack; ``ssq_perp`` is the matching scalar or ``(reps,)`` array of
    ``sum_t ||y_t - mean||^2``.
    """

    n: int
    mean: np.ndarray
    ssq_perp: np.ndarray

    def __post_init__(self):
        if int(self.n) < 1:
            raise ContractViolation("sample size must be at least 1")
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        ssq = np.asarray(self.ssq_perp, dtype=float)
        if np.any(ssq < 0):
            raise ContractViolation("ssq_perp must be non-negative")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "ssq_perp", ssq if ssq.ndim else float(ssq))

    @property
    def dim(self) -> int:
        return self.mean.shape[-1]

    @property
    def vhat(self):
        return self.ssq_perp / self.n

    def __len__(self):
        return 1 if self.mean.ndim == 1 else self.mean.shape[0]


def summarize(samples) -> GlmSummary:
    """Reduce ``n`` points (shape ``(n, d)``, or ``(n,)`` when d = 1)."""
    y = np.asarray(samples, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] == 0:
        raise ContractViolation("summarize needs a non-empty (n, d) sample")
    mean = y.mean(axis=0)
    centred = y - mean
    return GlmSummary(y.shape[0], mean, float(np.sum(centred * centred)))


GENERATOR_KINDS = ("gaussian", "uniform", "point_mass", "heavy_tail", "laplace")


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """An iid data law with known mean and total variance.

    Build instances with the classmethods; ``params`` holds the kind-specific
    numbers and is not meant to be filled by hand.
    """

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def gaussian(cls, theta, sigma2: float = 1.0) -> "GeneratorSpec":
        if sigma2 < 0:
            raise InvalidGenerator("gaussian variance must be non-negative")
        return cls("gaussian", {"theta": _frozen(np.atleast_1d(theta)), "sigma2": float(sigma2)})

    @classmethod
    def uniform(cls, box: ThetaBox) -> "GeneratorSpec":
        return cls("uniform", {"box": box})

    @classmethod
    def point_mass(cls, c) -> "GeneratorSpec":
        return cls("point_mass", {"c": _frozen(np.atleast_1d(c))})

    @classmethod
    def heavy_tail(cls, b: float, n: float) -> "GeneratorSpec":
        """Three-point law on ``{0, +2bn, -2bn}`` with mean 0, variance 1."""
        if not (b > 0 and n > 0):
            raise InvalidGenerator("heavy_tail needs b > 0 and n > 0")
        if 4.0 * b * b * n * n < 1.0:
            raise InvalidGenerator(f"heavy_tail(b={b}, n={n}) has P[Y=0] = 1 - 1/(4b^2n^2) < 0")
        return cls("heavy_tail", {"b": float(b), "n": float(n)})

    @classmethod
    def laplace(cls, theta, scale: float = 1.0) -> "GeneratorSpec":
        if scale <= 0:
            raise InvalidGenerator("laplace scale must be positive")
        return cls("laplace", {"theta": _frozen(np.atleast_1d(theta)), "scale": float(scale)})

    @property
    def dim(self) -> int:
        if self.kind == "uniform":
            return self.params["box"].dim
        if self.kind == "heavy_tail":
            return 1
        return self.params["theta" if "theta" in self.params else "c"].size

    @property
    def mean(self) -> np.ndarray:
        p = self.params
        if self.kind in ("gaussian", "laplace"):
            return p["theta"]
        if self.kind == "uniform":
            return 0.5 * (p["box"].lo + p["box"].hi)
        if self.kind == "point_mass":
            return p["c"]
        return np.zeros(1)

    @property
    def total_variance(self) -> float:
        p = self.params
        if self.kind == "gaussian":
            return p["sigma2"] * self.dim
        if self.kind == "uniform":
            return float(np.sum(p["box"].lengths ** 2) / 12.0)
        if self.kind == "point_mass":
            return 0.0
        if self.kind == "laplace":
            return 2.0 * p["scale"] ** 2 * self.dim
        # 2 * (2bn)^2 / (8 b^2 n^2) == 1 identically
        return 1.0

    def heavy_tail_probs(self) -> tuple[float, float]:
        """``(P[Y=0], P[Y=+2bn])`` for the three-point law."""
        b, m = self.params["b"], self.params["n"]
        tail = 1.0 / (8.0 * b * b * m * m)
        return 1.0 - 2.0 * tail, tail

    def label(self) -> str:
        p = self.params
        fmt = lambda v: ",".join(f"{x:g}" for x in np.atleast_1d(v))
        if self.kind == "gaussian":
            return f"gaussian(theta={fmt(p['theta'])};sigma2={p['sigma2']:g})"
        if self.kind == "uniform":
            return f"uniform(lo={fmt(p['box'].lo)};hi={fmt(p['box'].hi)})"
        if self.kind == "point_mass":
            return f"point_mass(c={fmt(p['c'])})"
        if self.kind == "heavy_tail":
            return f"heavy_tail(b={p['b']:g};n={p['n']:g})"
        return f"laplace(theta={fmt(p['theta'])};scale={p['scale']:g})"

    def __repr__(self):
        return f"GeneratorSpec<{self.label()}>"


def sample(gen: GeneratorSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` iid draws as an ``(n, d)`` array."""
    p = gen.params
    d = gen.dim
    if gen.kind == "gaussian":
        return p["theta"] + math.sqrt(p["sigma2"]) * rng.standard_normal((n, d))
    if gen.kind == "uniform":
        return rng.uniform(p["box"].lo, p["box"].hi, size=(n, d))
    if gen.kind == "point_mass":
        return np.broadcast_to(p["c"], (n, d)).copy()
    if gen.kind == "laplace":
        return rng.laplace(p["theta"], p["scale"], size=(n, d))
    if gen.kind == "heavy_tail":
        p0, pt = gen.heavy_tail_probs()
        s = 2.0 * p["b"] * p["n"]
        return rng.choice(np.array([0.0, s, -s]), size=(n, 1), p=[p0, pt, pt])
    raise InvalidGenerator(f"unknown generator kind {gen.kind!r}")


_FULL_BATCH_ELEMENTS = 1 << 20


def _full_batch_summaries(gen, n, rng, size):
    d = gen.dim
    means = np.empty((size, d))
    ssq = np.empty(size)
    chunk = max(1, _FULL_BATCH_ELEMENTS // (n * d))
    p = gen.params
    for start in range(0, size, chunk):
        m = min(chunk, size - start)
        if gen.kind == "uniform":
            y = rng.uniform(p["box"].lo, p["box"].hi, size=(m, n, d))
        else:
            y = rng.laplace(p["theta"], p["scale"], size=(m, n, d))
        mu = y.mean(axis=1)
        c = y - mu[:, None, :]
        means[start:start + m] = mu
        ssq[start:start + m] = np.einsum("rnd,rnd->r", c, c)
    return means, ssq


def draw_summaries(gen: GeneratorSpec, n: int, rng: np.random.Generator, size: int) -> GlmSummary:
    """Summaries of ``size`` independent batches of ``n`` draws each.

    Gaussian, point-mass and three-point laws are sampled through their exact
    sufficient-statistic distributions; the others simulate full batches.
    """
    p = gen.params
    d = gen.dim
    if gen.kind == "gaussian":
        means = p["theta"] + math.sqrt(p["sigma2"] / n) * rng.standard_normal((size, d))
        dof = (n - 1) * d
        ssq = p["sigma2"] * rng.chisquare(dof, size) if dof > 0 else np.zeros(size)
    elif gen.kind == "point_mass":
        means = np.broadcast_to(p["c"], (size, d)).copy()
        ssq = np.zeros(size)
    elif gen.kind == "heavy_tail":
        p0, pt = gen.heavy_tail_probs()
        counts = rng.multinomial(n, [p0, pt, pt], size=size)
        kp, km = counts[:, 1], counts[:, 2]
        s = 2.0 * p["b"] * p["n"]
        k, diff = kp + km, kp - km
        means = (s * diff / n)[:, None]
        # s^2 (n k - diff^2) / n, with the integer part exact
        ssq = s * s * (n * k - diff * diff).astype(float) / n
    elif gen.kind in ("uniform", "laplace"):
        means, ssq = _full_batch_summaries(gen, n, rng, size)
    else:
        raise InvalidGenerator(f"unknown generator kind {gen.kind!r}")
    return GlmSummary(n, means, ssq)


def draw_means(gen: GeneratorSpec, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Sample means only; agrees with ``draw_summaries(...).mean`` on the same stream."""
    p = gen.params
    if gen.kind == "gaussian":
        return p["theta"] + math.sqrt(p["sigma2"] / n) * rng.standard_normal((size, gen.dim))
    return draw_summaries(gen, n, rng, size).mean

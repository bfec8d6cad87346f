"""Misspecified regret on finite alphabets.

For a finite model class ``Theta`` and data class ``Phi`` the one-shot
misspecified regret equals a cost-penalised channel capacity::

    F(Theta, Phi) = max_pi  I(phi; Y) - sum_k pi_k c_k,   c_k = min_theta KL(P_k || P_theta)

which a Blahut-Arimoto iteration solves.  All information quantities are in
nats.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import rel_entr

from .errors import ContractViolation, ConvergenceError, EmptyClassError, HypothesisViolated

PMF_TOL = 1e-12


def _pmf_matrix(rows, m=None, what="pmf") -> np.ndarray:
    a = np.array(rows, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[0] == 0:
        raise ContractViolation(f"{what} list must be a non-empty list of vectors")
    if m is not None and a.shape[1] != m:
        raise ContractViolation(f"{what} vectors must have length {m}, got {a.shape[1]}")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ContractViolation(f"{what} entries must be finite and non-negative")
    sums = a.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > PMF_TOL):
        raise ContractViolation(f"{what} vectors must sum to 1 (got sums {sums.tolist()})")
    a.setflags(write=False)
    return a


def kl(p, q) -> float:
    """``sum_i p_i ln(p_i / q_i)`` with ``0 ln(0/q) = 0`` and ``p > 0 = q`` giving ``+inf``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.sum(rel_entr(p, q), axis=-1))


def _kl_rows(P, q):
    return np.sum(rel_entr(P, q[None, :]), axis=1)


def min_divergence_to_class(p, theta_pmfs) -> float:
    theta = np.atleast_2d(np.asarray(theta_pmfs, dtype=float))
    if theta.shape[0] == 0:
        raise ContractViolation("model class is empty")
    return float(np.min(np.sum(rel_entr(np.asarray(p, dtype=float)[None, :], theta), axis=1)))


def binary_entropy(x: float) -> float:
    if not 0 <= x <= 1:
        raise ContractViolation("binary entropy needs x in [0, 1]")
    return float(rel_entr(x, 1) * -1 + rel_entr(1 - x, 1) * -1) if 0 < x < 1 else 0.0


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    """Model class ``theta``, data class ``phi`` and the cached costs of ``phi``."""

    theta: np.ndarray
    phi: np.ndarray
    costs: np.ndarray = field(init=False)

    def __post_init__(self):
        theta = _pmf_matrix(self.theta, what="theta")
        phi = _pmf_matrix(self.phi, theta.shape[1], what="phi")
        costs = np.array([min_divergence_to_class(p, theta) for p in phi])
        if not np.all(np.isfinite(costs)):
            bad = np.flatnonzero(~np.isfinite(costs)).tolist()
            raise ContractViolation(f"phi elements {bad} have infinite divergence to the model class")
        costs.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "costs", costs)

    @property
    def alphabet_size(self) -> int:
        return self.theta.shape[1]

    def theta_subset_of_phi(self, tol: float = PMF_TOL) -> bool:
        return all(np.any(np.all(np.abs(self.phi - t) <= tol, axis=1)) for t in self.theta)

    def to_dict(self) -> dict:
        return {"alphabet_size": self.alphabet_size, "theta": self.theta.tolist(), "phi": self.phi.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscreteInstance":
        try:
            m, theta, phi = int(doc["alphabet_size"]), doc["theta"], doc["phi"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractViolation(f"instance document needs alphabet_size, theta, phi ({exc})") from None
        inst = cls(theta, phi)
        if inst.alphabet_size != m:
            raise ContractViolation(f"alphabet_size={m} but vectors have length {inst.alphabet_size}")
        return inst


def load_instance(path) -> DiscreteInstance:
    """Read an instance file; any ``costs`` field in it is ignored and recomputed."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractViolation(f"{path}: not valid JSON ({exc})") from None
    return DiscreteInstance.from_dict(doc)


def dump_instance(inst: DiscreteInstance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class CapacitySolution:
    value: float
    prior: np.ndarray
    qstar: np.ndarray
    iterations: int
    gap: float
    history: tuple = ()


PRUNE_WEIGHT = 1e-2
PRUNE_EVERY = 50
REVIVE_WEIGHT = 1e-3
NEWTON_STEPS = 20


def _state(P, c, pa):
    q = pa @ P
    gains = _kl_rows(P, q) - c
    on = pa > 0
    value = float(pa[on] @ gains[on])
    return q, gains, value, float(np.max(gains)) - value


def _slack(value):
    # J is a sum of O(1) terms; changes below this are rounding noise
    return 16 * np.finfo(float).eps * (1.0 + abs(value))


def _accept(state, value, gap):
    """A move is kept if ``J`` clearly rises, or holds to rounding while the gap falls."""
    v, g = state[2], state[3]
    return v > value + _slack(value) or (v >= value - _slack(value) and g < gap)


def _newton_candidate(P, c, pa, gains, value, gap):
    """One projected Newton step for ``J`` on the face spanned by the current support.

    ``dJ/dpi_k = gain_k - 1`` and ``d2J/dpi_k dpi_l = -sum_i P_ki P_li / Q_i``.  The
    step is solved with a least-squares KKT system (the Hessian is singular when
    rows repeat), cut back to stay in the simplex, and halved until ``J`` rises.
    """
    on = np.flatnonzero(pa > 0)
    if len(on) < 2:
        return None
    # Directions with sum_k v_k P_k = 0 leave Q fixed, so J is linear along
    # them: walk to the face boundary before taking a curved step.
    _, sv, vt = np.linalg.svd(P[on].T)
    rank = int(np.sum(sv > 1e-12 * sv[0]))
    for v in vt[rank:]:
        slope = float(v @ gains[on])
        if slope == 0.0:
            continue
        v = v if slope > 0 else -v
        ratio = np.full(len(on), np.inf)
        ratio[v < 0] = -pa[on][v < 0] / v[v < 0]
        hit = int(np.argmin(ratio))
        cand = pa.copy()
        cand[on] = np.maximum(pa[on] + ratio[hit] * v, 0.0)
        cand[on[hit]] = 0.0
        cand /= cand.sum()
        state = _state(P, c, cand)
        if _accept(state, value, gap):
            return cand, state
    q = pa @ P
    cols = q > 0
    Pn = P[on][:, cols]
    H = -(Pn / q[cols]) @ Pn.T
    K = len(on)
    kkt = np.zeros((K + 1, K + 1))
    kkt[:K, :K] = H
    kkt[:K, K] = kkt[K, :K] = 1.0
    rhs = np.concatenate([-gains[on], [0.0]])
    d = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:K]
    if not np.all(np.isfinite(d)) or gains[on] @ d <= 0:
        return None
    neg = d < 0
    step = min(1.0, float(np.min(-pa[on][neg] / d[neg]))) if np.any(neg) else 1.0
    for _ in range(40):
        cand = pa.copy()
        cand[on] = np.maximum(pa[on] + step * d, 0.0)
        cand[on[pa[on] + step * d <= 1e-15 * pa[on]]] = 0.0
        cand /= cand.sum()
        state = _state(P, c, cand)
        if _accept(state, value, gap):
            return cand, state
        step *= 0.5
    return None


def _revive(P, c, pa, back, value, gap):
    # gain_k > J means J rises to first order along pi -> pi + w (e_k - pi)
    w = REVIVE_WEIGHT
    while w > 1e-15:
        cand = np.where(back, w, pa)
        cand /= cand.sum()
        state = _state(P, c, cand)
        if _accept(state, value, gap):
            return cand, state
        w *= 0.1
    return pa, _state(P, c, pa)


def misspec_capacity(inst: DiscreteInstance, tol: float = 1e-12, max_iters: int = 1_000_000, *,
                     init=None, trace: bool = False) -> CapacitySolution:
    """Maximise ``J(pi) = I(phi; Y) - E_pi[c]`` by Blahut-Arimoto.

    Stops once the certified gap ``max_k (KL(P_k || Q_pi) - c_k) - J(pi)``
    falls below ``tol``; that quantity upper-bounds ``F - J(pi)``.  The
    update ``pi_k <- pi_k exp(KL(P_k || Q_pi) - c_k)`` cannot revive a zero
    weight, so zero entries of ``init`` are dropped with a warning.

    When the optimum sits on a face of the simplex with a flat gradient the
    plain iteration only converges like 1/t.  Every ``PRUNE_EVERY`` steps the
    small weights whose gain does not beat the current value are tentatively
    zeroed, and a few projected Newton steps are tried on the current face
    (near-duplicate rows leave a flat direction that the multiplicative
    update crawls along).  A pruning is kept only if ``J`` holds and the gap,
    always taken over every element, falls; a Newton step only if ``J``
    clearly rises or holds while the gap falls.  "Holds" allows rounding
    noise, since near the optimum the true changes in ``J`` are smaller than
    an ulp.  A zeroed element whose gain later beats the value is brought
    back with the largest weight (from ``REVIVE_WEIGHT`` down) passing the
    same test.
    """
    P, c = inst.phi, inst.costs
    k = P.shape[0]
    pi = np.full(k, 1.0 / k) if init is None else np.asarray(init, dtype=float).copy()
    if pi.shape != (k,) or np.any(pi < 0) or not pi.sum() > 0:
        raise ContractViolation("init must be a non-negative weight vector over phi")
    pi /= pi.sum()
    usable = pi > 0
    if not np.all(usable):
        warnings.warn(f"pruning {int(np.sum(~usable))} zero-weight phi elements; they stay at zero", stacklevel=2)
    Pa, ca, pa = P[usable], c[usable], pi[usable]

    history = []
    gap = math.inf
    for it in range(int(max_iters) + 1):
        q, gains, value, gap = _state(Pa, ca, pa)
        on = pa > 0
        if it % PRUNE_EVERY == PRUNE_EVERY - 1 and gap >= tol:
            drop = on & (pa < PRUNE_WEIGHT) & (gains <= value)
            if np.any(drop) and np.any(on & ~drop):
                cand = np.where(drop, 0.0, pa)
                cand /= cand.sum()
                state = _state(Pa, ca, cand)
                if state[2] >= value - _slack(value) and state[3] < gap:
                    pa, (q, gains, value, gap) = cand, state
            for _ in range(NEWTON_STEPS):
                if gap < tol:
                    break
                res = _newton_candidate(Pa, ca, pa, gains, value, gap)
                if res is None:
                    break
                pa, (q, gains, value, gap) = res
        if trace:
            history.append(value)
        if gap < tol:
            prior = np.zeros(k)
            prior[usable] = pa
            return CapacitySolution(value, prior, q, it, gap, tuple(history))
        if it == max_iters:
            break
        back = (pa == 0) & (gains > value)
        if np.any(back):
            pa, (q, gains, value, gap) = _revive(Pa, ca, pa, back, value, gap)
        live = pa > 0
        w = np.full(len(pa), -np.inf)
        w[live] = np.log(pa[live]) + gains[live]
        w = np.exp(w - np.max(w))
        pa = w / w.sum()
    raise ConvergenceError(f"Blahut-Arimoto stopped after {max_iters} iterations with gap {gap:.3g}", gap)


def kemperman_capacity(theta_pmfs, tol: float = 1e-12, max_iters: int = 1_000_000) -> CapacitySolution:
    """Capacity of the class: the zero-cost case with ``Phi = Theta``.

    The returned ``gap`` certifies ``max_theta KL(P_theta || Q*) - C < tol``.
    """
    sol = misspec_capacity(DiscreteInstance(theta_pmfs, theta_pmfs), tol, max_iters)
    P = _pmf_matrix(theta_pmfs)
    redundancy = float(np.max(_kl_rows(P, sol.qstar)))
    if not redundancy - sol.value < tol:
        raise ConvergenceError(f"redundancy-capacity gap {redundancy - sol.value:.3g} not below {tol:.3g}",
                               redundancy - sol.value)
    return sol


@dataclass(frozen=True)
class SaddleReport:
    max_value: float
    value_gap: float
    slacks: np.ndarray
    value_ok: bool
    divergence_ok: bool

    @property
    def passed(self) -> bool:
        return self.value_ok and self.divergence_ok


def _expected_log_ratio(p, f, q):
    """``E_p[ln(f/q)]`` term by term, with the conventions for zero densities."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log(f) - np.log(q)
        r = np.where((f == 0) & (q == 0), 0.0, r)
        return float(np.sum(np.where(p > 0, p * r, 0.0)))


def saddle_certificate(inst: DiscreteInstance, qstar, F: float, tol: float = 1e-6) -> SaddleReport:
    """Check that ``qstar`` attains ``F``.

    (a) ``max_{P, theta} E_P[ln(f_theta / q*)]`` equals ``F`` within ``tol``;
    (b) ``KL(P || Q*) <= F + c(P) + tol`` for every ``P`` in ``Phi``.
    ``slacks`` holds ``F + c(P) - KL(P || Q*)`` per element.
    """
    q = np.asarray(qstar, dtype=float)
    best = max(_expected_log_ratio(p, t, q) for p in inst.phi for t in inst.theta)
    slacks = F + inst.costs - _kl_rows(inst.phi, q)
    return SaddleReport(best, best - F, slacks, abs(best - F) <= tol, bool(np.all(slacks >= -tol)))


def enlarged_class(inst: DiscreteInstance, epsilon: float) -> DiscreteInstance:
    """Keep only the ``Phi`` elements within divergence ``epsilon`` of ``Theta``."""
    if epsilon < 0:
        raise ContractViolation("epsilon must be non-negative")
    keep = inst.costs <= epsilon
    if not np.any(keep):
        raise EmptyClassError(f"no phi element lies within {epsilon} of the model class")
    return DiscreteInstance(inst.theta, inst.phi[keep])


@dataclass(frozen=True)
class SandwichReport:
    capacity_phi: float
    capacity_theta: float
    misspec: float
    misspec_enlarged: float
    slack_term: float
    lambda0: float
    passed: bool

    @property
    def upper(self) -> float:
        return self.misspec_enlarged + self.slack_term


def sandwich_certificate(inst: DiscreteInstance, epsilon: float, tol: float = 1e-9) -> SandwichReport:
    """Check ``C(Theta) <= F(Theta, Phi) <= F(Theta, Theta_eps) + h(l0)/(1 - l0)``, ``l0 = C(Phi)/eps``."""
    if not inst.theta_subset_of_phi():
        raise HypothesisViolated("the sandwich bound needs every theta element inside phi")
    c_phi = kemperman_capacity(inst.phi).value
    if c_phi <= 0:
        lam0 = 0.0
    elif epsilon > 0:
        lam0 = c_phi / epsilon
    else:
        lam0 = math.inf
    if lam0 >= 1:
        raise HypothesisViolated(f"lambda0 = C(Phi)/eps = {lam0:.6g} must be below 1")
    slack = binary_entropy(lam0) / (1.0 - lam0)
    c_theta = kemperman_capacity(inst.theta).value
    f_full = misspec_capacity(inst).value
    f_eps = misspec_capacity(enlarged_class(inst, epsilon)).value
    ok = c_theta <= f_full + tol and f_full <= f_eps + slack + tol
    return SandwichReport(c_phi, c_theta, f_full, f_eps, slack, lam0, ok)

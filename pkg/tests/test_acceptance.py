"""Acceptance criteria, one test per criterion.

Each test records a ``[PASS]``/``[FAIL]`` line that is echoed in the pytest
terminal summary; running this file directly prints the lines as well.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import brute_force_capacity, kl_joint_monte_carlo, random_instance
from regretlab.capacity import (DiscreteInstance, kemperman_capacity, misspec_capacity, saddle_certificate,
                                sandwich_certificate)
from regretlab.cli import main
from regretlab.glm import GeneratorSpec, ThetaBox, enlarged_volume
from regretlab.predictors import PredictorSpec, shtarkov_log_normalizer
from regretlab.regret import analytic_jeffreys_regret, analytic_shtarkov_regret_terms, pac_regret
from regretlab.theory import (entropy_robustness_bound, gamma_n_interval, hilbert_brick_upper, i_n,
                              jeffreys_shtarkov_kl, uniform_gaussian_entropy)

HEADLINE = Path(__file__).resolve().parents[1] / "configs" / "headline_sweep.json"


def report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_normalizer_exactness():
    t0 = time.perf_counter()
    v = shtarkov_log_normalizer(ThetaBox.interval(0, 1), 1.0, 0.0, 2 * math.pi)
    err1 = abs(v - math.log(2))
    r = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        lo = r.uniform(-2, 2, 2)
        box = ThetaBox(lo, lo + r.uniform(0.01, 4, 2))
        vv, n = r.uniform(0.05, 1.0), float(r.integers(1, 100_000))
        closed = shtarkov_log_normalizer(box, vv, 0.0, n, method="closed")
        quad = shtarkov_log_normalizer(box, vv, 0.0, n, method="quadrature")
        worst = max(worst, abs(closed - quad))
    dt = time.perf_counter() - t0
    ok = err1 <= 1e-12 and worst <= 1e-8 and dt < 60
    report(1, ok, f"|lnZ - ln2| = {err1:.2e} (<=1e-12); d=2 quadrature vs closed max diff {worst:.2e} (<=1e-8); "
                  f"{dt:.1f}s (<60s)")


def test_criterion_02_normalizer_asymptote():
    t0 = time.perf_counter()
    n = 10_000
    worst, rows = 0.0, []
    for d in (1, 2):
        box = ThetaBox.cube(d)
        for tau in (0.0, 0.1):
            for v in (1.0, 1.0 - 1.0 / n):
                lz = shtarkov_log_normalizer(box, v, tau, n)
                gap = abs(lz - 0.5 * d * math.log(n / (2 * math.pi * v)) - math.log(enlarged_volume(box, tau)))
                rows.append(f"d{d}/tau{tau:g}/v{v:.4f}:{gap:.4f}")
                worst = max(worst, gap)
    dt = time.perf_counter() - t0
    ok = worst < 1e-2 and dt < 60
    report(2, ok, f"max asymptote gap at n=1e4 = {worst:.4f} (<1e-2); {' '.join(rows)}; {dt:.1f}s")


def test_criterion_03_well_specified_shtarkov():
    box = ThetaBox.interval(0.0, 1.0)
    n = 10_000
    est = pac_regret(GeneratorSpec.gaussian([0.5], 1.0), PredictorSpec("shtarkov"), n, 100_000, seed=3, box=box)
    target = gamma_n_interval(1.0, n) - 0.5
    z = abs(est.mean - target) / est.stderr
    report(3, z < 3, f"pac_regret = {est.mean:.5f} vs Gamma_n - 0.5 = {target:.5f}, stderr {est.stderr:.2e}, "
                     f"|z| = {z:.2f} (<3)")


def test_criterion_04_heavy_tail_baselines():
    reps = 1_000_000
    parts, ok = [], True
    for n in (100, 1000):
        gen = GeneratorSpec.heavy_tail(1.0, n)
        bt = analytic_shtarkov_regret_terms(gen, 1.0, n, reps, seed=41).boundary_term
        jf = analytic_jeffreys_regret(gen, 1.0, n, reps, seed=42)
        jgap = jf.mean - i_n(1, n, 2.0)
        ok &= bt.mean >= 0.02 and bt.mean > 5 * bt.stderr
        ok &= jgap >= 0.02 and jgap > 5 * jf.stderr
        parts.append(f"n={n}: boundary {bt.mean:.4f}+-{bt.stderr:.4f} ({bt.mean / bt.stderr:.1f} se), "
                     f"jeffreys-I_n {jgap:.4f}+-{jf.stderr:.4f} ({jgap / jf.stderr:.1f} se)")
    report(4, ok, "; ".join(parts) + " (each >=0.02 and >5 se)")


def test_criterion_05_robust_separation():
    n, reps = 1000, 1_000_000
    box = ThetaBox.interval(-1.0, 1.0)
    gen = GeneratorSpec.heavy_tail(1.0, n)
    ref = i_n(1, n, 2.0)
    est = {name: pac_regret(gen, spec, n, reps, seed=51, box=box)
           for name, spec in (("robust", PredictorSpec.robust()), ("shtarkov", PredictorSpec("shtarkov")),
                              ("jeffreys", PredictorSpec("jeffreys")))}
    r = est["robust"]
    ok, parts = True, [f"robust gap {r.mean - ref:.4f}+-{r.stderr:.4f}"]
    for name in ("shtarkov", "jeffreys"):
        b = est[name]
        se = math.hypot(r.stderr, b.stderr)
        sep = (b.mean - r.mean) / se
        ok &= sep >= 5
        parts.append(f"{name} gap {b.mean - ref:.4f}+-{b.stderr:.4f} (separation {sep:.1f} se)")
    report(5, ok, "; ".join(parts) + " (>=5 se)")


def test_criterion_06_discrete_oracle():
    t0 = time.perf_counter()
    r = np.random.default_rng(606)
    worst_f, worst_tv, cert_fail = 0.0, 0.0, 0
    for _ in range(100):
        theta, phi = random_instance(r, m_max=4, theta_max=3, phi_max=3)
        inst = DiscreteInstance(theta, phi)
        sol = misspec_capacity(inst)
        worst_f = max(worst_f, abs(sol.value - brute_force_capacity(inst.phi, inst.costs)))
        cert_fail += not saddle_certificate(inst, sol.qstar, sol.value, 1e-6).passed
        qs = [misspec_capacity(inst, tol=1e-13, init=r.dirichlet(np.ones(len(inst.phi)))).qstar for _ in range(10)]
        worst_tv = max(worst_tv, max(0.5 * np.abs(q - qs[0]).sum() for q in qs))
    dt = time.perf_counter() - t0
    ok = worst_f <= 1e-6 and cert_fail == 0 and worst_tv <= 1e-6 and dt < 120
    report(6, ok, f"max |F - brute force| = {worst_f:.2e} (<=1e-6); certificate failures {cert_fail}/100; "
                  f"max Q* TV across 10 inits {worst_tv:.2e} (<=1e-6); {dt:.1f}s (<120s)")


def test_criterion_07_sandwich():
    t0 = time.perf_counter()
    r = np.random.default_rng(707)
    passed, worst_slack = 0, math.inf
    for _ in range(50):
        m = int(r.integers(2, 5))
        nt = int(r.integers(1, 5))
        theta = r.dirichlet(np.ones(m), nt)
        extra = r.dirichlet(np.ones(m), int(r.integers(0, 5 - nt + 1)))
        theta = theta / theta.sum(1, keepdims=True)
        extra = extra / extra.sum(1, keepdims=True)
        inst = DiscreteInstance(theta, np.vstack([theta, extra]))
        c_phi = kemperman_capacity(inst.phi).value
        rep = sandwich_certificate(inst, 2 * c_phi)
        passed += rep.passed
        worst_slack = min(worst_slack, rep.misspec - rep.capacity_theta, rep.upper - rep.misspec)
    dt = time.perf_counter() - t0
    ok = passed == 50 and dt < 60
    report(7, ok, f"{passed}/50 instances satisfy C <= F <= F_eps + h/(1-l0); min slack {worst_slack:.3e}; "
                  f"{dt:.1f}s (<60s)")


def test_criterion_08_mixture_gap_decay():
    scaled = [math.sqrt(n) * jeffreys_shtarkov_kl(n, 1.0) for n in (100, 1000, 10000)]
    spread = (max(scaled) - min(scaled)) / min(scaled)
    kl = jeffreys_shtarkov_kl(100, 1.0)
    mc, se = kl_joint_monte_carlo(100, 1.0, 400_000, 808)
    z = abs(kl - mc) / se
    ok = spread < 0.5 and all(np.isfinite(scaled)) and z < 3
    report(8, ok, f"sqrt(n)*KL = {', '.join(f'{s:.4f}' for s in scaled)} (spread {spread:.1%} <50%); "
                  f"quadrature {kl:.5f} vs joint MC {mc:.5f}+-{se:.5f}, |z| = {z:.2f} (<3)")


def test_criterion_09_brick_scaling():
    ratios = [hilbert_brick_upper(n) / math.log(n) ** 2 for n in (1e3, 1e4, 1e5, 1e6)]
    spread = (max(ratios) - min(ratios)) / min(ratios)
    report(9, spread < 0.10, f"bound/(ln n)^2 = {', '.join(f'{x:.4f}' for x in ratios)} (spread {spread:.1%} <10%)")


def test_criterion_10_entropy_bound():
    parts, ok = [], True
    for eps in (1e-4, 1e-6):
        h = uniform_gaussian_entropy(1.0, eps)
        b = entropy_robustness_bound(1.0, eps)
        ok &= h <= b
        parts.append(f"eps={eps:g}: h={h:.5f} <= bound {b:.5f}")
    lim = entropy_robustness_bound(1.0, 1e-12) - math.log(2)
    ok &= abs(lim) < 1e-3
    parts.append(f"bound(1e-12) - ln2 = {lim:.2e} (<1e-3)")
    report(10, ok, "; ".join(parts))


def test_criterion_11_determinism(tmp_path):
    outs = []
    for workers in (1, 8):
        out = tmp_path / f"sweep_{workers}.csv"
        code = main(["sweep", "--config", str(HEADLINE), "--workers", str(workers), "--out", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    report(11, same, f"headline sweep CSV ({len(outs[0])} bytes) identical for workers 1 and 8: {same}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))

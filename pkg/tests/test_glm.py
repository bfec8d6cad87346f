import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regretlab.errors import ContractViolation, InvalidGenerator
from regretlab.glm import (GeneratorSpec, GlmSummary, ThetaBox, distance_to_box, draw_means, draw_summaries,
                           elementary_symmetric, enlarged_volume, project_enlarged, sample, summarize)


def test_box_validation():
    with pytest.raises(ContractViolation):
        ThetaBox([1.0], [0.0])
    box = ThetaBox.cube(3, -1.0, 2.0)
    assert box.dim == 3
    assert box.volume() == pytest.approx(27.0)
    assert ThetaBox.interval(-2, 2).is_centered_interval()
    assert not ThetaBox.interval(0, 2).is_centered_interval()
    assert ThetaBox.interval(0, 1) == ThetaBox([0.0], [1.0])


def test_distance_examples():
    sq = ThetaBox.cube(2)
    assert distance_to_box(sq, [0.5, 0.5]) == 0.0
    assert distance_to_box(sq, [2.0, 0.5]) == pytest.approx(1.0)
    assert distance_to_box(sq, [2.0, 2.0]) == pytest.approx(math.sqrt(2.0))
    assert distance_to_box(ThetaBox.interval(-1, 1), -3.0) == pytest.approx(2.0)


def test_projection_examples():
    iv = ThetaBox.interval(0, 1)
    assert project_enlarged(iv, 0.0, 2.0)[0] == pytest.approx(1.0)
    assert project_enlarged(iv, 0.5, 2.0)[0] == pytest.approx(1.5)
    assert project_enlarged(iv, 0.5, 1.2)[0] == pytest.approx(1.2)
    corner = project_enlarged(ThetaBox.cube(2), 1.0, [4.0, 5.0])
    # pulled along the ray from the corner (1, 1)
    np.testing.assert_allclose(corner, [1.6, 1.8])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2), st.floats(0, 3))
def test_projection_properties(y, tau):
    box = ThetaBox([-1.0, 0.0], [1.0, 2.0])
    c = project_enlarged(box, tau, y)
    assert distance_to_box(box, c) <= tau + 1e-9
    np.testing.assert_allclose(project_enlarged(box, tau, c), c, atol=1e-12)
    # nearest point of the enlargement sits exactly (dist - tau) away
    d_c = np.linalg.norm(np.asarray(y) - c)
    assert d_c == pytest.approx(max(distance_to_box(box, y) - tau, 0.0), abs=1e-9)


def test_elementary_symmetric():
    np.testing.assert_allclose(elementary_symmetric([1.0, 2.0, 3.0]), [1, 6, 11, 6])


def test_steiner_volume_closed_forms():
    assert enlarged_volume(ThetaBox.interval(0, 2), 0.3) == pytest.approx(2.6)
    t = 0.2
    assert enlarged_volume(ThetaBox.cube(2), t) == pytest.approx(1 + 4 * t + math.pi * t * t)
    assert enlarged_volume(ThetaBox.cube(3), t) == pytest.approx(1 + 6 * t + 3 * math.pi * t**2 + 4 / 3 * math.pi * t**3)


def test_steiner_volume_against_monte_carlo():
    box = ThetaBox([0.0, 0.0, 0.0], [1.0, 0.5, 2.0])
    tau = 0.4
    r = np.random.default_rng(3)
    lo, hi = box.lo - tau, box.hi + tau
    pts = r.uniform(lo, hi, size=(400_000, 3))
    inside = distance_to_box(box, pts) <= tau
    vol = np.prod(hi - lo)
    p = inside.mean()
    est, se = vol * p, vol * math.sqrt(p * (1 - p) / pts.shape[0])
    assert abs(est - enlarged_volume(box, tau)) < 4 * se


def test_summarize_matches_definition():
    y = np.array([[1.0, 2.0], [3.0, -1.0], [2.0, 5.0]])
    s = summarize(y)
    assert s.n == 3
    np.testing.assert_allclose(s.mean, [2.0, 2.0])
    assert s.ssq_perp == pytest.approx(2.0 + 18.0)
    assert summarize([1.0, 3.0]).dim == 1


def test_summary_rejects_negative_ssq():
    with pytest.raises(ContractViolation):
        GlmSummary(3, [0.0], -1.0)


def test_heavy_tail_law():
    g = GeneratorSpec.heavy_tail(1.0, 10)
    p0, pt = g.heavy_tail_probs()
    assert p0 + 2 * pt == pytest.approx(1.0)
    s = 20.0
    assert 2 * pt * s * s == pytest.approx(1.0)
    assert g.total_variance == 1.0
    with pytest.raises(InvalidGenerator):
        GeneratorSpec.heavy_tail(0.1, 1.0)


def test_generator_moments():
    box = ThetaBox([0.0, -1.0], [2.0, 1.0])
    assert GeneratorSpec.uniform(box).total_variance == pytest.approx(8.0 / 12.0)
    assert GeneratorSpec.laplace([0.0], 2.0).total_variance == pytest.approx(8.0)
    np.testing.assert_allclose(GeneratorSpec.uniform(box).mean, [1.0, 0.0])


@pytest.mark.parametrize("gen", [
    GeneratorSpec.gaussian([0.3, -0.2], 2.0),
    GeneratorSpec.heavy_tail(1.0, 3.0),
    GeneratorSpec.uniform(ThetaBox.cube(2)),
    GeneratorSpec.laplace([1.0], 0.5),
])
def test_summary_sampler_matches_raw_sampler(gen):
    """Sufficient-statistic draws agree in distribution with raw draws."""
    n, size = 6, 40_000
    fast = draw_summaries(gen, n, np.random.default_rng(1), size)
    r = np.random.default_rng(2)
    raw = [summarize(sample(gen, n, r)) for _ in range(size)]
    raw_mean = np.array([s.mean for s in raw])
    raw_ssq = np.array([s.ssq_perp for s in raw])
    for a, b in ((fast.mean[:, 0], raw_mean[:, 0]), (fast.ssq_perp, raw_ssq)):
        se = math.sqrt(a.var() / size + b.var() / size)
        assert abs(a.mean() - b.mean()) < 5 * se + 1e-12
    # E[ssq] = (n - 1) * total variance
    expected = (n - 1) * gen.total_variance
    assert abs(fast.ssq_perp.mean() - expected) < 5 * fast.ssq_perp.std() / math.sqrt(size)


def test_draw_means_consistent_with_summaries():
    for gen in (GeneratorSpec.gaussian([0.1], 1.0), GeneratorSpec.heavy_tail(1.0, 50)):
        a = draw_means(gen, 50, np.random.default_rng(9), 100)
        b = draw_summaries(gen, 50, np.random.default_rng(9), 100).mean
        np.testing.assert_array_equal(a, b)


def test_heavy_tail_ssq_exact():
    gen = GeneratorSpec.heavy_tail(1.0, 4.0)
    s = draw_summaries(gen, 5, np.random.default_rng(0), 2000)
    s_val = 8.0
    # draws are 0 or +-8, so sum_t y_t^2 = ssq + n * mean^2 is 64 times an integer
    k = (s.ssq_perp + 5 * s.mean[:, 0] ** 2) / s_val**2
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)

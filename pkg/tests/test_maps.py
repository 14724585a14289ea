import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liyorke import (Branch, DomainError, MapSpec, branch_of, derivative, dist, eval_n,
                     evaluate)
from liyorke.maps import left_inverse

ALPHAS = [0.5, 1.0, 1.5, 2.0, 4.0]


def test_worked_values():
    mp = MapSpec.manpom(1.0)
    assert evaluate(mp, 0.25) == pytest.approx(0.375, abs=1e-15)
    for a in ALPHAS:
        s = MapSpec.manpom(a)
        assert evaluate(s, 0.0) == 0.0
        assert evaluate(s, 0.5) == 0.0
        assert evaluate(s, 1.0) == 1.0
        assert abs(evaluate(s, 0.5 - 1e-9) - 1.0) < 1e-7


def test_orbits():
    orb = eval_n(MapSpec.manpom(1.0), 0.6, 4)
    np.testing.assert_allclose(orb, [0.6, 0.2, 0.28, 0.4368, 0.81838848], rtol=0, atol=1e-14)
    np.testing.assert_allclose(eval_n(MapSpec.doubling(), 0.3, 2), [0.3, 0.6, 0.2], atol=1e-15)
    assert list(eval_n(MapSpec.manpom(2.0), 0.37, 0)) == [0.37]


def test_windowed_orbit_is_the_tail():
    s = MapSpec.manpom(1.5)
    full = eval_n(s, 0.123, 1000)
    for w in (1, 7, 1001, 5000):
        np.testing.assert_array_equal(eval_n(s, 0.123, 1000, window=w), full[-w:])


def test_branch_of():
    s = MapSpec.manpom(2.0)
    assert branch_of(s, 0.3) == 0
    assert branch_of(s, 0.5) == 1
    assert branch_of(s, 0.999) == 1
    assert branch_of(s, 1.0) == 1


def test_dist():
    assert dist("interval", 0.1, 0.9) == pytest.approx(0.8)
    assert dist("circle", 0.1, 0.9) == pytest.approx(0.2)
    for m in ("interval", "circle"):
        assert dist(m, 0.37, 0.37) == 0.0


def test_domain_errors_and_clamping():
    s = MapSpec.manpom(2.0)
    with pytest.raises(DomainError):
        evaluate(s, 1.1)
    with pytest.raises(DomainError):
        evaluate(s, -1e-9)
    assert evaluate(s, 1.0 + 1e-13) == 1.0
    assert evaluate(s, -1e-13) == 0.0


def test_invalid_specs():
    with pytest.raises(ValueError):
        MapSpec.manpom(0.0)
    with pytest.raises(ValueError):
        MapSpec.manpom_two(1.0, -1.0)
    with pytest.raises(ValueError):
        MapSpec("tent")


def test_parse_and_describe_roundtrip():
    s = MapSpec.parse("map=manpom alpha=2.0 metric=interval")
    assert s == MapSpec.manpom(2.0)
    assert MapSpec.parse(s.describe()) == s
    t = MapSpec.parse("map=manpom2 alpha=1.5 beta=0.5 metric=circle")
    assert (t.kind, t.alpha, t.beta, t.metric) == ("manpom2", 1.5, 0.5, "circle")


def test_neutral_fixed_point_derivative():
    for a in ALPHAS:
        s = MapSpec.manpom(a)
        assert derivative(s, 0.0) == 1.0
        h = 1e-9
        x = 1e-6
        fd = (evaluate(s, x + h) - evaluate(s, x - h)) / (2 * h)
        assert abs(fd - derivative(s, x)) < 1e-4


def test_manpom_two_neutral_at_both_ends():
    s = MapSpec.manpom_two(1.5, 2.5)
    assert evaluate(s, 0.0) == 0.0 and evaluate(s, 1.0) == 1.0
    assert derivative(s, 0.0) == 1.0 and derivative(s, 1.0) == 1.0
    assert evaluate(s, 0.5) == 0.0


@pytest.mark.parametrize("spec", [MapSpec.manpom(a) for a in ALPHAS]
                         + [MapSpec.manpom_two(1.5, 0.7), MapSpec.doubling()])
def test_derivative_matches_finite_differences(spec):
    rng = np.random.default_rng(3)
    x = rng.uniform(1e-6, 1 - 1e-6, 1000)
    x = x[np.abs(x - 0.5) > 1e-6]
    h = 1e-7
    fd = (evaluate(spec, x + h) - evaluate(spec, x - h)) / (2 * h)
    np.testing.assert_allclose(fd, derivative(spec, x), rtol=1e-6)


@pytest.mark.parametrize("a", ALPHAS)
def test_monotone_on_each_branch(a):
    s = MapSpec.manpom(a)
    left = evaluate(s, np.linspace(0, 0.5, 2001, endpoint=False))
    right = evaluate(s, np.linspace(0.5, 1, 2001))
    assert np.all(np.diff(left) > 0) and np.all(np.diff(right) > 0)


def test_left_inverse_closed_form():
    assert left_inverse(0.5, 1.0) == pytest.approx((math.sqrt(5) - 1) / 4, abs=1e-16)


@given(st.floats(0.0, 1.0), st.sampled_from(ALPHAS + [0.1, 7.0]))
@settings(max_examples=300, deadline=None)
def test_left_inverse_roundtrip(t, a):
    x = left_inverse(t, a)
    assert 0.0 <= x <= 0.5
    assert abs(x + x * (2 * x) ** a - t) <= 4e-16 * max(t, 1e-300) + 1e-300


def test_custom_map_from_branches():
    tent = MapSpec.from_branches([
        Branch(0.0, 0.5, lambda x: 2 * x, lambda x: np.full_like(x, 2.0), lambda t: t / 2, "up"),
        Branch(0.5, 1.0, lambda x: 2 - 2 * x, lambda x: np.full_like(x, -2.0),
               lambda t: 1 - t / 2, "down"),
    ])
    assert evaluate(tent, 0.25) == 0.5
    assert evaluate(tent, 0.75) == 0.5
    np.testing.assert_allclose(eval_n(tent, 0.1, 3), [0.1, 0.2, 0.4, 0.8])
    with pytest.raises(ValueError):
        MapSpec.from_branches([Branch(0.0, 0.4, lambda x: x, lambda x: x)])

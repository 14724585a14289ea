import math

import numpy as np
import pytest

from liyorke import MapSpec, evaluate
from liyorke.inducing import (Censored, compute_yn, cylinder_partition, cylinder_ratio,
                              distortion_estimate, induced_step, return_time,
                              sample_return_times, tail_measure)
from liyorke.stats import loglog_fit


@pytest.fixture(scope="module")
def rs2():
    return compute_yn(MapSpec.manpom(2.0), 100_000)


def test_first_points():
    rs = compute_yn(MapSpec.manpom(1.0), 10)
    assert rs.y[0] == 0.5
    assert rs.y[1] == pytest.approx((math.sqrt(5) - 1) / 4, abs=1e-15)
    assert rs.yprime[1] == 0.75
    assert compute_yn(MapSpec.manpom(3.7), 5).yprime[1] == 0.75


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 4.0])
def test_chain_residual_and_monotone(a):
    spec = MapSpec.manpom(a)
    rs = compute_yn(spec, 5000)
    assert np.all(np.diff(rs.y) < 0)
    assert np.max(np.abs(evaluate(spec, rs.y[1:]) - rs.y[:-1])) < 1e-13
    np.testing.assert_array_equal(rs.yprime[1:], 0.5 * (1.0 + rs.y))


def test_yn_exponent(rs2):
    fit = loglog_fit(np.arange(rs2.n_max + 1), rs2.y, (100, 100_000))
    assert abs(fit.slope + 0.5) < 0.02


def test_yn_constant_settles(rs2):
    n = np.arange(1000, 100_001)
    c = rs2.y[n] * n**0.5
    assert c.max() / c.min() < 1.2


def test_cylinders():
    rs = cylinder_partition(MapSpec.manpom(1.0), 200)
    (lo, hi), tau = rs.cylinders[0]
    assert (lo, hi, tau) == (0.75, 1.0, 1)
    m = rs.cylinder_measure()
    assert m[0] == 0.25
    assert rs.tail()[2] == pytest.approx(rs.y[1] / 2, abs=1e-15)
    assert rs.tail()[2] == pytest.approx(0.1545084972, abs=1e-10)
    assert abs(m.sum() + rs.censored_measure - 0.5) < 1e-12
    lo, hi = rs.cylinder_lo, rs.cylinder_hi
    assert np.all(lo < hi) and np.all(hi[1:] == lo[:-1])


def test_tail_identity_all_depths(rs2):
    # lambda(tau >= n + 2) = y_n / 2, with the left side read off the cylinder lengths
    above = 0.5 - np.cumsum(rs2.cylinder_hi - rs2.cylinder_lo)
    np.testing.assert_allclose(above, 0.5 * rs2.y[:rs2.n_max], rtol=0, atol=1e-12)


def test_return_time_examples():
    for a in (0.5, 1.0, 3.0):
        s = MapSpec.manpom(a)
        assert return_time(s, 0.9) == 1
        for y in np.linspace(0.75, 1.0, 11):
            assert return_time(s, y) == 1
    s1 = MapSpec.manpom(1.0)
    assert return_time(s1, 0.6) == 4
    F, tau = induced_step(s1, 0.9)
    assert (F, tau) == (pytest.approx(0.8), 1)
    F, tau = induced_step(s1, 0.6)
    assert tau == 4 and F == pytest.approx(0.81838848, abs=1e-12)
    assert induced_step(MapSpec.manpom(2.0), 1.0) == (1.0, 1)


def test_censoring():
    s = MapSpec.manpom(2.0)
    y = 0.5 + 1e-9
    assert return_time(s, y, cap=10) == Censored(10)
    F, tau = induced_step(s, y, cap=10)
    assert math.isnan(F) and tau == Censored(10)
    with pytest.raises(ValueError):
        return_time(s, 0.3)


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_return_times_match_cylinders(a):
    spec = MapSpec.manpom(a)
    rs = compute_yn(spec, 2000)
    ys, taus = sample_return_times(spec, 10_000, seed=5, cap=10**7)
    expect = rs.tau_of(ys)
    # points within 1e-12 of a cylinder endpoint may land either way
    ends = rs.yprime[: rs.n_max + 1]
    near = np.min(np.abs(ys[:, None] - ends[None, :]), axis=1) < 1e-12
    inside = expect <= rs.n_max
    bad = (taus != expect) & inside & ~near
    assert not bad.any()
    t = taus[~inside]
    assert np.all((t > rs.n_max) | (t == -1))


def test_tail_measure_reports():
    r2 = tail_measure(MapSpec.manpom(2.0), 100_000, (100, 10_000))
    assert abs(r2.fit.slope + 0.5) < 0.05
    assert r2.increment > 0.10 and r2.diagnosis == "Divergent"
    r05 = tail_measure(MapSpec.manpom(0.5), 100_000)
    assert r05.increment < 0.01 and r05.diagnosis == "Convergent"
    assert np.all(np.diff(r2.partial_sums) >= 0)


def test_distortion():
    s1 = MapSpec.manpom(1.0)
    assert cylinder_ratio(s1, [1]) == pytest.approx(1.0, abs=1e-12)
    r = cylinder_ratio(s1, [2])
    assert np.isfinite(r) and r > 1.0
    s2 = MapSpec.manpom(2.0)
    k1 = distortion_estimate(s2, 1, samples_per_cylinder=200).k_hat[-1]
    rep3 = distortion_estimate(s2, 3, samples_per_cylinder=200, max_cylinders=100)
    assert np.all(np.diff(rep3.k_hat) >= 0)
    assert k1 <= rep3.k_hat[-1] < 10 * k1


def test_distortion_ratio_against_sampling():
    # independent check on Y_{tau=3}: Jacobian of T^3 at points spread over the cylinder
    spec = MapSpec.manpom(1.0)
    rs = compute_yn(spec, 10)
    (lo, hi), tau = rs.cylinders[2]
    assert tau == 3
    x = np.linspace(lo, hi, 2001)[1:-1]
    logj = np.zeros_like(x)
    cur = x.copy()
    for _ in range(3):
        logj += np.log(np.where(cur < 0.5, 1 + 2 * (2 * cur), 2.0))
        cur = evaluate(spec, cur)
    ratio = np.exp(logj.max() - logj.min())
    assert cylinder_ratio(spec, [3], 2001) == pytest.approx(ratio, rel=1e-3)

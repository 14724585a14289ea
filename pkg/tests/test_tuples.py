import itertools

import numpy as np
import pytest

from liyorke import BoxOverflow, MapSpec
from liyorke.tuples import (TupleConfig, TupleStats, classify, default_delta,
                            expansivity_check, measure_estimate, pair_expansion, phase_sweep,
                            predictions, separation_box, separation_box_hit, simulate_tuple)


def _step_py(x, alpha):
    if x < 0.5:
        y = x + x * (2.0 * x) ** alpha
    else:
        y = 2.0 * x - 1.0
    return min(max(y, 0.0), 1.0)


def _oracle(x, alpha, N, eps, delta):
    """Straightforward reimplementation: running extrema over n = 0..N."""
    x = list(x)
    min_max, max_min = 2.0, -1.0
    first_p = first_s = None
    late_min = late_max = -1.0
    count = 0
    for n in range(N + 1):
        if n > 0:
            x = [_step_py(v, alpha) for v in x]
            count += all(v >= 0.5 for v in x)
        ds = [abs(a - b) for a, b in itertools.combinations(x, 2)]
        mx, mn = max(ds), min(ds)
        min_max = min(min_max, mx)
        max_min = max(max_min, mn)
        if first_p is None and mx < eps:
            first_p = n
        if first_s is None and mn > delta:
            first_s = n
        if 2 * n >= N:
            late_min = max(late_min, mn)
            late_max = max(late_max, mx)
    return TupleStats(min_max, max_min, first_p, first_s, late_min, late_max, count)


def test_kernel_matches_oracle_bitwise():
    cfg = TupleConfig(MapSpec.manpom(1.0), 3, 1000, 0.2, 1e-3)
    x = (0.51, 0.61, 0.71)
    assert simulate_tuple(cfg, x) == _oracle(x, 1.0, 1000, 1e-3, 0.2)
    rng = np.random.default_rng(8)
    for a in (1.5, 2.5):
        cfg = TupleConfig(MapSpec.manpom(a), 2, 3000, 1 / 3, 1e-3)
        for _ in range(5):
            x = tuple(rng.random(2))
            assert simulate_tuple(cfg, x) == _oracle(x, a, 3000, 1e-3, 1 / 3)


def test_diagonal_tuple():
    cfg = TupleConfig(MapSpec.manpom(2.0), 2, 500, 0.3)
    st = simulate_tuple(cfg, (0.3, 0.3))
    assert st.min_over_n_of_maxpair == 0.0 and st.max_over_n_of_minpair == 0.0
    fl = classify(st, 0.3, 1e-3)
    assert fl.proximal_at_horizon and not fl.separated_at_horizon and not fl.LY_at_horizon
    # two equal coordinates: never separated for any delta
    st3 = simulate_tuple(TupleConfig(MapSpec.manpom(2.0), 3, 500, 0.01), (0.2, 0.7, 0.2))
    assert st3.max_over_n_of_minpair == 0.0


def test_doubling_collapse_is_asymptotic():
    cfg = TupleConfig(MapSpec.doubling(), 2, 10, 0.3)
    st = simulate_tuple(cfg, (0.0, 0.5))
    assert st.first_prox_time == 1
    assert classify(st, 0.3, 1e-3).asymptotic_proxy


def test_classify_definitions():
    st = TupleStats(0.5, 0.4, None, 3, 0.4, 0.6, 0)
    fl = classify(st, 0.2, 1e-3)
    assert fl.separated_at_horizon and not fl.proximal_at_horizon
    st = TupleStats(1e-4, 0.4, 7, 3, 0.4, 0.6, 0)
    fl = classify(st, 0.2, 1e-3)
    assert fl.LY_at_horizon and not fl.asymptotic_proxy


def test_ly_and_asymptotic_only_if_separated_early():
    # both flags at once require the separation to precede the late window
    cfg = TupleConfig(MapSpec.manpom(2.5), 2, 20_000, 1 / 3)
    rng = np.random.default_rng(1)
    for _ in range(40):
        st = simulate_tuple(cfg, tuple(rng.random(2)))
        fl = classify(st, cfg.delta, cfg.eps_prox)
        if fl.LY_at_horizon and fl.asymptotic_proxy:
            assert 2 * st.first_sep_time < cfg.N


def test_config_validation():
    s = MapSpec.manpom(2.0)
    with pytest.raises(ValueError):
        TupleConfig(s, 1, 10, 0.3)
    with pytest.raises(ValueError):
        TupleConfig(s, 2, 10, 1e-4, eps_prox=1e-3)
    with pytest.raises(ValueError):
        TupleConfig(s, 2, 0, 0.3)
    with pytest.raises(ValueError):
        simulate_tuple(TupleConfig(s, 2, 10, 0.3), (0.1, 1.2))


def test_flags_monotone_in_horizon():
    cfg = TupleConfig(MapSpec.manpom(1.5), 3, 20_000, 0.2, seed=5)
    est = measure_estimate(cfg, 300, horizons=[2000, 10_000, 20_000])
    f = est.stats_f
    for k in range(2):
        prox_a, prox_b = f[:, k, 0] < 1e-3, f[:, k + 1, 0] < 1e-3
        sep_a, sep_b = f[:, k, 1] > 0.2, f[:, k + 1, 1] > 0.2
        assert np.all(prox_b >= prox_a) and np.all(sep_b >= sep_a)
    single = measure_estimate(TupleConfig(MapSpec.manpom(1.5), 3, 10_000, 0.2, seed=5), 300,
                              horizons=[10_000])
    assert single.final.frac_LY == est.rows[1].frac_LY


def test_rows_consistent():
    rows = phase_sweep([1.2, 2.5], [2, 3], 2000, 200, seed=3)
    assert len(rows) == 4
    for r in rows:
        assert 0 <= r.frac_LY <= min(r.frac_proximal, r.frac_separated) <= 1
        assert r.ci_LY[0] <= r.frac_LY <= r.ci_LY[1]


def test_measure_estimate_deterministic():
    cfg = TupleConfig(MapSpec.manpom(2.0), 2, 3000, 1 / 3, seed=42)
    a = measure_estimate(cfg, 200)
    b = measure_estimate(cfg, 200)
    assert np.array_equal(a.stats_f, b.stats_f) and np.array_equal(a.stats_i, b.stats_i)


def test_doubling_pairs_full_measure():
    est = measure_estimate(TupleConfig(MapSpec.doubling(), 2, 10_000, 0.1), 1000)
    assert est.final.frac_LY >= 0.99


def test_predictions():
    assert predictions(MapSpec.manpom(1.2), 3)[0] == "LY-full"
    assert predictions(MapSpec.manpom(2.5), 3)[0] == "not-LY"
    assert predictions(MapSpec.manpom(2.0), 3)[0] == "critical"
    assert predictions(MapSpec.manpom(1.7), 2)[0] == "LY-full"
    assert predictions(MapSpec.manpom(1.7), 3)[1] == "dissipative"
    assert predictions(MapSpec.manpom(1.2), 3)[1] == "conservative"


def test_default_delta():
    assert default_delta(2) == pytest.approx(1 / 3)
    assert default_delta(3) == pytest.approx(1 / 3)
    assert default_delta(4) == pytest.approx(0.2)
    assert default_delta(6) == pytest.approx(0.1)


def test_expansion_examples():
    s = MapSpec.manpom(1.0)
    r, r2 = pair_expansion(s, 0.1, 0.3)
    assert r == pytest.approx(0.2) and r2 == pytest.approx(0.36)
    r, r2 = pair_expansion(s, 0.49, 0.51)
    assert r == pytest.approx(0.02) and r2 == pytest.approx(0.9502)
    assert pair_expansion(s, 0.4, 0.4) == (0.0, 0.0)


@pytest.mark.parametrize("a", [1.0, 2.0, 4.0])
def test_expansion_on_each_branch(a):
    # pairs on the same side of 1/2 never contract
    rep = expansivity_check(MapSpec.manpom(a), 200_000, seed=1)
    assert rep.min_ratio_same_branch >= 1.0 - 1e-12
    assert rep.violations == rep.straddling_violations


def test_separation_box():
    lo, hi = separation_box(3, 0.1)
    np.testing.assert_allclose(lo, [0.5, 0.9])
    np.testing.assert_allclose(hi, [0.6, 1.0])
    assert np.prod(np.asarray(hi) - np.asarray(lo)) == pytest.approx(0.01)
    with pytest.raises(BoxOverflow):
        separation_box(4, 0.3)
    with pytest.raises(ValueError):
        separation_box(2, 0.1)


def test_separation_box_hits_grow():
    rep = separation_box_hit(MapSpec.manpom(1.2), 3, 0.05, 20_000, 400, seed=1,
                             checkpoints=[5000, 20_000])
    assert rep.fraction[1] >= rep.fraction[0]
    assert rep.fraction[1] > 0

import numpy as np
import pytest

from liyorke.errors import EmptyWindow, NonPositiveValues
from liyorke.stats import last_decade_increment, log_spaced, loglog_fit, wilson_interval


def test_loglog_fit_recovers_power_law():
    n = np.arange(1, 10_001)
    fit = loglog_fit(n, 3.0 * n**-0.7, (10, 10_000))
    assert fit.slope == pytest.approx(-0.7, abs=1e-12)
    assert np.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0)


def test_loglog_fit_errors():
    n = np.arange(1, 100)
    with pytest.raises(EmptyWindow):
        loglog_fit(n, n * 1.0, (200, 300))
    v = np.ones(99)
    v[50] = 0.0
    with pytest.raises(NonPositiveValues):
        loglog_fit(n, v, (1, 99))


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.19, abs=0.01)
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0


def test_last_decade_increment():
    s = np.cumsum(np.ones(1000))
    assert last_decade_increment(s) == pytest.approx(0.9, abs=0.002)
    assert last_decade_increment(np.full(1000, 2.0)) == 0.0


def test_log_spaced():
    k = log_spaced(10_000)
    assert k[0] == 1 and k[-1] == 10_000
    assert np.all(np.diff(k) > 0)

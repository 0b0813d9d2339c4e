import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fracskellam.specfun import (
    SeriesControl,
    SeriesConvergenceError,
    bessel_i,
    incomplete_beta,
    ln_gamma,
    log_bessel_i,
    mittag_leffler,
    mittag_leffler3,
    prabhakar_count_table,
)


def mp_ml3(alpha, beta, delta, z, dps=60):
    # direct multiprecision series, used as an independent reference
    with mpmath.workdps(dps):
        a, b, d, zz = map(mpmath.mpf, (alpha, beta, delta, z))
        return float(mpmath.nsum(lambda k: mpmath.rf(d, k) * zz ** k
                                 / (mpmath.factorial(k) * mpmath.gamma(a * k + b)), [0, mpmath.inf]))


def test_ml_alpha_one_is_exp():
    for z in np.linspace(-5, 5, 101):
        assert abs(mittag_leffler(1.0, 1.0, z) - math.exp(z)) <= 1e-12 * max(1.0, math.exp(z))


def test_ml_half_is_erfcx():
    for x in [0.0, 0.3, 1.0, 2.5, 7.0, 20.0, 80.0]:
        ref = special.erfcx(x)
        assert mittag_leffler(0.5, 1.0, -x) == pytest.approx(ref, rel=1e-12)


def test_ml_two_is_cos():
    for x in [0.1, 1.0, 2.0, 3.0]:
        assert mittag_leffler(2.0, 1.0, -x * x) == pytest.approx(math.cos(x), abs=1e-12)


def test_ml3_delta_one_reduces():
    for a, b, z in [(0.7, 1.0, -2.0), (0.4, 1.3, -0.5), (0.9, 2.0, 1.5), (0.6, 0.8, -10.0)]:
        assert mittag_leffler3(a, b, 1.0, z) == pytest.approx(mittag_leffler(a, b, z), abs=1e-12)


def test_ml3_delta_two_identity():
    # E^2 = E + z E' and a z E'_{a,b} = E_{a,b-1} - (b-1) E_{a,b}
    for a, b, z in [(0.7, 2.0, -1.5), (0.5, 1.8, -3.0), (0.9, 3.0, 2.0)]:
        e = mittag_leffler(a, b, z)
        rhs = e + (mittag_leffler(a, b - 1, z) - (b - 1) * e) / a
        assert mittag_leffler3(a, b, 2.0, z) == pytest.approx(rhs, rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("a,b,d,z", [
    (0.7, 1.0, 3.0, -4.0), (0.7, 3.1, 5.0, -20.0), (0.4, 1.0, 2.0, -30.0),
    (0.9, 1.9, 1.0, -60.0), (0.3, 0.5, 4.0, -8.0), (0.8, 2.0, 2.0, 3.0),
])
def test_ml3_against_multiprecision(a, b, d, z):
    ref = mp_ml3(a, b, d, z, dps=120)
    assert mittag_leffler3(a, b, d, z) == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_ml3_log_prefactor_avoids_overflow():
    # 20^250 overflows a double while 20^250 E^{251}_{0.7,176}(-20) is tiny
    x, n = 20.0, 250
    v = mittag_leffler3(0.7, 0.7 * n + 1, n + 1, -x, log_prefactor=n * math.log(x))
    with mpmath.workdps(300):  # the alternating series cancels heavily
        ref = sum(mpmath.rf(n + 1, k) * mpmath.mpf(-x) ** k / (mpmath.factorial(k) * mpmath.gamma(mpmath.mpf(0.7) * (n + k) + 1))
                  for k in range(1500)) * mpmath.mpf(x) ** n
    assert math.isfinite(v)
    assert v == pytest.approx(float(ref), rel=1e-9)


def test_ml_at_zero():
    assert mittag_leffler(0.3, 1.0, 0.0) == 1.0
    assert mittag_leffler3(0.6, 2.5, 3.0, 0.0) == pytest.approx(1 / math.gamma(2.5), rel=1e-15)


def test_ml_rejects_bad_parameters():
    with pytest.raises(ValueError):
        mittag_leffler(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        mittag_leffler3(0.5, 1.0, -1.0, 1.0)


def test_series_budget_raises():
    with pytest.raises(SeriesConvergenceError) as info:
        mittag_leffler(0.5, 1.0, 30.0, SeriesControl(max_terms=5))
    assert info.value.terms >= 5


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_ml_completely_monotone_on_negative_axis(alpha, x, y):
    lo, hi = sorted((x, y))
    a, b = mittag_leffler(alpha, 1.0, -lo), mittag_leffler(alpha, 1.0, -hi)
    assert 0.0 <= b <= a + 1e-13 <= 1.0 + 1e-13


def test_bessel_against_scipy():
    for n in [0, 1, 2, 5, 12]:
        for z in [0.01, 0.5, 2.0, 10.0, 40.0]:
            assert bessel_i(n, z) == pytest.approx(special.iv(n, z), rel=1e-12)
    assert log_bessel_i(3, 800.0) == pytest.approx(math.log(special.ive(3, 800.0)) + 800.0, rel=1e-13)


def test_bessel_symmetry_and_derivative():
    h = 1e-5
    for n in range(-6, 7):
        for z in [0.3, 1.0, 4.0]:
            assert abs(bessel_i(-n, z) - bessel_i(n, z)) < 1e-6
            deriv = (bessel_i(n, z + h) - bessel_i(n, z - h)) / (2 * h)
            assert abs(deriv - 0.5 * (bessel_i(n - 1, z) + bessel_i(n + 1, z))) < 1e-6


def test_bessel_odd_reflection():
    assert bessel_i(3, -1.5) == pytest.approx(-bessel_i(3, 1.5))
    assert bessel_i(2, -1.5) == pytest.approx(bessel_i(2, 1.5))


def test_ln_gamma_and_incomplete_beta():
    assert ln_gamma(5.0) == pytest.approx(math.log(24.0))
    with pytest.raises(ValueError):
        ln_gamma(0.0)
    assert incomplete_beta(1.0, 1.0, 0.3) == pytest.approx(0.3)
    assert incomplete_beta(2.0, 3.0, 1.0) == pytest.approx(1 / 12)
    with pytest.raises(ValueError):
        incomplete_beta(1.0, 1.0, 1.5)


def test_count_table_matches_pointwise():
    x = 14.0 ** 0.7
    table = prabhakar_count_table(0.7, x, 30)
    for n in [0, 3, 10, 25]:
        ref = mp_ml3(0.7, 0.7 * n + 1, n + 1, -x, dps=80) * x ** n
        assert table[n] == pytest.approx(ref, abs=1e-15)
    assert prabhakar_count_table(0.5, 0.0, 3) == [1.0, 0.0, 0.0, 0.0]


def test_count_table_alpha_one_is_poisson():
    lam = 3.0
    table = prabhakar_count_table(1.0, lam, 20)
    ref = [math.exp(-lam) * lam ** n / math.factorial(n) for n in range(21)]
    np.testing.assert_allclose(table, ref, rtol=1e-12)

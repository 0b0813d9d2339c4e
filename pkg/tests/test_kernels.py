import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracskellam import kernels
from fracskellam.rates import RateFunction

compiled = kernels.backend()
pure = kernels.backend(pure=True)
needs_compiled = pytest.mark.skipif(kernels.BACKEND != "compiled",
                                    reason="compiled extension not built")


def bg(seed=11):
    return np.random.Philox(np.random.SeedSequence(seed))


def rate_sets():
    return {
        "constant": [RateFunction.constant(1.2), RateFunction.constant(0.4)],
        "weibull": [RateFunction.weibull(1.5, 2.0), RateFunction.weibull(0.8, 1.0)],
        "gm": [RateFunction.gompertz_makeham(0.6, 0.1, 5.0), RateFunction.gompertz_makeham(0.7, 0.2, 4.0)],
        "tabulated": [RateFunction.tabulated([0, 1, 2, 4], [0, 1.0, 1.5, 4.0])],
    }


def same(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            same(x, y)
    else:
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_backend_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert pure.__name__.endswith("_pykernels")


def test_encode_rates_layout():
    kind, par, off, kt, kl = kernels.encode_rates(rate_sets()["tabulated"] + rate_sets()["gm"])
    assert kind.tolist() == [3, 2, 2]
    assert off.tolist() == [0, 4, 4, 4]
    assert kt.tolist() == [0, 1, 2, 4]
    assert par[1].tolist() == [0.6, 0.1, 5.0]


@needs_compiled
@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 30.0), min_size=1, max_size=5), st.integers(0, 200))
def test_recurrence_identical(lam, n_max):
    lam = np.array(lam)
    same(compiled.ngcp_recurrence(lam, n_max), pure.ngcp_recurrence(lam, n_max))


@needs_compiled
@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
def test_subordinator_kernels_identical(alpha):
    same(compiled.subordinator_grid(alpha, 513, 1 / 256, bg()), pure.subordinator_grid(alpha, 513, 1 / 256, bg()))
    cps = np.array([0.25, 1.0, 2.0])
    same(compiled.subordinator_at(alpha, cps, 1 / 128, 20, bg()), pure.subordinator_at(alpha, cps, 1 / 128, 20, bg()))


@needs_compiled
@pytest.mark.parametrize("name", list(rate_sets()))
def test_thinning_identical(name):
    enc = kernels.encode_rates(rate_sets()[name])
    same(compiled.thinning_events(enc, 3.0, 8, bg()), pure.thinning_events(enc, 3.0, 8, bg()))
    cps = np.array([0.5, 1.5, 3.0])
    same(compiled.thinning_counts(enc, cps, 8, 50, bg()), pure.thinning_counts(enc, cps, 8, 50, bg()))


@needs_compiled
@pytest.mark.parametrize("name", list(rate_sets()))
@pytest.mark.parametrize("alpha", [0.6, 1.0])
def test_renewal_identical(name, alpha):
    enc = kernels.encode_rates(rate_sets()[name])
    same(compiled.renewal_events(enc, alpha, 3.0, bg()), pure.renewal_events(enc, alpha, 3.0, bg()))
    cps = np.array([0.5, 1.5, 3.0])
    same(compiled.renewal_counts(enc, alpha, cps, 40, bg()), pure.renewal_counts(enc, alpha, cps, 40, bg()))
    same(compiled.renewal_first_times(enc, alpha, 3.0, 40, bg()),
         pure.renewal_first_times(enc, alpha, 3.0, 40, bg()))


@needs_compiled
@pytest.mark.parametrize("cumulative", [True, False])
def test_frozen_identical(cumulative):
    up = kernels.encode_rates(rate_sets()["gm"])
    down = kernels.encode_rates(rate_sets()["constant"])
    a = compiled.frozen_events(up, down, 0.7, 1e-4, 2.0, cumulative, bg())
    b = pure.frozen_events(up, down, 0.7, 1e-4, 2.0, cumulative, bg())
    same(a, b)
    same(compiled.frozen_events(up, None, 1.0, 0.0, 2.0, cumulative, bg()),
         pure.frozen_events(up, None, 1.0, 0.0, 2.0, cumulative, bg()))


def test_recurrence_is_poisson_at_k1():
    from scipy import stats
    q = pure.ngcp_recurrence(np.array([3.0]), 20)
    np.testing.assert_allclose(q, stats.poisson.pmf(np.arange(21), 3.0), atol=1e-15)


def test_recurrence_rescales_large_rates():
    q = pure.ngcp_recurrence(np.array([700.0, 10.0]), 1200)
    assert np.all(np.isfinite(q)) and q.sum() == pytest.approx(1.0, abs=1e-9)


def test_tabulated_past_last_knot_raises():
    enc = kernels.encode_rates(rate_sets()["tabulated"])
    with pytest.raises(ValueError):
        pure.thinning_events(enc, 5.0, 4, bg())
    if kernels.BACKEND == "compiled":
        with pytest.raises(ValueError):
            compiled.thinning_events(enc, 5.0, 4, bg())


def test_unbounded_intensity_rejected():
    enc = kernels.encode_rates([RateFunction.weibull(1.0, 0.5)])
    for impl in {compiled, pure}:
        with pytest.raises(ValueError):
            impl.thinning_events(enc, 1.0, 4, bg())

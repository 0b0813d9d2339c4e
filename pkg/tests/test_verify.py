import json
import math

import numpy as np
import pytest
from scipy import stats

from fracskellam import analytics as A
from fracskellam import verify as V
from fracskellam.rates import ProcessSpec, constant_spec, gm_figure_spec


def test_compositions_count_partitions():
    # k >= n: compositions of sum j x_j = n are the integer partitions of n
    assert [len(V.enumerate_compositions(n, n)) for n in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]
    assert len(V.enumerate_compositions(2, 6)) == 4
    for x in V.enumerate_compositions(3, 7):
        assert sum((j + 1) * v for j, v in enumerate(x)) == 7
    with pytest.raises(ValueError):
        V.enumerate_compositions(0, 3)


def test_oracle_matches_recurrence_at_k3():
    up = gm_figure_spec().up
    for t in (0.5, 1.0):
        a = A.ngcp_pmf(up, t, 20).probs
        b = V.ngcp_pmf_oracle(up, t, 20).probs
        assert np.abs(a - b).max() < 1e-10


def test_oracle_handles_zero_rates():
    up = constant_spec("NGCP", [0.0, 1.5]).up
    q = V.ngcp_pmf_oracle(up, 1.0, 6).probs
    assert q[1] == 0.0
    assert q[2] == pytest.approx(stats.poisson.pmf(1, 1.5))


def test_weighted_sum_is_skellam_at_k1():
    spec = constant_spec("NGSP", [1.2], [0.8])
    np.testing.assert_allclose(V.weighted_sum_pmf(spec, 1.0, -10, 10),
                               stats.skellam.pmf(np.arange(-10, 11), 1.2, 0.8), atol=1e-14)


@pytest.mark.parametrize("name", ["recurrence", "ngcp_oracle", "weighted_sum", "transition_rates"])
def test_deterministic_checks_pass(name):
    assert V.run_check(name).verdict == V.PASS


def test_bessel_vs_convolution_by_k():
    one = V.run_check("bessel_vs_convolution", k=1)
    assert one.verdict == V.PASS and one.estimate < 1e-10
    two = V.run_check("bessel_vs_convolution", k=2)
    assert two.verdict == V.DOC and two.estimate > 0


def test_mgf_sign_is_documented():
    rep = V.run_check("nhgfsp_mgf_sign")
    assert rep.verdict == V.DOC
    assert rep.metadata["difference_convention"] == pytest.approx(rep.analytic, rel=1e-8)


def test_monte_carlo_checks_at_small_budget():
    for name in ("moments", "pmf_tv", "hitting", "ntfpp_pmf"):
        rep = V.run_check(name, budget=20_000, seed=3)
        assert rep.verdict in (V.PASS, V.FAIL)
        assert rep.metadata["sample_size"] == 20_000


def test_cutoff_reports_limit_law():
    rep = V.run_check("cutoff", budget=4_000)
    # the ratio converges to Y(1)/E Y(1), so the tail probability stays near the limit-law value
    assert abs(rep.estimate - rep.metadata["limit_law_probability"]) < 0.05
    assert rep.estimate > 0.5


def test_reports_are_reproducible_and_serialisable():
    a = V.run_check("hitting", budget=5_000, seed=11)
    b = V.run_check("hitting", budget=5_000, seed=11)
    assert a == b
    d = json.loads(a.to_json())
    assert set(d) == {"name", "analytic", "estimate", "std_error", "tolerance", "verdict", "metadata"}
    assert d["metadata"]["base_seed"] == 11
    assert V.run_check("hitting", budget=5_000, seed=12).estimate != a.estimate


def test_unknown_check():
    with pytest.raises(V.UnknownCheckError):
        V.run_check("nope")


def test_run_all_subset_parallel_matches_serial():
    names = ["recurrence", "hitting", "ntfpp_pmf"]
    serial = V.run_all(names, seed=1, budget=5_000)
    parallel = V.run_all(names, seed=1, budget=5_000, workers=2)
    assert serial == parallel
    assert [r.name for r in serial] == names
    assert len(V.report_table(serial).splitlines()) == 3
    assert len(json.loads(V.reports_json(serial))) == 3


def test_catalog_signatures():
    for name, fn in V.CATALOG.items():
        assert fn.__name__ == f"check_{name}"


def test_reference_specs():
    assert V.skellam_k1().k == 1
    assert V.spec_for_k(3).k == 3
    p = V.proportional_gm_spec()
    r = [u.cumulative(2.0) / u.cumulative(1.0) for u in p.up]
    assert r[0] == pytest.approx(r[1])
    assert isinstance(V.running_avg_spec(), ProcessSpec)
    assert math.isfinite(A.ngsp_moments(V.spec_for_k(2), 1.0).mean)


def test_report_metadata_is_json():
    for name in ("bessel_vs_convolution", "nhgfsp_mgf_sign", "ntfpp_pmf", "cutoff", "hitting"):
        json.loads(V.run_check(name, budget=2_000).to_json())

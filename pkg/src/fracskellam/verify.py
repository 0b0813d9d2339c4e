"""Oracles and the Monte Carlo comparison harness.

Every check returns a :class:`VerificationReport`.  Means are compared at
3 standard errors (4 for the compensated-martingale sweep), distributions
by total variation against a stated threshold.  Checks tagged as
discrepancy reports never fail: they record a gap between two readings
of the same quantity.
"""

from __future__ import annotations

import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import analytics as A
from . import samplers as S
from .rates import ProcessSpec, RateFunction, constant_spec, gm_figure_spec, nhgfsp_figure_spec
from .specfun import ln_gamma

PASS, FAIL, DOC = "pass", "fail", "discrepancy_documented"


@dataclass
class VerificationReport:
    name: str
    analytic: float
    estimate: float
    std_error: float | None
    tolerance: float
    verdict: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def line(self) -> str:
        se = "-" if self.std_error is None else f"{self.std_error:.3g}"
        return (f"{self.name:<26} {self.verdict:<23} analytic={self.analytic:.6g} "
                f"estimate={self.estimate:.6g} se={se} tol={self.tolerance:.3g}")


@dataclass(frozen=True)
class CompositionSet:
    k: int
    n: int
    tuples: tuple

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)


class UnknownCheckError(KeyError):
    pass


# ------------------------------------------------------------------ oracles

def enumerate_compositions(k: int, n: int) -> CompositionSet:
    """All (x_1..x_k), x_j >= 0, with sum_j j x_j = n.

    Fills x_1 first and bounds each later part by what is left, so the
    traversal order differs from the generator in ``analytics``.
    """
    if k < 1 or n < 0:
        raise ValueError("need k >= 1 and n >= 0")
    out = []
    stack = [((), 0)]
    while stack:
        prefix, used = stack.pop()
        j = len(prefix) + 1
        if j == k:
            rem = n - used
            if rem % k == 0:
                out.append(prefix + (rem // k,))
            continue
        for x in range((n - used) // j + 1):
            stack.append((prefix + (x,), used + j * x))
    return CompositionSet(k, n, tuple(sorted(out)))


def ngcp_pmf_oracle(up, t: float, n_max: int) -> A.PmfTable:
    """q(n) = sum over compositions of prod_j Lambda_j^x_j / x_j! times exp(-sum Lambda)."""
    rates = up.up if isinstance(up, ProcessSpec) else tuple(up)
    lam = [r.cumulative(t) for r in rates]
    total = sum(lam)
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        acc = 0.0
        for x in enumerate_compositions(len(lam), n):
            lw = -total
            ok = True
            for L, xj in zip(lam, x):
                if xj:
                    if L == 0.0:
                        ok = False
                        break
                    lw += xj * math.log(L) - math.lgamma(xj + 1)
            if ok:
                acc += math.exp(lw)
        out[n] = acc
    return A.PmfTable(float(t), 0, out, max(0.0, 1.0 - out.sum()), "enumeration")


def weighted_sum_pmf(spec: ProcessSpec, t: float, n_min: int, n_max: int) -> np.ndarray:
    """S(t) = sum_j j (N_j - N'_j) with independent Skellam(Lambda_j, T_j) pieces."""
    lam, tau = spec.cumulatives(t)
    span = 0
    pmf = np.ones(1)
    lo = 0
    for j in range(1, spec.k + 1):
        a, b = lam[j - 1], (tau[j - 1] if tau.size else 0.0)
        m = int(max(a, b) + 20 * math.sqrt(a + b + 1) + 20)
        ks = np.arange(-m, m + 1)
        if a > 0 and b > 0:
            p = stats.skellam.pmf(ks, a, b)
        else:
            p = stats.poisson.pmf(ks, a) if a > 0 else stats.poisson.pmf(-ks, b)
        spread = np.zeros(j * (2 * m) + 1)
        spread[::j] = p
        pmf = np.convolve(pmf, spread)
        lo -= j * m
        span = pmf.size
    out = np.zeros(n_max - n_min + 1)
    for i, n in enumerate(range(n_min, n_max + 1)):
        idx = n - lo
        if 0 <= idx < span:
            out[i] = pmf[idx]
    return out


# ----------------------------------------------------------------- helpers

def _seed(seed: int, name: str) -> int:
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _tv(samples: np.ndarray, n_min: int, probs: np.ndarray) -> float:
    n_max = n_min + probs.size - 1
    lo, hi = min(n_min, int(samples.min())), max(n_max, int(samples.max()))
    emp = np.bincount(samples - lo, minlength=hi - lo + 1) / samples.size
    ref = np.zeros(hi - lo + 1)
    ref[n_min - lo:n_min - lo + probs.size] = probs
    return 0.5 * float(np.abs(emp - ref).sum())


def _meta(spec, seed, n, **extra):
    d = {"seed": seed, "sample_size": n}
    if spec is not None:
        d["spec"] = spec.to_dict()
    d.update(extra)
    return d


def skellam_k1() -> ProcessSpec:
    return constant_spec("NGSP", [1.2], [0.8])


def spec_for_k(k: int) -> ProcessSpec:
    if k == 1:
        return skellam_k1()
    up = [1.2, 0.6, 0.3, 0.2, 0.1][:k]
    dn = [0.8, 0.5, 0.4, 0.2, 0.1][:k]
    if k > 5:
        raise ValueError("spec_for_k supports k <= 5")
    return constant_spec("NGSP", up, dn)


def proportional_gm_spec() -> ProcessSpec:
    """Two jump sizes whose Gompertz-Makeham rates keep a fixed 2:1 ratio."""
    return ProcessSpec("NHGFCP", [RateFunction.gompertz_makeham(0.6, 0.5, 1.2),
                                  RateFunction.gompertz_makeham(0.3, 0.5, 0.6)], (), 0.7)


def running_avg_spec() -> ProcessSpec:
    return constant_spec("RUN_AVG_GSP", [0.5, 0.3], [0.2, 0.4])


def _mean_report(name, analytic, x, k_se, spec, seed, **extra):
    est = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    tol = k_se * se
    verdict = PASS if abs(est - analytic) <= tol else FAIL
    return VerificationReport(name, float(analytic), est, se, tol, verdict,
                              _meta(spec, seed, int(x.size), **extra))


# ------------------------------------------------------------------ checks

def check_moments(spec=None, budget=None, seed=0, k=None):
    spec = spec or (gm_figure_spec() if k and k > 1 else skellam_k1())
    n = budget or 100_000
    t = 1.0
    m = A.ngsp_moments(spec, t)
    x = S.ngsp_marginals(spec, [t], n, seed)[:, 0]
    var = float(x.var(ddof=1))
    rep = _mean_report("moments", m.mean, x, 3.0, spec, seed, t=t, variance_analytic=m.variance,
                       variance_estimate=var)
    if abs(var - m.variance) > 0.05 * m.variance:
        rep.verdict = FAIL
    return rep


def check_pmf_tv(spec=None, budget=None, seed=0, k=None):
    spec = spec or skellam_k1()
    n = budget or 100_000
    t = 1.0
    tab = A.ngsp_pmf(spec, t)
    x = S.ngsp_marginals(spec, [t], n, seed)[:, 0]
    tv = _tv(x, tab.n_min, tab.probs)
    return VerificationReport("pmf_tv", 0.0, tv, None, 0.01, PASS if tv <= 0.01 else FAIL,
                              _meta(spec, seed, n, t=t))


def check_martingale(spec=None, budget=None, seed=0, k=None):
    spec = spec or gm_figure_spec()
    n = budget or 100_000
    ck = [0.2, 0.4, 0.6, 0.8, 1.0]
    x = S.ngsp_marginals(spec, ck, n, seed).astype(float)
    comp = np.array([A.ngsp_moments(spec, c).mean for c in ck])
    z = x - comp
    means = z.mean(axis=0)
    ses = z.std(axis=0, ddof=1) / math.sqrt(n)
    worst = int(np.argmax(np.abs(means) / ses))
    tol = 4.0 * float(ses[worst])
    verdict = PASS if np.all(np.abs(means) <= 4.0 * ses) else FAIL
    return VerificationReport("martingale", 0.0, float(means[worst]), float(ses[worst]), tol, verdict,
                              _meta(spec, seed, n, checkpoints=ck, means=means.tolist(),
                                    std_errors=ses.tolist()))


def check_cutoff(spec=None, budget=None, seed=0, k=None, lam=1e4, alpha=0.7):
    """P(|N/E N - 1| > 0.1) for N = N_1(Y_alpha(Lambda)), Lambda large."""
    n = budget or 10_000
    gen = S.RngStream(seed).generator
    y = A.sample_subordinator_marginal(alpha, lam, n, gen)
    counts = gen.poisson(y)
    mean = A.ntfpp_moments(lam, alpha).mean
    r = counts / mean
    p = float(np.mean(np.abs(r - 1.0) > 0.1))
    se = math.sqrt(p * (1 - p) / n)
    # the limit law of N/E N is Y_alpha(1)/E Y_alpha(1), not a point mass
    y1 = A.sample_subordinator_marginal(alpha, 1.0, n, gen)
    p_limit = float(np.mean(np.abs(y1 / A.subordinator_moments(alpha, 1.0).mean - 1.0) > 0.1))
    return VerificationReport("cutoff", 0.0, p, se, 0.05, PASS if p < 0.05 else FAIL,
                              _meta(None, seed, n, Lambda=lam, alpha=alpha,
                                    limit_law_probability=p_limit,
                                    ratio_sd=float(r.std(ddof=1))))


def check_dispersion(spec=None, budget=None, seed=0, k=None):
    spec = spec or proportional_gm_spec()
    n = budget or 100_000
    t = 1.0
    m = A.nhgfcp_moments(spec.up, spec.alpha, t) if not spec.is_skellam else A.nhgfsp_moments(spec, t)
    x = S.nhgfsp_marginals(spec, [t], n, seed)[:, 0].astype(float)
    var = float(x.var(ddof=1))
    c = x - x.mean()
    se = float(math.sqrt(max(np.mean(c ** 4) - var ** 2, 0.0) / n))
    tol = 0.05 * m.variance
    verdict = PASS if abs(var - m.variance) <= tol and m.variance > m.mean else FAIL
    return VerificationReport("dispersion", m.variance, var, se, tol, verdict,
                              _meta(spec, seed, n, t=t, mean_analytic=m.mean,
                                    mean_estimate=float(x.mean()),
                                    dispersion_index=m.variance - m.mean))


def check_bessel_vs_convolution(spec=None, budget=None, seed=0, k=None):
    spec = spec or spec_for_k(k or 1)
    t = 1.0
    a = A.ngsp_pmf(spec, t, -15, 15, backend="convolution").probs
    b = A.ngsp_pmf(spec, t, -15, 15, backend="bessel").probs
    gap = float(np.abs(a - b).max())
    tol = 1e-10
    if gap <= tol:
        verdict = PASS
    else:
        verdict = DOC if spec.k > 1 else FAIL
    return VerificationReport("bessel_vs_convolution", 0.0, gap, None, tol, verdict,
                              _meta(spec, seed, 0, t=t, n_range=[-15, 15], k=spec.k,
                                    argmax_n=int(np.argmax(np.abs(a - b))) - 15))


def check_weighted_sum(spec=None, budget=None, seed=0, k=None):
    spec = spec or spec_for_k(k or 3)
    t = 1.0
    lo, hi = -40, 40
    a = A.ngsp_pmf(spec, t, lo, hi).probs
    b = weighted_sum_pmf(spec, t, lo, hi)
    gap = float(np.abs(a - b).max())
    return VerificationReport("weighted_sum", 0.0, gap, None, 1e-10, PASS if gap <= 1e-10 else FAIL,
                              _meta(spec, seed, 0, t=t))


def check_running_avg_ratios(spec=None, budget=None, seed=0, k=None):
    spec = spec or running_avg_spec()
    n = budget or 100_000
    t = 4.0
    m = A.running_avg_moments(spec, t)
    x = S.sample_running_avg(spec, t, S.RngStream(seed), n)
    var = float(x.var(ddof=1))
    rep = _mean_report("running_avg_ratios", m.mean, x, 3.0, spec, seed, t=t,
                       variance_analytic=m.variance, variance_estimate=var)
    if abs(var - m.variance) > 0.05 * m.variance:
        rep.verdict = FAIL
    return rep


def _waiting_gap(rates, alpha, t_end, n, seed):
    H = S.first_jump_times(rates, alpha, t_end, n, seed)
    grid = np.linspace(t_end / 60, t_end, 60)
    gap = 0.0
    for j in range(1, len(rates) + 1):
        h = np.sort(H[:, j - 1])
        emp = np.searchsorted(h, grid, side="right") / n
        th = np.array([A.waiting_time_cdf(rates, alpha, j, g) for g in grid])
        gap = max(gap, float(np.abs(emp - th).max()))
    return gap


def check_waiting_time(spec=None, budget=None, seed=0, k=None):
    spec = spec or proportional_gm_spec()
    n = budget or 100_000
    gap = _waiting_gap(spec.up, spec.alpha, 3.0, n, seed)
    return VerificationReport("waiting_time", 0.0, gap, None, 0.02, PASS if gap < 0.02 else FAIL,
                              _meta(spec, seed, n, t_end=3.0))


def check_waiting_time_varying_marks(spec=None, budget=None, seed=0, k=None):
    """Same comparison when Lambda_j/Lambda changes with t: documented gap."""
    spec = spec or ProcessSpec("NHGFCP", [RateFunction.gompertz_makeham(0.5, 0.8, 0.6),
                                          RateFunction.gompertz_makeham(0.2, 0.3, 1.0)], (), 0.7)
    n = budget or 100_000
    gap = _waiting_gap(spec.up, spec.alpha, 3.0, n, seed)
    return VerificationReport("waiting_time_varying_marks", 0.0, gap, None, 0.02,
                              PASS if gap < 0.02 else DOC, _meta(spec, seed, n, t_end=3.0))


def check_transition_rates(spec=None, budget=None, seed=0, k=None):
    """P(S(t+d) - S(t) = +-i) / d against lambda_i(t), mu_i(t) for small d."""
    spec = spec or gm_figure_spec()
    t, d = 0.5, 1e-6
    tab = A.increment_pmf(spec, d, t, -spec.k, spec.k)
    worst, an, es = 0.0, 0.0, 0.0
    for i in range(1, spec.k + 1):
        for rate, n in ((spec.up[i - 1].intensity(t), i), (spec.down[i - 1].intensity(t), -i)):
            est = tab.p(n) / d
            rel = abs(est - rate) / rate
            if rel > worst:
                worst, an, es = rel, rate, est
    tol = 1e-4 * an
    return VerificationReport("transition_rates", an, es, None, tol,
                              PASS if abs(es - an) <= tol else FAIL,
                              _meta(spec, seed, 0, t=t, delta=d, max_relative_gap=worst))


def check_recurrence(spec=None, budget=None, seed=0, k=None):
    spec = spec or gm_figure_spec()
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        tab = A.ngsp_pmf(spec, t)
        lam, tau = spec.cumulatives(t)
        for n in range(tab.n_min + spec.k, tab.n_max - spec.k + 1):
            if n == 0:
                continue
            rhs = 0.0
            for j in range(1, spec.k + 1):
                rhs += j * (lam[j - 1] * tab.p(n - j) - tau[j - 1] * tab.p(n + j))
            worst = max(worst, abs(tab.p(n) - rhs / n))
    return VerificationReport("recurrence", 0.0, worst, None, 1e-8, PASS if worst <= 1e-8 else FAIL,
                              _meta(spec, seed, 0, times=[0.5, 1.0, 2.0]))


def check_ngcp_oracle(spec=None, budget=None, seed=0, k=None):
    spec = spec or ProcessSpec("NGCP", gm_figure_spec().up)
    t = 1.0 if spec.k <= 3 else 0.5
    a = A.ngcp_pmf(spec.up, t, 20).probs
    b = ngcp_pmf_oracle(spec.up, t, 20).probs
    # compare on the scale of the entries: the oracle sums many small terms
    gap = float(np.abs(a - b).max())
    return VerificationReport("ngcp_oracle", 0.0, gap, None, 1e-10, PASS if gap <= 1e-10 else FAIL,
                              _meta(spec, seed, 0, t=t, n_max=20))


def check_hitting(spec=None, budget=None, seed=0, k=None):
    spec = spec or skellam_k1()
    n = budget or 100_000
    level, t = 2, 1.0
    an = A.arrival_time_cdf(spec, level, t).value
    x = S.ngsp_marginals(spec, [t], n, seed)[:, 0]
    hit = (x >= level).astype(float)
    return _mean_report("hitting", an, hit, 3.0, spec, seed, level=level, t=t)


def check_hitting_running_max(spec=None, budget=None, seed=0, k=None):
    """P(S(t) >= n) against P(max_{s<=t} S(s) >= n) from simulated paths."""
    spec = spec or skellam_k1()
    n = budget or 20_000
    level, t = 2, 1.0
    an = A.arrival_time_cdf(spec, level, t).value
    hits = np.empty(n)
    for i in range(n):
        p = S.sample_ngsp(spec, t, S.RngStream(seed, i))
        hits[i] = p.states.max() >= level
    rep = _mean_report("hitting_running_max", an, hits, 3.0, spec, seed, level=level, t=t)
    if rep.verdict == FAIL:
        rep.verdict = DOC
    return rep


def check_subordinator(spec=None, budget=None, seed=0, k=None, alpha=0.7):
    n = budget or 100_000
    y = S.subordinator_values(alpha, [1.0], n, seed)[:, 0]
    target = math.exp(-ln_gamma(1.0 + alpha))
    var_t = A.subordinator_moments(alpha, 1.0).variance
    rep = VerificationReport("subordinator", target, float(y.mean()),
                             float(y.std(ddof=1) / math.sqrt(n)), 0.02 * target, PASS,
                             _meta(None, seed, n, alpha=alpha, variance_analytic=var_t,
                                   variance_estimate=float(y.var(ddof=1))))
    if abs(rep.estimate - target) > rep.tolerance or abs(y.var(ddof=1) - var_t) > 0.05 * var_t:
        rep.verdict = FAIL
    return rep


def check_ngfsp_moments(spec=None, budget=None, seed=0, k=None):
    spec = spec or constant_spec("NGFSP", [0.9, 0.4], [0.5, 0.3], 0.7)
    n = budget or 100_000
    t = 2.0
    m = A.ngfsp_moments(spec, t)
    x = S.ngfsp_marginals(spec, t, n, seed).astype(float)
    rep = _mean_report("ngfsp_moments", m.mean, x, 3.0, spec, seed, t=t,
                       variance_analytic=m.variance, variance_estimate=float(x.var(ddof=1)))
    if abs(x.var(ddof=1) - m.variance) > 0.05 * m.variance:
        rep.verdict = FAIL
    return rep


def check_increments(spec=None, budget=None, seed=0, k=None):
    spec = spec or ProcessSpec("NGSP", [RateFunction.gompertz_makeham(0.6, 0.1, 1.0)],
                               [RateFunction.gompertz_makeham(0.4, 0.3, 0.7)])
    n = budget or 100_000
    v, t = 1.0, 1.0
    x = S.ngsp_marginals(spec, [v, v + t], n, seed)
    inc = x[:, 1] - x[:, 0]
    lo, hi = -25, 25
    tab = A.increment_pmf(spec, t, v, lo, hi)
    tv = _tv(inc, lo, tab.probs)
    return VerificationReport("increments", 0.0, tv, None, 0.01, PASS if tv <= 0.01 else FAIL,
                              _meta(spec, seed, n, v=v, t=t))


def check_ntfpp_pmf(spec=None, budget=None, seed=0, k=None, lam=2.0, alpha=0.7):
    n = budget or 100_000
    tab = A.ntfpp_pmf(lam, alpha, 60)
    gen = S.RngStream(seed).generator
    counts = gen.poisson(A.sample_subordinator_marginal(alpha, lam, n, gen))
    tv = _tv(counts, 0, tab.probs)
    return VerificationReport("ntfpp_pmf", 0.0, tv, None, 0.005, PASS if tv < 0.005 else FAIL,
                              _meta(None, seed, n, Lambda=lam, alpha=alpha, mass=tab.mass()))


def check_nhgfsp_mgf_sign(spec=None, budget=None, seed=0, k=None):
    spec = spec or nhgfsp_figure_spec()
    t, s = 0.2, 0.05
    tab = A.nhgfsp_pmf(spec, t)
    direct = float(np.sum(np.exp(s * tab.support) * tab.probs))
    printed = A.nhgfsp_mgf(spec, s, t, "printed")
    diff = A.nhgfsp_mgf(spec, s, t, "difference")
    tol = 1e-8 * max(1.0, abs(direct))
    verdict = PASS if abs(printed - direct) <= tol else DOC
    return VerificationReport("nhgfsp_mgf_sign", direct, printed, None, tol, verdict,
                              _meta(spec, seed, 0, t=t, s=s, difference_convention=diff))


def check_paper_vs_thinning(spec=None, budget=None, seed=0, k=None):
    spec = spec or gm_figure_spec()
    n = budget or 2_000
    t = 1.0
    an = A.ngsp_moments(spec, t).mean
    end = np.empty(n)
    for i in range(n):
        end[i] = S.sample_ngsp(spec, t, S.RngStream(seed, i), method="paper").states[-1]
    rep = _mean_report("paper_vs_thinning", an, end, 3.0, spec, seed, t=t,
                       paper_event_mean=float(np.mean(end != 0)))
    if rep.verdict == FAIL:
        rep.verdict = DOC
    return rep


def check_running_avg_covariance(spec=None, budget=None, seed=0, k=None):
    """Cov(A(s), A(t)) of the time-averaged path against the compound form (s/3) sum j^2 (lam + mu)."""
    spec = spec or running_avg_spec()
    n = budget or 100_000
    s, t = 1.0, 4.0
    lam, mu = spec.constant_rates()
    gen = S.RngStream(seed).generator
    a_s, a_t = np.zeros(n), np.zeros(n)
    sizes = [(j + 1, r) for j, r in enumerate(lam)] + [(-(j + 1), r) for j, r in enumerate(mu)]
    for x, r in sizes:
        c = gen.poisson(r * t, n)
        tau = gen.uniform(0.0, t, int(c.sum()))
        owner = np.repeat(np.arange(n), c)
        a_t += np.bincount(owner, weights=x * (t - tau), minlength=n) / t
        a_s += np.bincount(owner, weights=x * np.clip(s - tau, 0, None), minlength=n) / s
    cov = float(np.cov(a_s, a_t)[0, 1])
    prod = (a_s - a_s.mean()) * (a_t - a_t.mean())
    se = float(prod.std(ddof=1) / math.sqrt(n))
    printed = A.running_avg_moments(spec, t, s).covariance
    path = A.running_avg_moments(spec, t, s, covariance="path").covariance
    tol = 3 * se
    verdict = PASS if abs(cov - printed) <= tol else DOC
    return VerificationReport("running_avg_covariance", printed, cov, se, tol, verdict,
                              _meta(spec, seed, n, s=s, t=t, path_covariance=path))


CATALOG = {
    "moments": check_moments,
    "pmf_tv": check_pmf_tv,
    "martingale": check_martingale,
    "cutoff": check_cutoff,
    "dispersion": check_dispersion,
    "bessel_vs_convolution": check_bessel_vs_convolution,
    "weighted_sum": check_weighted_sum,
    "running_avg_ratios": check_running_avg_ratios,
    "waiting_time": check_waiting_time,
    "transition_rates": check_transition_rates,
    "recurrence": check_recurrence,
    "ngcp_oracle": check_ngcp_oracle,
    "hitting": check_hitting,
    "hitting_running_max": check_hitting_running_max,
    "subordinator": check_subordinator,
    "ngfsp_moments": check_ngfsp_moments,
    "increments": check_increments,
    "ntfpp_pmf": check_ntfpp_pmf,
    "nhgfsp_mgf_sign": check_nhgfsp_mgf_sign,
    "paper_vs_thinning": check_paper_vs_thinning,
    "running_avg_covariance": check_running_avg_covariance,
    "waiting_time_varying_marks": check_waiting_time_varying_marks,
}


def run_check(name: str, spec: ProcessSpec | None = None, budget: int | None = None,
              seed: int = 0, k: int | None = None) -> VerificationReport:
    """Run one catalog check; the seed is mixed with the check name."""
    if name not in CATALOG:
        raise UnknownCheckError(f"unknown check {name!r}; known: {sorted(CATALOG)}")
    rep = CATALOG[name](spec=spec, budget=budget, seed=_seed(seed, name), k=k)
    rep.metadata["base_seed"] = int(seed)
    return rep


def _run_one(args):
    return run_check(*args)


def run_all(names=None, seed: int = 0, budget: int | None = None, workers: int = 1):
    """Reports in catalog order, optionally computed in parallel."""
    names = list(names or CATALOG)
    jobs = [(n, None, budget, seed, None) for n in names]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def report_table(reports) -> str:
    return "\n".join(r.line() for r in reports)


def reports_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)

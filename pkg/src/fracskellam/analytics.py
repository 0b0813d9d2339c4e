"""Closed-form distributions, moments and dependence classes.

pmf tables for the non-homogeneous generalized counting and Skellam
processes (recurrence + convolution, and the aggregated Bessel form), the
tempered fractional versions built on Prabhakar functions, moments,
factorial moments, hitting-time laws, waiting times and the running-average
characteristic function.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import kernels
from .rates import ProcessSpec, RateError
from .specfun import (SeriesControl, DEFAULT_CONTROL, incomplete_beta, ln_gamma,
                      log_bessel_i, mittag_leffler, mittag_leffler3,
                      prabhakar_count_table)


class EnumerationBudgetError(RuntimeError):
    pass


class ClassificationError(ValueError):
    pass


@dataclass
class PmfTable:
    """Probabilities on the integer window ``n_min..n_max``.

    ``tail_bound`` bounds the probability mass outside the window.
    """

    t: float
    n_min: int
    probs: np.ndarray
    tail_bound: float
    backend: str
    flags: tuple = ()

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.probs) - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def p(self, n: int) -> float:
        i = int(n) - self.n_min
        if 0 <= i < len(self.probs):
            return float(self.probs[i])
        return 0.0

    def mass(self) -> float:
        return float(self.probs.sum())

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs) / self.mass())

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot((self.support - m) ** 2, self.probs) / self.mass())

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        flags = ";".join(self.flags)
        buf.write(f"# t={float(self.t)!r} backend={self.backend} tail_bound={float(self.tail_bound)!r}"
                  + (f" flags={flags}" if flags else "") + "\n")
        buf.write("n,p\n")
        for n, p in zip(self.support, self.probs):
            buf.write(f"{n},{float(p)!r}\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "PmfTable":
        lines = text.strip().splitlines()
        meta = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split())
        rows = [ln.split(",") for ln in lines[2:]]
        ns = [int(r[0]) for r in rows]
        ps = np.array([float(r[1]) for r in rows])
        flags = tuple(meta["flags"].split(";")) if "flags" in meta else ()
        return cls(float(meta["t"]), ns[0], ps, float(meta["tail_bound"]), meta["backend"], flags)


@dataclass
class MomentSummary:
    mean: float
    variance: float
    covariance: float | None = None
    s: float | None = None
    t: float | None = None
    std_error: float | None = None

    @property
    def dispersion_index(self) -> float:
        return self.variance - self.mean


@dataclass
class DependenceReport:
    cls: str
    theta: float
    c_of_s: float
    s: float
    detail: dict = field(default_factory=dict)


@dataclass
class Interval:
    """A probability together with the bracket implied by truncation."""

    value: float
    lower: float
    upper: float


def _rates_of(rates) -> tuple:
    if isinstance(rates, ProcessSpec):
        return rates.up
    return tuple(rates)


# ------------------------------------------------------------------- NGCP

def _ngcp_from_cumulants(lam: np.ndarray, n_max: int) -> np.ndarray:
    lam = np.ascontiguousarray(lam, dtype=float)
    if np.any(lam < 0):
        raise RateError("cumulative rates must be >= 0")
    return kernels.backend().ngcp_recurrence(lam, int(n_max))


def ngcp_pmf(rates, t: float, n_max: int) -> PmfTable:
    """pmf of the generalized counting process at time t, n = 0..n_max.

    Uses q(0) = exp(-sum Lambda_j) and
    q(n) = (1/n) sum_{j <= min(n, k)} j Lambda_j(t) q(n - j).
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    lam = np.array([r.cumulative(t) for r in _rates_of(rates)])
    q = _ngcp_from_cumulants(lam, n_max)
    tail = max(0.0, 1.0 - float(q.sum()))
    return PmfTable(float(t), 0, q, tail, "recurrence")


def _ngcp_full(lam: np.ndarray, tail_tol: float = 1e-15) -> np.ndarray:
    """Recurrence table long enough that the omitted upper tail is negligible."""
    k = lam.size
    j = np.arange(1, k + 1)
    m = float(np.dot(j, lam))
    sd = math.sqrt(float(np.dot(j * j, lam)))
    n = int(m + 14.0 * sd + 4 * k + 30)
    while True:
        q = _ngcp_from_cumulants(lam, n)
        # the largest entries near the end are a good proxy for the tail
        if q[-k - 1:].sum() < tail_tol * 1e-2 or n > 4_000_000:
            return q
        n *= 2


def _skellam_from_cumulants(lam, tau, t, n_min, n_max, backend="convolution") -> PmfTable:
    q1 = _ngcp_full(np.asarray(lam, dtype=float))
    q2 = _ngcp_full(np.asarray(tau, dtype=float)) if len(tau) else np.ones(1)
    full = np.convolve(q1, q2[::-1])
    lo = -(len(q2) - 1)
    out = np.zeros(n_max - n_min + 1)
    a = max(n_min, lo)
    b = min(n_max, lo + len(full) - 1)
    if a <= b:
        out[a - n_min:b - n_min + 1] = full[a - lo:b - lo + 1]
    tail = max(0.0, 1.0 - float(out.sum()))
    return PmfTable(float(t), int(n_min), out, tail, backend)


def _default_window(spec: ProcessSpec, t: float, width: float = 10.0):
    m = ngsp_moments(spec, t)
    sd = math.sqrt(max(m.variance, 1.0))
    lo = math.floor(m.mean - width * sd) - spec.k
    hi = math.ceil(m.mean + width * sd) + spec.k
    if not spec.is_skellam:
        lo = 0
    return int(lo), int(hi)


def ngsp_pmf(spec: ProcessSpec, t: float, n_min: int | None = None, n_max: int | None = None,
             backend: str = "convolution") -> PmfTable:
    """pmf of the non-homogeneous generalized Skellam process at time t.

    ``backend="convolution"`` convolves the two counting pmfs (trusted);
    ``backend="bessel"`` evaluates the aggregated Bessel expression, which
    is exact only when k = 1.
    """
    if n_min is None or n_max is None:
        lo, hi = _default_window(spec, t)
        n_min = lo if n_min is None else n_min
        n_max = hi if n_max is None else n_max
    if n_min > n_max:
        raise ValueError("n_min must not exceed n_max")
    if backend == "bessel":
        return ngsp_pmf_bessel(spec, t, n_min, n_max)
    if backend != "convolution":
        raise ValueError(f"unknown pmf backend {backend!r}")
    lam, tau = spec.cumulatives(t)
    return _skellam_from_cumulants(lam, tau, t, n_min, n_max)


def ngsp_pmf_bessel(spec: ProcessSpec, t: float, n_min: int, n_max: int,
                    ctl: SeriesControl = DEFAULT_CONTROL) -> PmfTable:
    """exp(-(A+B)) (A/B)^(n/2) I_|n|(2 sqrt(AB)) with A, B the aggregate cumulatives."""
    lam, tau = spec.cumulatives(t)
    A, B = float(lam.sum()), float(tau.sum())
    ns = np.arange(n_min, n_max + 1)
    out = np.zeros(ns.size)
    flags: list[str] = []
    if spec.k > 1:
        flags.append("aggregated_k>1")
    if A == 0.0 and B == 0.0:
        out[ns == 0] = 1.0
    elif B == 0.0 or A == 0.0:
        # Poisson on one side only
        rate = A if B == 0.0 else B
        sgn = 1 if B == 0.0 else -1
        for i, n in enumerate(ns):
            m = sgn * n
            if m >= 0:
                out[i] = math.exp(-rate + m * math.log(rate) - math.lgamma(m + 1))
        flags.append("poisson_limit")
    else:
        z = 2.0 * math.sqrt(A * B)
        half = 0.5 * (math.log(A) - math.log(B))
        for i, n in enumerate(ns):
            out[i] = math.exp(-(A + B) + n * half + log_bessel_i(abs(int(n)), z, ctl))
    tail = max(0.0, 1.0 - float(out.sum()))
    return PmfTable(float(t), int(n_min), out, tail, "bessel", tuple(flags))


def increment_pmf(spec: ProcessSpec, t: float, v: float, n_min: int, n_max: int) -> PmfTable:
    """pmf of S(t + v) - S(v), built from the rate increments over (v, t + v]."""
    if t < 0 or v < 0:
        raise ValueError("increment_pmf needs t, v >= 0")
    lam, tau = spec.increments(v, t + v)
    tab = _skellam_from_cumulants(lam, tau, t, n_min, n_max)
    tab.backend = "convolution_increment"
    return tab


def ngsp_pgf(spec: ProcessSpec, u: float, t: float) -> float:
    """E u^S(t) = exp(sum_j Lambda_j (u^j - 1) + T_j (u^-j - 1)), u > 0."""
    if not u > 0:
        raise ValueError("the pgf is evaluated at u > 0")
    lam, tau = spec.cumulatives(t)
    j = np.arange(1, spec.k + 1)
    e = float(np.dot(lam, u ** j - 1.0))
    if tau.size:
        e += float(np.dot(tau, u ** (-j) - 1.0))
    return math.exp(e)


def ngsp_mgf(spec: ProcessSpec, s: float, t: float) -> float:
    return ngsp_pgf(spec, math.exp(s), t)


def ngsp_moments(spec: ProcessSpec, t: float, s: float | None = None) -> MomentSummary:
    """Mean, variance and (optionally) Cov(S(s), S(t)) for the NGSP/NGCP."""
    lam, tau = spec.cumulatives(t)
    j = np.arange(1, spec.k + 1)
    mean = float(np.dot(j, lam) - (np.dot(j, tau) if tau.size else 0.0))
    var = float(np.dot(j * j, lam) + (np.dot(j * j, tau) if tau.size else 0.0))
    cov = None
    if s is not None:
        cov = ngsp_covariance(spec, s, t)
    return MomentSummary(mean, var, cov, s, float(t))


def ngsp_covariance(spec: ProcessSpec, s: float, t: float) -> float:
    return ngsp_moments(spec, min(s, t)).variance


def falling_factorial(a: int, b: int) -> float:
    """a (a-1) ... (a-b+1); also valid for negative a."""
    out = 1.0
    for i in range(b):
        out *= a - i
    return out


def factorial_moment(spec: ProcessSpec, r: int, t: float) -> float:
    """E[S (S-1) ... (S-r+1)] from the pgf-derivative recursion."""
    if r < 0:
        raise ValueError("r must be >= 0")
    lam, tau = spec.cumulatives(t)
    k = spec.k

    def h(order):  # order-th derivative at u=1 of the pgf exponent
        v = 0.0
        for j in range(1, k + 1):
            v += lam[j - 1] * falling_factorial(j, order)
            if tau.size:
                v += tau[j - 1] * falling_factorial(-j, order)
        return v

    psi = [1.0]
    for n in range(1, r + 1):
        acc = 0.0
        for m in range(n):
            acc += math.comb(n - 1, m) * psi[m] * h(n - m)
        psi.append(acc)
    return psi[r]


def arrival_time_cdf(spec: ProcessSpec, n: int, t: float, backend: str = "convolution") -> Interval:
    """P(S(t) >= n), the distribution function of the level-n arrival time."""
    if t == 0:
        v = 1.0 if n <= 0 else 0.0
        return Interval(v, v, v)
    tab = _pmf_for_hitting(spec, t, n, backend)
    lower = float(tab.probs[tab.support >= n].sum())
    upper = min(1.0, lower + tab.tail_bound)
    return Interval(lower, lower, upper)


def first_passage_survival(spec: ProcessSpec, n: int, t: float,
                           backend: str = "convolution") -> Interval:
    """P(S(t) < n), the complement of :func:`arrival_time_cdf`."""
    if t == 0:
        v = 1.0 if n >= 1 else 0.0
        return Interval(v, v, v)
    tab = _pmf_for_hitting(spec, t, n, backend)
    lower = float(tab.probs[tab.support < n].sum())
    upper = min(1.0, lower + tab.tail_bound)
    return Interval(lower, lower, upper)


def _pmf_for_hitting(spec, t, n, backend):
    if spec.variant == "NHGFSP" or spec.variant == "NHGFCP" or backend == "mittag_leffler":
        tab = nhgfsp_pmf(spec, t) if spec.is_skellam else nhgfcp_pmf(spec.up, spec.alpha, t)
    else:
        lo, hi = _default_window(spec, t, 14.0)
        lo, hi = min(lo, n - 1), max(hi, n + 1)
        if not spec.is_skellam:
            lo = 0
        tab = ngsp_pmf(spec, t, lo, hi, backend=backend)
    return tab


# ------------------------------------------------------- dependence (NGSP)

def _weibull_params(rates):
    out = []
    for r in rates:
        if r.kind != "weibull":
            raise ClassificationError("dependence classes are defined for Weibull rates only")
        out.append((r.params["scale"], r.params["shape"]))
    return out


def classify_dependence_ngsp(spec: ProcessSpec, s: float) -> DependenceReport:
    """Corr(S(s), S(t)) = sqrt(V(s)/V(t)) ~ c(s) t^(-theta) with theta = max shape / 2.

    Long-range dependent when the leading power d = 2 theta is in (0, 2),
    short-range dependent when d > 2.
    """
    if not s > 0:
        raise ValueError("s must be > 0")
    terms = []  # (coefficient, power) of V(t) = sum coef * t^power
    for side in (spec.up, spec.down):
        if not side:
            continue
        for j, (b, c) in enumerate(_weibull_params(side), start=1):
            terms.append((j * j * b ** (-c), c))
    d = max(c for _, c in terms)
    lead = sum(coef for coef, c in terms if c == d)
    theta = d / 2.0
    c_of_s = math.sqrt(ngsp_moments(spec, s).variance / lead)
    if 0 < d < 2:
        cls = "LRD"
    elif d > 2:
        cls = "SRD"
    else:
        cls = "neither"
    return DependenceReport(cls, theta, c_of_s, float(s), {"d": d})


# ------------------------------------------------- inverse subordinator

def subordinator_moments(alpha: float, t: float) -> MomentSummary:
    g1 = math.exp(ln_gamma(alpha + 1.0))
    g2 = math.exp(ln_gamma(2.0 * alpha + 1.0))
    mean = t ** alpha / g1
    var = (2.0 / g2 - 1.0 / (g1 * g1)) * t ** (2.0 * alpha)
    return MomentSummary(mean, var, None, None, float(t))


def subordinator_covariance(alpha: float, s: float, t: float) -> float:
    """Cov(Y(s), Y(t)) for the inverse alpha-stable subordinator."""
    if s > t:
        s, t = t, s
    if s == 0:
        return 0.0
    g1 = math.exp(ln_gamma(alpha + 1.0))
    b_full = math.exp(ln_gamma(alpha) + ln_gamma(alpha + 1.0) - ln_gamma(2.0 * alpha + 1.0))
    f = alpha * t ** (2 * alpha) * incomplete_beta(alpha, alpha + 1.0, s / t) - (t * s) ** alpha
    return (alpha * s ** (2 * alpha) * b_full + f) / (g1 * g1)


def sample_subordinator_marginal(alpha: float, t: float, n: int, rng) -> np.ndarray:
    """Exact draws of Y(t) via Y(t) = (t / D(1))^alpha."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.Generator(rng)
    if alpha == 1.0:
        return np.full(n, float(t))
    U = np.pi * (1.0 - gen.random(n))
    V = -np.log1p(-gen.random(n))
    D = (np.sin(alpha * U) * np.sin((1 - alpha) * U) ** ((1 - alpha) / alpha)
         / (np.sin(U) ** (1 / alpha) * V ** ((1 - alpha) / alpha)))
    return (t / D) ** alpha


# ----------------------------------------------------------------- NGFSP

def ngfsp_moments(spec: ProcessSpec, t: float, s: float | None = None,
                  n_samples: int = 100_000, seed: int = 0, h: float | None = None) -> MomentSummary:
    """Moments of S(Y(t)) with Y the inverse subordinator.

    Uses the law of total variance given Y: the conditional variance is
    sum_j j^2 (Lambda_j + T_j)(Y) and the conditional mean is
    sum_j j (Lambda_j - T_j)(Y).  Constant rates give closed forms; other
    rates average over subordinator draws.
    """
    alpha = spec.alpha
    if alpha == 1.0:
        return ngsp_moments(spec, t, s)
    j = np.arange(1, spec.k + 1)
    try:
        lam, mu = spec.constant_rates()
    except RateError:
        lam = None
    if lam is not None:
        md = float(np.dot(j, lam) - (np.dot(j, mu) if mu.size else 0.0))
        ms = float(np.dot(j * j, lam) + (np.dot(j * j, mu) if mu.size else 0.0))
        ym = subordinator_moments(alpha, t)
        mean = md * ym.mean
        var = ms * ym.mean + md * md * ym.variance
        cov = None
        if s is not None:
            lo = min(s, t)
            cov = ms * subordinator_moments(alpha, lo).mean + md * md * subordinator_covariance(alpha, s, t)
        return MomentSummary(mean, var, cov, s, float(t), 0.0)

    def drift(y):
        lam_y = np.array([r.cumulative(y) for r in spec.up])
        tau_y = np.array([r.cumulative(y) for r in spec.down]) if spec.down else np.zeros((0, y.size))
        d = j @ lam_y - (j @ tau_y if spec.down else 0.0)
        q = (j * j) @ lam_y + ((j * j) @ tau_y if spec.down else 0.0)
        return d, q

    bg = np.random.Philox(np.random.SeedSequence(seed))
    if s is None:
        y = sample_subordinator_marginal(alpha, t, n_samples, bg)
        d, q = drift(y)
        mean = float(d.mean())
        var = float(q.mean() + d.var())
        return MomentSummary(mean, var, None, None, float(t), float(d.std(ddof=1) / math.sqrt(n_samples)))
    lo, hi = sorted((float(s), float(t)))
    step = h if h is not None else hi / 1024
    ck = np.array([lo, hi])
    ys = kernels.backend().subordinator_at(alpha, ck, step, n_samples, bg)
    d_lo, q_lo = drift(ys[:, 0])
    d_hi, q_hi = drift(ys[:, 1])
    cov = float(q_lo.mean() + np.cov(d_lo, d_hi)[0, 1])
    d_t, q_t = (d_hi, q_hi) if t >= s else (d_lo, q_lo)
    return MomentSummary(float(d_t.mean()), float(q_t.mean() + d_t.var()), cov, s, float(t),
                         float(d_t.std(ddof=1) / math.sqrt(n_samples)))


# ---------------------------------------------------- tempered fractional

def ntfpp_pmf(lam: float, alpha: float, n_max: int,
              ctl: SeriesControl = DEFAULT_CONTROL, method: str = "table") -> PmfTable:
    """pmf of N_1(Y(Lambda)): p(n) = Lambda^(n alpha) E^{n+1}_{alpha, n alpha + 1}(-Lambda^alpha).

    ``method="table"`` evaluates all n in one multiprecision pass;
    ``"pointwise"`` calls the Prabhakar evaluator once per n.
    """
    if lam < 0:
        raise ValueError("Lambda must be >= 0")
    out = np.zeros(n_max + 1)
    if lam == 0:
        out[0] = 1.0
        return PmfTable(0.0, 0, out, 0.0, "mittag_leffler", ("indexed_by_Lambda",))
    x = lam ** alpha
    if method == "table":
        out[:] = np.maximum(prabhakar_count_table(alpha, x, n_max), 0.0)
    elif method == "pointwise":
        for n in range(n_max + 1):
            v = mittag_leffler3(alpha, n * alpha + 1.0, n + 1.0, -x, ctl,
                                log_prefactor=n * alpha * math.log(lam))
            out[n] = max(v, 0.0)
    else:
        raise ValueError("method is 'table' or 'pointwise'")
    tail = max(0.0, 1.0 - float(out.sum()))
    # the time slot holds Lambda here
    return PmfTable(float(lam), 0, out, tail, "mittag_leffler", ("indexed_by_Lambda",))


def ntfpp_arrival_cdf(lam: float, alpha: float, n: int) -> float:
    """P(N_1(Y(Lambda)) >= n) = Lambda^(n alpha) E^n_{alpha, n alpha + 1}(-Lambda^alpha)."""
    if n <= 0:
        return 1.0
    if lam == 0:
        return 0.0
    return mittag_leffler3(alpha, n * alpha + 1.0, float(n), -lam ** alpha,
                           log_prefactor=n * alpha * math.log(lam))


def _dispersion_factor(alpha: float) -> float:
    # alpha B(alpha, 1/2) / 2^(2 alpha - 1); equals 2 Gamma(alpha+1)^2 / Gamma(2 alpha + 1)
    b = math.exp(ln_gamma(alpha) + ln_gamma(0.5) - ln_gamma(alpha + 0.5))
    return alpha * b / 2.0 ** (2.0 * alpha - 1.0)


def ntfpp_moments(lam: float, alpha: float) -> MomentSummary:
    m = lam ** alpha / math.exp(ln_gamma(alpha + 1.0))
    return MomentSummary(m, m * (1.0 + m * (_dispersion_factor(alpha) - 1.0)))


def compositions(k: int, n: int) -> Iterator[tuple]:
    """All (x_1..x_k) >= 0 with sum_j j x_j = n, largest part first."""
    def rec(j, rem):
        if j == 1:
            yield (rem,)
            return
        for xj in range(rem // j, -1, -1):
            for rest in rec(j - 1, rem - j * xj):
                yield rest + (xj,)
    if n < 0:
        return
    yield from rec(k, n)


def composition_counts(k: int, n_max: int) -> np.ndarray:
    """|Omega(k, n)| for n = 0..n_max (partitions of n into parts <= k)."""
    c = np.zeros(n_max + 1, dtype=np.int64)
    c[0] = 1
    for part in range(1, k + 1):
        for n in range(part, n_max + 1):
            c[n] += c[n - part]
    return c


def _composition_arrays(k: int, n_max: int):
    """For each n <= n_max an int array (|Omega(k, n)|, k) of its compositions."""
    # level 1: only x_1 = n
    level = [np.array([[n]], dtype=np.int64) for n in range(n_max + 1)]
    for j in range(2, k + 1):
        nxt = []
        for n in range(n_max + 1):
            blocks = []
            for xj in range(n // j + 1):
                sub = level[n - j * xj]
                blocks.append(np.hstack([sub, np.full((sub.shape[0], 1), xj, dtype=np.int64)]))
            nxt.append(np.vstack(blocks))
        level = nxt
    return level


def _side_pmf(rates, alpha, t, j_max, budget, ctl):
    lam = np.array([r.cumulative(t) for r in rates])
    L = float(lam.sum())
    k = lam.size
    out = np.zeros(j_max + 1)
    if L == 0.0:
        out[0] = 1.0
        return out, L
    counts = np.cumsum(composition_counts(k, j_max))
    if counts[-1] > budget:
        over = int(np.argmax(counts > budget))
        raise EnumerationBudgetError(
            f"composition enumeration exceeds {int(budget)} tuples at j={over}")
    base = ntfpp_pmf(L, alpha, j_max, ctl).probs  # P(N = r), r <= j_max
    with np.errstate(divide="ignore"):
        logp = np.log(lam / L)
    lg = np.array([math.lgamma(i + 1) for i in range(j_max + 1)])
    for n, comp in enumerate(_composition_arrays(k, j_max)):
        r = comp.sum(axis=1)
        with np.errstate(invalid="ignore"):
            # 0 * log 0 counts as 0: zero-rate sizes only admit x_s = 0
            part = np.where(comp > 0, comp * logp, 0.0)
        lw = lg[r] - lg[comp].sum(axis=1) + part.sum(axis=1)
        out[n] = float(np.sum(np.exp(lw) * base[r]))
    return out, L


def _auto_jmax(rates, alpha, t):
    m = nhgfcp_moments(rates, alpha, t)
    return int(m.mean + 12.0 * math.sqrt(max(m.variance, 1.0)) + 2 * len(rates) + 10)


def nhgfcp_pmf(rates, alpha: float, t: float, j_max: int | None = None,
               budget: int = 2_000_000, ctl: SeriesControl = DEFAULT_CONTROL) -> PmfTable:
    """pmf of the tempered fractional counting process by composition enumeration."""
    rates = _rates_of(rates)
    if j_max is None:
        j_max = _auto_jmax(rates, alpha, t)
    out, _ = _side_pmf(rates, alpha, t, j_max, budget, ctl)
    tail = max(0.0, 1.0 - float(out.sum()))
    return PmfTable(float(t), 0, out, tail, "mittag_leffler")


def nhgfsp_pmf(spec: ProcessSpec, t: float, n_min: int | None = None, n_max: int | None = None,
               j_max: int | None = None, budget: int = 2_000_000) -> PmfTable:
    """Difference of two independent tempered fractional counting processes."""
    if j_max is None:
        j_max = max(_auto_jmax(spec.up, spec.alpha, t),
                    _auto_jmax(spec.down, spec.alpha, t) if spec.down else 0)
    p1, _ = _side_pmf(spec.up, spec.alpha, t, j_max, budget, DEFAULT_CONTROL)
    if spec.down:
        p2, _ = _side_pmf(spec.down, spec.alpha, t, j_max, budget, DEFAULT_CONTROL)
    else:
        p2 = np.ones(1)
    full = np.convolve(p1, p2[::-1])
    lo = -(len(p2) - 1)
    if n_min is None:
        n_min = lo
    if n_max is None:
        n_max = lo + len(full) - 1
    out = np.zeros(n_max - n_min + 1)
    a, b = max(n_min, lo), min(n_max, lo + len(full) - 1)
    if a <= b:
        out[a - n_min:b - n_min + 1] = full[a - lo:b - lo + 1]
    tail = max(0.0, 1.0 - float(out.sum()))
    return PmfTable(float(t), int(n_min), out, tail, "mittag_leffler")


def nhgfsp_mgf(spec: ProcessSpec, s: float, t: float, convention: str = "printed") -> float:
    """Product of two Mittag-Leffler factors.

    ``convention="printed"`` uses (e^{sj} - 1) in both factors;
    ``"difference"`` uses (e^{-sj} - 1) for the down side, which is the
    mgf of the difference of the two counting processes.
    """
    if convention not in ("printed", "difference"):
        raise ValueError("convention is 'printed' or 'difference'")
    alpha = spec.alpha
    lam, tau = spec.cumulatives(t)
    j = np.arange(1, spec.k + 1)

    def factor(c, sign):
        total = float(c.sum())
        if total == 0:
            return 1.0
        z = float(np.dot(c, np.expm1(sign * s * j))) * total ** (alpha - 1.0)
        return mittag_leffler(alpha, 1.0, z)

    out = factor(lam, 1.0)
    if tau.size:
        out *= factor(tau, 1.0 if convention == "printed" else -1.0)
    return out


def nhgfcp_mgf(rates, alpha: float, s: float, t: float) -> float:
    """E exp(s M(t)) = E_alpha(Lambda^(alpha-1) sum_j Lambda_j (e^{sj} - 1))."""
    rates = _rates_of(rates)
    lam = np.array([r.cumulative(t) for r in rates])
    L = float(lam.sum())
    if L == 0:
        return 1.0
    j = np.arange(1, lam.size + 1)
    return mittag_leffler(alpha, 1.0, float(np.dot(lam, np.expm1(s * j))) * L ** (alpha - 1.0))


def nhgfcp_raw_moment(rates, alpha: float, t: float, r: int, h: float | None = None) -> float:
    """E[M(t)^r] by central differences of the mgf at 0, one Richardson step.

    The base step is 1e-4 for r <= 2; higher orders start from 1e-4 * 10^(r-2)
    so that rounding (about eps / h^r) stays below the truncation error.
    """
    if r < 0:
        raise ValueError("moment order must be >= 0")
    if r == 0:
        return 1.0
    if h is None:
        h = 1e-4 * 10.0 ** max(0, r - 2)
    w = [(-1) ** i * math.comb(r, i) for i in range(r + 1)]

    def diff(step):
        acc = 0.0
        for i in range(r + 1):
            acc += w[i] * nhgfcp_mgf(rates, alpha, (r / 2.0 - i) * step, t)
        return acc / step ** r

    return (4.0 * diff(h / 2.0) - diff(h)) / 3.0


def nhgfcp_moments(rates, alpha: float, t: float) -> MomentSummary:
    rates = _rates_of(rates)
    lam = np.array([r.cumulative(t) for r in rates])
    L = float(lam.sum())
    if L == 0:
        return MomentSummary(0.0, 0.0, None, None, float(t))
    j = np.arange(1, lam.size + 1)
    m = L ** alpha / math.exp(ln_gamma(alpha + 1.0))
    ex = float(np.dot(j, lam)) / L
    ex2 = float(np.dot(j * j, lam)) / L
    var = m * (ex2 + ex * ex * m * (_dispersion_factor(alpha) - 1.0))
    return MomentSummary(m * ex, var, None, None, float(t))


def nhgfsp_moments(spec: ProcessSpec, t: float, s: float | None = None) -> MomentSummary:
    """Mean and variance of the tempered fractional Skellam process.

    The mean is the difference of the two side means; each side's moments
    are normalised by its own aggregate rate.  The covariance is
    V(S(min(s, t))).
    """
    up = nhgfcp_moments(spec.up, spec.alpha, t)
    if spec.down:
        dn = nhgfcp_moments(spec.down, spec.alpha, t)
        mean, var = up.mean - dn.mean, up.variance + dn.variance
    else:
        mean, var = up.mean, up.variance
    cov = None
    if s is not None:
        cov = nhgfsp_moments(spec, min(s, t)).variance
    return MomentSummary(mean, var, cov, s, float(t))


def classify_dependence_nhgfsp(spec: ProcessSpec, s: float) -> DependenceReport:
    """Weibull aggregates Lambda = (t/b)^a, T = (t/d)^c: theta = alpha * min(a, c)."""
    shapes = []
    for side in (spec.up, spec.down):
        if side:
            cs = {c for _, c in _weibull_params(side)}
            if len(cs) != 1:
                raise ClassificationError("each side needs a common Weibull shape")
            shapes.append(cs.pop())
    a_c = min(shapes)
    theta = spec.alpha * a_c
    if theta < 1.0:
        cls = "LRD"
    elif 1.0 < theta < 2.0:
        cls = "SRD"
    else:
        cls = "neither"
    c_of_s = math.sqrt(nhgfsp_moments(spec, s).variance)
    return DependenceReport(cls, theta, c_of_s, float(s), {"min_shape": a_c})


def waiting_time_cdf(rates, alpha: float, j: int, t: float) -> float:
    """P(H_j <= t), H_j the first time a jump of size j occurs.

    x E_{alpha, alpha+1}(-x) with x = Lambda_j(t) Lambda(t)^(alpha-1).
    Values outside [0, 1] are clamped with a warning.
    """
    rates = _rates_of(rates)
    if not 1 <= j <= len(rates):
        raise ValueError("jump size out of range")
    lam = np.array([r.cumulative(t) for r in rates])
    L = float(lam.sum())
    if lam[j - 1] == 0.0:
        return 0.0
    x = lam[j - 1] * L ** (alpha - 1.0)
    v = x * mittag_leffler(alpha, alpha + 1.0, -x)
    if v < 0.0 or v > 1.0:
        warnings.warn(f"waiting-time cdf {v} clamped to [0, 1]", RuntimeWarning)
        v = min(max(v, 0.0), 1.0)
    return v


# -------------------------------------------------------- running average

def running_avg_cf(spec: ProcessSpec, u: float, t: float) -> complex:
    """Characteristic function of (1/t) int_0^t S(s) ds for constant rates."""
    lam, mu = spec.constant_rates()
    if u == 0:
        return 1.0 + 0j
    j = np.arange(1, spec.k + 1)
    iuj = 1j * u * j
    e = np.sum(lam * (np.expm1(iuj) / iuj - 1.0))
    if mu.size:
        e += np.sum(mu * (-np.expm1(-iuj) / iuj - 1.0))
    return complex(np.exp(t * e))


def running_avg_moments(spec: ProcessSpec, t: float, s: float | None = None,
                        covariance: str = "compound") -> MomentSummary:
    """Mean (t/2) sum j(lam - mu), variance (t/3) sum j^2 (lam + mu).

    ``covariance="compound"`` gives (min(s,t)/3) sum j^2 (lam + mu), the
    value for the compound Poisson representation viewed as a process;
    ``"path"`` gives the covariance of the time-averaged path itself,
    sigma^2 (s/2 - s^2/(6t)) for s <= t.
    """
    lam, mu = spec.constant_rates()
    j = np.arange(1, spec.k + 1)
    md = float(np.dot(j, lam) - (np.dot(j, mu) if mu.size else 0.0))
    ms = float(np.dot(j * j, lam) + (np.dot(j * j, mu) if mu.size else 0.0))
    cov = None
    if s is not None:
        lo, hi = min(s, t), max(s, t)
        if covariance == "compound":
            cov = lo / 3.0 * ms
        elif covariance == "path":
            cov = ms * (lo / 2.0 - lo * lo / (6.0 * hi)) if hi > 0 else 0.0
        else:
            raise ValueError("covariance is 'compound' or 'path'")
    return MomentSummary(t / 2.0 * md, t / 3.0 * ms, cov, s, float(t))


def classify_dependence_runavg(spec: ProcessSpec, s: float) -> DependenceReport:
    """theta = 1/2 for every rate choice: the running average is LRD."""
    spec.constant_rates()
    if not s > 0:
        raise ValueError("s must be > 0")
    return DependenceReport("LRD", 0.5, math.sqrt(s), float(s))


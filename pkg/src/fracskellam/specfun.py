"""Series evaluators for the special functions used by the pmf formulas.

Modified Bessel functions of the first kind, the two- and three-parameter
Mittag-Leffler functions, ``ln_gamma`` and the (non-regularised) incomplete
beta function.

Series use compensated (Kahan) summation.  On the negative real axis the
Mittag-Leffler power series cancels catastrophically once ``x**(1/alpha)``
grows; there the algebraic asymptotic expansion is tried, and when that is
not accurate either the same power series is summed in multiprecision
arithmetic with enough digits to absorb the cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from scipy import special as _sp

_EPS = 2.220446049250313e-16
MAX_DIGITS = 3000


@dataclass(frozen=True)
class SeriesControl:
    rel_tol: float = 1e-14
    max_terms: int = 10_000


DEFAULT_CONTROL = SeriesControl()


class SeriesConvergenceError(ArithmeticError):
    """Raised when a series exhausts ``max_terms``; carries the partial sum."""

    def __init__(self, msg: str, partial: float, terms: int):
        super().__init__(msg)
        self.partial = partial
        self.terms = terms


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"ln_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def incomplete_beta(a: float, b: float, x: float) -> float:
    """B(a, b; x) = int_0^x u^(a-1) (1-u)^(b-1) du (not regularised)."""
    if a <= 0 or b <= 0:
        raise ValueError("incomplete_beta needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError("incomplete_beta needs 0 <= x <= 1")
    return float(_sp.betainc(a, b, x) * _sp.beta(a, b))


# ---------------------------------------------------------------- Bessel I_n

def log_bessel_i(n: int, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """log I_n(z) for integer n and z > 0, summed in scaled form."""
    n = abs(int(n))
    if z < 0:
        raise ValueError("log_bessel_i needs z >= 0")
    if z == 0:
        return 0.0 if n == 0 else -math.inf
    half = 0.5 * z
    lhalf = math.log(half)
    q = half * half
    # terms t_k relative to t_0 = (z/2)^n / n!; rescale when they grow big
    lt0 = n * lhalf - math.lgamma(n + 1)
    s = 1.0
    c = 0.0
    term = 1.0
    shift = 0.0
    k = 0
    while True:
        k += 1
        if k > ctl.max_terms:
            raise SeriesConvergenceError(
                f"I_{n}({z}) did not converge", math.exp(lt0 + shift) * s, k)
        term *= q / (k * (n + k))
        y = term - c
        t = s + y
        c = (t - s) - y
        s = t
        if s > 1e250:
            s *= 1e-250
            term *= 1e-250
            c *= 1e-250
            shift += 250 * math.log(10.0)
        if term < ctl.rel_tol * s and k > half - n:
            break
    return lt0 + shift + math.log(s)


def bessel_i(n: int, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Modified Bessel function I_n(z) for integer n (I_{-n} = I_n)."""
    if z < 0:
        # I_n(-z) = (-1)^n I_n(z)
        sign = -1.0 if abs(int(n)) % 2 else 1.0
        return sign * bessel_i(n, -z, ctl)
    return math.exp(log_bessel_i(n, z, ctl))


# ------------------------------------------------------------ Mittag-Leffler

def _series(log_abs_term, sign_of, ctl: SeriesControl):
    """Kahan-sum terms given by log|t_k| and sign; returns (sum, max|t_k|)."""
    s = 0.0
    c = 0.0
    prev = math.inf
    big = 0.0
    k = 0
    while True:
        la = log_abs_term(k)
        if la > 700.0:
            raise SeriesConvergenceError("series terms overflow", s, k)
        a = math.exp(la) if la > -745.0 else 0.0
        big = max(big, a)
        y = sign_of(k) * a - c
        t = s + y
        c = (t - s) - y
        s = t
        if a <= ctl.rel_tol * abs(s) and a <= prev:
            return s, big, k + 1
        if a == 0.0 and prev == 0.0 and k > 2:
            return s, big, k + 1
        prev = a
        k += 1
        if k >= ctl.max_terms:
            raise SeriesConvergenceError("Mittag-Leffler series did not converge", s, k)


def _ml3_asymptotic(alpha, beta, delta, x, ctl):
    """Algebraic expansion of E^delta_{alpha,beta}(-x) for large x > 0.

    sum_n (delta)_n / n! * (-1)^n x^(-delta-n) / Gamma(beta - alpha(delta+n)).
    1/Gamma oscillates through zeros, so truncation and the error estimate
    use the smooth envelope |1/Gamma(-y)| <= Gamma(1+y)/pi instead of the
    terms themselves.  Returns (value, error estimate).
    """
    s = 0.0
    lx = math.log(x)
    lpoch = 0.0  # log of (delta)_n / n!
    prev_env = math.inf
    err = math.inf
    for n in range(ctl.max_terms):
        if n:
            lpoch += math.log((delta + n - 1) / n)
        arg = beta - alpha * (delta + n)
        lscale = lpoch - (delta + n) * lx
        if arg > 1.0:
            lenv = lscale - math.lgamma(arg)
        else:
            # covers the poles: |1/Gamma(arg)| <= Gamma(2 - arg)/pi for arg <= 1
            lenv = lscale + math.lgamma(2.0 - arg) - math.log(math.pi) + math.log(2.0)
        env = math.exp(lenv) if lenv > -745.0 else 0.0
        if env > prev_env and n > 2:
            err = prev_env
            break
        r = float(_sp.rgamma(arg))
        s += ((-1.0) ** n) * math.exp(lscale) * r if lscale > -745.0 else 0.0
        prev_env = env
        if env <= 0.25 * ctl.rel_tol * abs(s):
            err = env
            break
    return s, err


def mittag_leffler3(alpha: float, beta: float, delta: float, z: float,
                    ctl: SeriesControl = DEFAULT_CONTROL, log_prefactor: float = 0.0) -> float:
    """Three-parameter (Prabhakar) Mittag-Leffler function E^delta_{alpha,beta}(z).

    With ``log_prefactor`` the result is exp(log_prefactor) * E, formed
    without overflow when the factor and E are of opposite extreme size.
    """
    if alpha <= 0 or beta <= 0 or delta <= 0:
        raise ValueError("mittag_leffler3 needs alpha, beta, delta > 0")
    if z == 0:
        return math.exp(log_prefactor - math.lgamma(beta))
    lz = math.log(abs(z))
    neg = z < 0
    lgd = math.lgamma(delta)

    def la(k):
        return (math.lgamma(delta + k) - lgd - math.lgamma(k + 1)
                + k * lz - math.lgamma(alpha * k + beta) + log_prefactor)

    def sg(k):
        return -1.0 if (neg and k % 2) else 1.0

    series_ok = True
    if neg and (-z) ** (1.0 / alpha) > 60.0:
        # peak term ~ exp(x^(1/alpha)): the double series is useless here
        val, big, series_ok = math.nan, math.inf, False
    else:
        try:
            val, big, _ = _series(la, sg, ctl)
        except SeriesConvergenceError as exc:
            val, big, series_ok = exc.partial, math.inf, False
    if not neg:
        if not series_ok:
            raise SeriesConvergenceError("Mittag-Leffler series did not converge", val, ctl.max_terms)
        return val
    target = max(ctl.rel_tol, 1e-13)
    if series_ok and 4 * _EPS * big <= target * abs(val):
        return val
    aval, err_asym = _ml3_asymptotic(alpha, beta, delta, -z, ctl)
    if err_asym <= target * abs(aval) and aval != 0.0:
        return math.copysign(math.exp(math.log(abs(aval)) + log_prefactor), aval)
    return _series_mp(alpha, beta, delta, z, la, ctl, log_prefactor)


def _series_mp(alpha, beta, delta, z, la, ctl, log_prefactor=0.0):
    """Same power series summed with mpmath at a precision set by the peak term."""
    # locate the peak term (in logs, so no overflow)
    k, peak, prev = 0, -math.inf, -math.inf
    while True:
        v = la(k)
        peak = max(peak, v)
        if v < prev and v < peak - 50.0:
            break
        prev = v
        k += 1
        if k > 10 * ctl.max_terms:
            raise SeriesConvergenceError("Mittag-Leffler series did not converge", math.nan, k)
    digits = int(peak / math.log(10.0)) + 30
    while True:
        if digits > MAX_DIGITS:
            raise SeriesConvergenceError(
                "Mittag-Leffler series needs more than the allowed working precision", math.nan, k)
        with mpmath.workdps(digits):
            zz = mpmath.mpf(z)
            d = mpmath.mpf(delta)
            a_ = mpmath.mpf(alpha)
            b_ = mpmath.mpf(beta)
            poch = mpmath.mpf(1)  # (delta)_k / k!
            zk = mpmath.mpf(1)
            total = mpmath.mpf(0)
            n = 0
            floor_log = peak - digits * math.log(10.0)
            while True:
                total += poch * zk * mpmath.rgamma(a_ * n + b_)
                n += 1
                if n > 10 * ctl.max_terms:
                    raise SeriesConvergenceError("Mittag-Leffler series did not converge",
                                                 float(total), n)
                poch *= (d + n - 1) / n
                zk *= zz
                if n > k and la(n) < floor_log:
                    break
            val = float(total * mpmath.exp(log_prefactor))
        # digits lost to cancellation: log10(peak / |val|); keep >= 17 good ones
        if val != 0.0 and peak / math.log(10.0) - math.log10(abs(val)) + 20 <= digits:
            return val
        lost = peak / math.log(10.0) - (math.log10(abs(val)) if val != 0.0 else -digits)
        digits = max(digits + 40, int(lost) + 30)


def prabhakar_count_table(alpha: float, x: float, n_max: int) -> list:
    """v_n = x^n E^{n+1}_{alpha, n alpha + 1}(-x) for n = 0..n_max, x >= 0.

    Expanding the series gives v_n = sum_{m >= n} (-1)^(m-n) C(m, n) c_m
    with c_m = x^m / Gamma(alpha m + 1), so one multiprecision pass over c_m
    serves every n.  Working precision covers the largest term, giving
    absolute accuracy far below double rounding.
    """
    if x < 0:
        raise ValueError("prabhakar_count_table needs x >= 0")
    if x == 0:
        return [1.0] + [0.0] * n_max
    lx = math.log(x)

    def lc(m):  # log of 2^m c_m, which bounds every C(m, n) c_m
        return m * (lx + math.log(2.0)) - math.lgamma(alpha * m + 1.0)

    m, peak, prev = 0, -math.inf, -math.inf
    while True:
        v = lc(m)
        peak = max(peak, v)
        if m > n_max and v < prev and v < min(peak, 0.0) - 100.0:
            break
        prev = v
        m += 1
    m_max = m
    digits = int(max(peak, 0.0) / math.log(10.0)) + 40
    if digits > MAX_DIGITS:
        raise SeriesConvergenceError("count table needs more than the allowed precision", math.nan, m_max)
    with mpmath.workdps(digits):
        a_ = mpmath.mpf(alpha)
        xx = mpmath.mpf(x)
        c = []
        xm = mpmath.mpf(1)
        for i in range(m_max + 1):
            c.append(xm * mpmath.rgamma(a_ * i + 1))
            xm *= xx
        out = []
        for n in range(n_max + 1):
            acc = mpmath.mpf(0)
            binom = mpmath.mpf(1)
            for i in range(n, m_max + 1):
                if i > n:
                    binom = binom * i / (i - n)
                term = binom * c[i]
                acc += -term if (i - n) % 2 else term
            out.append(float(acc))
    return out


def mittag_leffler(alpha: float, beta: float, z: float,
                   ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z) = sum z^k / Gamma(alpha k + beta)."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("mittag_leffler needs alpha, beta > 0")
    return mittag_leffler3(alpha, beta, 1.0, z, ctl)

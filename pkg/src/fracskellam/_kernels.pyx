# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: pmf recurrence, subordinator grid, path samplers.

Every routine consumes uniforms from the numpy bit generator in the same
order as its twin in ``_pykernels`` so both back ends give identical output.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport sin, pow, log, exp, expm1, floor, ceil, fabs, INFINITY, M_PI
from numpy.random cimport bitgen_t

cnp.import_array()

ctypedef struct Rates:
    int m
    const int *kind
    const double *par
    const long long *off
    const double *kt
    const double *kl


cdef bitgen_t *_bitgen(object bg) except NULL:
    capsule = bg.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _u(bitgen_t *g) nogil:
    return g.next_double(g.state)


cdef inline double _exp1(bitgen_t *g) nogil:
    return -log(1.0 - g.next_double(g.state))


cdef inline double _cms(double alpha, bitgen_t *g) nogil:
    # standard positive alpha-stable draw, Laplace transform exp(-s^alpha)
    cdef double U = M_PI * (1.0 - g.next_double(g.state))
    cdef double V = -log(1.0 - g.next_double(g.state))
    return (sin(alpha * U) * pow(sin((1.0 - alpha) * U), (1.0 - alpha) / alpha)
            / (pow(sin(U), 1.0 / alpha) * pow(V, (1.0 - alpha) / alpha)))


cdef inline double _wait(double alpha, double rate, bitgen_t *g) nogil:
    # Mittag-Leffler waiting time with rate `rate` (exponential when alpha == 1)
    cdef double e = _exp1(g)
    if rate <= 0.0:
        if alpha < 1.0:
            _cms(alpha, g)
        return INFINITY
    if alpha == 1.0:
        return e / rate
    return pow(e / rate, 1.0 / alpha) * _cms(alpha, g)


# ------------------------------------------------------------------ rates

cdef double _tab_eval(Rates *r, int j, double t, bint slope):
    cdef long long lo = r.off[j], hi = r.off[j + 1] - 1, mid
    if t > r.kt[hi] * (1.0 + 1e-12):
        raise ValueError("tabulated rate queried past its last knot")
    if t >= r.kt[hi]:
        t = r.kt[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if r.kt[mid] <= t:
            lo = mid
        else:
            hi = mid
    cdef double s = (r.kl[hi] - r.kl[lo]) / (r.kt[hi] - r.kt[lo])
    if slope:
        return s
    return r.kl[lo] + s * (t - r.kt[lo])


cdef double _cum(Rates *r, int j, double t) except? -1.0:
    cdef int kd = r.kind[j]
    cdef const double *p = r.par + 3 * j
    if kd == 0:
        return p[0] * t
    if kd == 1:
        return pow(t / p[0], p[1])
    if kd == 2:
        return p[0] / p[1] * expm1(p[1] * t) + p[2] * t
    return _tab_eval(r, j, t, False)


cdef double _int(Rates *r, int j, double t) except? -1.0:
    cdef int kd = r.kind[j]
    cdef const double *p = r.par + 3 * j
    if kd == 0:
        return p[0]
    if kd == 1:
        if t == 0.0:
            if p[1] < 1.0:
                return INFINITY
            if p[1] > 1.0:
                return 0.0
        return p[1] / p[0] * pow(t / p[0], p[1] - 1.0)
    if kd == 2:
        return p[0] * exp(p[1] * t) + p[2]
    return _tab_eval(r, j, t, True)


cdef double _bound(Rates *r, int j, double a, double b) except? -1.0:
    # sup of the intensity over [a, b]; every parametric family is monotone
    cdef long long i
    cdef double s, best
    if r.kind[j] != 3:
        return max(_int(r, j, a), _int(r, j, b))
    best = 0.0
    for i in range(r.off[j], r.off[j + 1] - 1):
        if r.kt[i + 1] > a and r.kt[i] <= b:
            s = (r.kl[i + 1] - r.kl[i]) / (r.kt[i + 1] - r.kt[i])
            if s > best:
                best = s
    return best


cdef double _cum_total(Rates *r, double t) except? -1.0:
    cdef double s = 0.0
    cdef int j
    for j in range(r.m):
        s += _cum(r, j, t)
    return s


cdef double _int_total(Rates *r, double t) except? -1.0:
    cdef double s = 0.0
    cdef int j
    for j in range(r.m):
        s += _int(r, j, t)
    return s


cdef double _invert(Rates *r, double target, double lo, double hi) except? -1.0:
    # solve Lambda(t) = target on [lo, hi] by safeguarded Newton
    cdef double t = 0.5 * (lo + hi), f, d, nt
    cdef int it
    for it in range(200):
        f = _cum_total(r, t) - target
        if f > 0.0:
            hi = t
        else:
            lo = t
        if hi - lo <= 1e-15 * (1.0 + hi) or fabs(f) <= 1e-15 * (1.0 + target):
            return t
        d = _int_total(r, t)
        nt = t - f / d if d > 0.0 and d < INFINITY else lo - 1.0
        if not (lo < nt < hi):
            nt = 0.5 * (lo + hi)
        t = nt
    return t


cdef int _mark(Rates *r, double t, bint cumulative, double u) except -1:
    # jump size index drawn with weights lambda_j(t) (or Lambda_j(t))
    cdef double tot = 0.0, acc = 0.0, w
    cdef int j
    for j in range(r.m):
        tot += _cum(r, j, t) if cumulative else _int(r, j, t)
    if not tot > 0.0:
        return 0
    u *= tot
    for j in range(r.m):
        w = _cum(r, j, t) if cumulative else _int(r, j, t)
        acc += w
        if u < acc:
            return j
    return r.m - 1


cdef class _RateView:
    cdef Rates r
    cdef object keep

    def __init__(self, enc):
        kind, par, off, kt, kl = enc
        kind = np.ascontiguousarray(kind, dtype=np.int32)
        par = np.ascontiguousarray(par, dtype=np.float64).reshape(-1)
        off = np.ascontiguousarray(off, dtype=np.int64)
        kt = np.ascontiguousarray(kt, dtype=np.float64)
        kl = np.ascontiguousarray(kl, dtype=np.float64)
        if kt.size == 0:
            kt = np.zeros(1)
            kl = np.zeros(1)
        self.keep = (kind, par, off, kt, kl)
        cdef int[::1] kv = kind
        cdef double[::1] pv = par
        cdef long long[::1] ov = off
        cdef double[::1] tv = kt
        cdef double[::1] lv = kl
        self.r.m = kind.shape[0]
        self.r.kind = &kv[0]
        self.r.par = &pv[0]
        self.r.off = &ov[0]
        self.r.kt = &tv[0]
        self.r.kl = &lv[0]


# ----------------------------------------------------------- pmf recurrence

def ngcp_recurrence(double[::1] lam, Py_ssize_t n_max):
    """q(n) for n = 0..n_max of sum_j j * Poisson(lam_j)."""
    cdef Py_ssize_t k = lam.shape[0], n, j, i
    cdef double total = 0.0, acc, logscale = 0.0
    out = np.zeros(n_max + 1)
    cdef double[::1] q = out
    for j in range(k):
        total += lam[j]
    q[0] = 1.0
    for n in range(1, n_max + 1):
        acc = 0.0
        for j in range(1, min(n, k) + 1):
            acc += j * lam[j - 1] * q[n - j]
        q[n] = acc / n
        if q[n] > 1e280:
            for i in range(n + 1):
                q[i] *= 1e-280
            logscale += 280.0 * log(10.0)
    cdef double f = exp(logscale - total)
    for n in range(n_max + 1):
        q[n] *= f
    return out


# ------------------------------------------------------ inverse subordinator

def subordinator_grid(double alpha, Py_ssize_t n_grid, double h, bg):
    """Y_alpha at tau_m = m*h, m < n_grid, by cumulating stable increments."""
    cdef bitgen_t *g = _bitgen(bg)
    out = np.zeros(n_grid)
    cdef double[::1] y = out
    cdef double ti = 0.0, tn, fh, hs = pow(h, 1.0 / alpha)
    cdef Py_ssize_t i = 0, m, lo, hi
    with bg.lock:
        while True:
            tn = ti + hs * _cms(alpha, g)
            lo = <Py_ssize_t> ceil(ti / h)
            fh = floor(tn / h)
            if fh > n_grid - 1:
                hi = n_grid - 1
            else:
                hi = <Py_ssize_t> fh
            for m in range(lo, hi + 1):
                y[m] = h * i
            if hi >= n_grid - 1:
                break
            ti = tn
            i += 1
    return out


def subordinator_at(double alpha, double[::1] checkpoints, double h,
                    Py_ssize_t n_paths, bg):
    """Y_alpha at sorted checkpoints (multiples of h) for n_paths paths."""
    cdef bitgen_t *g = _bitgen(bg)
    cdef Py_ssize_t nc = checkpoints.shape[0], p, c, i
    out = np.zeros((n_paths, nc))
    cdef double[:, ::1] y = out
    cdef double ti, tn, target, hs = pow(h, 1.0 / alpha)
    with bg.lock:
        for p in range(n_paths):
            ti = 0.0
            i = 0
            tn = hs * _cms(alpha, g)
            for c in range(nc):
                target = floor(checkpoints[c] / h + 0.5)
                while floor(tn / h) < target:
                    ti = tn
                    i += 1
                    tn = ti + hs * _cms(alpha, g)
                y[p, c] = h * i
    return out


# ----------------------------------------------------------------- thinning

cdef list _thin_path(Rates *r, double t_end, Py_ssize_t n_windows, bitgen_t *g,
                     list times, list marks):
    cdef double w = t_end / n_windows, a, b, L, t, lam, u
    cdef Py_ssize_t win
    cdef int j
    t = 0.0
    for win in range(n_windows):
        a = win * w
        b = t_end if win == n_windows - 1 else (win + 1) * w
        L = 0.0
        for j in range(r.m):
            L += _bound(r, j, a, b)
        if L == INFINITY:
            raise ValueError("intensity is unbounded on a thinning window")
        t = a
        if L <= 0.0:
            continue
        while True:
            t += _exp1(g) / L
            if t > b:
                break
            u = _u(g)
            lam = _int_total(r, t)
            if u * L < lam:
                times.append(t)
                marks.append(_mark(r, t, False, _u(g)) + 1)
    return times


def thinning_events(enc, double t_end, Py_ssize_t n_windows, bg):
    cdef _RateView rv = _RateView(enc)
    cdef bitgen_t *g = _bitgen(bg)
    times = []
    marks = []
    with bg.lock:
        _thin_path(&rv.r, t_end, n_windows, g, times, marks)
    return np.array(times, dtype=np.float64), np.array(marks, dtype=np.int64)


def thinning_counts(enc, double[::1] checkpoints, Py_ssize_t n_windows,
                    Py_ssize_t n_paths, bg):
    """Counting-process value at each checkpoint, one row per path."""
    cdef _RateView rv = _RateView(enc)
    cdef Rates *r = &rv.r
    cdef bitgen_t *g = _bitgen(bg)
    cdef Py_ssize_t nc = checkpoints.shape[0], p, win, c
    cdef double t_end = checkpoints[nc - 1]
    cdef double w = t_end / n_windows, a, b, L, t, lam, u
    cdef long long state
    cdef int j
    out = np.zeros((n_paths, nc), dtype=np.int64)
    cdef long long[:, ::1] o = out
    # window bounds do not depend on the path
    bounds = np.zeros(n_windows)
    cdef double[::1] bd = bounds
    for win in range(n_windows):
        a = win * w
        b = t_end if win == n_windows - 1 else (win + 1) * w
        L = 0.0
        for j in range(r.m):
            L += _bound(r, j, a, b)
        if L == INFINITY:
            raise ValueError("intensity is unbounded on a thinning window")
        bd[win] = L
    with bg.lock:
        for p in range(n_paths):
            state = 0
            c = 0
            for win in range(n_windows):
                a = win * w
                b = t_end if win == n_windows - 1 else (win + 1) * w
                L = bd[win]
                t = a
                if L <= 0.0:
                    continue
                while True:
                    t += _exp1(g) / L
                    if t > b:
                        break
                    u = _u(g)
                    lam = _int_total(r, t)
                    if u * L < lam:
                        while c < nc and checkpoints[c] < t:
                            o[p, c] = state
                            c += 1
                        state += _mark(r, t, False, _u(g)) + 1
            while c < nc:
                o[p, c] = state
                c += 1
    return out


# --------------------------------------- renewal clock in operational time

def renewal_events(enc, double alpha, double t_end, bg):
    """Events of N_1(Y_alpha(Lambda(t))) on [0, t_end] with jump-size marks."""
    cdef _RateView rv = _RateView(enc)
    cdef Rates *r = &rv.r
    cdef bitgen_t *g = _bitgen(bg)
    cdef double horizon = _cum_total(r, t_end), sigma = 0.0, t = 0.0
    times = []
    marks = []
    with bg.lock:
        while True:
            sigma += _wait(alpha, 1.0, g)
            if sigma > horizon:
                break
            t = _invert(r, sigma, t, t_end)
            times.append(t)
            marks.append(_mark(r, t, False, _u(g)) + 1)
    return np.array(times, dtype=np.float64), np.array(marks, dtype=np.int64)


def renewal_counts(enc, double alpha, double[::1] checkpoints, Py_ssize_t n_paths, bg):
    cdef _RateView rv = _RateView(enc)
    cdef Rates *r = &rv.r
    cdef bitgen_t *g = _bitgen(bg)
    cdef Py_ssize_t nc = checkpoints.shape[0], p, c
    cdef double t_end = checkpoints[nc - 1]
    cdef double horizon = _cum_total(r, t_end), sigma, t
    cdef long long state
    out = np.zeros((n_paths, nc), dtype=np.int64)
    cdef long long[:, ::1] o = out
    with bg.lock:
        for p in range(n_paths):
            sigma = 0.0
            t = 0.0
            state = 0
            c = 0
            while True:
                sigma += _wait(alpha, 1.0, g)
                if sigma > horizon:
                    break
                t = _invert(r, sigma, t, t_end)
                while c < nc and checkpoints[c] < t:
                    o[p, c] = state
                    c += 1
                state += _mark(r, t, False, _u(g)) + 1
            while c < nc:
                o[p, c] = state
                c += 1
    return out


def renewal_first_times(enc, double alpha, double t_end, Py_ssize_t n_paths, bg):
    """First time each jump size occurs (inf if it does not occur by t_end)."""
    cdef _RateView rv = _RateView(enc)
    cdef Rates *r = &rv.r
    cdef bitgen_t *g = _bitgen(bg)
    cdef double horizon = _cum_total(r, t_end), sigma, t
    cdef Py_ssize_t p
    cdef int j, seen
    out = np.full((n_paths, r.m), np.inf)
    cdef double[:, ::1] o = out
    with bg.lock:
        for p in range(n_paths):
            sigma = 0.0
            t = 0.0
            seen = 0
            while seen < r.m:
                sigma += _wait(alpha, 1.0, g)
                if sigma > horizon:
                    break
                t = _invert(r, sigma, t, t_end)
                j = _mark(r, t, False, _u(g))
                if o[p, j] == INFINITY:
                    o[p, j] = t
                    seen += 1
    return out


# ------------------------------------------------ frozen-rate stepping rule

def frozen_events(enc_up, enc_down, double alpha, double t_start, double t_end,
                  bint cumulative, bg):
    """Step t += wait(rate frozen at t); marks drawn before each step.

    With ``enc_down`` given, one clock (driven by the up side) moves both
    sides.  ``cumulative`` selects Lambda(t) rather than lambda(t) as the
    frozen rate.
    """
    cdef _RateView ru = _RateView(enc_up)
    cdef _RateView rd
    cdef bint two = enc_down is not None
    if two:
        rd = _RateView(enc_down)
    cdef bitgen_t *g = _bitgen(bg)
    cdef double t = t_start, rate
    cdef int x1, x2 = 0
    times = []
    m1 = []
    m2 = []
    with bg.lock:
        while t < t_end:
            x1 = _mark(&ru.r, t, cumulative, _u(g)) + 1
            if two:
                x2 = _mark(&rd.r, t, cumulative, _u(g)) + 1
            rate = _cum_total(&ru.r, t) if cumulative else _int_total(&ru.r, t)
            t += _wait(alpha, rate, g)
            if t > t_end:
                break
            times.append(t)
            m1.append(x1)
            m2.append(x2)
    return (np.array(times, dtype=np.float64), np.array(m1, dtype=np.int64),
            np.array(m2, dtype=np.int64))

"""Pure-Python versions of the compiled kernels.

Same algorithms, same order of uniform draws; used when the extension is
not built (or when FRACSKELLAM_PURE=1).
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf


class _Draws:
    def __init__(self, bg):
        self.gen = np.random.Generator(bg)

    def u(self):
        return self.gen.random()

    def exp1(self):
        return -math.log(1.0 - self.gen.random())

    def cms(self, alpha):
        U = math.pi * (1.0 - self.gen.random())
        V = -math.log(1.0 - self.gen.random())
        return (math.sin(alpha * U) * math.sin((1.0 - alpha) * U) ** ((1.0 - alpha) / alpha)
                / (math.sin(U) ** (1.0 / alpha) * V ** ((1.0 - alpha) / alpha)))

    def wait(self, alpha, rate):
        e = self.exp1()
        if rate <= 0.0:
            if alpha < 1.0:
                self.cms(alpha)
            return INF
        if alpha == 1.0:
            return e / rate
        return (e / rate) ** (1.0 / alpha) * self.cms(alpha)


class _Rates:
    def __init__(self, enc):
        kind, par, off, kt, kl = enc
        self.kind = [int(x) for x in np.asarray(kind)]
        self.par = np.asarray(par, dtype=float).reshape(-1, 3).tolist()
        self.off = [int(x) for x in np.asarray(off)]
        self.kt = np.asarray(kt, dtype=float).tolist()
        self.kl = np.asarray(kl, dtype=float).tolist()
        self.m = len(self.kind)

    def _tab(self, j, t, slope):
        lo, hi = self.off[j], self.off[j + 1] - 1
        kt, kl = self.kt, self.kl
        if t > kt[hi] * (1.0 + 1e-12):
            raise ValueError("tabulated rate queried past its last knot")
        if t >= kt[hi]:
            t = kt[hi]
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if kt[mid] <= t:
                lo = mid
            else:
                hi = mid
        s = (kl[hi] - kl[lo]) / (kt[hi] - kt[lo])
        return s if slope else kl[lo] + s * (t - kt[lo])

    def cum(self, j, t):
        kd = self.kind[j]
        p = self.par[j]
        if kd == 0:
            return p[0] * t
        if kd == 1:
            return (t / p[0]) ** p[1]
        if kd == 2:
            return p[0] / p[1] * math.expm1(p[1] * t) + p[2] * t
        return self._tab(j, t, False)

    def intensity(self, j, t):
        kd = self.kind[j]
        p = self.par[j]
        if kd == 0:
            return p[0]
        if kd == 1:
            if t == 0.0:
                if p[1] < 1.0:
                    return INF
                if p[1] > 1.0:
                    return 0.0
            return p[1] / p[0] * (t / p[0]) ** (p[1] - 1.0)
        if kd == 2:
            return p[0] * math.exp(p[1] * t) + p[2]
        return self._tab(j, t, True)

    def bound(self, j, a, b):
        if self.kind[j] != 3:
            return max(self.intensity(j, a), self.intensity(j, b))
        best = 0.0
        kt, kl = self.kt, self.kl
        for i in range(self.off[j], self.off[j + 1] - 1):
            if kt[i + 1] > a and kt[i] <= b:
                s = (kl[i + 1] - kl[i]) / (kt[i + 1] - kt[i])
                if s > best:
                    best = s
        return best

    def cum_total(self, t):
        s = 0.0
        for j in range(self.m):
            s += self.cum(j, t)
        return s

    def int_total(self, t):
        s = 0.0
        for j in range(self.m):
            s += self.intensity(j, t)
        return s

    def invert(self, target, lo, hi):
        t = 0.5 * (lo + hi)
        for _ in range(200):
            f = self.cum_total(t) - target
            if f > 0.0:
                hi = t
            else:
                lo = t
            if hi - lo <= 1e-15 * (1.0 + hi) or abs(f) <= 1e-15 * (1.0 + target):
                return t
            d = self.int_total(t)
            nt = t - f / d if 0.0 < d < INF else lo - 1.0
            if not (lo < nt < hi):
                nt = 0.5 * (lo + hi)
            t = nt
        return t

    def mark(self, t, cumulative, u):
        w = [self.cum(j, t) if cumulative else self.intensity(j, t) for j in range(self.m)]
        tot = 0.0
        for x in w:
            tot += x
        if not tot > 0.0:
            return 0
        u *= tot
        acc = 0.0
        for j in range(self.m):
            acc += w[j]
            if u < acc:
                return j
        return self.m - 1


def ngcp_recurrence(lam, n_max):
    lam = [float(x) for x in lam]
    k = len(lam)
    total = 0.0
    for x in lam:
        total += x
    q = [0.0] * (n_max + 1)
    q[0] = 1.0
    logscale = 0.0
    for n in range(1, n_max + 1):
        acc = 0.0
        for j in range(1, min(n, k) + 1):
            acc += j * lam[j - 1] * q[n - j]
        q[n] = acc / n
        if q[n] > 1e280:
            for i in range(n + 1):
                q[i] *= 1e-280
            logscale += 280.0 * math.log(10.0)
    f = math.exp(logscale - total)
    return np.array(q) * f


def subordinator_grid(alpha, n_grid, h, bg):
    d = _Draws(bg)
    y = np.zeros(n_grid)
    ti = 0.0
    hs = h ** (1.0 / alpha)
    i = 0
    while True:
        tn = ti + hs * d.cms(alpha)
        lo = int(math.ceil(ti / h))
        fh = math.floor(tn / h)
        hi = n_grid - 1 if fh > n_grid - 1 else int(fh)
        if hi >= lo:
            y[lo:hi + 1] = h * i
        if hi >= n_grid - 1:
            break
        ti = tn
        i += 1
    return y


def subordinator_at(alpha, checkpoints, h, n_paths, bg):
    d = _Draws(bg)
    checkpoints = np.asarray(checkpoints, dtype=float)
    out = np.zeros((n_paths, checkpoints.size))
    hs = h ** (1.0 / alpha)
    targets = [math.floor(c / h + 0.5) for c in checkpoints]
    for p in range(n_paths):
        ti = 0.0
        i = 0
        tn = hs * d.cms(alpha)
        for c, target in enumerate(targets):
            while math.floor(tn / h) < target:
                ti = tn
                i += 1
                tn = ti + hs * d.cms(alpha)
            out[p, c] = h * i
    return out


def _bounds(r, t_end, n_windows):
    w = t_end / n_windows
    out = []
    for win in range(n_windows):
        a = win * w
        b = t_end if win == n_windows - 1 else (win + 1) * w
        L = 0.0
        for j in range(r.m):
            L += r.bound(j, a, b)
        if L == INF:
            raise ValueError("intensity is unbounded on a thinning window")
        out.append((a, b, L))
    return out


def thinning_events(enc, t_end, n_windows, bg):
    r = _Rates(enc)
    d = _Draws(bg)
    times, marks = [], []
    for a, b, L in _bounds(r, t_end, n_windows):
        t = a
        if L <= 0.0:
            continue
        while True:
            t += d.exp1() / L
            if t > b:
                break
            u = d.u()
            if u * L < r.int_total(t):
                times.append(t)
                marks.append(r.mark(t, False, d.u()) + 1)
    return np.array(times, dtype=np.float64), np.array(marks, dtype=np.int64)


def thinning_counts(enc, checkpoints, n_windows, n_paths, bg):
    r = _Rates(enc)
    d = _Draws(bg)
    checkpoints = [float(c) for c in checkpoints]
    nc = len(checkpoints)
    bounds = _bounds(r, checkpoints[-1], n_windows)
    out = np.zeros((n_paths, nc), dtype=np.int64)
    for p in range(n_paths):
        state = 0
        c = 0
        for a, b, L in bounds:
            t = a
            if L <= 0.0:
                continue
            while True:
                t += d.exp1() / L
                if t > b:
                    break
                u = d.u()
                if u * L < r.int_total(t):
                    while c < nc and checkpoints[c] < t:
                        out[p, c] = state
                        c += 1
                    state += r.mark(t, False, d.u()) + 1
        while c < nc:
            out[p, c] = state
            c += 1
    return out


def renewal_events(enc, alpha, t_end, bg):
    r = _Rates(enc)
    d = _Draws(bg)
    horizon = r.cum_total(t_end)
    sigma = 0.0
    t = 0.0
    times, marks = [], []
    while True:
        sigma += d.wait(alpha, 1.0)
        if sigma > horizon:
            break
        t = r.invert(sigma, t, t_end)
        times.append(t)
        marks.append(r.mark(t, False, d.u()) + 1)
    return np.array(times, dtype=np.float64), np.array(marks, dtype=np.int64)


def renewal_counts(enc, alpha, checkpoints, n_paths, bg):
    r = _Rates(enc)
    d = _Draws(bg)
    checkpoints = [float(c) for c in checkpoints]
    nc = len(checkpoints)
    t_end = checkpoints[-1]
    horizon = r.cum_total(t_end)
    out = np.zeros((n_paths, nc), dtype=np.int64)
    for p in range(n_paths):
        sigma = 0.0
        t = 0.0
        state = 0
        c = 0
        while True:
            sigma += d.wait(alpha, 1.0)
            if sigma > horizon:
                break
            t = r.invert(sigma, t, t_end)
            while c < nc and checkpoints[c] < t:
                out[p, c] = state
                c += 1
            state += r.mark(t, False, d.u()) + 1
        while c < nc:
            out[p, c] = state
            c += 1
    return out


def renewal_first_times(enc, alpha, t_end, n_paths, bg):
    r = _Rates(enc)
    d = _Draws(bg)
    horizon = r.cum_total(t_end)
    out = np.full((n_paths, r.m), np.inf)
    for p in range(n_paths):
        sigma = 0.0
        t = 0.0
        seen = 0
        while seen < r.m:
            sigma += d.wait(alpha, 1.0)
            if sigma > horizon:
                break
            t = r.invert(sigma, t, t_end)
            j = r.mark(t, False, d.u())
            if out[p, j] == INF:
                out[p, j] = t
                seen += 1
    return out


def frozen_events(enc_up, enc_down, alpha, t_start, t_end, cumulative, bg):
    ru = _Rates(enc_up)
    rd = _Rates(enc_down) if enc_down is not None else None
    d = _Draws(bg)
    t = t_start
    times, m1, m2 = [], [], []
    x2 = 0
    while t < t_end:
        x1 = ru.mark(t, cumulative, d.u()) + 1
        if rd is not None:
            x2 = rd.mark(t, cumulative, d.u()) + 1
        rate = ru.cum_total(t) if cumulative else ru.int_total(t)
        t += d.wait(alpha, rate)
        if t > t_end:
            break
        times.append(t)
        m1.append(x1)
        m2.append(x2)
    return (np.array(times, dtype=np.float64), np.array(m1, dtype=np.int64),
            np.array(m2, dtype=np.int64))

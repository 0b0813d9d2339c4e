"""Path samplers and Monte Carlo farms.

Randomness comes from counter-based Philox streams keyed by
``(seed, stream)``; one stream per path, or per chunk of paths in the
vectorised farms, so results do not depend on how work is split.

Event-driven samplers:

* ``thinning`` -- exact thinning of the non-homogeneous intensities with
  a window-wise intensity bound (default for alpha = 1);
* ``exact`` -- renewal clock in operational time Lambda(t) with
  Mittag-Leffler (or exponential) waiting times, mapped back through
  Lambda^{-1} (tempered fractional variants, and GFSP);
* ``paper`` -- frozen-rate stepping starting at t = 1e-4 with the
  rate held at its value at the start of each step.  Kept for
  reproduction; it is an approximation.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rates import COUNTING, ProcessSpec, RateError, RateFunction

PAPER_START = 1e-4
DEFAULT_WINDOWS = 32
PATH_GRID = 2 ** 14
FARM_GRID = 2 ** 10
CHUNK = 8192


class RngStream:
    """Philox stream identified by ``(seed, stream)``."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.bg = np.random.Philox(ss)

    @property
    def generator(self) -> np.random.Generator:
        return np.random.Generator(self.bg)

    def spawn(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream * 1_000_003 + i + 1)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def _bg(rng):
    if isinstance(rng, RngStream):
        return rng.bg
    if isinstance(rng, np.random.Generator):
        return rng.bit_generator
    if isinstance(rng, np.random.BitGenerator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).bg
    raise TypeError("rng must be an RngStream, numpy Generator/BitGenerator or int seed")


@dataclass
class SamplePath:
    """Piecewise-constant path: ``states[i]`` holds on [times[i], times[i+1])."""

    times: np.ndarray
    states: np.ndarray
    variant: str
    t_end: float
    method: str
    seed: int | None = None
    stream: int | None = None
    flags: tuple = ()
    meta: dict = field(default_factory=dict)

    def value_at(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.states[idx]

    def jumps(self) -> np.ndarray:
        return np.diff(self.states)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,state\n")
        for t, s in zip(self.times, self.states):
            buf.write(f"{float(t)!r},{int(s)}\n")
        return buf.getvalue()

    def sidecar(self) -> str:
        return json.dumps({"variant": self.variant, "t_end": self.t_end, "method": self.method,
                           "seed": self.seed, "stream": self.stream, "flags": list(self.flags),
                           **self.meta}, sort_keys=True)


@dataclass
class SubordinatorPath:
    h: float
    times: np.ndarray
    values: np.ndarray
    alpha: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,Y\n")
        for t, y in zip(self.times, self.values):
            buf.write(f"{float(t)!r},{float(y)!r}\n")
        return buf.getvalue()


def _merge(up_t, up_m, dn_t, dn_m):
    t = np.concatenate([up_t, dn_t])
    jump = np.concatenate([up_m, -dn_m])
    order = np.argsort(t, kind="stable")
    t, jump = t[order], jump[order]
    return t, jump


def _path(times, jumps, variant, t_end, method, rng, flags=()):
    states = np.concatenate([[0], np.cumsum(jumps)]).astype(np.int64)
    times = np.concatenate([[0.0], times])
    # simultaneous events collapse to the last state; zero net moves are dropped
    last = np.concatenate([times[1:] != times[:-1], [True]])
    last[0] = True
    times, states = times[last], states[last]
    keep = np.concatenate([[True], np.diff(states) != 0])
    times, states = times[keep], states[keep]
    seed = rng.seed if isinstance(rng, RngStream) else None
    stream = rng.stream if isinstance(rng, RngStream) else None
    return SamplePath(times, states, variant, float(t_end), method, seed, stream, tuple(flags))


# ------------------------------------------------------- inverse subordinator

def sample_stable_increment(alpha: float, h: float, rng) -> float:
    """One draw of D_alpha(h) by the Chambers-Mallows-Stuck formula."""
    if not 0 < alpha < 1 or not h > 0:
        raise RateError("need alpha in (0, 1) and h > 0")
    gen = np.random.Generator(_bg(rng))
    U = np.pi * (1.0 - gen.random())
    V = -np.log(1.0 - gen.random())
    return float(h ** (1 / alpha) * np.sin(alpha * U) * np.sin((1 - alpha) * U) ** ((1 - alpha) / alpha)
                 / (np.sin(U) ** (1 / alpha) * V ** ((1 - alpha) / alpha)))


def sample_inverse_subordinator(alpha: float, t_end: float, h: float | None, rng) -> SubordinatorPath:
    """Y_alpha on the grid 0, h, ..., t_end from cumulated stable increments.

    Y(t_i) = h * (number of increments whose running sum is <= t_i).
    """
    if not 0 < alpha <= 1:
        raise RateError("alpha must lie in (0, 1]")
    if h is None:
        h = t_end / PATH_GRID
    n = int(round(t_end / h)) + 1
    if abs((n - 1) * h - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be a multiple of h")
    grid = np.arange(n) * h
    if alpha == 1.0:
        return SubordinatorPath(h, grid, grid.copy(), alpha)
    y = kernels.backend().subordinator_grid(float(alpha), n, float(h), _bg(rng))
    return SubordinatorPath(h, grid, y, alpha)


def subordinator_values(alpha: float, checkpoints, n_paths: int, seed: int,
                        h: float | None = None) -> np.ndarray:
    """Y_alpha at the checkpoints for many paths (grid algorithm, step h)."""
    ck = np.ascontiguousarray(sorted(checkpoints), dtype=float)
    if h is None:
        h = ck[-1] / FARM_GRID
    out = []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        m = min(CHUNK, n_paths - lo)
        out.append(kernels.backend().subordinator_at(float(alpha), ck, float(h), m,
                                                     RngStream(seed, c).bg))
    return np.vstack(out)


# ------------------------------------------------------------------ NGSP

def _side_events(rates, t_end, bg, n_windows):
    if not rates:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    return kernels.backend().thinning_events(kernels.encode_rates(rates), float(t_end),
                                             int(n_windows), bg)


def sample_ngsp(spec: ProcessSpec, t_end: float, rng, method: str = "thinning",
                paper_exact: bool = False, n_windows: int = DEFAULT_WINDOWS) -> SamplePath:
    """Path of the non-homogeneous generalized Skellam (or counting) process."""
    if spec.alpha != 1.0:
        raise RateError("sample_ngsp is for alpha = 1; use sample_ngfsp")
    bg = _bg(rng)
    K = kernels.backend()
    if method == "thinning":
        ut, um = _side_events(spec.up, t_end, bg, n_windows)
        dt, dm = _side_events(spec.down, t_end, bg, n_windows)
        t, j = _merge(ut, um, dt, dm)
        return _path(t, j, spec.variant, t_end, "thinning", rng)
    if method != "paper":
        raise ValueError("method is 'thinning' or 'paper'")
    return _frozen_path(spec, t_end, rng, 1.0, True, PAPER_START, paper_exact, K, bg)


def _frozen_path(spec, t_end, rng, alpha, cumulative, t_start, single_clock, K, bg):
    flags = ["frozen_rate"]
    probe = [r.cumulative(t_start) if cumulative else r.intensity(t_start) for r in spec.up]
    if not sum(probe) > 0:
        raise RateError(f"frozen-rate stepping needs a positive rate at t={t_start}")
    if single_clock and spec.down:
        if not np.allclose(spec.cumulatives(t_end)[0].sum(), spec.cumulatives(t_end)[1].sum()):
            warnings.warn("single-clock stepping assumes equal up and down totals", RuntimeWarning)
        t, m1, m2 = K.frozen_events(kernels.encode_rates(spec.up), kernels.encode_rates(spec.down),
                                    float(alpha), float(t_start), float(t_end), cumulative, bg)
        flags.append("single_clock")
        return _path(t, m1 - m2, spec.variant, t_end, "paper", rng, flags)
    ut, um, _ = K.frozen_events(kernels.encode_rates(spec.up), None, float(alpha),
                                float(t_start), float(t_end), cumulative, bg)
    if spec.down:
        dt, dm, _ = K.frozen_events(kernels.encode_rates(spec.down), None, float(alpha),
                                    float(t_start), float(t_end), cumulative, bg)
    else:
        dt, dm = np.zeros(0), np.zeros(0, dtype=np.int64)
    t, j = _merge(ut, um, dt, dm)
    return _path(t, j, spec.variant, t_end, "paper", rng, flags)


def ngsp_marginals(spec: ProcessSpec, checkpoints, n_paths: int, seed: int,
                   n_windows: int = DEFAULT_WINDOWS) -> np.ndarray:
    """S at the checkpoints for n_paths thinning paths; shape (n_paths, n_checkpoints)."""
    ck = np.ascontiguousarray(sorted(checkpoints), dtype=float)
    K = kernels.backend()
    rows = []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        m = min(CHUNK, n_paths - lo)
        bg = RngStream(seed, c).bg
        up = K.thinning_counts(kernels.encode_rates(spec.up), ck, n_windows, m, bg)
        if spec.down:
            up = up - K.thinning_counts(kernels.encode_rates(spec.down), ck, n_windows, m, bg)
        rows.append(up)
    return np.vstack(rows)


# ---------------------------------------------------- fractional variants

def _clock_rates(rates, alpha):
    """Constant rates rescaled so the operational clock runs at lambda^(1/alpha) t."""
    lam = np.array([r.params["rate"] for r in rates])
    total = lam.sum()
    scale = total ** (1.0 / alpha - 1.0) if total > 0 else 1.0
    return [RateFunction.constant(x * scale) for x in lam]


def sample_gfsp(spec: ProcessSpec, t_end: float, rng, paper_exact: bool = False) -> SamplePath:
    """Constant-rate fractional Skellam (or counting) path.

    Each side is a renewal process with Mittag-Leffler waiting times of
    rate sum_j lambda_j and marks P(X = j) = lambda_j / sum lambda.  With
    ``paper_exact`` one clock with the up-side rate moves both sides.
    """
    spec.constant_rates()
    bg = _bg(rng)
    K = kernels.backend()
    if paper_exact:
        return _frozen_path(spec, t_end, rng, spec.alpha, False, 0.0, True, K, bg)
    ut, um = K.renewal_events(kernels.encode_rates(_clock_rates(spec.up, spec.alpha)),
                              float(spec.alpha), float(t_end), bg)
    if spec.down:
        dt, dm = K.renewal_events(kernels.encode_rates(_clock_rates(spec.down, spec.alpha)),
                                  float(spec.alpha), float(t_end), bg)
    else:
        dt, dm = np.zeros(0), np.zeros(0, dtype=np.int64)
    t, j = _merge(ut, um, dt, dm)
    return _path(t, j, spec.variant, t_end, "exact", rng)


def sample_ngfsp(spec: ProcessSpec, t_end: float, h: float | None, rng,
                 paper_exact: bool = False, n_windows: int = DEFAULT_WINDOWS) -> SamplePath:
    """S(Y_alpha(t)) on the grid of step h.

    Y is simulated first; the inner process is then run up to Y(t_end) and
    read off at each grid value.  Several inner events can share one grid
    step, so jumps of this path may exceed k in size.
    """
    bg = _bg(rng)
    sub = sample_inverse_subordinator(spec.alpha, t_end, h, bg)
    ymax = float(sub.values[-1])
    inner = ProcessSpec("NGSP" if spec.down else "NGCP", spec.up, spec.down, 1.0)
    if ymax > 0:
        if paper_exact:
            ip = _frozen_path(inner, ymax, None, 1.0, True, PAPER_START, True,
                              kernels.backend(), bg)
        else:
            ip = sample_ngsp(inner, ymax, bg, n_windows=n_windows)
        states = ip.value_at(sub.values)
    else:
        states = np.zeros(sub.values.size, dtype=np.int64)
    keep = np.concatenate([[True], np.diff(states) != 0])
    path = SamplePath(sub.times[keep], np.asarray(states)[keep].astype(np.int64), spec.variant,
                      float(t_end), "grid", getattr(rng, "seed", None), getattr(rng, "stream", None),
                      ("grid",), {"h": sub.h})
    return path


def ngfsp_marginals(spec: ProcessSpec, t: float, n_paths: int, seed: int) -> np.ndarray:
    """Exact draws of S(Y(t)): Y(t) = (t/D)^alpha, then Poisson counts per jump size."""
    from .analytics import sample_subordinator_marginal
    gen = RngStream(seed).generator
    y = sample_subordinator_marginal(spec.alpha, t, n_paths, gen)
    out = np.zeros(n_paths, dtype=np.int64)
    for j, r in enumerate(spec.up, start=1):
        out += j * gen.poisson(r.cumulative(y))
    for j, r in enumerate(spec.down, start=1):
        out -= j * gen.poisson(r.cumulative(y))
    return out


def sample_nhgfsp(spec: ProcessSpec, t_end: float, rng, method: str = "exact",
                  paper_exact: bool = False) -> SamplePath:
    """Tempered fractional Skellam (or counting) path.

    ``exact``: each side is N_1(Y(Lambda(t))), a Mittag-Leffler renewal
    clock in operational time mapped back through Lambda^{-1}; marks are
    drawn with weights lambda_j at the event time.
    ``paper``: frozen-rate stepping with the cumulative Lambda(t) as rate.
    """
    bg = _bg(rng)
    K = kernels.backend()
    if method == "paper":
        return _frozen_path(spec, t_end, rng, spec.alpha, True, PAPER_START, paper_exact, K, bg)
    if method != "exact":
        raise ValueError("method is 'exact' or 'paper'")
    ut, um = K.renewal_events(kernels.encode_rates(spec.up), float(spec.alpha), float(t_end), bg)
    if spec.down:
        dt, dm = K.renewal_events(kernels.encode_rates(spec.down), float(spec.alpha),
                                  float(t_end), bg)
    else:
        dt, dm = np.zeros(0), np.zeros(0, dtype=np.int64)
    t, j = _merge(ut, um, dt, dm)
    return _path(t, j, spec.variant, t_end, "exact", rng)


def nhgfsp_marginals(spec: ProcessSpec, checkpoints, n_paths: int, seed: int) -> np.ndarray:
    ck = np.ascontiguousarray(sorted(checkpoints), dtype=float)
    K = kernels.backend()
    rows = []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        m = min(CHUNK, n_paths - lo)
        bg = RngStream(seed, c).bg
        up = K.renewal_counts(kernels.encode_rates(spec.up), float(spec.alpha), ck, m, bg)
        if spec.down:
            up = up - K.renewal_counts(kernels.encode_rates(spec.down), float(spec.alpha), ck, m, bg)
        rows.append(up)
    return np.vstack(rows)


def first_jump_times(rates, alpha: float, t_end: float, n_paths: int, seed: int) -> np.ndarray:
    """First time each jump size occurs on [0, t_end] (inf if never); one row per path."""
    K = kernels.backend()
    rows = []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        m = min(CHUNK, n_paths - lo)
        rows.append(K.renewal_first_times(kernels.encode_rates(list(rates)), float(alpha),
                                          float(t_end), m, RngStream(seed, c).bg))
    return np.vstack(rows)


# --------------------------------------------------------- running average

def sample_running_avg(spec: ProcessSpec, t: float, rng, n: int | None = None):
    """Draws of (1/t) int_0^t S(s) ds via its compound Poisson representation.

    N ~ Poisson((Lambda + T) t); each mark is U[0, j] with probability
    lambda_j/(Lambda + T) and U[-j, 0] with probability mu_j/(Lambda + T).
    """
    lam, mu = spec.constant_rates()
    if n is None:
        return float(sample_running_avg(spec, t, rng, 1)[0])
    gen = np.random.Generator(_bg(rng))
    w = np.concatenate([lam, mu])
    total = w.sum()
    if total == 0 or t == 0:
        return np.zeros(n)
    size = np.concatenate([np.arange(1, lam.size + 1), -np.arange(1, mu.size + 1)]).astype(float)
    counts = gen.poisson(total * t, n)
    m = int(counts.sum())
    cat = np.searchsorted(np.cumsum(w) / total, gen.random(m), side="right")
    cat = np.minimum(cat, w.size - 1)
    marks = gen.random(m) * size[cat]
    owner = np.repeat(np.arange(n), counts)
    return np.bincount(owner, weights=marks, minlength=n)


def running_avg_by_integration(spec: ProcessSpec, t: float, rng, n: int) -> np.ndarray:
    """Independent route: integrate simulated Skellam paths on [0, t] directly.

    Events of size j arrive as a Poisson process; a jump x at time tau
    contributes x (t - tau) to the path integral.
    """
    lam, mu = spec.constant_rates()
    gen = np.random.Generator(_bg(rng))
    out = np.zeros(n)
    sizes = [(j + 1, r) for j, r in enumerate(lam)] + [(-(j + 1), r) for j, r in enumerate(mu)]
    for x, r in sizes:
        c = gen.poisson(r * t, n)
        tau = gen.uniform(0.0, t, int(c.sum()))
        owner = np.repeat(np.arange(n), c)
        out += np.bincount(owner, weights=x * (t - tau), minlength=n)
    return out / t


def simulate(spec: ProcessSpec, t_end: float, rng, method: str | None = None,
             paper_exact: bool = False, h: float | None = None) -> SamplePath:
    """Dispatch to the sampler that fits the variant."""
    v = spec.variant
    if v in ("GCP", "GSP", "NGCP", "NGSP"):
        if method == "paper" or (paper_exact and method is None):
            return sample_ngsp(spec, t_end, rng, "paper", paper_exact)
        return sample_ngsp(spec, t_end, rng, "thinning")
    if v in ("GFCP", "GFSP"):
        return sample_gfsp(spec, t_end, rng, paper_exact)
    if v in ("NGFCP", "NGFSP"):
        return sample_ngfsp(spec, t_end, h, rng, paper_exact)
    if v in ("NHGFCP", "NHGFSP"):
        if paper_exact and method is None:
            method = "paper"
        return sample_nhgfsp(spec, t_end, rng, method or "exact", paper_exact)
    raise RateError(f"no path sampler for {v}; running averages are sampled as marginals")


def is_counting(spec: ProcessSpec) -> bool:
    return spec.variant in COUNTING

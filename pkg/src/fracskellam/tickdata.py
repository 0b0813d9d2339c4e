"""Tick-stream processing: bid filtering, jump extraction, waiting-time fits.

The bid recursion with a one-tick spread:

* bid <= price <= bid + tick: no change, the tick is dropped;
* price < bid: bid := price (a down move);
* price > bid + tick: bid := price - tick (an up move).

The first record only anchors the recursion at bid = price - tick.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .specfun import mittag_leffler

EULER_GAMMA = 0.5772156649015329
MIN_SAMPLES = 100


class TooFewSamplesError(ValueError):
    pass


@dataclass(frozen=True)
class TickRecord:
    timestamp: float
    price: float


@dataclass(frozen=True)
class FilteredTick:
    timestamp: float
    price: float
    bid: float
    direction: int  # +1 up, -1 down


@dataclass
class JumpSeries:
    direction: str
    event_times: np.ndarray

    @property
    def interarrivals(self) -> np.ndarray:
        return np.diff(self.event_times)

    def __len__(self):
        return int(self.event_times.size)


@dataclass
class FitReport:
    model: str
    params: dict
    log_survival_rmse: float
    sample_size: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


# ------------------------------------------------------------------ filter

def bid_filter(ticks, tick_size: float, initial_bid: float | None = None):
    """Run the bid recursion and keep only the ticks that moved the bid.

    Without ``initial_bid`` the first tick anchors bid = price - tick_size
    and is not itself reported.  Comparisons allow a tolerance of 1e-9
    ticks so decimal prices do not flip cases through rounding.
    """
    if not tick_size > 0:
        raise ValueError("tick_size must be > 0")
    ticks = list(ticks)
    if not ticks:
        return []
    eps = 1e-9 * tick_size
    if initial_bid is None:
        bid = ticks[0].price - tick_size
        rest = ticks[1:]
    else:
        bid = float(initial_bid)
        rest = ticks
    out = []
    for tk in rest:
        p = tk.price
        if p < bid - eps:
            bid = p
            out.append(FilteredTick(tk.timestamp, p, bid, -1))
        elif p > bid + tick_size + eps:
            bid = p - tick_size
            out.append(FilteredTick(tk.timestamp, p, bid, +1))
    return out


def anchor_bid(ticks, tick_size: float) -> float:
    """The bid the filter starts from for this stream."""
    return ticks[0].price - tick_size


def implied_stream(filtered):
    """The retained ticks as a raw stream, for re-filtering."""
    return [TickRecord(f.timestamp, f.price) for f in filtered]


def extract_jumps(filtered):
    """(up, down) event-time series; repeated timestamps keep their first event."""
    ups, downs = [], []
    for f in filtered:
        target = ups if f.direction > 0 else downs
        if target and target[-1] == f.timestamp:
            continue
        target.append(f.timestamp)
    return (JumpSeries("up", np.array(ups, dtype=float)),
            JumpSeries("down", np.array(downs, dtype=float)))


# -------------------------------------------------------------------- I/O

def read_ticks_csv(path) -> list:
    with open(path, newline="") as fh:
        return parse_ticks_csv(fh.read())


def parse_ticks_csv(text: str) -> list:
    """Parse (timestamp, price) rows; a header row is skipped if present."""
    out = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            ts, price = float(row[0]), float(row[1])
        except ValueError:
            if not out:
                continue  # header
            raise
        out.append(TickRecord(ts, price))
    for a, b in zip(out, out[1:]):
        if b.timestamp < a.timestamp:
            raise ValueError("tick timestamps must be nondecreasing")
    return out


def ticks_to_csv(ticks) -> str:
    buf = io.StringIO()
    buf.write("timestamp,price\n")
    for tk in ticks:
        buf.write(f"{float(tk.timestamp)!r},{float(tk.price)!r}\n")
    return buf.getvalue()


# ---------------------------------------------------------- synthetic data

def synthetic_tick_stream(path, tick_size: float = 1e-4, start_bid: float = 100.0,
                          noise_per_event: int = 3, rng=None) -> list:
    """Tick stream whose bid follows ``path.states`` in units of one tick.

    Each jump of the path becomes one trade that moves the bid by the same
    number of ticks (up moves trade at the new ask, down moves at the new
    bid); in between, trades inside the spread leave the bid unchanged.
    """
    gen = np.random.default_rng(0) if rng is None else rng
    times = np.asarray(path.times, dtype=float)
    states = np.asarray(path.states, dtype=np.int64)

    def bid_at(level):
        return round(start_bid + level * tick_size, 10)

    ticks = [TickRecord(0.0, bid_at(states[0]) + tick_size)]
    prev_t = 0.0
    for i in range(1, times.size):
        level_prev, level = int(states[i - 1]), int(states[i])
        for u in np.sort(gen.uniform(prev_t, times[i], noise_per_event)):
            if prev_t < u < times[i]:
                ticks.append(TickRecord(float(u), bid_at(level_prev) + gen.uniform(0, 1) * tick_size))
        price = bid_at(level) + tick_size if level > level_prev else bid_at(level)
        ticks.append(TickRecord(float(times[i]), price))
        prev_t = float(times[i])
    return ticks


def ml_interarrivals(beta: float, n: int, scale: float = 1.0, rng=None) -> np.ndarray:
    """Mittag-Leffler waiting times from three uniforms.

    T = scale * |ln U1|^(1/beta) * sin(beta W) sin((1-beta) W)^((1-beta)/beta)
        / (sin(W)^(1/beta) |ln U3|^((1-beta)/beta)),  W = pi U2.
    """
    gen = np.random.default_rng() if rng is None else rng
    u1, u2, u3 = gen.random(n), gen.random(n), gen.random(n)
    e = -np.log1p(-u1)
    if beta == 1.0:
        return scale * e
    w = np.pi * (1.0 - u2)
    v = -np.log1p(-u3)
    d = (np.sin(beta * w) * np.sin((1 - beta) * w) ** ((1 - beta) / beta)
         / (np.sin(w) ** (1 / beta) * v ** ((1 - beta) / beta)))
    return scale * e ** (1 / beta) * d


# -------------------------------------------------------------------- fits

def _as_samples(series) -> np.ndarray:
    x = series.interarrivals if isinstance(series, JumpSeries) else np.asarray(series, dtype=float)
    if x.size < MIN_SAMPLES:
        raise TooFewSamplesError(f"need at least {MIN_SAMPLES} inter-arrivals, got {x.size}")
    if np.any(x <= 0):
        raise ValueError("inter-arrivals must be positive")
    return x


def _grid(x):
    lo, hi = np.quantile(x, [0.01, 0.99])
    if hi <= lo:
        return np.array([lo])
    return np.geomspace(lo, hi, 40)


def _rmse(x, grid, log_model):
    xs = np.sort(x)
    emp = 1.0 - np.searchsorted(xs, grid, side="right") / xs.size
    keep = emp > 0
    if not keep.any():
        return 0.0
    d = np.log(emp[keep]) - log_model(grid[keep])
    return float(np.sqrt(np.mean(d * d)))


def fit_exponential(series) -> FitReport:
    x = _as_samples(series)
    rate = 1.0 / float(x.mean())
    rmse = _rmse(x, _grid(x), lambda g: -rate * g)
    return FitReport("exponential", {"rate": rate}, rmse, int(x.size))


def fit_mittag_leffler(series) -> FitReport:
    """Log-moment estimator: Var(ln T) = (pi^2/6)(2/beta^2 - 1), E ln T = ln gamma - Euler's constant."""
    x = _as_samples(series)
    lx = np.log(x)
    mu, var = float(lx.mean()), float(lx.var(ddof=1))
    beta = math.pi / math.sqrt(3.0 * (var + math.pi ** 2 / 6.0))
    clamped = beta > 1.0
    beta = min(beta, 1.0)
    gamma = math.exp(mu + EULER_GAMMA)

    def log_surv(g):
        return np.array([math.log(max(mittag_leffler(beta, 1.0, -(v / gamma) ** beta), 1e-300))
                         for v in g])

    rmse = _rmse(x, _grid(x), log_surv)
    params = {"beta": beta, "gamma": gamma}
    if clamped:
        params["beta_clamped"] = True
    return FitReport("mittag_leffler", params, rmse, int(x.size))


# ---------------------------------------------------------------- pipeline

def analyze(ticks, tick_size: float) -> dict:
    filtered = bid_filter(ticks, tick_size)
    up, down = extract_jumps(filtered)
    out = {"records": len(ticks), "filtered": len(filtered), "up": len(up), "down": len(down),
           "fits": {}}
    for s in (up, down):
        try:
            out["fits"][s.direction] = [fit_exponential(s).to_dict(), fit_mittag_leffler(s).to_dict()]
        except TooFewSamplesError as exc:
            out["fits"][s.direction] = {"skipped": str(exc)}
    return out


def round_trip(path, tick_size: float = 1e-4, seed: int = 0) -> dict:
    """Plant a path in a tick stream and recover its up/down jump counts."""
    ticks = synthetic_tick_stream(path, tick_size, rng=np.random.default_rng(seed))
    filtered = bid_filter(ticks, tick_size)
    up, down = extract_jumps(filtered)
    jumps = np.diff(path.states)
    planted_up, planted_down = int(np.sum(jumps > 0)), int(np.sum(jumps < 0))
    return {"records": len(ticks), "filtered": len(filtered),
            "planted_up": planted_up, "planted_down": planted_down,
            "recovered_up": len(up), "recovered_down": len(down),
            "exact": planted_up == len(up) and planted_down == len(down)}

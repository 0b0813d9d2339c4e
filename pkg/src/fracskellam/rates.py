"""Time-dependent intensity families and process specifications.

A :class:`RateFunction` is a cumulative intensity t -> Lambda(t) with its
derivative.  A :class:`ProcessSpec` bundles the up-side (and, for Skellam
variants, down-side) rate functions with the fractional index ``alpha``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

KINDS = ("constant", "weibull", "gompertz_makeham", "tabulated")

COUNTING = ("GCP", "NGCP", "GFCP", "NGFCP", "NHGFCP")
SKELLAM = ("GSP", "NGSP", "GFSP", "NGFSP", "NHGFSP")
RUNNING_AVG = ("RUN_AVG_GSP", "RUN_AVG_GCP")
VARIANTS = COUNTING + SKELLAM + RUNNING_AVG
FRACTIONAL = ("GFCP", "NGFCP", "NHGFCP", "GFSP", "NGFSP", "NHGFSP")
CONSTANT_ONLY = ("GCP", "GSP", "GFCP", "GFSP", "RUN_AVG_GSP", "RUN_AVG_GCP")

_REQUIRED = {
    "constant": ("rate",),
    "weibull": ("scale", "shape"),
    "gompertz_makeham": ("a", "b", "mu"),
    "tabulated": ("t", "cumulative"),
}


class RateError(ValueError):
    pass


class DomainError(RateError):
    """Query outside the domain of a rate function (t < 0 or past the last knot)."""


@dataclass(frozen=True)
class RateFunction:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RateError(f"unknown rate kind {self.kind!r}")
        missing = [p for p in _REQUIRED[self.kind] if p not in self.params]
        if missing:
            raise RateError(f"{self.kind} rate is missing {missing}")
        p = self.params
        if self.kind == "constant":
            if not p["rate"] >= 0:
                raise RateError("constant rate must be >= 0")
        elif self.kind == "weibull":
            if not p["scale"] > 0:
                raise RateError("weibull scale must be > 0")
            if not p["shape"] > 0:
                raise RateError("weibull shape must be > 0 (shape 0 gives a constant cumulative)")
        elif self.kind == "gompertz_makeham":
            if p["a"] < 0 or p["mu"] < 0:
                raise RateError("gompertz_makeham needs a, mu >= 0")
            if not p["b"] > 0:
                raise RateError("gompertz_makeham needs b > 0")
        else:
            t = np.asarray(p["t"], dtype=float)
            L = np.asarray(p["cumulative"], dtype=float)
            if t.ndim != 1 or t.shape != L.shape or t.size < 2:
                raise RateError("tabulated rate needs matching 1-d knot arrays (>= 2 knots)")
            if t[0] != 0.0 or L[0] != 0.0:
                raise RateError("tabulated knots must start at (0, 0)")
            if np.any(np.diff(t) <= 0):
                raise RateError("tabulated knot times must be strictly increasing")
            if np.any(np.diff(L) < 0):
                raise RateError("tabulated cumulative must be nondecreasing")
            object.__setattr__(self, "params", {"t": tuple(map(float, t)),
                                                "cumulative": tuple(map(float, L))})

    # -- constructors
    @classmethod
    def constant(cls, rate: float) -> "RateFunction":
        return cls("constant", {"rate": float(rate)})

    @classmethod
    def weibull(cls, scale: float, shape: float) -> "RateFunction":
        return cls("weibull", {"scale": float(scale), "shape": float(shape)})

    @classmethod
    def gompertz_makeham(cls, a: float, b: float, mu: float) -> "RateFunction":
        return cls("gompertz_makeham", {"a": float(a), "b": float(b), "mu": float(mu)})

    @classmethod
    def tabulated(cls, t: Sequence[float], cumulative: Sequence[float]) -> "RateFunction":
        return cls("tabulated", {"t": list(t), "cumulative": list(cumulative)})

    # -- evaluation
    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise DomainError("rate functions are defined for t >= 0")
        if self.kind == "tabulated" and np.any(t > self.params["t"][-1]):
            raise DomainError(
                f"tabulated rate queried past its last knot t={self.params['t'][-1]}")
        return t

    def cumulative(self, t):
        """Lambda(t); scalar in, float out, array in, array out."""
        t = self._check(t)
        p = self.params
        if self.kind == "constant":
            out = p["rate"] * t
        elif self.kind == "weibull":
            out = (t / p["scale"]) ** p["shape"]
        elif self.kind == "gompertz_makeham":
            a, b, mu = p["a"], p["b"], p["mu"]
            out = (a / b) * np.expm1(b * t) + mu * t
        else:
            out = np.interp(t, p["t"], p["cumulative"])
        return float(out) if np.ndim(out) == 0 else out

    def intensity(self, t):
        """lambda(t) = d Lambda / dt (right derivative for tabulated knots)."""
        t = self._check(t)
        p = self.params
        if self.kind == "constant":
            out = np.full_like(t, p["rate"])
        elif self.kind == "weibull":
            b, c = p["scale"], p["shape"]
            with np.errstate(divide="ignore"):
                out = (c / b) * (t / b) ** (c - 1.0)
        elif self.kind == "gompertz_makeham":
            out = p["a"] * np.exp(p["b"] * t) + p["mu"]
        else:
            kt = np.asarray(p["t"])
            slopes = np.diff(p["cumulative"]) / np.diff(kt)
            idx = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, slopes.size - 1)
            out = slopes[idx]
        return float(out) if np.ndim(out) == 0 else out

    def increment(self, s: float, t: float) -> float:
        """Lambda(s, t) = Lambda(t) - Lambda(s) for s <= t."""
        if s > t:
            raise RateError("increment needs s <= t")
        return self.cumulative(t) - self.cumulative(s)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": {k: (list(v) if isinstance(v, tuple) else v)
                                             for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "RateFunction":
        if "kind" not in d:
            raise RateError("rate config needs a 'kind'")
        return cls(d["kind"], dict(d.get("params", {})))


@dataclass(frozen=True)
class ProcessSpec:
    """Jump-size rate functions for one process variant.

    ``up[j-1]`` drives jumps of size +j and ``down[j-1]`` jumps of size -j.
    Counting variants have no down side; running-average variants use
    constant rates only.
    """

    variant: str
    up: tuple
    down: tuple = ()
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "up", tuple(self.up))
        object.__setattr__(self, "down", tuple(self.down))
        if self.variant not in VARIANTS:
            raise RateError(f"unknown variant {self.variant!r}")
        if not self.up:
            raise RateError("a process needs at least one jump size")
        if not 0.0 < self.alpha <= 1.0:
            raise RateError("alpha must lie in (0, 1]")
        if self.variant not in FRACTIONAL and self.alpha != 1.0:
            raise RateError(f"{self.variant} is not fractional; alpha must be 1")
        if self.variant in COUNTING or self.variant == "RUN_AVG_GCP":
            if self.down:
                raise RateError(f"{self.variant} is a counting variant and takes no down rates")
        elif len(self.down) != len(self.up):
            raise RateError("Skellam variants need as many down rates as up rates")
        if self.variant in CONSTANT_ONLY:
            for r in self.up + self.down:
                if r.kind != "constant":
                    raise RateError(f"{self.variant} takes constant rates only")
        for r in self.up + self.down:
            if not isinstance(r, RateFunction):
                raise RateError("rates must be RateFunction instances")

    @property
    def k(self) -> int:
        return len(self.up)

    @property
    def is_skellam(self) -> bool:
        return bool(self.down)

    def cumulatives(self, t: float):
        """(Lambda_j(t), T_j(t)) as two numpy arrays."""
        lam = np.array([r.cumulative(t) for r in self.up], dtype=float)
        tau = np.array([r.cumulative(t) for r in self.down], dtype=float) if self.down \
            else np.zeros(0)
        return lam, tau

    def increments(self, s: float, t: float):
        lam = np.array([r.increment(s, t) for r in self.up], dtype=float)
        tau = np.array([r.increment(s, t) for r in self.down], dtype=float) if self.down \
            else np.zeros(0)
        return lam, tau

    def constant_rates(self):
        """(lambda_j, mu_j) arrays; raises unless every rate is constant."""
        for r in self.up + self.down:
            if r.kind != "constant":
                raise RateError("this operation needs constant rates")
        lam = np.array([r.params["rate"] for r in self.up], dtype=float)
        mu = np.array([r.params["rate"] for r in self.down], dtype=float) if self.down \
            else np.zeros(0)
        return lam, mu

    def with_alpha(self, alpha: float) -> "ProcessSpec":
        return ProcessSpec(self.variant, self.up, self.down, alpha)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"variant": self.variant, "alpha": self.alpha,
                             "up": [r.to_dict() for r in self.up]}
        if self.down:
            d["down"] = [r.to_dict() for r in self.down]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSpec":
        try:
            up = [RateFunction.from_dict(r) for r in d["up"]]
            down = [RateFunction.from_dict(r) for r in d.get("down", [])]
            return cls(d["variant"], up, down, float(d.get("alpha", 1.0)))
        except KeyError as exc:
            raise RateError(f"process spec is missing {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "ProcessSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class AggregateRates:
    total_up: float
    total_down: float
    t: float


def aggregate(spec: ProcessSpec, t: float) -> AggregateRates:
    lam, tau = spec.cumulatives(t)
    return AggregateRates(float(lam.sum()), float(tau.sum()), float(t))


def constant_spec(variant: str, up: Sequence[float], down: Sequence[float] = (),
                  alpha: float = 1.0) -> ProcessSpec:
    return ProcessSpec(variant, [RateFunction.constant(x) for x in up],
                       [RateFunction.constant(x) for x in down], alpha)


# Reference parameter sets for plots and the Monte Carlo checks.

def gm_figure_spec(alpha: float = 1.0) -> ProcessSpec:
    """Three jump sizes with Gompertz-Makeham rates on both sides."""
    up = [(0.6, 0.1, 5.0), (0.7, 0.2, 4.0), (0.4, 0.3, 7.0)]
    down = [(0.7, 0.2, 4.0), (0.4, 0.3, 7.0), (0.6, 0.1, 5.0)]
    variant = "NGSP" if alpha == 1.0 else "NGFSP"
    return ProcessSpec(variant, [RateFunction.gompertz_makeham(*p) for p in up],
                       [RateFunction.gompertz_makeham(*p) for p in down], alpha)


def gfsp_figure_spec(alpha: float = 0.8) -> ProcessSpec:
    lam = (0.1, 0.3, 0.2, 0.4, 0.2)
    mu = (0.2, 0.2, 0.2, 0.3, 0.3)
    return constant_spec("GFSP" if alpha < 1 else "GSP", lam, mu, alpha)


def nhgfsp_figure_spec(alpha: float = 0.7) -> ProcessSpec:
    up = [(5.0, 0.5, 20.0), (2.0, 0.2, 22.0), (4.0, 0.3, 17.0)]
    down = [(2.0, 0.2, 22.0), (4.0, 0.3, 17.0), (5.0, 0.5, 20.0)]
    return ProcessSpec("NHGFSP", [RateFunction.gompertz_makeham(*p) for p in up],
                       [RateFunction.gompertz_makeham(*p) for p in down], alpha)


def load_spec(path: str) -> ProcessSpec:
    with open(path) as fh:
        return ProcessSpec.from_dict(json.load(fh))

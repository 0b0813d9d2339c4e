"""Kernel back-end selection.

The compiled extension is used when it imports; otherwise (or with
FRACSKELLAM_PURE=1 in the environment) the pure-Python twin is used.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("FRACSKELLAM_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

KIND_CODES = {"constant": 0, "weibull": 1, "gompertz_makeham": 2, "tabulated": 3}


def encode_rates(rates):
    """Pack a sequence of RateFunction into flat arrays for the kernels."""
    m = len(rates)
    kind = np.zeros(m, dtype=np.int32)
    par = np.zeros((m, 3))
    off = [0]
    kt: list[float] = []
    kl: list[float] = []
    for j, r in enumerate(rates):
        kind[j] = KIND_CODES[r.kind]
        p = r.params
        if r.kind == "constant":
            par[j, 0] = p["rate"]
        elif r.kind == "weibull":
            par[j, :2] = p["scale"], p["shape"]
        elif r.kind == "gompertz_makeham":
            par[j] = p["a"], p["b"], p["mu"]
        else:
            kt.extend(p["t"])
            kl.extend(p["cumulative"])
        off.append(len(kt))
    return (kind, par, np.asarray(off, dtype=np.int64),
            np.asarray(kt, dtype=float), np.asarray(kl, dtype=float))


def backend(pure: bool = False):
    """Module implementing the kernels (the Python twin when ``pure``)."""
    return _pykernels if pure else _impl

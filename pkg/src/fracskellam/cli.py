"""Command-line front end.  All outputs are CSV or JSON for external plotting.

Exit codes: 0 success, 1 usage or input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from . import analytics as A
from . import samplers as S
from . import tickdata as TD
from . import verify as V
from .rates import _REQUIRED, KINDS, VARIANTS, ProcessSpec, RateError, RateFunction

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
SEED_ENV = "FRACSKELLAM_SEED"
SPEC_FIELDS = {"variant", "alpha", "up", "down"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # None defaults are described in the help text itself
    def _get_help_string(self, action):
        if action.default is None or action.default is False:
            return action.help
        return super()._get_help_string(action)


# ------------------------------------------------------------------ specs

def _check_rate_dict(d, where):
    if not isinstance(d, dict):
        raise UsageError(f"{where}: rate must be a JSON object")
    extra = set(d) - {"kind", "params"}
    if extra:
        raise UsageError(f"{where}: unknown rate fields {sorted(extra)}")
    kind = d.get("kind")
    if kind not in KINDS:
        raise UsageError(f"{where}: unknown rate kind {kind!r}")
    extra = set(d.get("params", {})) - set(_REQUIRED[kind])
    if extra:
        raise UsageError(f"{where}: unknown {kind} parameters {sorted(extra)}")


def _parse_rates(text):
    """'1.2,0.5' means constant rates; anything starting with '[' is JSON."""
    text = text.strip()
    if text.startswith("["):
        rates = json.loads(text)
        for i, r in enumerate(rates):
            _check_rate_dict(r, f"rate {i}")
        return rates
    try:
        return [{"kind": "constant", "params": {"rate": float(x)}} for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"cannot parse rates {text!r}") from None


def build_spec(args, required=True):
    """Spec file fields, overridden by inline flags; unknown fields rejected."""
    d = {}
    if getattr(args, "spec", None):
        try:
            d = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec {args.spec}: {exc}") from None
        if not isinstance(d, dict):
            raise UsageError("spec file must hold a JSON object")
        extra = set(d) - SPEC_FIELDS
        if extra:
            raise UsageError(f"unknown spec fields {sorted(extra)}")
        for side in ("up", "down"):
            for i, r in enumerate(d.get(side, [])):
                _check_rate_dict(r, f"{side}[{i}]")
    if getattr(args, "variant", None):
        d["variant"] = args.variant
    if getattr(args, "alpha", None) is not None:
        d["alpha"] = args.alpha
    if getattr(args, "up", None):
        d["up"] = _parse_rates(args.up)
    if getattr(args, "down", None):
        d["down"] = _parse_rates(args.down)
    if not d:
        if required:
            raise UsageError("a process spec is required (--spec FILE or --variant/--up/--down)")
        return None
    try:
        return ProcessSpec.from_dict(d)
    except (RateError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid spec: {exc}") from None


def _add_spec_args(p):
    g = p.add_argument_group("process spec (inline flags override the file)")
    g.add_argument("--spec", metavar="FILE", help="JSON spec with fields variant, alpha, up, down")
    g.add_argument("--variant", type=str.upper, choices=VARIANTS, help="process variant (case-insensitive)")
    g.add_argument("--alpha", type=float, help="fractional index in (0, 1]; default 1")
    g.add_argument("--up", metavar="RATES",
                   help="up-jump rates for sizes 1..k: comma list of constant rates (per unit time) "
                        "or a JSON list of {kind, params}")
    g.add_argument("--down", metavar="RATES", help="down-jump rates, same format as --up")


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------- commands

def _one_path(job):
    spec_dict, t_end, seed, i, method, paper_exact, h = job
    spec = ProcessSpec.from_dict(spec_dict)
    path = S.simulate(spec, t_end, S.RngStream(seed, i), method=method,
                      paper_exact=paper_exact, h=h)
    return path.to_csv()


def cmd_simulate(args):
    spec = build_spec(args)
    if spec.variant in ("RUN_AVG_GSP", "RUN_AVG_GCP"):
        raise UsageError("running averages have no path sampler; use 'moments'")
    if not args.t_end > 0:
        raise UsageError("--t-end must be > 0")
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    jobs = [(spec.to_dict(), args.t_end, args.seed, i, args.method, args.paper_exact, args.h)
            for i in range(args.paths)]
    workers = min(args.workers or os.cpu_count() or 1, args.paths)
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                csvs = list(pool.map(_one_path, jobs))
        else:
            csvs = [_one_path(j) for j in jobs]
    except (RateError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    files = []
    for i, text in enumerate(csvs):
        name = f"{args.prefix}_{i:04d}.csv"
        (out / name).write_text(text)
        files.append(name)
    manifest = {"version": __version__, "command": "simulate", "spec": spec.to_dict(),
                "seed": args.seed, "t_end": args.t_end, "paths": args.paths,
                "method": args.method, "paper_exact": args.paper_exact, "h": args.h,
                "files": files}
    (out / f"{args.prefix}_manifest.json").write_text(_dump(manifest))
    # timing goes to stderr so the artifacts stay byte-identical across runs
    print(f"simulated {args.paths} paths in {time.perf_counter() - start:.2f} s", file=sys.stderr)
    print(_dump({"files": files, "manifest": f"{args.prefix}_manifest.json"}), end="")
    return EXIT_OK


_PMF_BACKENDS = {
    "GCP": ("convolution", "bessel"), "NGCP": ("convolution", "bessel"),
    "GSP": ("convolution", "bessel"), "NGSP": ("convolution", "bessel"),
    "NHGFCP": ("mittag_leffler",), "NHGFSP": ("mittag_leffler",),
}


def cmd_pmf(args):
    spec = build_spec(args)
    allowed = _PMF_BACKENDS.get(spec.variant)
    if allowed is None:
        raise UsageError(f"no closed-form pmf for {spec.variant}")
    backend = args.backend or allowed[0]
    if backend not in allowed:
        raise UsageError(f"backend {backend!r} is not valid for {spec.variant}; choose {allowed}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for t in args.t:
        if t < 0:
            raise UsageError("times must be >= 0")
        if backend == "mittag_leffler":
            if spec.is_skellam:
                tab = A.nhgfsp_pmf(spec, t, args.n_min, args.n_max)
            else:
                tab = A.nhgfcp_pmf(spec.up, spec.alpha, t)
        else:
            if not spec.is_skellam and backend == "bessel":
                raise UsageError("the Bessel backend needs a Skellam variant")
            tab = A.ngsp_pmf(spec, t, args.n_min, args.n_max, backend=backend)
        name = f"{args.prefix}_t{t!r}.csv"
        (out / name).write_text(tab.to_csv())
        files.append({"file": name, "t": t, "mass": tab.mass(), "tail_bound": tab.tail_bound})
    print(_dump({"backend": backend, "tables": files}), end="")
    return EXIT_OK


def moments_of(spec, t, s=None, covariance="compound", seed=0):
    v = spec.variant
    if v in ("RUN_AVG_GSP", "RUN_AVG_GCP"):
        return A.running_avg_moments(spec, t, s, covariance)
    if v in ("NHGFCP", "NHGFSP"):
        return A.nhgfsp_moments(spec, t, s)
    if v in ("GFCP", "GFSP", "NGFCP", "NGFSP"):
        return A.ngfsp_moments(spec, t, s, seed=seed)
    return A.ngsp_moments(spec, t, s)


def cmd_moments(args):
    spec = build_spec(args)
    if args.t < 0:
        raise UsageError("--t must be >= 0")
    m = moments_of(spec, args.t, args.s, args.covariance, args.seed)
    _emit(_dump({"variant": spec.variant, "t": args.t, "s": args.s, "mean": m.mean,
                 "variance": m.variance, "covariance": m.covariance,
                 "dispersion_index": m.dispersion_index}), args.out)
    return EXIT_OK


def cmd_classify(args):
    spec = build_spec(args)
    v = spec.variant
    try:
        if v in ("GSP", "NGSP", "GCP", "NGCP"):
            rep = A.classify_dependence_ngsp(spec, args.s)
        elif v in ("NHGFCP", "NHGFSP"):
            rep = A.classify_dependence_nhgfsp(spec, args.s)
        elif v in ("RUN_AVG_GSP", "RUN_AVG_GCP"):
            rep = A.classify_dependence_runavg(spec, args.s)
        else:
            raise UsageError(f"no dependence classification for {v}")
    except A.ClassificationError as exc:
        raise UsageError(str(exc)) from None
    _emit(_dump({"class": rep.cls, "theta": rep.theta, "c_of_s": rep.c_of_s, "s": rep.s,
                 "detail": rep.detail}), args.out)
    return EXIT_OK


def cmd_hitting(args):
    spec = build_spec(args)
    if args.t < 0:
        raise UsageError("--t must be >= 0")
    backend = args.backend
    if spec.variant in ("NHGFCP", "NHGFSP"):
        backend = "mittag_leffler"
    elif spec.variant not in _PMF_BACKENDS:
        raise UsageError(f"no hitting-time law for {spec.variant}")
    f = A.arrival_time_cdf(spec, args.n, args.t, backend)
    s = A.first_passage_survival(spec, args.n, args.t, backend)
    _emit(_dump({"n": args.n, "t": args.t, "backend": backend,
                 "arrival_cdf": vars(f), "survival": vars(s)}), args.out)
    return EXIT_OK


def cmd_verify(args):
    if args.all:
        names = list(V.CATALOG)
    elif args.check:
        names = args.check
    else:
        raise UsageError("give --check NAME (repeatable) or --all")
    unknown = [n for n in names if n not in V.CATALOG]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; known: {sorted(V.CATALOG)}")
    spec = build_spec(args, required=False)
    if spec is None and args.k is None and args.budget is None:
        reports = V.run_all(names, seed=args.seed, workers=args.workers or 1)
    else:
        reports = [V.run_check(n, spec=spec, budget=args.budget, seed=args.seed, k=args.k)
                   for n in names]
    print(V.report_table(reports), file=sys.stderr)
    _emit(V.reports_json(reports) + "\n", args.out)
    return EXIT_VERIFY if any(r.verdict == V.FAIL for r in reports) else EXIT_OK


def cmd_tick(args):
    if not args.tick_size > 0:
        raise UsageError("--tick-size must be > 0")
    if args.input == "synthetic":
        spec = build_spec(args)
        if spec.variant in ("RUN_AVG_GSP", "RUN_AVG_GCP"):
            raise UsageError("a tick stream needs a path sampler variant")
        path = S.simulate(spec, args.t_end, S.RngStream(args.seed, 0))
        ticks = TD.synthetic_tick_stream(path, args.tick_size,
                                         rng=S.RngStream(args.seed, 1).generator)
        filtered = TD.bid_filter(ticks, args.tick_size)
        up, down = TD.extract_jumps(filtered)
        jumps = path.jumps()
        report = {"source": "synthetic", "spec": spec.to_dict(), "seed": args.seed,
                  "planted_up": int((jumps > 0).sum()), "planted_down": int((jumps < 0).sum()),
                  "recovered_up": len(up), "recovered_down": len(down)}
        report["exact"] = (report["planted_up"] == report["recovered_up"]
                           and report["planted_down"] == report["recovered_down"])
        report.update(TD.analyze(ticks, args.tick_size))
        if args.write_ticks:
            Path(args.write_ticks).write_text(TD.ticks_to_csv(ticks))
    else:
        try:
            ticks = TD.read_ticks_csv(args.input)
        except (OSError, ValueError, IndexError) as exc:
            raise UsageError(f"cannot read ticks from {args.input}: {exc}") from None
        report = {"source": args.input}
        report.update(TD.analyze(ticks, args.tick_size))
    _emit(_dump(report), args.out)
    return EXIT_OK


# ----------------------------------------------------------------- parser

def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def make_parser(default_seed=0):
    p = _Parser(prog="fracskellam", description=__doc__.splitlines()[0],
                formatter_class=_HelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def new(name, help_):
        q = sub.add_parser(name, help=help_, description=help_,
                           formatter_class=_HelpFormatter)
        q.add_argument("--seed", type=int, default=default_seed,
                       help=f"random seed; ${SEED_ENV} sets the default")
        return q

    q = new("simulate", "Simulate sample paths; one CSV per path (columns t,state) plus a manifest.")
    _add_spec_args(q)
    q.add_argument("--t-end", type=float, required=True, help="horizon, in model time units")
    q.add_argument("--paths", type=int, default=1, help="number of independent paths")
    q.add_argument("--method", choices=("thinning", "paper", "exact"), default=None,
                   help="sampler; default is the exact sampler for the variant")
    q.add_argument("--paper-exact", action="store_true",
                   help="follow the published simulation tables literally (single clock)")
    q.add_argument("--h", type=float, default=None,
                   help="grid step for inverse-subordinator paths (default t_end/2^14)")
    q.add_argument("--workers", type=int, default=None, help="processes (default: all cores)")
    q.add_argument("--out", default=".", help="output directory")
    q.add_argument("--prefix", default="path", help="output file prefix")
    q.set_defaults(func=cmd_simulate)

    q = new("pmf", "Tabulate the pmf; one CSV (columns n,p) per time.")
    _add_spec_args(q)
    q.add_argument("--t", type=float, nargs="+", required=True, help="times, model units")
    q.add_argument("--backend", choices=("convolution", "bessel", "mittag_leffler"),
                   help="pmf route; default convolution, or mittag_leffler for NHGF variants")
    q.add_argument("--n-min", type=int, default=None, help="lowest state (default: mean - 10 sd)")
    q.add_argument("--n-max", type=int, default=None, help="highest state (default: mean + 10 sd)")
    q.add_argument("--out", default=".", help="output directory")
    q.add_argument("--prefix", default="pmf", help="output file prefix")
    q.set_defaults(func=cmd_pmf)

    q = new("moments", "Mean, variance and optional covariance as JSON.")
    _add_spec_args(q)
    q.add_argument("--t", type=float, required=True, help="time, model units")
    q.add_argument("--s", type=float, default=None, help="second time for Cov(X(s), X(t))")
    q.add_argument("--covariance", choices=("compound", "path"), default="compound",
                   help="running-average covariance convention")
    q.add_argument("--out", default=None, help="output file (default stdout)")
    q.set_defaults(func=cmd_moments)

    q = new("classify", "Long- or short-range dependence class as JSON (Weibull rates).")
    _add_spec_args(q)
    q.add_argument("--s", type=float, default=1.0, help="fixed earlier time s > 0")
    q.add_argument("--out", default=None, help="output file (default stdout)")
    q.set_defaults(func=cmd_classify)

    q = new("hitting", "P(level n reached by time t) and its complement as JSON intervals.")
    _add_spec_args(q)
    q.add_argument("--n", type=int, required=True, help="level (integer, jump units)")
    q.add_argument("--t", type=float, required=True, help="time, model units")
    q.add_argument("--backend", choices=("convolution", "bessel"), default="convolution",
                   help="pmf route for NGSP-family variants")
    q.add_argument("--out", default=None, help="output file (default stdout)")
    q.set_defaults(func=cmd_hitting)

    q = new("verify", "Run verification checks; exit 2 if any check fails.")
    _add_spec_args(q)
    q.add_argument("--check", action="append", metavar="NAME",
                   help=f"check name, repeatable; one of {', '.join(V.CATALOG)}")
    q.add_argument("--all", action="store_true", help="run the whole catalog")
    q.add_argument("--k", type=int, default=None, help="number of jump sizes for checks that take it")
    q.add_argument("--budget", type=int, default=None, help="Monte Carlo sample size override")
    q.add_argument("--workers", type=int, default=None, help="processes for --all (default 1)")
    q.add_argument("--out", default=None, help="output file (default stdout)")
    q.set_defaults(func=cmd_verify)

    q = new("tick", "Bid-filter a tick stream, split up/down jumps and fit waiting times.")
    _add_spec_args(q)
    q.add_argument("--input", required=True,
                   help="'synthetic' (stream planted from --spec) or a CSV of timestamp,price")
    q.add_argument("--tick-size", type=float, default=1e-4, help="price tick, currency units")
    q.add_argument("--t-end", type=float, default=200.0, help="synthetic horizon, model units")
    q.add_argument("--write-ticks", default=None, help="also save the synthetic stream as CSV")
    q.add_argument("--out", default=None, help="output file (default stdout)")
    q.set_defaults(func=cmd_tick)
    return p


def main(argv=None):
    try:
        parser = make_parser(_default_seed())
    except UsageError as exc:
        print(f"fracskellam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, RateError, V.UnknownCheckError, A.EnumerationBudgetError) as exc:
        print(f"fracskellam {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

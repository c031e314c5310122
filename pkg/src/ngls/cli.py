"""Command line front end.

Every command reads a family (``--config``), optionally a frequency vector
(``--alpha``) and a driving sequence (``--omega``), and writes JSON for
single results or CSV for traces. Reports embed the resolved configuration
and the tool version; feeding a JSON report back through ``--config``
reruns it with the same parameters.

Exit codes: 0 success, 2 configuration error, 3 numeric guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from ._numeric import parse_number
from .errors import (CombinatorialGuardError, ConfigError, DigitError, DivergentTailError,
                     StreamExhaustedError)
from .gls_core import DEFAULT_EXACT_DEPTH, Family, OmegaRule, validate_partition

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3

COMMANDS = ("dim", "eta", "beta", "coverrate", "coversum", "expand", "digits", "weave", "freq",
            "sample", "localdim", "etalower", "approx", "validate")

DEFAULTS: Dict[str, Any] = {
    "exact_depth": DEFAULT_EXACT_DEPTH,
    "M": 200,
    "horizon": 2 ** 20,
    "points": 4,
    "eps_window": "1/20",
    "window": None,
    "t": None,
    "m": None,
    "n": None,
    "digit_cap": None,
    "cap": 10 ** 6,
    "digits": None,
    "depth": None,
    "tol": None,
    "x": None,
    "word": None,
    "seed": 0,
    "min_alpha": 0.0,
    "symbol": None,
    "eps": "1/10",
    "delta": "9/10",
    "gamma": "3/2",
    "k": 40,
    "full": False,
    "trace": False,
    "csv": False,
}


class _Abort(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- output helpers

def _plain(value):
    """JSON-ready copy: Fractions as "p/q", numpy scalars as Python numbers, non-finite floats as strings."""
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return value


def _cell(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


class Output:
    def __init__(self, path: Optional[str], header: dict):
        self.path = path
        self.header = header

    def _write(self, text: str):
        if self.path:
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

    def json(self, result: dict):
        doc = dict(self.header)
        doc["result"] = result
        self._write(json.dumps(_plain(doc), indent=2) + "\n")

    def csv(self, columns: List[str], rows, extra: Optional[dict] = None):
        buf = io.StringIO()
        meta = dict(self.header)
        if extra:
            meta["summary"] = extra
        buf.write("# " + json.dumps(_plain(meta), separators=(",", ":")) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        self._write(buf.getvalue())


# ---------------------------------------------------------------- config resolution

def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "config") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          "config") from None


def _maybe_json(text):
    if isinstance(text, str) and text.strip()[:1] in "{[":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", "alpha") from None
    return text


def _parse_omega(spec, family: Family, alpha, seed):
    if spec is None or spec == "weave":
        if len(family) == 1:
            return OmegaRule.constant(family.symbols[0])
        if alpha is None:
            return None
        return OmegaRule.weave({s: alpha.alpha_s(s) for s in family.symbols})
    spec = _maybe_json(spec)
    if isinstance(spec, (dict, list)):
        rule = OmegaRule.from_config(spec)
    elif isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        if kind == "periodic":
            rule = OmegaRule.periodic([s.strip() for s in rest.split(",") if s.strip()])
        elif kind == "bernoulli":
            probs = {}
            for part in rest.split(","):
                s, _, p = part.partition("=")
                probs[s.strip()] = parse_number(p, f"omega.probs.{s.strip()}")
            rule = OmegaRule.bernoulli(probs, seed=seed)
        elif kind in family:
            rule = OmegaRule.constant(kind)
        else:
            raise ConfigError(f"cannot parse omega {spec!r}", "omega")
    else:
        raise ConfigError(f"cannot parse omega {spec!r}", "omega")
    used = set(rule.symbols) if getattr(rule, "symbols", None) else set()
    unknown = used - set(family.symbols)
    if unknown:
        raise ConfigError(f"omega uses unknown symbols {sorted(unknown)}", "omega")
    return rule


class Context:
    """Resolved inputs of one run."""

    def __init__(self, args: argparse.Namespace):
        from .frequency import FrequencyVector

        raw: Dict[str, Any] = {}
        if args.config:
            raw = _load_json(args.config)
            if isinstance(raw, dict) and "config" in raw and "version" in raw:
                raw = raw["config"]  # a previous report
        if not isinstance(raw, dict):
            raise ConfigError("expected a JSON object", "config")
        family_cfg = raw.get("family", raw if "symbols" in raw else None)
        if family_cfg is None:
            raise ConfigError("missing family (give --config with a 'symbols' list)", "symbols")
        self.family = Family.from_config(family_cfg)

        params = dict(DEFAULTS)
        params.update({k: v for k, v in (raw.get("params") or {}).items() if k in DEFAULTS})
        for k in DEFAULTS:
            v = getattr(args, k, None)
            if v is not None and v is not False:
                params[k] = v
        self.params = params
        self.seed = int(params["seed"])

        alpha_spec = args.alpha if args.alpha is not None else raw.get("alpha")
        self.alpha = None
        if alpha_spec is not None:
            self.alpha = FrequencyVector.parse(self.family, _maybe_json(alpha_spec))
        omega_spec = args.omega if args.omega is not None else raw.get("omega")
        self._omega = _parse_omega(omega_spec, self.family, self.alpha, self.seed)

        threads_env = os.environ.get("NGLS_THREADS")
        self.threads = {"requested": threads_env, "used": 1}
        self.command = args.command

    @property
    def omega(self):
        if self._omega is None:
            raise ConfigError("a multi-symbol family needs --omega or --alpha", "omega")
        return self._omega

    def need_alpha(self):
        if self.alpha is None:
            raise ConfigError("this command needs --alpha", "alpha")
        return self.alpha

    def need(self, key: str):
        v = self.params.get(key)
        if v is None:
            raise ConfigError(f"missing --{key.replace('_', '-')}", key)
        return v

    def header(self) -> dict:
        return {
            "tool": "ngls",
            "version": __version__,
            "command": self.command,
            "config": {
                "family": self.family.to_config(),
                "alpha": self.alpha.to_config() if self.alpha is not None else None,
                "omega": self._omega.to_config() if self._omega is not None else None,
                "params": self.params,
            },
            "threads": self.threads,
        }


def _int_list(text, path) -> List[int]:
    if isinstance(text, list):
        items = text
    else:
        items = [p for p in str(text).replace(" ", "").split(",") if p]
    try:
        return [int(p) for p in items]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}", path) from None


# ---------------------------------------------------------------- commands

def cmd_validate(ctx: Context, out: Output) -> int:
    m = int(ctx.params["m"] or 100)
    reports = {s: validate_partition(ctx.family[s], m=m).to_dict() for s in ctx.family.symbols}
    ok = all(r["ok"] for r in reports.values())
    out.json({"ok": ok, "systems": reports})
    if not ok:
        bad = next(s for s, r in reports.items() if not r["ok"])
        idx = ctx.family.symbols.index(bad)
        raise _Abort(EXIT_CONFIG, f"symbols[{idx}]: {reports[bad]['first_violation']}")
    return EXIT_OK


def cmd_eta(ctx: Context, out: Output) -> int:
    from .dimension import eta

    horizon, points = int(ctx.params["horizon"]), int(ctx.params["points"])
    per = {s: eta(ctx.family[s], horizon=horizon, points=points).to_dict() for s in ctx.family.symbols}
    out.json({"eta": max(r["eta"] for r in per.values()), "systems": per})
    return EXIT_OK


def cmd_beta(ctx: Context, out: Output) -> int:
    from .dimension import beta

    window = ctx.params["window"]
    window = _int_list(window, "window") if window is not None else None
    res = beta(ctx.family, ctx.need_alpha(), M=int(ctx.params["M"]), window=window)
    summary = {"beta": res.beta, "oscillation": res.oscillation, "window": list(res.window),
               "divergent": res.divergent}
    if ctx.params["trace"]:
        out.csv(["m", "numerator", "denominator", "R_m"], res.trace_rows(), summary)
    else:
        out.json(summary)
    return EXIT_OK


def cmd_dim(ctx: Context, out: Output) -> int:
    from .dimension import dim_formula

    rep = dim_formula(ctx.family, ctx.need_alpha(), M=int(ctx.params["M"]))
    if ctx.params["trace"]:
        out.csv(["m", "numerator", "denominator", "R_m"], rep.trace.trace_rows(), rep.to_dict())
    else:
        out.json(rep.to_dict())
    return EXIT_OK


def cmd_coverrate(ctx: Context, out: Output) -> int:
    from .dimension import cover_rate

    t = float(parse_number(ctx.need("t"), "t", exact=False))
    m = int(ctx.need("m"))
    out.json({"t": t, "m": m, "rate": cover_rate(ctx.family, ctx.need_alpha(), t, m)})
    return EXIT_OK


def cmd_coversum(ctx: Context, out: Output) -> int:
    from .dimension import exact_cover_sum

    t = float(parse_number(ctx.need("t"), "t", exact=False))
    m, n = int(ctx.need("m")), int(ctx.need("n"))
    eps = parse_number(ctx.params["eps_window"], "eps_window")
    cap = ctx.params["digit_cap"]
    res = exact_cover_sum(ctx.family, ctx.omega, ctx.need_alpha(), t, m, eps, n,
                          digit_cap=int(cap) if cap is not None else None, cap=int(ctx.params["cap"]))
    out.json({"t": t, "m": m, "n": n, "log_value": res.log_value, "value": res.value,
              "count_vectors": res.n_vectors})
    return EXIT_OK


def cmd_expand(ctx: Context, out: Output) -> int:
    from .expansion import digits_of, project, series_expansion

    word = _int_list(ctx.need("digits"), "digits")
    depth, tol = ctx.params["depth"], ctx.params["tol"]
    if depth is None and tol is None:
        depth = len(word)
    proj = project(ctx.family, ctx.omega, word, depth=int(depth) if depth is not None else None,
                   tol=float(tol) if tol is not None else None, exact_depth=int(ctx.params["exact_depth"]))
    box = proj.ffi
    cls = digits_of(ctx.family, ctx.omega, proj.point, proj.depth).classification if proj.depth else None
    out.json({"word": list(proj.word), "point": proj.point, "error_bound": proj.error_bound,
              "classification": cls, "series": series_expansion(ctx.family, ctx.omega, proj.word),
              "ffi": [box.left, box.right], "log_length": box.log_length,
              "omega_prefix": list(box.omega_prefix)})
    return EXIT_OK


def cmd_digits(ctx: Context, out: Output) -> int:
    from .expansion import digits_of

    x = parse_number(ctx.need("x"), "x")
    if not 0 <= x <= 1:
        raise ConfigError(f"x = {x} is outside [0, 1]", "x")
    n = int(ctx.need("n"))
    exp = digits_of(ctx.family, ctx.omega, x, n)
    res = exp.to_dict()
    res["point"] = x
    if exp.ffi is not None:
        res["ffi"] = [exp.ffi.left, exp.ffi.right]
        res["error_bound"] = exp.ffi.right - exp.ffi.left
    else:
        res["error_bound"] = None
    res["omega_prefix"] = list(exp.omega_prefix)
    out.json(res)
    return EXIT_OK


_FREQ_COLUMNS = ["n", "d", "count", "count/n", "alpha_d", "deviation"]


def cmd_weave(ctx: Context, out: Output) -> int:
    from .frequency import level_set_membership_trace, weave_spectrum

    alpha = ctx.need_alpha()
    n = int(ctx.need("n"))
    m = int(ctx.params["m"] or 8)
    _, prefix, word = weave_spectrum(ctx.family, alpha, n, ctx.omega)
    table = level_set_membership_trace(ctx.family, alpha, prefix, word, m=m,
                                       min_alpha=float(ctx.params["min_alpha"]))
    out.csv(_FREQ_COLUMNS, table.to_csv_rows(),
            {"max_deviation": max((d for _, d in table.max_deviation), default=0.0)})
    return EXIT_OK


def cmd_freq(ctx: Context, out: Output) -> int:
    from .frequency import checkpoints_for, frequency_sequence

    alpha = ctx.need_alpha()
    s = ctx.params["symbol"] or ctx.family.symbols[0]
    if s not in ctx.family:
        raise ConfigError(f"unknown symbol {s!r}", "symbol")
    law = alpha.law(s)
    if law is None:
        raise ConfigError(f"symbol {s!r} carries no mass", "alpha")
    n = int(ctx.need("n"))
    m = int(ctx.params["m"] or 8)
    seq = frequency_sequence(law, n)
    width = m + 1
    rows, worst = [], 0.0
    counts = np.zeros(width + 1, dtype=np.int64)
    prev = 0
    weights = [float(law(b)) for b in range(1, width)]
    for c in checkpoints_for(n):
        counts += np.bincount(np.minimum(seq[prev:c], width), minlength=width + 1)
        prev = c
        for b in range(1, width):
            dev = abs(counts[b] / c - weights[b - 1])
            worst = max(worst, dev)
            rows.append([c, f"{s}:{b}", int(counts[b]), counts[b] / c, weights[b - 1], dev])
    out.csv(_FREQ_COLUMNS, rows, {"max_deviation": worst, "max_digit": int(seq.max()) if n else None})
    return EXIT_OK


def _trace_rows(trace, full: bool):
    from .frequency import checkpoints_for

    rows = trace.rows()
    if full or not rows:
        return rows
    first = rows[0][0]
    keep = {c + first - 1 for c in checkpoints_for(len(rows))}
    return [r for r in rows if r[0] in keep]


def cmd_sample(ctx: Context, out: Output) -> int:
    from .dimension import beta
    from .measure import FibreBernoulli, local_dimension_trace

    alpha = ctx.need_alpha()
    n = int(ctx.need("n"))
    fb = FibreBernoulli(ctx.family, alpha, ctx.omega, seed=ctx.seed)
    word = fb.sample(n)
    tr = local_dimension_trace(fb, word)
    tr.comparator = beta(ctx.family, alpha, M=int(ctx.params["M"])).beta
    out.csv(["n", "log_mass", "log_length", "ratio", "comparator"], _trace_rows(tr, ctx.params["full"]),
            {"final_ratio": tr.final, "beta": tr.comparator, "seed": ctx.seed})
    return EXIT_OK


def cmd_localdim(ctx: Context, out: Output) -> int:
    from .dimension import beta
    from .measure import FibreBernoulli, local_dimension_trace

    alpha = ctx.need_alpha()
    word = _int_list(ctx.need("word"), "word")
    if not word:
        raise ConfigError("word must be non-empty", "word")
    fb = FibreBernoulli(ctx.family, alpha, ctx.omega)
    tr = local_dimension_trace(fb, word)
    tr.comparator = beta(ctx.family, alpha, M=int(ctx.params["M"])).beta
    out.csv(["n", "log_mass", "log_length", "ratio", "comparator"], _trace_rows(tr, True),
            {"final_ratio": tr.final, "beta": tr.comparator})
    return EXIT_OK


def cmd_etalower(ctx: Context, out: Output) -> int:
    from .measure import EaSampler, build_base_sequence, eta_lower_trace, kappa_thresholds, theta_schedule

    alpha = ctx.need_alpha()
    fam = ctx.family
    eps = parse_number(ctx.params["eps"], "eps")
    delta = parse_number(ctx.params["delta"], "delta")
    gamma = parse_number(ctx.params["gamma"], "gamma")
    sym = ctx.params["symbol"] or max(fam.symbols, key=lambda s: fam[s].eta)
    if sym not in fam:
        raise ConfigError(f"unknown symbol {sym!r}", "symbol")
    if fam[sym].eta != fam.eta or fam.eta == 0:
        raise ConfigError(f"symbol {sym!r} does not attain a positive eta of the family", "symbol")
    K = int(ctx.params["k"])
    sched = theta_schedule(ctx.omega, sym, gamma, K)
    kap = kappa_thresholds(eps, delta, [fam[s] for s in fam.symbols])
    if kap.kappa > K:
        raise ConfigError(f"kappa = {kap.kappa} exceeds the schedule horizon {K}", "k")
    depth = sched.theta(K)
    base = build_base_sequence(fam, alpha, ctx.omega, depth, eps)
    sampler = EaSampler(fam, base, sched, kap.kappa, eps, delta, seed=ctx.seed)
    tr = eta_lower_trace(sampler, depth)
    rows = tr.rows() if ctx.params["full"] else [r for r in tr.rows() if r[0] in set(sched.thetas)]
    out.csv(["n", "log_mass", "log_length", "ratio", "comparator", "c_n"], rows,
            {"final_ratio": tr.final, "comparator": tr.comparator, "kappa1": kap.kappa1,
             "kappa2": kap.kappa2, "kappa": kap.kappa, "symbol": sym, "depth": depth,
             "base_bound": base.realized_bound, "seed": ctx.seed})
    return EXIT_OK


def cmd_approx(ctx: Context, out: Output) -> int:
    from .approximation import approximant_dimension, approximate_system

    m = int(ctx.need("m"))
    syms = [ctx.params["symbol"]] if ctx.params["symbol"] else ctx.family.symbols
    tables = {}
    for s in syms:
        if s not in ctx.family:
            raise ConfigError(f"unknown symbol {s!r}", "symbol")
        tables[s] = approximate_system(ctx.family[s], m).branch_table()
    if ctx.params["csv"]:
        rows = [[s, r["digit"], r["interval"][0], r["interval"][1], r["ratio"], r["orientation"],
                 r["merged"]] for s, tab in tables.items() for r in tab]
        out.csv(["symbol", "digit", "left", "right", "ratio", "orientation", "merged"], rows)
        return EXIT_OK
    result: Dict[str, Any] = {"m": m, "systems": tables}
    if ctx.alpha is not None:
        d = approximant_dimension(ctx.family, ctx.alpha, m)
        result["dimension"] = {"beta_m": d.beta_m, "e_m": d.e_m, "R_m": d.ratio_m, "bound": d.bound}
    out.json(result)
    return EXIT_OK


HANDLERS = {
    "dim": cmd_dim, "eta": cmd_eta, "beta": cmd_beta, "coverrate": cmd_coverrate,
    "coversum": cmd_coversum, "expand": cmd_expand, "digits": cmd_digits, "weave": cmd_weave,
    "freq": cmd_freq, "sample": cmd_sample, "localdim": cmd_localdim, "etalower": cmd_etalower,
    "approx": cmd_approx, "validate": cmd_validate,
}


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Abort(EXIT_CONFIG, message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="family JSON, or a previous report to rerun")
    common.add_argument("--alpha", help='frequency vector, e.g. "geometric:1/2" or "L=3/4:dirac:1;B=1/4:uniform"')
    common.add_argument("--omega", help='driving sequence: a symbol, "weave", "periodic:A,B", '
                                        '"bernoulli:A=1/2,B=1/2" or JSON')
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--seed", type=int)
    common.add_argument("--exact-depth", dest="exact_depth", type=int)

    p = _Parser(prog="ngls", description="Non-autonomous GLS expansions and dimension diagnostics.")
    p.add_argument("--version", action="version", version=f"ngls {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    add("validate", "check that each system tiles [0, 1]").add_argument("--m", type=int)
    e = add("eta", "exponent of convergence per system")
    e.add_argument("--horizon", type=int)
    e.add_argument("--points", type=int)
    for name, help_ in (("beta", "the entropy-to-Lyapunov liminf"), ("dim", "the dimension formula")):
        q = add(name, help_)
        q.add_argument("--M", type=int)
        q.add_argument("--trace", action="store_true", help="emit the R_m trace as CSV")
        if name == "beta":
            q.add_argument("--window", help="lo,hi range of m for the liminf")
    c = add("coverrate", "asymptotic log-rate of the cover sums")
    c.add_argument("--t")
    c.add_argument("--m", type=int)
    c = add("coversum", "exact finite-n cover sum")
    c.add_argument("--t")
    c.add_argument("--m", type=int)
    c.add_argument("--n", type=int)
    c.add_argument("--eps-window", dest="eps_window")
    c.add_argument("--digit-cap", dest="digit_cap", type=int)
    c.add_argument("--cap", type=int)
    x = add("expand", "digits to a point")
    x.add_argument("--digits")
    x.add_argument("--depth", type=int)
    x.add_argument("--tol", type=float)
    x = add("digits", "a point to its digits")
    x.add_argument("--x")
    x.add_argument("--n", type=int)
    for name, help_ in (("weave", "level-set word from greedy streams"), ("freq", "greedy stream of one law")):
        q = add(name, help_)
        q.add_argument("--n", type=int)
        q.add_argument("--m", type=int)
        if name == "weave":
            q.add_argument("--min-alpha", dest="min_alpha", type=float)
        else:
            q.add_argument("--symbol")
    q = add("sample", "sample a word from the fibre measure and trace its local dimension")
    q.add_argument("--n", type=int)
    q.add_argument("--M", type=int)
    q.add_argument("--full", action="store_true")
    q = add("localdim", "local dimension trace of a given word")
    q.add_argument("--word")
    q.add_argument("--M", type=int)
    q = add("etalower", "ratio trace of the planted-digit measure")
    for flag in ("--eps", "--delta", "--gamma", "--symbol"):
        q.add_argument(flag)
    q.add_argument("--k", type=int)
    q.add_argument("--full", action="store_true")
    q = add("approx", "finite approximation branch table")
    q.add_argument("--m", type=int)
    q.add_argument("--symbol")
    q.add_argument("--csv", action="store_true")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _Abort(EXIT_CONFIG, f"missing command (one of {', '.join(COMMANDS)})")
        ctx = Context(args)
        out = Output(args.out, ctx.header())
        return HANDLERS[args.command](ctx, out)
    except _Abort as exc:
        print(f"ngls: error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, DigitError, StreamExhaustedError) as exc:
        print(f"ngls: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergentTailError, CombinatorialGuardError) as exc:
        print(f"ngls: numeric guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


def run(argv: Optional[List[str]] = None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())

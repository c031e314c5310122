"""Dimension of frequency level sets and the cover-sum diagnostics behind its upper bound.

The dimension of the level set is max(eta_T, beta_T(alpha)) where eta is
the exponent of convergence of sum_b N_b^-t and beta is the liminf over m of

    R_m = (sum_s a_s log a_s - sum_{D_m} a_d log a_d) / sum_{D_m} a_d log N_d.

When sum_d a_d log N_d diverges the dimension is eta_T.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ._numeric import xlogx
from .errors import CombinatorialGuardError, ConfigError, DivergentTailError
from .frequency import FrequencyVector, check_dagger
from .gls_core import Family, GlsSystem, ParametricSystem, omega_prefix

DEFAULT_BETA_M = 200
DEFAULT_ETA_HORIZON = 2 ** 20
DEFAULT_EPS_WINDOW = Fraction(1, 20)
ENUMERATION_CAP = 10 ** 6


# ---------------------------------------------------------------- eta

@dataclass
class EtaResult:
    value: float
    estimate: float
    analytic: Optional[float]
    grid: List[int]
    ratios: List[float]
    error_estimate: float

    def to_dict(self):
        return {"eta": self.value, "estimate": self.estimate, "analytic": self.analytic,
                "error_estimate": self.error_estimate,
                "grid": self.grid, "ratios": self.ratios}


def _neville_at_zero(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Value at x = 0 of the interpolating polynomial through (xs, ys)."""
    p = list(ys)
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i])
    return p[0]


def eta(system: GlsSystem, horizon: int = DEFAULT_ETA_HORIZON, points: int = 4) -> EtaResult:
    """Exponent of convergence as lim log n / log N_n.

    The ratio is sampled at n = 2^j up to the horizon and extrapolated to
    j -> infinity by a polynomial in 1/j through the last ``points`` samples
    (the ratio for b^p growth is 1/(p + c/log n), smooth in 1/j).
    """
    if not system.infinite:
        return EtaResult(0.0, 0.0, 0.0, [], [], 0.0)
    if horizon < 4:
        raise ConfigError("eta horizon must be at least 4", "horizon")
    J = int(math.floor(math.log2(horizon)))
    js = list(range(2, J + 1))
    grid = [2 ** j for j in js]
    ratios = [math.log(n) / system.log_N(n) for n in grid]
    k = min(points, len(js))
    xs = [1.0 / j for j in js[-k:]]
    est = _neville_at_zero(xs, ratios[-k:])
    lower = _neville_at_zero(xs[1:], ratios[-k + 1:]) if k > 1 else ratios[-1]
    est = min(max(est, 0.0), 1.0)
    analytic = float(system.eta) if isinstance(system, ParametricSystem) else None
    value = analytic if analytic is not None else est
    return EtaResult(value, est, analytic, grid, ratios, abs(est - lower))


# ---------------------------------------------------------------- beta

def _digit_arrays(alpha: FrequencyVector, s: str, M: int):
    """alpha_(s,b), log alpha_(s,b) and log N_(s,b) for b = 1..min(M, B_s)."""
    sys_ = alpha.family[s]
    m = M if sys_.infinite else min(M, max(sys_.digits()))
    a = alpha.values(s, m)
    la = np.array([alpha.log_alpha(s, b) for b in range(1, m + 1)])
    if isinstance(sys_, ParametricSystem):
        lN = sys_.log_N_array(np.arange(1, m + 1))
    else:
        lN = np.array([sys_.log_N(b) if sys_.has_digit(b) else 0.0 for b in range(1, m + 1)])
    with np.errstate(invalid="ignore"):
        ent = np.where(a > 0, a * la, 0.0)
        lyap = np.where(a > 0, a * lN, 0.0)
    return a, ent, lyap


_GROWTH = {"luroth": "log", "power": "log", "geometric": "linear"}


def lyapunov_divergent(family: Family, alpha: FrequencyVector) -> bool:
    """Comparison test for sum_d alpha_d log N_d = infinity.

    log N_b grows like log b (Lüroth, power rules) or like b (geometric);
    the alpha tail is zero, geometric, b^-p or 1/(b log^q b).
    """
    for s in family.symbols:
        sys_ = family[s]
        law = alpha.law(s)
        if not sys_.infinite or law is None or alpha.alpha_s(s) == 0 or law.finite_support:
            continue
        growth = _GROWTH[sys_.kind]
        tail = law.tail
        if tail.kind == "geometric":
            continue
        if tail.kind == "power":
            if growth == "linear" and tail.p <= 2:
                return True
            continue
        if tail.kind == "logpower":
            if growth == "linear" or tail.q <= 2:
                return True
    return False


@dataclass
class BetaResult:
    ms: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    ratios: np.ndarray
    beta: float
    oscillation: float
    window: Tuple[int, int]
    divergent: bool
    symbol_entropy: float

    def trace_rows(self):
        return [[int(m), float(a), float(b), float(r)]
                for m, a, b, r in zip(self.ms, self.numerator, self.denominator, self.ratios)]


def _window_liminf(ratios: np.ndarray, M: int, window=None):
    lo, hi = window if window else (max(1, M // 2), M)
    seg = ratios[lo - 1:hi]
    seg = seg[~np.isnan(seg)]
    if len(seg) == 0:
        return math.nan, math.nan, (lo, hi)
    return float(seg.min()), float(seg.max() - seg.min()), (lo, hi)


def beta(family: Family, alpha: FrequencyVector, M: int = DEFAULT_BETA_M, window=None) -> BetaResult:
    """Trace of R_m for m = 1..M and the liminf estimate min R_m over [M/2, M]."""
    if M < 1:
        raise ConfigError("M must be >= 1", "M")
    if alpha.family is not family and alpha.family.symbols != family.symbols:
        raise ConfigError("alpha was built for a different family", "alpha")
    if not check_dagger(family, alpha):
        raise ConfigError("some symbol carries no mass", "alpha")
    ent_inc = np.zeros(M)
    lyap_inc = np.zeros(M)
    for s in family.symbols:
        _, ent, lyap = _digit_arrays(alpha, s, M)
        ent_inc[:len(ent)] += ent
        lyap_inc[:len(lyap)] += lyap
    h_sym = math.fsum(xlogx(alpha.alpha_s(s)) for s in family.symbols)
    num = h_sym - np.cumsum(ent_inc)
    den = np.cumsum(lyap_inc)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    b, osc, win = _window_liminf(ratios, M, window)
    return BetaResult(np.arange(1, M + 1), num, den, ratios, b, osc, win,
                      lyapunov_divergent(family, alpha), h_sym)


@dataclass
class DimensionReport:
    eta_per_symbol: Dict[str, float]
    eta_T: float
    beta: float
    beta_oscillation: float
    lyapunov_divergent: bool
    dim: float
    trace: BetaResult = field(repr=False, default=None)

    def to_dict(self):
        return {"eta": self.eta_T, "eta_per_symbol": self.eta_per_symbol, "beta": self.beta,
                "beta_oscillation": self.beta_oscillation, "divergent": self.lyapunov_divergent,
                "dim": self.dim, "beta_window": list(self.trace.window) if self.trace else None}


def dim_formula(family: Family, alpha: FrequencyVector, M: int = DEFAULT_BETA_M) -> DimensionReport:
    """max(eta_T, beta), or eta_T when the Lyapunov sum diverges."""
    etas = {s: float(family[s].eta) for s in family.symbols}
    eta_T = max(etas.values())
    res = beta(family, alpha, M)
    if res.divergent:
        dim = eta_T
    else:
        dim = max(eta_T, res.beta)
    return DimensionReport(etas, eta_T, res.beta, res.oscillation, res.divergent, dim, res)


def flmw_dim(family: Family, alpha: FrequencyVector, M: int = DEFAULT_BETA_M, trace=False):
    """Single-system formula max(eta, liminf_m -sum_{k<=m} a_k log a_k / sum_{k<=m} a_k log N_k)."""
    if len(family) != 1:
        raise ConfigError("the single-system formula needs a one-symbol family", "family")
    s = family.symbols[0]
    system = family[s]
    m = M if system.infinite else min(M, max(system.digits()))
    a = alpha.values(s, m)
    la = np.array([alpha.log_alpha(s, k) for k in range(1, m + 1)])
    lN = system.log_N_array(np.arange(1, m + 1)) if isinstance(system, ParametricSystem) \
        else np.array([system.log_N(k) for k in range(1, m + 1)])
    ent = np.zeros(M)
    lyap = np.zeros(M)
    with np.errstate(invalid="ignore"):
        ent[:m] = np.where(a > 0, a * la, 0.0)
        lyap[:m] = np.where(a > 0, a * lN, 0.0)
    num = 0.0 - np.cumsum(ent)
    den = np.cumsum(lyap)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    b, _, _ = _window_liminf(ratios, M)
    divergent = lyapunov_divergent(family, alpha)
    value = float(system.eta) if divergent else max(float(system.eta), b)
    if trace:
        return value, ratios
    return value


# ---------------------------------------------------------------- count vectors and cover sums

@dataclass(frozen=True)
class CountVector:
    counts: Tuple[int, ...]  # ordered as the keys
    keys: Tuple[Tuple[str, int], ...]
    n: int

    def as_dict(self):
        return dict(zip(self.keys, self.counts))


def _tau(prefix: Sequence[str], symbols: Sequence[str]) -> Dict[str, int]:
    tau = {s: 0 for s in symbols}
    for s in prefix:
        tau[s] += 1
    return tau


def _window_range(n: int, a: Fraction, eps: Fraction, cap: int) -> range:
    """Integers k in [0, cap] with |k/n - a| < eps."""
    lo = math.floor(n * (a - eps)) + 1
    hi = math.ceil(n * (a + eps)) - 1
    return range(max(lo, 0), min(hi, cap) + 1)


def enumerate_count_vectors(family: Family, omega, alpha: FrequencyVector, m: int, eps, n: Optional[int] = None,
                            cap: int = ENUMERATION_CAP) -> List[CountVector]:
    """All (n_d)_{d in D_m} with |n_d/n - alpha_d| < eps and sum_{b<=m} n_(s,b) <= tau_s(omega, n)."""
    prefix = omega_prefix(omega, n if n is not None else len(omega))
    n = len(prefix)
    eps = Fraction(eps) if not isinstance(eps, float) else Fraction(repr(eps))
    keys = tuple(family.digits(m))
    tau = _tau(prefix, family.symbols)
    ranges = []
    total = 1
    for s, b in keys:
        a = alpha(s, b)
        a = a if isinstance(a, Fraction) else Fraction(a)
        r = _window_range(n, a, eps, tau[s])
        ranges.append(r)
        total *= len(r)
    if total > cap:
        raise CombinatorialGuardError(f"{total} candidate count vectors exceed the cap {cap}")
    # group by symbol so the per-symbol budget prunes early
    out = []
    by_sym: Dict[str, List[int]] = {}
    for i, (s, _) in enumerate(keys):
        by_sym.setdefault(s, []).append(i)
    per_sym = []
    for s in family.symbols:
        idx = by_sym.get(s, [])
        options = [c for c in itertools.product(*(ranges[i] for i in idx)) if sum(c) <= tau[s]]
        per_sym.append((idx, options))
    for combo in itertools.product(*(opts for _, opts in per_sym)):
        counts = [0] * len(keys)
        for (idx, _), c in zip(per_sym, combo):
            for i, v in zip(idx, c):
                counts[i] = v
        out.append(CountVector(tuple(counts), keys, n))
    return out


@dataclass
class CoverSum:
    log_value: float
    n_vectors: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def exact_cover_sum(family: Family, omega, alpha: FrequencyVector, t: float, m: int, eps, n: Optional[int] = None,
                    digit_cap: Optional[int] = None, cap: int = ENUMERATION_CAP) -> CoverSum:
    """log of sum over N_n of prod N_d^{-t n_d} * prod_s T_s^{tau_s - n_s} * multinomial,

    with T_s = sum_{b > m} N_(s,b)^-t (digits capped at ``digit_cap`` if
    given). Log-factorials are exact (lgamma), no Stirling step.
    """
    prefix = omega_prefix(omega, n if n is not None else len(omega))
    n = len(prefix)
    vecs = enumerate_count_vectors(family, prefix, alpha, m, eps, n, cap=cap)
    tau = _tau(prefix, family.symbols)
    keys = tuple(family.digits(m))
    logN = np.array([family[s].log_N(b) for s, b in keys])
    logT = {}
    for s in family.symbols:
        sys_ = family[s]
        try:
            logT[s] = sys_.log_tail_power_sum(m, t, digit_cap)
        except DivergentTailError:
            if tau[s] == 0:
                logT[s] = 0.0
            else:
                raise
    if not vecs:
        return CoverSum(-math.inf, 0)
    sym_of = [s for s, _ in keys]
    lg_tau = math.fsum(math.lgamma(tau[s] + 1) for s in family.symbols)
    terms = []
    for v in vecs:
        ns = {s: 0 for s in family.symbols}
        for s, c in zip(sym_of, v.counts):
            ns[s] += c
        term = -t * float(np.dot(logN, v.counts)) + lg_tau
        term -= math.fsum(math.lgamma(c + 1) for c in v.counts)
        dead = False
        for s in family.symbols:
            rest = tau[s] - ns[s]
            term -= math.lgamma(rest + 1)
            if rest > 0:
                if logT[s] == -math.inf:
                    dead = True
                    break
                term += rest * logT[s]
        if not dead:
            terms.append(term)
    if not terms:
        return CoverSum(-math.inf, len(vecs))
    return CoverSum(float(special.logsumexp(terms)), len(vecs))


# ---------------------------------------------------------------- rate function

def _tail_parts(family: Family, alpha: FrequencyVector, t: float, m: int):
    """Per symbol: tail mass A_s = sum_{b>m} alpha_(s,b) and log sum_{b>m} N_(s,b)^-t."""
    out = {}
    for s in family.symbols:
        mass = alpha.tail_mass(s, m)
        if mass == 0:
            out[s] = (0.0, None)
            continue
        out[s] = (float(mass), family[s].log_tail_power_sum(m, t))
    return out


def cover_rate(family: Family, alpha: FrequencyVector, t: float, m: int) -> float:
    """Leading-order exponential rate g(t; m) of the cover sums.

    g = -t sum_{D_m} a_d log N_d + sum_s A_s log T_s(t) + sum_s a_s log a_s
        - sum_{D_m} a_d log a_d - sum_s A_s log A_s,
    with A_s the alpha-mass and T_s(t) the N^-t sum of digits b > m.
    g < 0 means the covers shrink exponentially at exponent t.
    """
    t = float(t)
    lyap = 0.0
    ent = 0.0
    parts = []
    for s in family.symbols:
        _, e, l = _digit_arrays(alpha, s, m)
        parts.append((e, l))
    lyap = math.fsum(float(l.sum()) for _, l in parts)
    ent = math.fsum(float(e.sum()) for e, _ in parts)
    h_sym = math.fsum(xlogx(alpha.alpha_s(s)) for s in family.symbols)
    tails = _tail_parts(family, alpha, t, m)
    tail_term = math.fsum(A * lT for A, lT in tails.values() if A > 0)
    tail_ent = math.fsum(A * math.log(A) for A, _ in tails.values() if A > 0)
    return -t * lyap + tail_term + h_sym - ent - tail_ent


@dataclass
class RateTerms:
    f_n: float
    g: float
    A: float
    B: float
    C: float
    D: float
    E: float
    remainder: float

    def to_dict(self):
        return dict(self.__dict__)


def rate_terms(family: Family, omega, alpha: FrequencyVector, t: float, m: int, counts: CountVector) -> RateTerms:
    """Split (1/n) log of one cover-sum term into g(t; m), the residuals A..E and the rest.

    The rest is the Stirling error, O(log n / n).
    """
    t = float(t)
    n = counts.n
    prefix = omega_prefix(omega, n)
    tau = _tau(prefix, family.symbols)
    keys = counts.keys
    nd = dict(zip(keys, counts.counts))
    ns = {s: 0 for s in family.symbols}
    for (s, _), c in nd.items():
        ns[s] += c
    tails = _tail_parts(family, alpha, t, m)
    logT = {}
    for s in family.symbols:
        try:
            logT[s] = family[s].log_tail_power_sum(m, t)
        except DivergentTailError:
            logT[s] = math.nan
    xl = lambda x: x * math.log(x) if x > 0 else 0.0

    log_term = -t * math.fsum(c * family[s].log_N(b) for (s, b), c in nd.items())
    log_term += math.fsum((tau[s] - ns[s]) * logT[s] for s in family.symbols if tau[s] - ns[s] > 0)
    log_term += math.fsum(math.lgamma(tau[s] + 1) for s in family.symbols)
    log_term -= math.fsum(math.lgamma(c + 1) for c in nd.values())
    log_term -= math.fsum(math.lgamma(tau[s] - ns[s] + 1) for s in family.symbols)
    f_n = log_term / n

    A = t * math.fsum((float(alpha(s, b)) - c / n) * family[s].log_N(b) for (s, b), c in nd.items())
    B = math.fsum(((tau[s] - ns[s]) / n - tails[s][0]) * logT[s] for s in family.symbols
                  if (tau[s] - ns[s]) > 0 or tails[s][0] > 0)
    C = math.fsum(xl(tau[s] / n) for s in family.symbols) - math.fsum(xlogx(alpha.alpha_s(s)) for s in family.symbols)
    D = math.fsum(xl(float(alpha(s, b))) for s, b in keys) - math.fsum(xl(c / n) for c in nd.values())
    E = math.fsum(xl(tails[s][0]) for s in family.symbols) - math.fsum(xl((tau[s] - ns[s]) / n) for s in family.symbols)
    g = cover_rate(family, alpha, t, m)
    return RateTerms(f_n, g, A, B, C, D, E, f_n - g - (A + B + C + D + E))

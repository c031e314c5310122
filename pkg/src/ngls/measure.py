"""Measures used for the two lower bounds on the dimension.

``FibreBernoulli`` draws digit n from the conditional law of alpha at
omega_n; its FFI masses give the beta bound. ``EaSampler`` plants one huge
digit at each scheduled index theta(k) and copies a base sequence
elsewhere; its FFI masses give the eta bound.

Everything is kept in natural-log space: masses and lengths in these
constructions underflow a double long before the interesting depths.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import special

from ._numeric import ceil_power, log_number, parse_number
from .errors import ConfigError, DigitError
from .frequency import DigitLaw, FrequencyVector, check_dagger, frequency_sequence, weave
from .gls_core import Family, GlsSystem, log_N_of, omega_prefix


# ---------------------------------------------------------------- sampling from digit laws

def _search_decreasing(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """First index i with A[i] <= v for a non-increasing array A."""
    return np.searchsorted(-A, -v, side="left")


def sample_law(law: DigitLaw, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF samples from a digit law.

    With v uniform on (0, 1] the sample is min{b : mass_above(b) <= v}.
    Geometric tails invert in closed form; power tails by bisection on
    Hurwitz zeta values.
    """
    v = 1.0 - rng.random(size)
    cut = law.cut
    above = np.array([float(law.mass_above(b)) for b in range(cut + 1)])
    out = np.empty(size, dtype=np.int64)
    idx = _search_decreasing(above, v) if cut else np.full(size, 1 if law.finite_support else cut + 1)
    idx = np.maximum(idx, 1)
    in_head = idx <= cut if cut else np.zeros(size, dtype=bool)
    if law.finite_support:
        out[:] = np.minimum(idx, max(law.head))
        return out
    out[in_head] = idx[in_head]
    tail_v = v[~in_head]
    t = law.tail
    if t.kind == "geometric":
        r = float(t.r)
        c = float(t.c)
        # mass above b is c r^b / (1 - r); invert for the first b at or below v
        b = np.ceil(np.log(tail_v * (1 - r) / c) / math.log(r) - 1e-12)
        out[~in_head] = np.maximum(b, cut + 1).astype(np.int64)
    elif t.kind == "power":
        p, c = float(t.p), float(t.c)
        mass = lambda bb: c * special.zeta(p, bb + 1.0)
        lo = np.full(tail_v.shape, float(cut))  # mass(lo) > v
        hi = np.full(tail_v.shape, float(cut + 1))
        for _ in range(64):
            bad = mass(hi) > tail_v
            if not bad.any():
                break
            lo = np.where(bad, hi, lo)
            hi = np.where(bad, np.minimum(hi * 2, 2.0 ** 53), hi)
        while True:
            gap = hi - lo > 1
            if not gap.any():
                break
            mid = np.floor((lo + hi) / 2)
            ok = mass(mid) <= tail_v
            hi = np.where(gap & ok, mid, hi)
            lo = np.where(gap & ~ok, mid, lo)
        out[~in_head] = hi.astype(np.int64)
    else:
        raise ConfigError(f"sampling is not supported for {t.kind} tails", "alpha")
    return out


# ---------------------------------------------------------------- fibre Bernoulli measure

class FibreBernoulli:
    """Product measure: digit n has law b -> alpha_(omega_n, b) / alpha_(omega_n)."""

    def __init__(self, family: Family, alpha: FrequencyVector, omega, seed: int = 0):
        if not check_dagger(family, alpha):
            raise ConfigError("some symbol carries no mass", "alpha")
        self.family = family
        self.alpha = alpha
        self.omega = omega
        self.seed = seed

    def prefix(self, n):
        return omega_prefix(self.omega, n)

    def log_step_masses(self, word: Sequence[int]) -> np.ndarray:
        """log(alpha_(w_l, b_l) / alpha_(w_l)) per position."""
        word = np.asarray(word, dtype=np.int64)
        n = len(word)
        syms = np.array(self.prefix(n)) if n else np.array([], dtype=str)
        out = np.empty(n)
        for s in dict.fromkeys(syms.tolist()):
            pos = np.nonzero(syms == s)[0]
            bs = word[pos]
            sys_ = self.family[s]
            if not sys_.infinite:
                bad = [b for b in np.unique(bs).tolist() if not sys_.has_digit(b)]
            else:
                bad = [int(b) for b in bs[bs < 1][:1]]
            if bad:
                raise DigitError(f"digit {bad[0]} not in digit set of system {s}")
            out[pos] = self.alpha.law(s).log_values_at(bs)
        return out

    def log_lengths(self, word: Sequence[int]) -> np.ndarray:
        """-log N_(w_l, b_l) per position."""
        word = np.asarray(word, dtype=np.int64)
        syms = np.array(self.prefix(len(word))) if len(word) else np.array([], dtype=str)
        out = np.empty(len(word))
        for s in dict.fromkeys(syms.tolist()):
            pos = np.nonzero(syms == s)[0]
            out[pos] = -log_N_of(self.family[s], word[pos])
        return out

    def sample(self, n: int, seed: Optional[int] = None) -> np.ndarray:
        rng = np.random.default_rng(self.seed if seed is None else seed)
        syms = np.array(self.prefix(n))
        out = np.empty(n, dtype=np.int64)
        for s in self.family.symbols:
            pos = np.nonzero(syms == s)[0]
            if len(pos):
                out[pos] = sample_law(self.alpha.law(s), len(pos), rng)
        return out


def mu_ffi(measure: FibreBernoulli, word: Sequence[int]) -> float:
    """Natural-log mass of the FFI of ``word``; -inf if some digit has zero mass."""
    if len(word) == 0:
        return 0.0
    return float(math.fsum(measure.log_step_masses(word)))


def sample_level_set(measure: FibreBernoulli, n: int, seed: Optional[int] = None) -> np.ndarray:
    """Digits 1..n drawn independently from the conditional law at omega_n."""
    return measure.sample(n, seed)


@dataclass
class LocalDimTrace:
    n: np.ndarray
    log_mass: np.ndarray
    log_length: np.ndarray
    ratio: np.ndarray
    comparator: Optional[float] = None

    def rows(self):
        comp = self.comparator if self.comparator is not None else ""
        return [[int(a), float(b), float(c), float(d), comp]
                for a, b, c, d in zip(self.n, self.log_mass, self.log_length, self.ratio)]

    @property
    def final(self) -> float:
        return float(self.ratio[-1]) if len(self.ratio) else math.nan


def local_dimension_trace(measure: FibreBernoulli, word: Sequence[int],
                          checkpoints: Optional[Sequence[int]] = None) -> LocalDimTrace:
    """log mu(<b_1..b_n>) / log |<b_1..b_n>| along the prefixes of ``word``.

    This measures the pointwise dimension along FFIs rather than metric balls.
    """
    if len(word) == 0:
        raise ValueError("word must be non-empty")
    lm = np.cumsum(measure.log_step_masses(word))
    ll = np.cumsum(measure.log_lengths(word))
    if np.isneginf(lm).any():
        first = int(np.argmax(np.isneginf(lm))) + 1
        raise ConfigError(f"prefix of length {first} has zero mass", "word")
    ns = np.arange(1, len(word) + 1)
    if checkpoints is not None:
        idx = np.asarray(checkpoints, dtype=np.int64) - 1
        ns, lm, ll = ns[idx], lm[idx], ll[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(ll < 0, lm / np.where(ll < 0, ll, -1.0), np.nan)
    return LocalDimTrace(ns, lm, ll, ratio)


# ---------------------------------------------------------------- theta schedule and thresholds

@dataclass
class ThetaSchedule:
    symbol: str
    gamma: Fraction
    positions: List[int]  # j_1 < j_2 < ... (1-indexed places where omega is the symbol)
    thetas: List[int]  # thetas[k-1] = theta(k)

    def theta(self, k: int) -> int:
        return self.thetas[k - 1]

    @property
    def horizon(self) -> int:
        return len(self.thetas)

    def kappa_of(self, n: int, kappa: int) -> int:
        """min{k >= kappa : theta(k) > n}, by bisection over the table."""
        i = bisect.bisect_right(self.thetas, n, lo=kappa - 1)
        if i >= len(self.thetas):
            raise ValueError(f"schedule too short for depth {n}")
        return i + 1


def theta_schedule(omega, symbol: str, gamma=Fraction(3, 2), horizon: int = 40,
                   scan_limit: int = 10 ** 7) -> ThetaSchedule:
    """theta(k) = j_{ceil(k^gamma)} where j_i is the i-th index with omega_j = symbol."""
    gamma = parse_number(gamma, "gamma")
    if not 1 < gamma < 2:
        raise ConfigError(f"gamma must lie in (1, 2), got {gamma}", "gamma")
    if horizon < 1:
        raise ConfigError("horizon must be >= 1", "horizon")
    need = [ceil_power(k, gamma) for k in range(1, horizon + 1)]
    want = need[-1]
    positions: List[int] = []
    block = 4096
    scanned = 0
    while len(positions) < want:
        if scanned >= scan_limit:
            raise ConfigError(f"symbol {symbol!r} occurs only {len(positions)} times in the first "
                              f"{scanned} places; {want} needed", "omega")
        chunk = omega_prefix(omega, scanned + block)[scanned:]
        positions.extend(scanned + i + 1 for i, s in enumerate(chunk) if s == symbol)
        scanned += block
    positions = positions[:want]
    return ThetaSchedule(symbol, gamma, positions, [positions[c - 1] for c in need])


@dataclass
class Kappa:
    kappa1: int
    kappa2: int
    kappa: int


def _first_true(pred, limit):
    last_false = 0
    for k in range(1, limit + 1):
        if not pred(k):
            last_false = k
    if last_false == limit:
        raise ConfigError(f"no threshold found within {limit}", "scan")
    return last_false + 1


def kappa_thresholds(eps, delta, systems, scan: int = 4096) -> Kappa:
    """Thresholds beyond which 2^k - 2^(delta k) > 2^((1-eps)k) and N_n^eta <= n^(1+eps).

    The first inequality divided by 2^k reads 1 - 2^((delta-1)k) > 2^(-eps k):
    the left side increases and the right side decreases, so it holds from
    its first success on. The second is scanned up to ``scan`` and the
    threshold is one past the last failure.
    """
    eps = parse_number(eps, "eps")
    delta = parse_number(delta, "delta")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ConfigError("eps and delta must lie in (0, 1)", "eps")
    mpmath.mp.dps = 50
    e, d = mpmath.mpf(eps.numerator) / eps.denominator, mpmath.mpf(delta.numerator) / delta.denominator

    kappa1 = None
    for k in range(1, 10 ** 6):
        if 1 - mpmath.power(2, (d - 1) * k) > mpmath.power(2, -e * k):
            kappa1 = k
            break
    if isinstance(systems, GlsSystem):
        systems = [systems]
    kappa2 = 1
    for sys_ in systems:
        if not sys_.infinite or sys_.eta == 0:
            continue
        eta = Fraction(sys_.eta)
        expo = 1 + eps

        if sys_.exact and isinstance(sys_.N(1), Fraction):
            # N^eta <= n^(1+eps)  <=>  N^(a d') <= n^(c b') with eta = a/b', 1+eps = c/d'
            a, b = eta.numerator, eta.denominator
            c, dd = expo.numerator, expo.denominator

            def ok(n, sys_=sys_):
                N = sys_.N(n)
                return N.numerator ** (a * dd) <= (n ** (c * b)) * N.denominator ** (a * dd)
        else:
            ee, xx = mpmath.mpf(eta.numerator) / eta.denominator, 1 + e

            def ok(n, sys_=sys_, ee=ee, xx=xx):
                return ee * sys_.log_N(n) <= xx * mpmath.log(n)
        kappa2 = max(kappa2, _first_true(ok, scan))
    return Kappa(kappa1, kappa2, max(kappa1, kappa2))


# ---------------------------------------------------------------- base sequence and E_a

@dataclass
class BaseSequence:
    digits: np.ndarray  # a_1..a_n
    unperturbed: np.ndarray  # the woven sequence before the square-index change
    perturbed: List[int]  # 1-indexed positions that were changed
    omega: List[str]
    realized_bound: float  # max over n >= start of N_(w_n, a_n) / n^((1+eps)/eta)


def build_base_sequence(family: Family, alpha: FrequencyVector, omega, n: int, eps=Fraction(1, 10),
                        bound_from: int = 2) -> BaseSequence:
    """Woven greedy sequence with a_n replaced by min(B \\ {a_n}) at perfect squares n."""
    if n < 1:
        raise ConfigError("horizon too short", "n")
    if not check_dagger(family, alpha):
        raise ConfigError("some symbol carries no mass", "alpha")
    prefix = omega_prefix(omega, n)
    visits: Dict[str, int] = {}
    for s in prefix:
        visits[s] = visits.get(s, 0) + 1
    streams = {s: frequency_sequence(alpha.law(s), c) for s, c in visits.items()}
    tilde = weave(prefix, streams, n)
    a = tilde.copy()
    changed = []
    r = 1
    while r * r <= n:
        i = r * r - 1
        sys_ = family[prefix[i]]
        digits = sys_.digits(2) if sys_.infinite else sys_.digits()
        alt = [b for b in digits if b != tilde[i]]
        if alt:
            a[i] = min(alt)
            changed.append(r * r)
        r += 1
    inf_etas = [float(family[s].eta) for s in family.symbols if family[s].infinite and family[s].eta > 0]
    bound = math.nan
    if inf_etas:
        c = (1 + float(eps)) / min(inf_etas)
        worst = -math.inf
        for s in dict.fromkeys(prefix):
            pos = np.array([i for i, x in enumerate(prefix) if x == s])
            pos = pos[pos + 1 >= bound_from]
            if len(pos):
                lg = log_N_of(family[s], a[pos]) - c * np.log(pos + 1.0)
                worst = max(worst, float(lg.max()))
        bound = math.exp(worst)
    return BaseSequence(a, tilde, changed, list(prefix), bound)


class EaSampler:
    """Words xi with xi_theta(k) uniform in (2^k - 2^(delta k), 2^k] for k >= kappa, xi = a elsewhere."""

    def __init__(self, family: Family, base: BaseSequence, schedule: ThetaSchedule, kappa: int,
                 eps=Fraction(1, 10), delta=Fraction(9, 10), seed: int = 0):
        self.family = family
        self.base = base
        self.schedule = schedule
        self.kappa = int(kappa)
        self.eps = parse_number(eps, "eps")
        self.delta = parse_number(delta, "delta")
        self.seed = seed
        if self.kappa < 1:
            raise ConfigError("kappa must be >= 1", "kappa")

    def window(self, k: int) -> Tuple[int, int]:
        """Integer window (2^k - 2^(delta k), 2^k] as inclusive bounds; it holds ceil(2^(delta k)) integers."""
        w = ceil_power(2, self.delta * k)
        return 2 ** k - w + 1, 2 ** k

    def window_size(self, k: int) -> int:
        return ceil_power(2, self.delta * k)

    def scheduled(self, depth: int) -> List[Tuple[int, int]]:
        """(k, theta(k)) for kappa <= k with theta(k) <= depth."""
        out = []
        for k in range(self.kappa, self.schedule.horizon + 1):
            t = self.schedule.theta(k)
            if t > depth:
                break
            out.append((k, t))
        return out

    def sample(self, depth: int, seed: Optional[int] = None) -> List[int]:
        if depth > len(self.base.digits):
            raise ConfigError(f"base sequence has only {len(self.base.digits)} digits", "depth")
        rng = np.random.default_rng(self.seed if seed is None else seed)
        xi = [int(b) for b in self.base.digits[:depth]]
        for k, t in self.scheduled(depth):
            lo, hi = self.window(k)
            size = hi - lo + 1
            if size < 2 ** 62:
                off = int(rng.integers(0, size))
            else:
                nbytes = (size.bit_length() + 7) // 8 + 8
                off = int.from_bytes(rng.bytes(nbytes), "little") % size
            xi[t - 1] = lo + off
        return xi

    def log_mass(self, word: Sequence[int]) -> float:
        """log mu_a of the FFI of ``word``: -sum log ceil(2^(delta k)) over scheduled k
        reached by the prefix, or -inf when the word leaves E_a."""
        n = len(word)
        sched = self.scheduled(n)
        on = {t: k for k, t in sched}
        base = self.base.digits
        if n > len(base):
            raise ConfigError(f"base sequence has only {len(base)} digits", "word")
        for i, b in enumerate(word, start=1):
            if i in on:
                lo, hi = self.window(on[i])
                if not lo <= b <= hi:
                    return -math.inf
            elif b != base[i - 1]:
                return -math.inf
        return -math.fsum(log_number(self.window_size(k)) for k, _ in sched)


def sample_Ea(sampler: EaSampler, depth: int, seed: Optional[int] = None) -> List[int]:
    return sampler.sample(depth, seed)


def mu_a_ffi(sampler: EaSampler, word: Sequence[int]) -> float:
    return sampler.log_mass(word)


@dataclass
class EtaLowerTrace:
    n: List[int]
    log_mass: List[float]
    log_length: List[float]
    ratio: List[float]
    c_n: List[float]
    comparator: float
    word: List[int] = field(repr=False, default_factory=list)

    def rows(self):
        return [[a, b, c, d, self.comparator, e]
                for a, b, c, d, e in zip(self.n, self.log_mass, self.log_length, self.ratio, self.c_n)]

    @property
    def final(self) -> float:
        return self.ratio[-1] if self.ratio else math.nan


def eta_lower_trace(sampler: EaSampler, depth: int, seed: Optional[int] = None,
                    eta_T: Optional[float] = None) -> EtaLowerTrace:
    """Ratios log mu_a(prefix) / log |prefix| for n from theta(kappa) to depth.

    Also reports c_n, the share of the planted digits in the length bound,
    and the comparator delta * eta_T / (1 + eps).
    """
    fam = sampler.family
    eta_T = float(fam.eta) if eta_T is None else eta_T
    comparator = float(sampler.delta) * eta_T / (1 + float(sampler.eps))
    start = sampler.schedule.theta(sampler.kappa) if sampler.kappa <= sampler.schedule.horizon else depth + 1
    if depth < start:
        return EtaLowerTrace([], [], [], [], [], comparator)
    xi = sampler.sample(depth, seed)
    prefix = sampler.base.omega[:depth]
    # -log N per position; digits may exceed 2^53, so use exact ints through log_N
    loglen = np.array([-fam[s].log_N(b) for s, b in zip(prefix, xi)])
    base_logN = np.array([fam[s].log_N(int(b)) for s, b in zip(prefix, sampler.base.digits[:depth])])
    cum_len = np.cumsum(loglen)
    cum_base = np.cumsum(base_logN)
    sched = sampler.scheduled(depth)
    ns, lms, lls, ratios, cns = [], [], [], [], []
    log_mass = 0.0
    ksum = 0.0
    si = 0
    ln2 = math.log(2)
    for n in range(start, depth + 1):
        while si < len(sched) and sched[si][1] <= n:
            k = sched[si][0]
            log_mass -= log_number(sampler.window_size(k))
            ksum += k * ln2
            si += 1
        ll = float(cum_len[n - 1])
        ns.append(n)
        lms.append(log_mass)
        lls.append(ll)
        ratios.append(log_mass / ll if ll < 0 else math.nan)
        denom = eta_T / (1 + float(sampler.eps)) * float(cum_base[n - 1]) + ksum
        cns.append(ksum / denom if denom > 0 else math.nan)
    return EtaLowerTrace(ns, lms, lls, ratios, cns, comparator, xi)

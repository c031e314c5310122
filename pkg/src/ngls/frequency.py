"""Frequency vectors, digit counters and the weaving construction.

A frequency vector is stored per symbol as a mass ``alpha_s`` and a
conditional digit law, so ``alpha_(s,b) = alpha_s * law_s(b)``. Laws with
rational heads and geometric tails sum to 1 exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import special

from ._numeric import Number, log_number, parse_number
from .errors import ConfigError, StreamExhaustedError
from .gls_core import Family, omega_prefix

Digit = Tuple[str, int]


# ---------------------------------------------------------------- tail rules

class TailRule:
    """Weights for digits beyond a head cut.

    kinds: ``zero``; ``geometric`` c r^(b-1); ``power`` c b^-p;
    ``logpower`` c / (b log(b+2)^q).
    """

    def __init__(self, kind="zero", c=0, r=None, p=None, q=None):
        self.kind = kind
        self.c = c
        self.r, self.p, self.q = r, p, q
        if kind == "geometric":
            if not 0 < r < 1:
                raise ConfigError(f"geometric tail needs r in (0, 1), got {r}", "tail.r")
        elif kind == "power":
            if not p > 1:
                raise ConfigError(f"power tail needs p > 1, got {p}", "tail.p")
        elif kind == "logpower":
            if not q > 1:
                raise ConfigError(f"logpower tail needs q > 1, got {q}", "tail.q")
        elif kind != "zero":
            raise ConfigError(f"unknown tail kind {kind!r}", "tail.kind")
        if c < 0:
            raise ConfigError("negative tail coefficient", "tail.c")

    @property
    def exact(self) -> bool:
        return self.kind == "zero" or (self.kind == "geometric" and isinstance(self.c, (int, Fraction))
                                       and isinstance(self.r, Fraction))

    def value(self, b: int) -> Number:
        if self.kind == "zero" or self.c == 0:
            return 0
        if self.kind == "geometric":
            return self.c * self.r ** (b - 1)
        if self.kind == "power":
            return float(self.c) * b ** -float(self.p)
        return float(self.c) / (b * math.log(b + 2) ** float(self.q))

    def log_value(self, b: int) -> float:
        if self.kind == "zero" or self.c == 0:
            return -math.inf
        if self.kind == "geometric":
            return log_number(self.c) + (b - 1) * log_number(self.r)
        if self.kind == "power":
            return log_number(self.c) - float(self.p) * math.log(b)
        return log_number(self.c) - math.log(b) - float(self.q) * math.log(math.log(b + 2))

    def values(self, bs: np.ndarray) -> np.ndarray:
        bs = np.asarray(bs, dtype=float)
        if self.kind == "zero" or self.c == 0:
            return np.zeros_like(bs)
        if self.kind == "geometric":
            return np.exp(log_number(self.c) + (bs - 1) * log_number(self.r))
        if self.kind == "power":
            return float(self.c) * bs ** -float(self.p)
        return float(self.c) / (bs * np.log(bs + 2) ** float(self.q))

    def mass_above(self, m: int) -> Number:
        """sum_{b > m} value(b)."""
        m = max(int(m), 0)
        if self.kind == "zero" or self.c == 0:
            return 0
        if self.kind == "geometric":
            return self.c * self.r ** m / (1 - self.r)
        if self.kind == "power":
            return float(self.c) * float(special.zeta(float(self.p), m + 1))
        return float(self.c) * _logpower_tail(m, float(self.q))

    def to_config(self) -> dict:
        out = {"kind": self.kind}
        for k in ("c", "r", "p", "q"):
            v = getattr(self, k)
            if v is not None and not (k == "c" and self.kind == "zero"):
                out[k] = str(v) if isinstance(v, Fraction) else v
        return out


def _logpower_tail(m: int, q: float, K: int = 2000) -> float:
    """sum_{b > m} 1 / (b log(b+2)^q), q > 1.

    Exact sum up to K, then Euler-Maclaurin with the integral done by
    quadrature in u = log x. (mpmath.nsum is unreliable for this slow tail.)
    """
    K = max(K, m)
    bs = np.arange(m + 1, K + 1, dtype=float)
    head = math.fsum(1.0 / (bs * np.log(bs + 2) ** q)) if len(bs) else 0.0
    mpmath.mp.dps = 30
    g = lambda x: 1 / (x * mpmath.log(x + 2) ** q)
    integral = mpmath.quad(lambda u: 1 / mpmath.log(mpmath.exp(u) + 2) ** q,
                           [mpmath.log(K), mpmath.log(K) + 10, mpmath.inf])
    d1 = mpmath.diff(g, K)
    d3 = mpmath.diff(g, K, 3)
    # sum_{b>K} g(b) = int_K^inf g - g(K)/2 - g'(K)/12 + g'''(K)/720
    tail = integral - g(K) / 2 - d1 / 12 + d3 / 720
    return head + float(tail)


# ---------------------------------------------------------------- digit laws

class DigitLaw:
    """Probability law on the digits of one system: explicit head plus a tail rule.

    ``head`` covers digits 1..cut (missing digits have weight 0); the tail
    rule supplies weights for b > cut.
    """

    def __init__(self, head: Mapping[int, Number] = None, tail: TailRule = None,
                 cut: Optional[int] = None, check=True):
        head = {int(b): v for b, v in (head or {}).items()}
        for b, v in head.items():
            if b < 1:
                raise ConfigError(f"digit {b} is not a positive integer", "law.head")
            if v < 0:
                raise ConfigError(f"negative weight for digit {b}", "law.head")
        self.head = {b: head[b] for b in sorted(head) if head[b] != 0}
        self.cut = max(head, default=0) if cut is None else int(cut)
        self.tail = tail or TailRule("zero")
        if check:
            total = self.total()
            if isinstance(total, Fraction) or isinstance(total, int):
                if total != 1:
                    raise ConfigError(f"weights sum to {total}, not 1", "law")
            elif abs(total - 1) > 1e-12:
                raise ConfigError(f"weights sum to {total!r}, not 1", "law")

    @property
    def exact(self) -> bool:
        return self.tail.exact and all(isinstance(v, (int, Fraction)) for v in self.head.values())

    @property
    def finite_support(self) -> bool:
        return self.tail.kind == "zero" or self.tail.c == 0

    @property
    def max_digit(self) -> Optional[int]:
        """Largest digit with positive weight, None for infinite support."""
        if not self.finite_support:
            return None
        return max(self.head, default=0)

    def total(self) -> Number:
        return sum(self.head.values(), Fraction(0)) + self.tail.mass_above(self.cut)

    def __call__(self, b: int) -> Number:
        if b <= self.cut:
            return self.head.get(b, 0)
        return self.tail.value(b)

    def log_value(self, b: int) -> float:
        if b <= self.cut:
            return log_number(self.head.get(b, 0))
        return self.tail.log_value(b)

    def values(self, m: int) -> np.ndarray:
        """Float weights of digits 1..m."""
        out = np.zeros(m, dtype=float)
        for b, v in self.head.items():
            if b <= m:
                out[b - 1] = float(v)
        if m > self.cut:
            out[self.cut:] = self.tail.values(np.arange(self.cut + 1, m + 1))
        return out

    def log_values_at(self, bs) -> np.ndarray:
        """Vectorised log weight of arbitrary digits (-inf where the weight is 0)."""
        bs = np.asarray(bs, dtype=np.int64)
        out = np.full(bs.shape, -np.inf)
        if self.cut:
            table = np.full(self.cut + 1, -np.inf)
            for b, v in self.head.items():
                table[b] = log_number(v)
            mask = bs <= self.cut
            out[mask] = table[bs[mask]]
        mask = bs > self.cut
        if mask.any() and not self.finite_support:
            t = self.tail
            b = bs[mask].astype(float)
            if t.kind == "geometric":
                out[mask] = log_number(t.c) + (b - 1) * log_number(t.r)
            elif t.kind == "power":
                out[mask] = log_number(t.c) - float(t.p) * np.log(b)
            else:
                out[mask] = log_number(t.c) - np.log(b) - float(t.q) * np.log(np.log(b + 2))
        return out

    def mass_above(self, m: int) -> Number:
        """Total weight of digits b > m."""
        head_part = sum((v for b, v in self.head.items() if b > m), Fraction(0))
        return head_part + self.tail.mass_above(max(m, self.cut))

    def mass_upto(self, m: int) -> Number:
        if self.exact:
            return 1 - self.mass_above(m)
        head_part = math.fsum(float(v) for b, v in self.head.items() if b <= m)
        if m <= self.cut:
            return head_part
        return head_part + math.fsum(self.tail.values(np.arange(self.cut + 1, m + 1)))

    def to_config(self) -> dict:
        out = {"head": {str(b): (str(v) if isinstance(v, Fraction) else v) for b, v in self.head.items()},
               "cut": self.cut}
        if not self.finite_support:
            out["tail"] = self.tail.to_config()
        return out

    # named laws
    @classmethod
    def geometric(cls, r) -> "DigitLaw":
        r = parse_number(r, "r")
        return cls({}, TailRule("geometric", c=1 - r, r=r), cut=0)

    @classmethod
    def dirac(cls, b: int) -> "DigitLaw":
        return cls({int(b): Fraction(1)})

    @classmethod
    def uniform(cls, k: int) -> "DigitLaw":
        if k < 1:
            raise ConfigError("uniform law needs k >= 1", "law")
        return cls({b: Fraction(1, k) for b in range(1, k + 1)})

    @classmethod
    def weights(cls, ws: Sequence) -> "DigitLaw":
        ws = [parse_number(w, f"weights[{i}]") for i, w in enumerate(ws)]
        if not ws or any(w < 0 for w in ws) or sum(ws) == 0:
            raise ConfigError("weights must be non-negative with positive sum", "law.weights")
        total = sum(ws)
        return cls({b: w / total for b, w in enumerate(ws, start=1)}, cut=len(ws))

    @classmethod
    def power(cls, p) -> "DigitLaw":
        p = parse_number(p, "p")
        if p <= 1:
            raise ConfigError(f"power law needs p > 1, got {p}", "law.p")
        c = 1.0 / float(special.zeta(float(p), 1))
        return cls({}, TailRule("power", c=c, p=p), cut=0)

    @classmethod
    def logpower(cls, q) -> "DigitLaw":
        q = parse_number(q, "q")
        if q <= 1:
            raise ConfigError(f"logpower law needs q > 1, got {q}", "law.q")
        c = 1.0 / _logpower_tail(0, float(q))
        return cls({}, TailRule("logpower", c=c, q=q), cut=0)

    @classmethod
    def parse(cls, spec, n_digits: Optional[int] = None, path="law") -> "DigitLaw":
        """Parse ``geometric:r``, ``dirac:b``, ``uniform[:k]``, ``weights:w1,w2,...``,
        ``power:p``, ``logpower:q`` or a JSON ``{"head": ..., "tail": ...}`` object."""
        if isinstance(spec, DigitLaw):
            return spec
        if isinstance(spec, dict):
            return cls._from_dict(spec, path)
        if not isinstance(spec, str):
            raise ConfigError(f"cannot parse law {spec!r}", path)
        name, _, arg = spec.strip().partition(":")
        try:
            if name == "geometric":
                return cls.geometric(arg)
            if name == "dirac":
                return cls.dirac(int(arg))
            if name == "uniform":
                if not arg:
                    if n_digits is None:
                        raise ConfigError("uniform without k needs a finite system", path)
                    return cls.uniform(n_digits)
                return cls.uniform(int(arg))
            if name == "weights":
                return cls.weights([w for w in arg.split(",") if w.strip()])
            if name == "power":
                return cls.power(arg)
            if name == "logpower":
                return cls.logpower(arg)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise ConfigError(str(exc).split(": ", 1)[-1], path) from None
            raise ConfigError(f"malformed law {spec!r}", path) from None
        raise ConfigError(f"unknown law {name!r}", path)

    @classmethod
    def _from_dict(cls, d, path):
        head = {int(b): parse_number(v, f"{path}.head.{b}") for b, v in (d.get("head") or {}).items()}
        tail = None
        if d.get("tail"):
            t = d["tail"]
            kind = t.get("kind", "zero")
            kw = {k: parse_number(t[k], f"{path}.tail.{k}") for k in ("c", "r", "p", "q") if k in t}
            if kind in ("power", "logpower") and "c" in kw:
                kw["c"] = float(kw["c"])
            tail = TailRule(kind, **kw)
        return cls(head, tail, cut=d.get("cut"))


# ---------------------------------------------------------------- frequency vectors

class FrequencyVector:
    """alpha over D = {(s, b)}: a mass per symbol times a conditional digit law."""

    def __init__(self, family: Family, masses: Mapping[str, Number], laws: Mapping[str, DigitLaw],
                 check=True):
        self.family = family
        self.masses: Dict[str, Number] = {}
        self.laws: Dict[str, Optional[DigitLaw]] = {}
        for s in family.symbols:
            mass = masses.get(s, 0)
            if mass < 0:
                raise ConfigError("negative symbol mass", f"alpha.{s}")
            self.masses[s] = mass
            law = laws.get(s)
            if law is not None:
                sys_ = family[s]
                if not sys_.infinite:
                    if not law.finite_support or any(not sys_.has_digit(b) for b in law.head):
                        raise ConfigError(f"law puts mass outside the digits of system {s}", f"alpha.{s}")
            elif mass > 0:
                raise ConfigError("positive mass needs a digit law", f"alpha.{s}")
            self.laws[s] = law
        unknown = set(masses) - set(family.symbols)
        if unknown:
            raise ConfigError(f"unknown symbols {sorted(unknown)}", "alpha")
        if check:
            total = sum(self.masses.values())
            if isinstance(total, (int, Fraction)):
                if total != 1:
                    raise ConfigError(f"symbol masses sum to {total}, not 1", "alpha")
            elif abs(total - 1) > 1e-12:
                raise ConfigError(f"symbol masses sum to {total!r}, not 1", "alpha")

    @classmethod
    def single(cls, family: Family, law) -> "FrequencyVector":
        if len(family) != 1:
            raise ConfigError("a bare law needs a single-symbol family", "alpha")
        s = family.symbols[0]
        return cls(family, {s: Fraction(1)}, {s: DigitLaw.parse(law, family[s].digit_count)})

    @classmethod
    def parse(cls, family: Family, spec) -> "FrequencyVector":
        """From ``"law"`` (single symbol), ``"S1=mass:law;S2=mass:law"`` or a JSON object
        ``{"S1": {"mass": "1/2", "law": ...}, ...}``."""
        if isinstance(spec, FrequencyVector):
            return spec
        if isinstance(spec, str) and "=" not in spec:
            return cls.single(family, spec)
        masses, laws = {}, {}
        if isinstance(spec, str):
            for part in spec.split(";"):
                if not part.strip():
                    continue
                s, _, rest = part.partition("=")
                s = s.strip()
                mass, _, law = rest.partition(":")
                masses[s] = parse_number(mass, f"alpha.{s}.mass")
                if s not in family:
                    raise ConfigError(f"unknown symbol {s!r}", f"alpha.{s}")
                if masses[s] > 0:
                    laws[s] = DigitLaw.parse(law, family[s].digit_count, f"alpha.{s}.law")
        elif isinstance(spec, dict):
            for s, entry in spec.items():
                if s not in family:
                    raise ConfigError(f"unknown symbol {s!r}", f"alpha.{s}")
                if isinstance(entry, dict) and "mass" in entry:
                    masses[s] = parse_number(entry["mass"], f"alpha.{s}.mass")
                    if masses[s] > 0:
                        laws[s] = DigitLaw.parse(entry.get("law"), family[s].digit_count, f"alpha.{s}.law")
                else:
                    raise ConfigError("expected {'mass': ..., 'law': ...}", f"alpha.{s}")
        else:
            raise ConfigError(f"cannot parse alpha {spec!r}", "alpha")
        return cls(family, masses, laws)

    def to_config(self) -> dict:
        return {s: {"mass": str(m) if isinstance(m, Fraction) else m,
                    "law": self.laws[s].to_config() if self.laws[s] else None}
                for s, m in self.masses.items()}

    @property
    def symbols(self) -> List[str]:
        return self.family.symbols

    def alpha_s(self, s: str) -> Number:
        return self.masses[s]

    def law(self, s: str) -> Optional[DigitLaw]:
        return self.laws[s]

    def __call__(self, s: str, b: int) -> Number:
        """alpha_(s,b)."""
        law = self.laws[s]
        if law is None or self.masses[s] == 0:
            return 0
        return self.masses[s] * law(b)

    def conditional(self, s: str, b: int) -> Number:
        law = self.laws[s]
        return 0 if law is None else law(b)

    def log_alpha(self, s: str, b: int) -> float:
        law = self.laws[s]
        if law is None or self.masses[s] == 0:
            return -math.inf
        return log_number(self.masses[s]) + law.log_value(b)

    def values(self, s: str, m: int) -> np.ndarray:
        """Float alpha_(s,b) for b = 1..m (m capped at the digit count of finite systems)."""
        sys_ = self.family[s]
        if not sys_.infinite:
            m = min(m, max(sys_.digits()))
        law = self.laws[s]
        if law is None or self.masses[s] == 0:
            return np.zeros(m)
        return float(self.masses[s]) * law.values(m)

    def tail_mass(self, s: str, m: int) -> Number:
        """sum_{b > m} alpha_(s,b)."""
        law = self.laws[s]
        if law is None or self.masses[s] == 0:
            return 0
        return self.masses[s] * law.mass_above(m)

    def items(self, m: int) -> List[Tuple[Digit, Number]]:
        """(d, alpha_d) for d in D_m, family order."""
        return [((s, b), self(s, b)) for s, b in self.family.digits(m)]

    def max_digit(self) -> Optional[int]:
        """Largest digit with positive mass, or None for an infinite support."""
        best = 0
        for s, law in self.laws.items():
            if law is None or self.masses[s] == 0:
                continue
            if law.max_digit is None:
                return None
            best = max(best, law.max_digit)
        return best


def check_dagger(family: Family, alpha: FrequencyVector) -> bool:
    """Every symbol carries some digit of positive mass."""
    return all(alpha.alpha_s(s) > 0 for s in family.symbols)


# ---------------------------------------------------------------- counters

class TauCounter:
    """Running counts tau_d and tau_s along a word."""

    def __init__(self):
        self.n = 0
        self.digit_counts: Dict[Digit, int] = {}
        self.symbol_counts: Dict[str, int] = {}

    def push(self, s: str, b: Optional[int] = None):
        self.n += 1
        self.symbol_counts[s] = self.symbol_counts.get(s, 0) + 1
        if b is not None:
            self.digit_counts[(s, b)] = self.digit_counts.get((s, b), 0) + 1

    def extend(self, symbols: Iterable[str], digits: Optional[Iterable[int]] = None):
        if digits is None:
            for s in symbols:
                self.push(s)
        else:
            for s, b in zip(symbols, digits):
                self.push(s, b)

    def tau(self, key) -> int:
        if isinstance(key, tuple):
            return self.digit_counts.get(key, 0)
        return self.symbol_counts.get(key, 0)


def checkpoints_for(n: int, base: float = 2.0, start: int = 1) -> List[int]:
    """Geometric checkpoints start, start*base, ... and n itself."""
    out = []
    c = start
    while c < n:
        out.append(int(c))
        c = max(int(c) + 1, int(c * base))
    out.append(n)
    return sorted(set(out))


@dataclass
class SpectrumVerdict:
    consistent: bool
    final_deviation: Dict[str, float]
    checkpoints: List[int]
    trace: List[Dict[str, float]]
    tol: float
    note: str = "finite-horizon witness, not a proof of the limit"


def omega_in_spectrum(family: Family, alpha: FrequencyVector, omega, horizon: int,
                      tol: float = 1e-2, checkpoints: Optional[Sequence[int]] = None) -> SpectrumVerdict:
    """Compare tau_s(omega, n)/n with alpha_s at checkpoints up to the horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    syms = family.symbols
    index = {s: i for i, s in enumerate(syms)}
    codes = np.fromiter((index[s] for s in omega_prefix(omega, horizon)), dtype=np.int64, count=horizon)
    cps = list(checkpoints) if checkpoints else checkpoints_for(horizon)
    targets = np.array([float(alpha.alpha_s(s)) for s in syms])
    counts = np.zeros(len(syms), dtype=np.int64)
    prev = 0
    trace = []
    for c in cps:
        counts += np.bincount(codes[prev:c], minlength=len(syms))
        prev = c
        dev = np.abs(counts / c - targets)
        trace.append({"n": c, **{s: float(d) for s, d in zip(syms, dev)}})
    final = {s: trace[-1][s] for s in syms}
    return SpectrumVerdict(all(v < tol for v in final.values()), final, cps, trace, tol)


# ---------------------------------------------------------------- greedy digit sequences

def _as_law(weights) -> DigitLaw:
    if isinstance(weights, DigitLaw):
        return weights
    if isinstance(weights, Mapping):
        return DigitLaw({int(b): parse_number(v) if isinstance(v, str) else v for b, v in weights.items()})
    return DigitLaw({b: (parse_number(v) if isinstance(v, str) else v)
                     for b, v in enumerate(weights, start=1)}, cut=len(weights))


def _activation_table(law: DigitLaw, n: int) -> List[Tuple[int, int, float]]:
    """(activation step, digit, weight) for every digit that becomes active by step n.

    Finite supports are active from the start. For infinite supports digit
    d is eligible at step k once w_d >= 1/k^2 and d <= k; the heaviest
    digit is eligible from step 1 so that the first steps have a candidate.
    """
    if law.finite_support:
        return [(1, b, float(v)) for b, v in law.head.items() if v > 0]
    out = []

    def act(d, w):
        k = max(d, math.ceil(1.0 / math.sqrt(w)))
        while k > d and (k - 1) ** 2 * w >= 1:
            k -= 1
        while k * k * w < 1:
            k += 1
        return k

    for b, v in law.head.items():
        w = float(v)
        if w > 0 and b <= n:
            k = act(b, w)
            if k <= n:
                out.append((k, b, w))
    if not law.finite_support:
        thresh = 1.0 / (n * n)
        start = law.cut + 1
        chunk = 4096
        while start <= n:
            bs = np.arange(start, min(start + chunk, n + 1))
            ws = law.tail.values(bs)
            for b, w in zip(bs.tolist(), ws.tolist()):
                if w >= thresh and w > 0:
                    k = act(b, w)
                    if k <= n:
                        out.append((k, b, w))
            # tails are non-increasing, so once below threshold nothing later activates
            if ws[-1] < thresh:
                break
            start += chunk
    heavy = max(out, key=lambda e: (e[2], -e[1]), default=None)
    if heavy is not None:
        out[out.index(heavy)] = (1, heavy[1], heavy[2])
    out.sort()
    return out


def frequency_sequence(weights, n: int) -> np.ndarray:
    """Deterministic digit sequence whose frequencies approach ``weights``.

    At step k the emitted digit maximises k*w_d - count_d over the digits
    with w_d >= 1/k^2 and d <= k; ties go to the smaller digit. Digits
    that have never been emitted all have deficit k*w_d, so only the
    heaviest of them needs checking; the emitted ones are scanned.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    law = _as_law(weights)
    table = _activation_table(law, n)
    out = np.empty(n, dtype=np.int64)
    fresh: List[Tuple[float, int]] = []  # (-w, d) of active, never emitted digits
    ptr = 0
    # emitted digits, kept sorted by digit so strict '>' breaks ties to the smaller one
    ds: List[int] = []
    ws: List[float] = []
    cs: List[int] = []
    np_ws = np_cs = None
    for k in range(1, n + 1):
        while ptr < len(table) and table[ptr][0] <= k:
            _, d, w = table[ptr]
            heapq.heappush(fresh, (-w, d))
            ptr += 1
        best, bi = -math.inf, -1
        if len(ds) <= 48:
            for i in range(len(ds)):
                v = k * ws[i] - cs[i]
                if v > best:
                    best, bi = v, i
        else:
            vals = k * np_ws - np_cs
            bi = int(np.argmax(vals))
            best = float(vals[bi])
        if fresh:
            fv = -fresh[0][0] * k
            fd = fresh[0][1]
            if bi < 0 or fv > best or (fv == best and fd < ds[bi]):
                w = -heapq.heappop(fresh)[0]
                i = _insort(ds, fd)
                ws.insert(i, w)
                cs.insert(i, 1)
                if len(ds) > 48:
                    np_ws = np.array(ws)
                    np_cs = np.array(cs, dtype=float)
                out[k - 1] = fd
                continue
        if bi < 0:
            raise ConfigError("no digit is eligible; weights are empty", "weights")
        cs[bi] += 1
        if np_cs is not None and len(ds) > 48:
            np_cs[bi] += 1
        out[k - 1] = ds[bi]
    return out


def _insort(seq: List[int], x: int) -> int:
    lo, hi = 0, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if seq[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    seq.insert(lo, x)
    return lo


def weave(omega, streams: Mapping[str, Sequence[int]], n: Optional[int] = None) -> np.ndarray:
    """b_n = the tau_{omega_n}(omega, n)-th entry of stream omega_n."""
    if n is None:
        if isinstance(omega, str) or not hasattr(omega, "__len__"):
            raise ValueError("n is required when omega is a rule or a constant symbol")
        n = len(omega)
    prefix = omega_prefix(omega, n)
    syms = np.array(prefix)
    out = np.empty(n, dtype=np.int64)
    for s in dict.fromkeys(prefix):
        pos = np.nonzero(syms == s)[0]
        stream = streams.get(s)
        if stream is None:
            raise StreamExhaustedError(f"no stream for symbol {s!r}")
        arr = np.asarray(stream[:len(pos)] if hasattr(stream, "__getitem__") else list(stream)[:len(pos)],
                         dtype=np.int64)
        if len(arr) < len(pos):
            raise StreamExhaustedError(
                f"stream {s!r} has {len(arr)} digits but omega visits {s!r} {len(pos)} times "
                f"in the first {n} positions")
        out[pos] = arr
    return out


def weave_spectrum(family: Family, alpha: FrequencyVector, n: int, omega=None):
    """Word in the level set: frequency-weave omega plus one greedy stream per symbol.

    Returns (omega rule, omega prefix, digits).
    """
    from .gls_core import OmegaRule

    if omega is None:
        omega = OmegaRule.weave({s: alpha.alpha_s(s) for s in family.symbols})
    prefix = omega_prefix(omega, n)
    visits: Dict[str, int] = {}
    for s in prefix:
        visits[s] = visits.get(s, 0) + 1
    streams = {s: frequency_sequence(alpha.law(s), c) for s, c in visits.items()}
    return omega, prefix, weave(prefix, streams, n)


@dataclass
class DeviationTable:
    rows: List[dict]
    max_deviation: List[Tuple[int, float]]

    def to_csv_rows(self):
        return [[r["n"], f"{r['s']}:{r['b']}", r["count"], r["freq"], r["alpha"], r["deviation"]]
                for r in self.rows]


def level_set_membership_trace(family: Family, alpha: FrequencyVector, omega, word: Sequence[int],
                               m: int = 8, checkpoints: Optional[Sequence[int]] = None,
                               min_alpha: float = 0.0) -> DeviationTable:
    """|tau_d/n - alpha_d| for d in D_m at geometric checkpoints along ``word``."""
    n = len(word)
    if n == 0:
        return DeviationTable([], [])
    prefix = omega_prefix(omega, n)
    syms = family.symbols
    index = {s: i for i, s in enumerate(syms)}
    sym_codes = np.fromiter((index[s] for s in prefix), dtype=np.int64, count=n)
    digits = np.asarray(word, dtype=np.int64)
    width = m + 1
    codes = sym_codes * width + np.minimum(digits, width) - 1
    keys = family.digits(m)
    key_code = [index[s] * width + b - 1 for s, b in keys]
    alphas = [float(alpha(s, b)) for s, b in keys]
    counts = np.zeros(len(syms) * width, dtype=np.int64)
    rows, maxdev = [], []
    prev = 0
    for c in (list(checkpoints) if checkpoints else checkpoints_for(n)):
        counts += np.bincount(codes[prev:c], minlength=len(counts))
        prev = c
        worst = 0.0
        for (s, b), code, a in zip(keys, key_code, alphas):
            if a < min_alpha:
                continue
            cnt = int(counts[code])
            dev = abs(cnt / c - a)
            worst = max(worst, dev)
            rows.append({"n": c, "s": s, "b": b, "count": cnt, "freq": cnt / c, "alpha": a, "deviation": dev})
        maxdev.append((c, worst))
    return DeviationTable(rows, maxdev)

"""Single GLS systems, families of them, driving sequences and fibre intervals.

A system maps digit ``b`` to an affine branch ``f_b`` whose image is an
interval of length ``1/N_b`` in [0, 1]. Digits are labelled so that lengths
are non-increasing; where the images sit is a separate *layout* choice.

Exact systems (finite ones, Lüroth, geometric with rational ratio) return
``Fraction`` values everywhere. The power rule needs zeta values and works
in floats.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ._numeric import Number, log_number, parse_number
from .errors import ConfigError, DigitError, DivergentTailError

DEFAULT_EXACT_DEPTH = 64

_ORIENT_ALIASES = {
    "+": 0, "inc": 0, "increasing": 0, 0: 0, 1: 1, "-": 1,
    "dec": 1, "decreasing": 1,
}
_LAYOUT_ALIASES = {
    "ascending": "ascending",
    "ascending-from-zero": "ascending",
    "descending": "descending",
    "luroth-style": "descending",
    "luroth-style descending": "descending",
}


def _orientation(value, path=None) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"bad orientation {value!r}", path)
    if value == -1:
        return 1
    try:
        return _ORIENT_ALIASES[value]
    except (KeyError, TypeError):
        raise ConfigError(f"bad orientation {value!r}", path) from None


class GlsSystem:
    """Common interface of every system.

    Subclasses provide ``length``, ``interval``, ``orientation``,
    ``tail_mass``, ``tail_power_sum`` and ``locate``.
    """

    symbol: str
    digit_count: Optional[int]  # None means countably infinite
    exact: bool
    ratio_ordered: bool = True
    eta: Number = 0
    kind: str = "finite"

    @property
    def infinite(self) -> bool:
        return self.digit_count is None

    def digits(self, m: Optional[int] = None) -> List[int]:
        """Digits ``b <= m`` (all digits of a finite system when m is None)."""
        raise NotImplementedError

    def check_digit(self, b) -> int:
        if isinstance(b, bool) or not isinstance(b, (int, np.integer)):
            raise DigitError(f"digit {b!r} is not an integer (system {self.symbol})")
        b = int(b)
        if not self.has_digit(b):
            raise DigitError(f"digit {b} not in digit set of system {self.symbol}")
        return b

    def has_digit(self, b: int) -> bool:
        raise NotImplementedError

    def length(self, b: int) -> Number:
        raise NotImplementedError

    def N(self, b: int) -> Number:
        """Reciprocal contraction ratio N_b."""
        ln = self.length(b)
        return 1 / ln if isinstance(ln, Fraction) else 1.0 / ln

    def log_N(self, b: int) -> float:
        return -log_number(self.length(b))

    def interval(self, b: int) -> Tuple[Number, Number]:
        raise NotImplementedError

    def orientation(self, b: int) -> int:
        raise NotImplementedError

    def offset(self, b: int) -> Number:
        """a_b with f_b(x) = (a_b + (-1)^eps x) / N_b."""
        left, right = self.interval(b)
        anchor = right if self.orientation(b) else left
        return anchor * self.N(b)

    def apply(self, b: int, x) -> Number:
        b = self.check_digit(b)
        left, right = self.interval(b)
        ln = self.length(b)
        if self.orientation(b):
            return right - ln * x
        return left + ln * x

    def inverse(self, b: int, y) -> Number:
        """Preimage of y under f_b (y should lie in the image of b)."""
        left, right = self.interval(b)
        ln = self.length(b)
        if self.orientation(b):
            return (right - y) / ln
        return (y - left) / ln

    def tail_mass(self, m: int) -> Number:
        """Sum of lengths over digits b > m."""
        raise NotImplementedError

    def tail_power_sum(self, m: int, t: float, cap: Optional[int] = None) -> float:
        """sum_{m < b (<= cap)} N_b^{-t}; raises DivergentTailError if infinite."""
        raise NotImplementedError

    def log_tail_power_sum(self, m: int, t: float, cap: Optional[int] = None) -> float:
        value = self.tail_power_sum(m, t, cap)
        return math.log(value) if value > 0 else -math.inf

    def locate(self, y) -> List[int]:
        """Digits whose closed image contains y, in increasing order (0, 1 or 2)."""
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class BranchSystem(GlsSystem):
    """System with finitely many explicitly placed branches.

    ``branches`` maps digit label to (left, right, orientation). No
    validation happens here; use :func:`make_finite_system` for checked
    construction or :func:`validate_partition` to audit.
    """

    def __init__(self, symbol: str, branches: Dict[int, Tuple[Number, Number, int]],
                 ratio_ordered: bool = True):
        if not branches:
            raise ConfigError("empty digit set")
        self.symbol = str(symbol)
        self._branches = {int(b): (lo, hi, int(e)) for b, (lo, hi, e) in sorted(branches.items())}
        self._labels = list(self._branches)
        self.digit_count = len(self._labels)
        self.exact = all(isinstance(lo, Fraction) and isinstance(hi, Fraction)
                         for lo, hi, _ in self._branches.values())
        self.ratio_ordered = ratio_ordered
        self.eta = 0
        # spatial order for locate()
        self._spatial = sorted(self._labels, key=lambda b: (self._branches[b][0], self._branches[b][1]))
        self._lefts = [self._branches[b][0] for b in self._spatial]

    @property
    def labels(self) -> List[int]:
        return list(self._labels)

    def digits(self, m=None):
        if m is None:
            return list(self._labels)
        return [b for b in self._labels if b <= m]

    def has_digit(self, b):
        return b in self._branches

    def length(self, b):
        lo, hi, _ = self._branches[b]
        return hi - lo

    def interval(self, b):
        lo, hi, _ = self._branches[b]
        return lo, hi

    def orientation(self, b):
        return self._branches[b][2]

    def tail_mass(self, m):
        return sum((self.length(b) for b in self._labels if b > m), Fraction(0) if self.exact else 0.0)

    def tail_power_sum(self, m, t, cap=None):
        return math.fsum(float(self.length(b)) ** t for b in self._labels
                         if b > m and (cap is None or b <= cap))

    def log_tail_power_sum(self, m, t, cap=None):
        logs = [-t * self.log_N(b) for b in self._labels if b > m and (cap is None or b <= cap)]
        if not logs:
            return -math.inf
        return float(special.logsumexp(logs))

    def locate(self, y):
        i = bisect.bisect_right(self._lefts, y)
        found = []
        for b in self._spatial[max(0, i - 2):i]:
            lo, hi, _ = self._branches[b]
            if lo <= y <= hi:
                found.append(b)
        return sorted(found)

    def describe(self):
        return {
            "id": self.symbol,
            "kind": "intervals",
            "branches": [
                {"digit": b, "interval": [str(lo), str(hi)] if self.exact else [float(lo), float(hi)],
                 "orientation": "-" if e else "+"}
                for b, (lo, hi, e) in self._branches.items()
            ],
        }


class FiniteSystem(BranchSystem):
    """Checked finite system built from (length, orientation) entries laid out left to right."""

    kind = "finite"

    def __init__(self, symbol, entries):
        entries = list(entries)
        if not entries:
            raise ConfigError("empty digit set")
        lengths, orients = [], []
        for i, entry in enumerate(entries):
            if isinstance(entry, (tuple, list)):
                ln, e = entry
            else:
                ln, e = entry, 0
            ln = parse_number(ln, f"lengths[{i}]")
            if ln <= 0:
                raise ConfigError(f"non-positive length {ln}", f"lengths[{i}]")
            lengths.append(ln)
            orients.append(_orientation(e, f"orientations[{i}]"))
        total = sum(lengths)
        if total != 1:
            raise ConfigError(f"lengths sum to {total}, not 1", "lengths")
        # stable sort by non-increasing length gives the digit labels
        order = sorted(range(len(lengths)), key=lambda i: -lengths[i])
        label_of = {pos: rank + 1 for rank, pos in enumerate(order)}
        branches = {}
        cursor = Fraction(0)
        for pos, ln in enumerate(lengths):
            branches[label_of[pos]] = (cursor, cursor + ln, orients[pos])
            cursor += ln
        self._input = list(zip(lengths, orients))
        super().__init__(symbol, branches, ratio_ordered=True)

    def describe(self):
        return {
            "id": self.symbol,
            "kind": "finite",
            "lengths": [str(ln) for ln, _ in self._input],
            "orientations": ["-" if e else "+" for _, e in self._input],
        }


class ParametricSystem(GlsSystem):
    """Infinite system from a named length rule.

    kind ``luroth``: 1/N_b = 1/(b(b+1)); ``geometric``: (1-r) r^(b-1);
    ``power``: b^-p / zeta(p).

    layout ``ascending`` puts digit 1 at the left end ([0, 1/N_1], ...);
    ``descending`` puts it at the right end, so Lüroth digit b sits on
    [1/(b+1), 1/b].
    """

    def __init__(self, symbol, kind, layout="descending", orientation="increasing",
                 r=None, p=None):
        self.symbol = str(symbol)
        self.digit_count = None
        self.ratio_ordered = True
        if kind not in ("luroth", "geometric", "power"):
            raise ConfigError(f"unknown rule {kind!r}", "kind")
        self.kind = kind
        try:
            self.layout = _LAYOUT_ALIASES[layout]
        except KeyError:
            raise ConfigError(f"unknown layout {layout!r}", "layout") from None
        if orientation not in ("increasing", "decreasing", "alternating"):
            raise ConfigError(f"unknown orientation rule {orientation!r}", "orientation")
        self.orientation_rule = orientation
        self.r = self.p = None
        if kind == "luroth":
            self.eta = Fraction(1, 2)
            self.exact = True
        elif kind == "geometric":
            if r is None:
                raise ConfigError("geometric rule needs r", "r")
            r = parse_number(r, "r")
            if not 0 < r < 1:
                raise ConfigError(f"r must lie in (0, 1), got {r}", "r")
            self.r = r
            self.eta = 0
            self.exact = True
        else:
            if p is None:
                raise ConfigError("power rule needs p", "p")
            p = parse_number(p, "p")
            if p <= 1:
                raise ConfigError(f"p must exceed 1, got {p}", "p")
            self.p = p
            self._pf = float(p)
            self._zeta_p = float(special.zeta(self._pf, 1))
            self.eta = Fraction(1) / p
            self.exact = False

    def digits(self, m=None):
        if m is None:
            raise ValueError("infinite system needs a cut m")
        return list(range(1, m + 1))

    def has_digit(self, b):
        return b >= 1

    def length(self, b):
        if self.kind == "luroth":
            return Fraction(1, b * (b + 1))
        if self.kind == "geometric":
            return (1 - self.r) * self.r ** (b - 1)
        return b ** -self._pf / self._zeta_p

    def log_N(self, b):
        if self.kind == "luroth":
            return math.log(b) + math.log(b + 1)
        if self.kind == "geometric":
            return -(log_number(1 - self.r) + (b - 1) * log_number(self.r))
        return self._pf * math.log(b) + math.log(self._zeta_p)

    def tail_mass(self, m):
        """Total length of digits b > m, in closed form."""
        if m <= 0:
            return Fraction(1) if self.exact else 1.0
        if self.kind == "luroth":
            return Fraction(1, m + 1)
        if self.kind == "geometric":
            return self.r ** m
        return float(special.zeta(self._pf, m + 1)) / self._zeta_p

    def interval(self, b):
        if self.layout == "descending":
            return self.tail_mass(b), self.tail_mass(b - 1)
        one = 1 if self.exact else 1.0
        return one - self.tail_mass(b - 1), one - self.tail_mass(b)

    def orientation(self, b):
        if self.orientation_rule == "increasing":
            return 0
        if self.orientation_rule == "decreasing":
            return 1
        return 1 if b % 2 == 0 else 0

    def tail_power_sum(self, m, t, cap=None):
        t = float(t)
        if cap is not None:
            if cap <= m:
                return 0.0
            bs = np.arange(m + 1, cap + 1, dtype=float)
            return math.fsum(np.exp(-t * self._log_N_array(bs)))
        if t <= self.eta:
            raise DivergentTailError(
                f"sum of N_b^-t over b > {m} diverges for t = {t} <= eta = {float(self.eta)} "
                f"(system {self.symbol})")
        return math.exp(self.log_tail_power_sum(m, t))

    def log_tail_power_sum(self, m, t, cap=None):
        t = float(t)
        if cap is not None:
            value = self.tail_power_sum(m, t, cap)
            return math.log(value) if value > 0 else -math.inf
        if t <= self.eta:
            raise DivergentTailError(
                f"sum of N_b^-t over b > {m} diverges for t = {t} <= eta = {float(self.eta)} "
                f"(system {self.symbol})")
        m = max(int(m), 0)
        if self.kind == "geometric":
            lr = log_number(self.r)
            return t * log_number(1 - self.r) + t * m * lr - math.log1p(-math.exp(t * lr))
        if self.kind == "power":
            return float(np.log(special.zeta(self._pf * t, m + 1))) - t * math.log(self._zeta_p)
        return math.log(_luroth_power_tail(m, t))

    def _log_N_array(self, bs):
        if self.kind == "luroth":
            return np.log(bs) + np.log1p(bs)
        if self.kind == "geometric":
            return -(log_number(1 - self.r) + (bs - 1) * log_number(self.r))
        return self._pf * np.log(bs) + math.log(self._zeta_p)

    def log_N_array(self, bs) -> np.ndarray:
        """Vectorised log N_b for an integer array of digits."""
        return self._log_N_array(np.asarray(bs, dtype=float))

    def _first_at_or_below(self, y):
        """Smallest b >= 1 with tail_mass(b) <= y (y > 0)."""
        if self.kind == "luroth" and isinstance(y, Fraction):
            # 1/(b+1) <= y  <=>  b >= 1/y - 1
            return max(1, math.ceil(1 / y - 1))
        if self.kind == "geometric":
            guess = max(1, int(math.floor(log_number(y) / log_number(self.r))) - 1)
            b = guess
            while b > 1 and self.tail_mass(b - 1) <= y:
                b -= 1
            while self.tail_mass(b) > y:
                b += 1
            return b
        hi = 1
        while self.tail_mass(hi) > y:
            hi *= 2
        lo = hi // 2
        # invariant: tail_mass(lo) > y (or lo == 0), tail_mass(hi) <= y
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.tail_mass(mid) <= y:
                hi = mid
            else:
                lo = mid
        return hi

    def locate(self, y):
        if self.layout == "descending":
            # digit b covers [T(b), T(b-1)]
            if y <= 0 or y > 1:
                return []
            b = self._first_at_or_below(y)
            return [b, b + 1] if self.tail_mass(b) == y else [b]
        # digit b covers [1 - T(b-1), 1 - T(b)]
        if y < 0 or y >= 1:
            return []
        b = self._first_at_or_below(1 - y)
        return [b, b + 1] if 1 - self.tail_mass(b) == y else [b]

    def describe(self):
        out = {"id": self.symbol, "kind": self.kind,
               "layout": "luroth-style" if self.layout == "descending" else "ascending",
               "orientation": self.orientation_rule}
        if self.r is not None:
            out["r"] = str(self.r)
        if self.p is not None:
            out["p"] = str(self.p)
        return out


def _luroth_power_tail(m: int, t: float) -> float:
    """sum_{k > m} (k(k+1))^{-t} for t > 1/2.

    Direct summation up to K, then (k(k+1))^-t = sum_j binom(-t, j) k^(-2t-j)
    summed with Hurwitz zeta values; the series converges like K^-j.
    """
    K = max(m, 64)
    direct = 0.0
    if K > m:
        ks = np.arange(m + 1, K + 1, dtype=float)
        direct = math.fsum(np.exp(-t * (np.log(ks) + np.log1p(ks))))
    terms = []
    coef = 1.0
    for j in range(200):
        term = coef * float(special.zeta(2 * t + j, K + 1))
        terms.append(term)
        if j > 2 and abs(term) < 1e-18 * abs(terms[0]):
            break
        coef *= (-t - j) / (j + 1)
    return direct + math.fsum(terms)


def log_N_of(system: GlsSystem, bs) -> np.ndarray:
    """Vectorised log N_b for an array of digits of one system."""
    bs = np.asarray(bs, dtype=np.int64)
    if isinstance(system, ParametricSystem):
        return system.log_N_array(bs)
    labels = system.digits()
    table = np.zeros(max(labels) + 1)
    for b in labels:
        table[b] = system.log_N(b)
    return table[bs]


def make_finite_system(symbol, entries) -> FiniteSystem:
    """Finite system from (length, orientation) pairs laid out left to right.

    >>> make_finite_system("B", [("1/2", "+"), ("1/2", "+")]).N(1)
    Fraction(2, 1)
    """
    return FiniteSystem(symbol, entries)


def make_parametric_system(symbol, rule, layout="descending", orientation="increasing",
                           **params) -> ParametricSystem:
    """Infinite system for ``rule`` in {luroth, geometric (r=...), power (p=...)}."""
    return ParametricSystem(symbol, rule, layout=layout, orientation=orientation, **params)


def map_apply(system: GlsSystem, b: int, x) -> Number:
    """f_b(x) = (a_b + (-1)^eps_b x) / N_b."""
    return system.apply(b, x)


@dataclass
class PartitionReport:
    ok: bool
    checks: Dict[str, bool]
    first_violation: Optional[str] = None
    mass_defect: float = 0.0
    violations: List[str] = field(default_factory=list)

    def to_dict(self):
        return {"ok": self.ok, "checks": self.checks, "first_violation": self.first_violation,
                "violations": self.violations, "mass_defect": self.mass_defect}


def validate_partition(system: GlsSystem, m: int = 100, tol: float = 1e-12) -> PartitionReport:
    """Audit total length, ratio ordering and interior-disjointness of the first m images."""
    if m < 1:
        raise ValueError("m must be >= 1")
    digits = system.digits() if not system.infinite else system.digits(m)
    scanned = digits if not system.infinite else digits[:m]
    violations = []
    checks = {}

    if system.infinite:
        total = sum((system.length(b) for b in scanned), Fraction(0) if system.exact else 0.0)
        total += system.tail_mass(m)
    else:
        total = sum((system.length(b) for b in scanned), Fraction(0) if system.exact else 0.0)
    defect = abs(float(total - 1))
    exact_sum = isinstance(total, Fraction)
    checks["total_length"] = (total == 1) if exact_sum else defect <= tol
    if not checks["total_length"]:
        violations.append(f"lengths sum to {total}, not 1")

    inside = True
    for b in scanned:
        lo, hi = system.interval(b)
        if not (0 <= lo < hi <= 1):
            inside = False
            violations.append(f"image of digit {b} is [{lo}, {hi}], not a subinterval of [0, 1]")
            break
    checks["inside_unit_interval"] = inside

    if system.ratio_ordered:
        ordered = True
        for b1, b2 in zip(scanned, scanned[1:]):
            if system.length(b1) < system.length(b2):
                ordered = False
                violations.append(f"ratio order: digit {b1} shorter than digit {b2}")
                break
        checks["ratio_order"] = ordered

    spans = sorted((system.interval(b) + (b,) for b in scanned), key=lambda s: (s[0], s[1]))
    osc = True
    for (lo1, hi1, b1), (lo2, hi2, b2) in zip(spans, spans[1:]):
        if hi1 > lo2:
            osc = False
            violations.append(f"OSC violation: images of digits {b1} and {b2} overlap on [{lo2}, {min(hi1, hi2)}]")
            break
    checks["open_set_condition"] = osc

    ok = all(checks.values())
    return PartitionReport(ok, checks, violations[0] if violations else None, defect, violations)


def system_from_config(entry: dict, path: str = "symbols[0]") -> GlsSystem:
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", path)
    sid = entry.get("id")
    if sid is None or str(sid) == "":
        raise ConfigError("missing id", f"{path}.id")
    kind = entry.get("kind")
    try:
        if kind == "finite":
            lengths = entry.get("lengths")
            if not isinstance(lengths, list):
                raise ConfigError("expected a list of lengths", f"{path}.lengths")
            orients = entry.get("orientations", ["+"] * len(lengths))
            if len(orients) != len(lengths):
                raise ConfigError("orientations and lengths differ in size", f"{path}.orientations")
            return make_finite_system(sid, list(zip(lengths, orients)))
        if kind == "intervals":
            branches = {}
            for i, br in enumerate(entry.get("branches") or []):
                lo, hi = (parse_number(v, f"branches[{i}].interval") for v in br["interval"])
                branches[int(br.get("digit", i + 1))] = (lo, hi, _orientation(br.get("orientation", "+")))
            return BranchSystem(sid, branches, ratio_ordered=bool(entry.get("ratio_ordered", True)))
        if kind in ("luroth", "geometric", "power"):
            params = {k: entry[k] for k in ("r", "p") if k in entry}
            return make_parametric_system(sid, kind, layout=entry.get("layout", "descending"),
                                          orientation=entry.get("orientation", "increasing"), **params)
    except ConfigError as exc:
        if exc.path and not exc.path.startswith("symbols"):
            raise ConfigError(str(exc).split(": ", 1)[-1], f"{path}.{exc.path}") from None
        if exc.path is None:
            raise ConfigError(str(exc), path) from None
        raise
    raise ConfigError(f"unknown kind {kind!r}", f"{path}.kind")


class Family:
    """Ordered collection of systems indexed by symbol id."""

    def __init__(self, systems: Iterable[GlsSystem]):
        systems = list(systems)
        if not systems:
            raise ConfigError("a family needs at least one symbol", "symbols")
        self._systems: Dict[str, GlsSystem] = {}
        for i, sys_ in enumerate(systems):
            if sys_.symbol in self._systems:
                raise ConfigError(f"duplicate symbol {sys_.symbol!r}", f"symbols[{i}].id")
            self._systems[sys_.symbol] = sys_

    @classmethod
    def from_config(cls, config: dict) -> "Family":
        if not isinstance(config, dict) or not isinstance(config.get("symbols"), list):
            raise ConfigError("expected {'symbols': [...]}", "symbols")
        return cls(system_from_config(e, f"symbols[{i}]") for i, e in enumerate(config["symbols"]))

    @classmethod
    def single(cls, system: GlsSystem) -> "Family":
        return cls([system])

    def to_config(self) -> dict:
        return {"symbols": [s.describe() for s in self._systems.values()]}

    @property
    def symbols(self) -> List[str]:
        return list(self._systems)

    def __getitem__(self, s) -> GlsSystem:
        try:
            return self._systems[s]
        except KeyError:
            raise ConfigError(f"unknown symbol {s!r}") from None

    def __contains__(self, s):
        return s in self._systems

    def __iter__(self):
        return iter(self._systems.values())

    def __len__(self):
        return len(self._systems)

    def digits(self, m: int) -> List[Tuple[str, int]]:
        """D_m = {(s, b) : b <= m}, grouped by symbol then digit."""
        return [(s, b) for s, sys_ in self._systems.items() for b in sys_.digits(m)]

    @property
    def eta(self) -> Number:
        return max(s.eta for s in self._systems.values())


# ---------------------------------------------------------------- driving sequences

class OmegaRule:
    """Deterministic generator n -> omega_n (1-indexed).

    kinds:
      ``periodic``  explicit prefix followed by a repeated tail
      ``weave``     greedy: at step k pick s maximising k*target_s - count_s
      ``bernoulli`` i.i.d. symbols with given probabilities from a seeded RNG

    Values are cached, so repeated calls are cheap and always agree.
    """

    _BLOCK = 1 << 14

    def __init__(self, kind, symbols=None, prefix=(), tail=(), targets=None,
                 probs=None, seed=0):
        self.kind = kind
        self._cache: List[str] = []
        if kind == "periodic":
            self.prefix = [str(s) for s in prefix]
            self.tail = [str(s) for s in tail]
            if not self.tail:
                raise ConfigError("periodic rule needs a non-empty tail", "omega.tail")
            self.symbols = list(dict.fromkeys(self.prefix + self.tail))
        elif kind == "weave":
            if not targets:
                raise ConfigError("weave rule needs targets", "omega.targets")
            self.symbols = [str(s) for s in targets]
            vals = [targets[s] for s in targets]
            self.targets = {str(s): v for s, v in targets.items()}
            if any(v < 0 for v in vals):
                raise ConfigError("negative target", "omega.targets")
            if all(isinstance(v, (int, Fraction)) for v in vals):
                fr = [Fraction(v) for v in vals]
                if sum(fr) != 1:
                    raise ConfigError(f"targets sum to {sum(fr)}, not 1", "omega.targets")
                q = math.lcm(*(f.denominator for f in fr))
                self._weights = [int(f * q) for f in fr]
                self._scale = q
            else:
                if abs(math.fsum(float(v) for v in vals) - 1) > 1e-12:
                    raise ConfigError("targets do not sum to 1", "omega.targets")
                self._weights = [float(v) for v in vals]
                self._scale = 1.0
            self._counts = [0] * len(vals)
        elif kind == "bernoulli":
            if not probs:
                raise ConfigError("bernoulli rule needs probs", "omega.probs")
            self.symbols = [str(s) for s in probs]
            p = np.array([float(v) for v in probs.values()])
            if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ConfigError("probabilities must be non-negative and sum to 1", "omega.probs")
            self.probs = {str(s): v for s, v in probs.items()}
            self.seed = int(seed)
            self._cdf = np.cumsum(p)
            self._cdf[-1] = 1.0
            self._rng = np.random.default_rng(self.seed)
        else:
            raise ConfigError(f"unknown omega kind {kind!r}", "omega.kind")

    @classmethod
    def constant(cls, symbol):
        return cls("periodic", tail=[symbol])

    @classmethod
    def periodic(cls, tail, prefix=()):
        return cls("periodic", prefix=prefix, tail=tail)

    @classmethod
    def weave(cls, targets):
        return cls("weave", targets=targets)

    @classmethod
    def bernoulli(cls, probs, seed=0):
        return cls("bernoulli", probs=probs, seed=seed)

    @classmethod
    def from_config(cls, cfg) -> "OmegaRule":
        if isinstance(cfg, list):
            return cls.periodic(cfg)
        if not isinstance(cfg, dict):
            raise ConfigError("expected an object or list", "omega")
        kind = cfg.get("kind", "periodic")
        if kind == "periodic":
            return cls("periodic", prefix=cfg.get("prefix", []), tail=cfg.get("tail", []))
        if kind == "weave":
            t = cfg.get("targets") or {}
            return cls("weave", targets={s: parse_number(v, f"omega.targets.{s}") for s, v in t.items()})
        if kind == "bernoulli":
            pr = cfg.get("probs") or {}
            return cls("bernoulli", probs={s: parse_number(v, f"omega.probs.{s}") for s, v in pr.items()},
                       seed=cfg.get("seed", 0))
        raise ConfigError(f"unknown omega kind {kind!r}", "omega.kind")

    def to_config(self) -> dict:
        if self.kind == "periodic":
            return {"kind": "periodic", "prefix": self.prefix, "tail": self.tail}
        if self.kind == "weave":
            return {"kind": "weave", "targets": {s: str(v) if isinstance(v, Fraction) else v
                                                 for s, v in self.targets.items()}}
        return {"kind": "bernoulli", "probs": {s: str(v) if isinstance(v, Fraction) else v
                                               for s, v in self.probs.items()}, "seed": self.seed}

    def _extend(self, n):
        have = len(self._cache)
        if n <= have:
            return
        if self.kind == "periodic":
            P, T = self.prefix, self.tail
            for k in range(have, n):
                self._cache.append(P[k] if k < len(P) else T[(k - len(P)) % len(T)])
        elif self.kind == "weave":
            w, q, counts, syms = self._weights, self._scale, self._counts, self.symbols
            r = range(len(w))
            out = self._cache
            for k in range(have + 1, n + 1):
                best, best_i = None, 0
                for i in r:
                    v = k * w[i] - q * counts[i]
                    if best is None or v > best:
                        best, best_i = v, i
                counts[best_i] += 1
                out.append(syms[best_i])
        else:
            while len(self._cache) < n:
                u = self._rng.random(self._BLOCK)
                idx = np.searchsorted(self._cdf, u, side="right")
                idx = np.minimum(idx, len(self.symbols) - 1)
                self._cache.extend(self.symbols[i] for i in idx)

    def __call__(self, n: int) -> str:
        """omega_n for n >= 1."""
        if n < 1:
            raise ValueError("omega is indexed from 1")
        self._extend(n)
        return self._cache[n - 1]

    def prefix_of(self, n: int) -> List[str]:
        self._extend(n)
        return self._cache[:n]


def omega_prefix(omega, n: int) -> List[str]:
    """First n symbols of an OmegaRule, an explicit sequence or a constant symbol."""
    if isinstance(omega, OmegaRule):
        return omega.prefix_of(n)
    if isinstance(omega, str):
        return [omega] * n
    seq = list(omega[:n]) if hasattr(omega, "__getitem__") else list(omega)[:n]
    if len(seq) < n:
        raise ValueError(f"omega prefix has {len(seq)} symbols, need {n}")
    return [str(s) for s in seq]


# ---------------------------------------------------------------- fibre intervals

@dataclass
class Ffi:
    """Fibre fundamental interval <b_1...b_n>_omega.

    ``exact`` means left/right are Fractions; otherwise they are floats
    widened outward by one ulp per composed step.
    """

    word: Tuple[int, ...]
    omega_prefix: Tuple[str, ...]
    left: Number
    right: Number
    log_length: float
    exact: bool

    @property
    def length(self) -> Number:
        if self.exact:
            return self.right - self.left
        return math.exp(self.log_length)

    def contains(self, x) -> bool:
        return self.left <= x <= self.right

    def __contains__(self, x):
        return self.contains(x)


def ffi(family: Family, omega, word: Sequence[int], exact_depth: int = DEFAULT_EXACT_DEPTH) -> Ffi:
    """Interval f_{w1,b1} o ... o f_{wn,bn}([0, 1]) with its natural-log length."""
    word = tuple(int(b) for b in word)
    prefix = omega_prefix(omega, len(word))
    systems = [family[s] for s in prefix]
    for ell, (sys_, b) in enumerate(zip(systems, word), start=1):
        try:
            sys_.check_digit(b)
        except DigitError as exc:
            raise DigitError(f"position {ell}: {exc}") from None
    log_length = -math.fsum(sys_.log_N(b) for sys_, b in zip(systems, word))

    exact = len(word) <= exact_depth and all(s.exact for s in systems)
    if exact:
        c, sl = Fraction(0), Fraction(1)  # composed map x -> c + sl * x
        for sys_, b in zip(systems, word):
            lo, hi = sys_.interval(b)
            ln = hi - lo
            if sys_.orientation(b):
                c, sl = c + sl * hi, -sl * ln
            else:
                c, sl = c + sl * lo, sl * ln
        ends = (c, c + sl)
        return Ffi(word, tuple(prefix), min(ends), max(ends), log_length, True)

    c, sl = 0.0, 1.0
    err = 0.0
    for sys_, b in zip(systems, word):
        lo, hi = sys_.interval(b)
        lo, hi = float(lo), float(hi)
        ln = math.exp(-sys_.log_N(b))
        if sys_.orientation(b):
            c, sl = c + sl * hi, -sl * ln
        else:
            c, sl = c + sl * lo, sl * ln
        err += 4 * math.ulp(max(abs(c), 1e-300))
    a, z = sorted((c, c + sl))
    left = max(0.0, a - err)
    right = min(1.0, z + err)
    return Ffi(word, tuple(prefix), left, right, log_length, False)

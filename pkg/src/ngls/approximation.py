"""Finite approximations of infinite systems.

Keep the branches of digits 1..m and replace each maximal gap left in
[0, 1] by a single increasing affine branch onto that gap. The merged
branch of a gap is labelled by the smallest dropped digit whose image
lies inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ._numeric import Number, xlogx
from .errors import CombinatorialGuardError, ConfigError
from .frequency import DigitLaw, FrequencyVector
from .gls_core import BranchSystem, Family, GlsSystem, ParametricSystem, ffi, omega_prefix


class ApproxSystem(BranchSystem):
    """Finite system with digits 1..m of ``base`` plus one merged digit per gap."""

    kind = "approximation"

    def __init__(self, base: GlsSystem, m: int, branches, merged: Dict[int, List]):
        super().__init__(base.symbol, branches, ratio_ordered=False)
        self.base = base
        self.m = m
        # merged label -> base digits whose images lie in its gap (None: all b > m)
        self.merged = merged

    @property
    def merged_digits(self) -> List[int]:
        return sorted(self.merged)

    def members(self, c: int) -> Optional[List[int]]:
        return self.merged[c]

    def branch_table(self) -> List[dict]:
        rows = []
        for b in self.labels:
            lo, hi = self.interval(b)
            rows.append({
                "digit": b,
                "interval": [lo, hi],
                "ratio": hi - lo,
                "orientation": "-" if self.orientation(b) else "+",
                "merged": b in self.merged,
            })
        return sorted(rows, key=lambda r: r["interval"][0])

    def describe(self):
        out = super().describe()
        out["base"] = self.base.describe()
        out["m"] = self.m
        return out


def _gaps(spans: List[Tuple[Number, Number]]):
    """Maximal open intervals of [0, 1] not covered by ``spans``."""
    gaps = []
    cursor = Fraction(0)
    for lo, hi in sorted(spans):
        if lo > cursor:
            gaps.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < 1:
        gaps.append((cursor, Fraction(1)))
    return gaps


def approximate_system(system: GlsSystem, m: int) -> ApproxSystem:
    """T^(m): digits 1..m kept, every gap they leave covered by one increasing branch."""
    if m < 1:
        raise ConfigError("m must be >= 1", "m")
    kept = {b: (*system.interval(b), system.orientation(b)) for b in system.digits(m)} \
        if system.infinite else \
        {b: (*system.interval(b), system.orientation(b)) for b in system.digits() if b <= m}
    merged: Dict[int, Optional[List[int]]] = {}
    branches = dict(kept)

    if isinstance(system, ParametricSystem):
        tail = system.tail_mass(m)
        if system.layout == "descending":
            gap = (Fraction(0) if system.exact else 0.0, tail)
        else:
            gap = (1 - tail, Fraction(1) if system.exact else 1.0)
        branches[m + 1] = (gap[0], gap[1], 0)
        merged[m + 1] = None
        return ApproxSystem(system, m, branches, merged)

    if system.infinite:
        raise CombinatorialGuardError(f"no gap rule for system {system.symbol!r}")
    dropped = [b for b in system.digits() if b > m]
    if not dropped:
        return ApproxSystem(system, m, branches, merged)
    for lo, hi in _gaps([(v[0], v[1]) for v in kept.values()]):
        inside = [b for b in dropped if lo <= system.interval(b)[0] and system.interval(b)[1] <= hi]
        if not inside:
            raise CombinatorialGuardError(f"gap [{lo}, {hi}] of system {system.symbol!r} holds no digit image")
        c = min(inside)
        branches[c] = (lo, hi, 0)
        merged[c] = inside
    return ApproxSystem(system, m, branches, merged)


def approximate_family(family: Family, m: int) -> Family:
    return Family([approximate_system(family[s], m) for s in family.symbols])


def _merged_mass(law: DigitLaw, sys_: ApproxSystem, c: int) -> Number:
    members = sys_.members(c)
    if members is None:
        return law.mass_above(sys_.m)
    return sum((law(b) for b in members), Fraction(0))


def project_frequency(family: Family, alpha: FrequencyVector, m: int,
                      approx: Optional[Family] = None) -> Tuple[Family, FrequencyVector]:
    """alpha^(m): unchanged on digits <= m, summed over each gap on merged digits."""
    approx = approx or approximate_family(family, m)
    masses, laws = {}, {}
    for s in family.symbols:
        masses[s] = alpha.alpha_s(s)
        law = alpha.law(s)
        if law is None:
            continue
        sys_ = approx[s]
        head = {}
        for b in sys_.labels:
            head[b] = _merged_mass(law, sys_, b) if b in sys_.merged else law(b)
        laws[s] = DigitLaw(head)
    return approx, FrequencyVector(approx, masses, laws)


def mu_product(family: Family, alpha: FrequencyVector, omega, word: Sequence[int]) -> Number:
    """Exact product of conditional digit weights along ``word``."""
    prefix = omega_prefix(omega, len(word))
    out = Fraction(1)
    for s, b in zip(prefix, word):
        family[s].check_digit(b)
        out = out * alpha.conditional(s, b)
    return out


def _interval_mass(family: Family, alpha: FrequencyVector, prefix, level: int, lo, hi, max_depth: int):
    """(lower, upper) bounds on the product-measure mass of [lo, hi] from position ``level`` on."""
    if lo <= 0 and hi >= 1:
        return Fraction(1), Fraction(1)
    if level >= max_depth:
        return Fraction(0), Fraction(1)
    s = prefix[level]
    sys_ = family[s]
    lower = upper = Fraction(0)
    for b in sys_.labels:
        w = alpha.conditional(s, b)
        if w == 0:
            continue
        a, z = sys_.interval(b)
        u, v = max(lo, a), min(hi, z)
        if u >= v:
            continue
        if u == a and v == z:
            lower += w
            upper += w
            continue
        # preimage of [u, v] under f_b
        pu, pv = sys_.inverse(b, u), sys_.inverse(b, v)
        if pu > pv:
            pu, pv = pv, pu
        l2, u2 = _interval_mass(family, alpha, prefix, level + 1, pu, pv, max_depth)
        lower += w * l2
        upper += w * u2
    return lower, upper


@dataclass
class ConvergenceRow:
    m: int
    mu_m_lower: Number
    mu_m_upper: Number
    mu: Number
    equal: bool


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow]
    stabilization: Optional[int]  # least m from which every row is equal
    expected: int  # max digit of the word + 1

    def to_rows(self):
        return [[r.m, r.mu_m_lower, r.mu_m_upper, r.mu, r.equal] for r in self.rows]


def measure_convergence_check(family: Family, omega, alpha: FrequencyVector, word: Sequence[int],
                              m_range: Sequence[int], extra_depth: int = 24) -> ConvergenceTable:
    """mu^(m)(<word>) against mu(<word>) over ``m_range``.

    The base FFI is pushed through the branches of T^(m) by exact interval
    descent. Once every digit of the word is retained the descent follows
    retained branches only and the two masses coincide; before that the
    mass is bracketed by a descent cut off ``extra_depth`` levels below
    the word.
    """
    word = [int(b) for b in word]
    n = len(word)
    if n == 0:
        raise ValueError("word must be non-empty")
    prefix = omega_prefix(omega, n + extra_depth)
    mu = mu_product(family, alpha, prefix, word)
    box = ffi(family, prefix, word)
    if not box.exact:
        raise ConfigError("measure comparison needs an exact family", "family")
    rows = []
    for m in m_range:
        approx, am = project_frequency(family, alpha, m)
        lo, hi = _interval_mass(approx, am, prefix, 0, box.left, box.right, n + extra_depth)
        rows.append(ConvergenceRow(m, lo, hi, mu, lo == hi == mu))
    stab = None
    for r in reversed(rows):
        if not r.equal:
            break
        stab = r.m
    return ConvergenceTable(rows, stab, max(word) + 1)


@dataclass
class ApproxDimension:
    m: int
    beta_m: float  # finite-system dimension value of (T^(m), alpha^(m))
    e_m: float
    ratio_m: float  # R_m, the truncated ratio over D_m
    bound: float  # e_m * R_m, never above beta_m


def approximant_dimension(family: Family, alpha: FrequencyVector, m: int) -> ApproxDimension:
    approx, am = project_frequency(family, alpha, m)
    h_s = math.fsum(xlogx(alpha.alpha_s(s)) for s in family.symbols)
    ent_m, len_m, ent_kept, len_kept, len_merged = [], [], [], [], []
    for s in family.symbols:
        sys_ = approx[s]
        for b in sys_.labels:
            a = am(s, b)
            if a == 0:
                continue
            ent_m.append(xlogx(a))
            ln = float(a) * sys_.log_N(b)
            len_m.append(ln)
            if b in sys_.merged:
                len_merged.append(ln)
            else:
                ent_kept.append(xlogx(a))
                len_kept.append(ln)
    beta_m = (h_s - math.fsum(ent_m)) / math.fsum(len_m)
    lk = math.fsum(len_kept)
    e_m = lk / (lk + math.fsum(len_merged))
    ratio_m = (h_s - math.fsum(ent_kept)) / lk if lk > 0 else math.nan
    return ApproxDimension(m, beta_m, e_m, ratio_m, e_m * ratio_m)


def domination_check(system: GlsSystem, m: int) -> bool:
    """N_c >= N^(m)_b whenever the image of base digit c lies in merged branch b."""
    approx = approximate_system(system, m)
    for c in approx.merged_digits:
        lo, hi = approx.interval(c)
        members = approx.members(c)
        probe = members if members is not None else range(m + 1, m + 65)
        for b in probe:
            a, z = system.interval(b)
            if not (lo <= a and z <= hi and system.N(b) >= approx.N(c)):
                return False
    return True

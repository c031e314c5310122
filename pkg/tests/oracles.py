"""Reference computations that share no code path with the library.

They work from first principles: raw lengths, brute-force word
enumeration, mpmath series summation.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np


def entropy_ratio(weights, lengths):
    """(-sum w log w) / (sum w log(1/len)) for a finite system."""
    num = -sum(w * math.log(w) for w in weights if w > 0)
    den = sum(w * -math.log(ln) for w, ln in zip(weights, lengths) if w > 0)
    return num / den


def luroth_geometric_beta(r=Fraction(1, 2)):
    """beta for Lüroth with alpha_k = (1-r) r^(k-1), by mpmath series summation."""
    mpmath.mp.dps = 30
    r = mpmath.mpf(r.numerator) / r.denominator
    a = lambda k: (1 - r) * r ** (k - 1)
    num = -mpmath.nsum(lambda k: a(k) * mpmath.log(a(k)), [1, mpmath.inf])
    den = mpmath.nsum(lambda k: a(k) * mpmath.log(k * (k + 1)), [1, mpmath.inf])
    return float(num / den)


def luroth_tail_power(m, t, K=10 ** 4):
    """sum_{b > m} (b(b+1))^-t: explicit terms up to K, then an Euler-Maclaurin tail.

    The tail integral is taken in v = log(x / K), where the integrand
    decays exponentially; quadrature straight over [K, inf) loses about
    seven digits on this slowly decaying integrand.
    """
    mpmath.mp.dps = 30
    t = mpmath.mpf(t)
    f = lambda x: (x * (x + 1)) ** (-t)
    head = mpmath.fsum(f(mpmath.mpf(b)) for b in range(m + 1, K + 1))
    integral = mpmath.quad(lambda v: K * mpmath.exp(v) * f(K * mpmath.exp(v)), [0, 1, 10, 100, mpmath.inf])
    tail = integral - f(K) / 2 - mpmath.diff(f, K) / 12 + mpmath.diff(f, K, 3) / 720
    return float(head + tail)


def compose_interval(maps, word):
    """FFI of ``word`` by pushing [0, 1] through the branches in reverse order.

    ``maps[l]`` is a dict digit -> (left, right, decreasing) for position l.
    """
    lo, hi = Fraction(0), Fraction(1)
    for pos in reversed(range(len(word))):
        a, z, dec = maps[pos][word[pos]]
        ln = z - a
        if dec:
            lo, hi = z - hi * ln, z - lo * ln
        else:
            lo, hi = a + lo * ln, a + hi * ln
    return lo, hi


def brute_cover_sum(positions, targets, n, eps):
    """Sum over words of the product of per-position weights, restricted to words
    whose counts of each target pair lie in the eps window.

    ``positions[l]`` is (symbol, {digit: weight}) where weight is already
    |f_b|^t; a digit named "*" stands for a lumped tail. ``targets`` maps
    (symbol, digit) to its alpha mass.
    """
    total = 0.0
    for word in itertools.product(*(list(table) for _, table in positions)):
        counts = {k: 0 for k in targets}
        w = 1.0
        for (s, table), b in zip(positions, word):
            w *= table[b]
            if (s, b) in counts:
                counts[(s, b)] += 1
        if all(abs(Fraction(c, n) - targets[k]) < eps for k, c in counts.items()):
            total += w
    return total


def brute_cover_sum_np(pos_symbols, pos_lengths, keys, alpha, n, t, eps):
    """Vectorised brute force: ``pos_lengths[l]`` is a 1-d array of digit lengths at position l
    (digit b at index b-1), ``keys`` the D_m pairs, ``alpha`` their masses."""
    sizes = [len(x) for x in pos_lengths]
    grids = np.indices(sizes).reshape(len(sizes), -1)  # (n, #words), 0-based digits
    logw = np.zeros(grids.shape[1])
    for l, arr in enumerate(pos_lengths):
        logw += t * np.log(np.asarray(arr, dtype=float))[grids[l]]
    keep = np.ones(grids.shape[1], dtype=bool)
    for (s, b), a in zip(keys, alpha):
        cnt = np.zeros(grids.shape[1], dtype=np.int64)
        for l, sym in enumerate(pos_symbols):
            if sym == s:
                cnt += grids[l] == b - 1
        # |cnt/n - a| < eps decided exactly in rationals
        lo = math.floor(n * (a - eps)) + 1
        hi = math.ceil(n * (a + eps)) - 1
        keep &= (cnt >= lo) & (cnt <= hi)
    if not keep.any():
        return 0.0
    return float(np.exp(logw[keep]).sum())
